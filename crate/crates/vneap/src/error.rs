use thiserror::Error;
use vneap_core::validate::ValidationError;
use vneap_core::{FormulationError, LpError, ModelError, Status, TantoError};

use crate::graphml::GraphmlError;
use crate::lp_format::LpFormatError;
use crate::tiers::TierError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graphml(#[from] GraphmlError),
    #[error(transparent)]
    Tier(#[from] TierError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    LpFormat(#[from] LpFormatError),
    #[error("solver finished with status {0:?}")]
    Status(Status),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("substrate has no edge node to originate requests")]
    NoEdgeNodes,
    #[error("requests induce zero demand on the main alternative")]
    ZeroDemand,
    #[error("external solver failed: {0}")]
    ExternalSolver(String),
}

impl From<TantoError> for Error {
    fn from(e: TantoError) -> Self {
        match e {
            TantoError::Formulation(e) => Error::Formulation(e),
            TantoError::Lp(e) => Error::Lp(e),
            TantoError::Status(s) => Error::Status(s),
        }
    }
}

/// Process exit code for a failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Input = 2,
    Infeasible = 3,
    Limit = 4,
}

impl Error {
    pub fn exit_kind(&self) -> ExitKind {
        match self {
            Error::Status(Status::Infeasible | Status::Unbounded) => ExitKind::Infeasible,
            Error::Status(_) => ExitKind::Limit,
            Error::Lp(LpError::TooManyBinaries { .. }) => ExitKind::Limit,
            _ => ExitKind::Input,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
