//! Scenario configuration and execution.
//!
//! A repetition builds the substrate, optionally calibrates it, draws the
//! requests and runs every listed algorithm. Repetitions run in parallel;
//! rows come back ordered by repetition and then by the algorithm list.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vneap_core::{compute_rejection_penalty, Catalog, EfficiencyMap, Problem, Request, SolveOptions, SubstrateNetwork};

use crate::algorithms::{run_algorithm, Algorithm, RunOptions};
use crate::error::{Error, Result};
use crate::graphml::read_graphml;
use crate::io::read_json;
use crate::report::{summarize, Metrics, ReportRow, RowStatus, SummaryRow};
use crate::streams::{repetition_seed, stream_seed};
use crate::substrate::{build_substrate, CostAnchors, SubstrateConfig, TierRatios};
use crate::tiers::TierMethod;
use crate::workload::{calibrate, generate_requests, OriginCap, RequestConfig};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologySource {
    Graphml {
        path: PathBuf,
        #[serde(default)]
        tiers: TierMethod,
        #[serde(default)]
        ratios: TierRatios,
        #[serde(default)]
        anchors: CostAnchors,
    },
    /// A substrate JSON file used as is.
    Substrate { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogSource {
    File {
        path: PathBuf,
    },
    /// `cctv` or `toy`.
    Builtin {
        name: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequestSource {
    Generate(RequestConfig),
    File { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub node_tu: f64,
    pub link_tu: f64,
    /// Size of the request set the capacities are fitted to.
    #[serde(default = "default_calibration_requests")]
    pub requests: usize,
}

fn default_calibration_requests() -> usize {
    60_000
}

fn default_repetitions() -> usize {
    30
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Largest binary count the exact MILP accepts.
    pub binary_cap: Option<usize>,
    pub iteration_limit: Option<u64>,
    pub time_limit_s: Option<f64>,
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions {
        let mut opts = SolveOptions::default();
        if let Some(cap) = self.binary_cap {
            opts.binary_cap = cap;
        }
        opts.iteration_limit = self.iteration_limit;
        opts.time_limit = self.time_limit_s.map(std::time::Duration::from_secs_f64);
        opts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub topology: TopologySource,
    pub catalog: CatalogSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<PathBuf>,
    pub requests: RequestSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub algorithms: Vec<Algorithm>,
    /// Rejection penalty; derived from the substrate when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Adds wall-clock `runtime_s` to rows, which makes them irreproducible.
    #[serde(default)]
    pub record_runtime: bool,
}

impl ScenarioConfig {
    pub fn check(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.repetitions < 1 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms listed".into()));
        }
        if let Some(c) = &self.calibration {
            for (name, tu) in [("node_tu", c.node_tu), ("link_tu", c.link_tu)] {
                if !(tu > 0.0 && tu.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {tu}")));
                }
            }
            if c.requests == 0 {
                return Err(Error::Config("calibration needs at least one request".into()));
            }
        }
        if let RequestSource::Generate(r) = &self.requests {
            r.check()?;
        }
        if let Some(psi) = self.psi {
            if !(psi >= 0.0 && psi.is_finite()) {
                return Err(Error::Config(format!("psi must be nonnegative, got {psi}")));
            }
        }
        Ok(())
    }

    /// Reads a config and resolves its relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: ScenarioConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.check()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.topology {
            TopologySource::Graphml { path, .. } | TopologySource::Substrate { path } => fix(path),
        }
        if let CatalogSource::File { path } = &mut self.catalog {
            fix(path);
        }
        if let Some(p) = &mut self.efficiency {
            fix(p);
        }
        if let RequestSource::File { path } = &mut self.requests {
            fix(path);
        }
    }
}

pub fn builtin_catalog(name: &str) -> Result<Catalog> {
    match name {
        "cctv" => Ok(vneap_core::fixtures::cctv_catalog()),
        "toy" => Ok(vneap_core::fixtures::toy_catalog()),
        other => Err(Error::Config(format!("unknown builtin catalog {other:?}"))),
    }
}

/// Inputs shared by all repetitions.
#[derive(Clone, Debug)]
pub struct Inputs {
    pub substrate: SubstrateNetwork,
    pub catalog: Catalog,
    pub efficiency: EfficiencyMap,
    pub requests: Option<Vec<Request>>,
}

pub fn load_inputs(config: &ScenarioConfig) -> Result<Inputs> {
    let substrate = match &config.topology {
        TopologySource::Graphml { path, tiers, ratios, anchors } => {
            let topo = read_graphml(path)?;
            let sc = SubstrateConfig { tiers: tiers.clone(), ratios: *ratios, anchors: *anchors };
            build_substrate(&topo, &sc)?.0
        }
        TopologySource::Substrate { path } => read_json(path)?,
    };
    let catalog = match &config.catalog {
        CatalogSource::File { path } => read_json(path)?,
        CatalogSource::Builtin { name } => builtin_catalog(name)?,
    };
    let efficiency = match &config.efficiency {
        Some(path) => read_json(path)?,
        None => EfficiencyMap::default(),
    };
    let requests = match &config.requests {
        RequestSource::File { path } => Some(read_json(path)?),
        RequestSource::Generate(_) => None,
    };
    // Validates substrate, catalog and efficiency together.
    Problem::new(substrate.clone(), catalog.clone(), efficiency.clone())?;
    Ok(Inputs { substrate, catalog, efficiency, requests })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub schema_version: u32,
    pub scenario: String,
    pub repetitions: usize,
    pub algorithms: Vec<Algorithm>,
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryRow>,
}

/// Substrate and requests of one repetition.
pub struct Instance {
    pub problem: Problem,
    pub requests: Vec<Request>,
    pub psi: f64,
}

pub fn prepare_repetition(config: &ScenarioConfig, inputs: &Inputs, seed: u64) -> Result<Instance> {
    let mut net = inputs.substrate.clone();
    if let Some(cal) = &config.calibration {
        let calib_requests = match (&config.requests, &inputs.requests) {
            (_, Some(fixed)) => fixed.clone(),
            (RequestSource::Generate(r), None) => {
                let mut rc = r.clone();
                rc.count = cal.requests;
                rc.origin_cap = OriginCap::Off;
                generate_requests(&net, &inputs.catalog, &rc, stream_seed(seed, "calibration"))?.requests
            }
            (RequestSource::File { .. }, None) => unreachable!("file requests are loaded up front"),
        };
        net = calibrate(&net, &inputs.catalog, &calib_requests, cal.node_tu, cal.link_tu)?;
    }
    let requests = match (&config.requests, &inputs.requests) {
        (_, Some(fixed)) => fixed.clone(),
        (RequestSource::Generate(r), None) => generate_requests(&net, &inputs.catalog, r, seed)?.requests,
        (RequestSource::File { .. }, None) => unreachable!("file requests are loaded up front"),
    };
    let problem = Problem::new(net, inputs.catalog.clone(), inputs.efficiency.clone())?;
    let psi = match config.psi {
        Some(psi) => psi,
        None => compute_rejection_penalty(&problem)?.psi,
    };
    Ok(Instance { problem, requests, psi })
}

fn failed_row(config: &ScenarioConfig, rep: usize, seed: u64, algorithm: Algorithm, e: &Error) -> ReportRow {
    log::warn!("{} repetition {rep} {algorithm}: {e}", config.name);
    ReportRow {
        scenario: config.name.clone(),
        repetition: rep,
        seed,
        algorithm,
        status: RowStatus::of_error(e),
        error: Some(e.to_string()),
        metrics: None,
        bounds: None,
        runtime_s: None,
    }
}

pub fn run_repetition(config: &ScenarioConfig, inputs: &Inputs, rep: usize) -> Vec<ReportRow> {
    let seed = repetition_seed(config.seed, rep);
    let instance = prepare_repetition(config, inputs, seed).and_then(|inst| {
        let resolved = inst.problem.resolve_requests(&inst.requests)?;
        Ok((inst, resolved))
    });
    let (inst, resolved) = match instance {
        Ok(x) => x,
        Err(e) => return config.algorithms.iter().map(|&a| failed_row(config, rep, seed, a, &e)).collect(),
    };
    let opts = RunOptions { solve: config.solver.options(), external: None };
    config
        .algorithms
        .iter()
        .map(|&algorithm| {
            let start = Instant::now();
            match run_algorithm(&inst.problem, &resolved, inst.psi, algorithm, seed, &opts) {
                Ok(run) => ReportRow {
                    scenario: config.name.clone(),
                    repetition: rep,
                    seed,
                    algorithm,
                    status: RowStatus::Ok,
                    error: None,
                    metrics: Some(Metrics::from_run(&run, resolved.len())),
                    bounds: run.bounds,
                    runtime_s: config.record_runtime.then(|| start.elapsed().as_secs_f64()),
                },
                Err(e) => failed_row(config, rep, seed, algorithm, &e),
            }
        })
        .collect()
}

/// Runs every repetition on the current rayon pool.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    config.check()?;
    let inputs = load_inputs(config)?;
    let rows: Vec<ReportRow> =
        (0..config.repetitions).into_par_iter().flat_map_iter(|rep| run_repetition(config, &inputs, rep)).collect();
    let summary = summarize(&rows);
    Ok(ScenarioResult {
        schema_version: SCHEMA_VERSION,
        scenario: config.name.clone(),
        repetitions: config.repetitions,
        algorithms: config.algorithms.clone(),
        rows,
        summary,
    })
}

/// Runs `f` on a pool of `jobs` workers, or on the global pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
