//! Experiment harness and file formats around `vneap_core`: GraphML
//! topologies, tier-based substrates, request generation, capacity
//! calibration, scenario runs with CSV/JSON reports, CPLEX LP export and
//! external solvers.

pub mod algorithms;
pub mod error;
pub mod external;
pub mod graphml;
pub mod io;
pub mod lp_format;
pub mod report;
pub mod scenario;
pub mod streams;
pub mod substrate;
pub mod tiers;
pub mod workload;

pub use algorithms::{run_algorithm, tanto_parallel, Algorithm, AlgorithmRun, RunOptions, SolutionDetail, StdClock};
pub use error::{Error, ExitKind, Result};
pub use graphml::{parse_graphml, read_graphml, RawTopology};
pub use report::{ReportRow, RowStatus, SummaryRow};
pub use scenario::{run_scenario, ScenarioConfig, ScenarioResult};
pub use substrate::{build_substrate, SubstrateConfig, TierRatios};
pub use tiers::{classify_tiers, TierAssignment, TierMethod};
pub use workload::{calibrate, generate_requests, target_utilization, RequestConfig, Spatial};
