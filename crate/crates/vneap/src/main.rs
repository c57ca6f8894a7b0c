use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vneap::algorithms::{run_algorithm, Algorithm, AlgorithmRun, RunOptions};
use vneap::external::ExternalSolver;
use vneap::io::{read_json, write_json, write_text};
use vneap::lp_format::write_lp;
use vneap::report::{write_long_csv, write_summary_csv};
use vneap::scenario::{with_jobs, ScenarioConfig, ScenarioResult, SCHEMA_VERSION};
use vneap::substrate::{CostAnchors, SubstrateConfig, TierRatios};
use vneap::tiers::TierMethod;
use vneap::workload::{OriginCap, RequestConfig, Spatial};
use vneap::{Error, ExitKind};
use vneap_core::{
    aggregate_requests, build_milp, build_relaxed_aggregate_lp, compute_rejection_penalty, restrict_problem, Catalog,
    EfficiencyMap, Problem, Request, SolveOptions, SubstrateNetwork,
};

#[derive(Parser)]
#[command(name = "vneap", version, about = "Virtual network embedding with alternative topologies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a substrate from a GraphML topology.
    Ingest(IngestArgs),
    /// Draw requests at the substrate's edge nodes.
    Generate(GenerateArgs),
    /// Scale capacities to target utilizations.
    Calibrate(CalibrateArgs),
    /// Run one algorithm on one instance.
    Solve(SolveArgs),
    /// Run a scenario and write its result matrix.
    Compare(CompareArgs),
    /// Summarize a scenario result file.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    graphml: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Cost and capacity ratio between successive tiers.
    #[arg(long, default_value_t = 3.0)]
    tier_ratios: f64,
    /// Link cost ratio between successive tiers.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    link_cost_ratio: f64,
    #[arg(long, default_value_t = 0.09)]
    edge_node_cost: f64,
    #[arg(long, default_value_t = 0.01)]
    core_link_cost: f64,
    /// Read tiers from this node attribute instead of classifying degrees.
    #[arg(long)]
    tier_attribute: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpatialArg {
    Uniform,
    Lognormal,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    substrate: PathBuf,
    #[arg(long)]
    apps: PathBuf,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    spatial: SpatialArg,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Application id; the first catalog entry by default.
    #[arg(long)]
    app: Option<String>,
    /// Skip the per-origin capacity cap.
    #[arg(long)]
    no_origin_cap: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    substrate: PathBuf,
    #[arg(long)]
    apps: PathBuf,
    #[arg(long)]
    requests: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    node_tu: f64,
    #[arg(long, default_value_t = 1.0)]
    link_tu: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    substrate: PathBuf,
    #[arg(long)]
    apps: PathBuf,
    #[arg(long)]
    requests: PathBuf,
    #[arg(long)]
    efficiency: Option<PathBuf>,
    /// lp, milp, greedy, tanto or vnep:<T>.
    #[arg(long)]
    algo: Algorithm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rejection penalty per unit of demand; derived when absent.
    #[arg(long)]
    psi: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    binary_cap: Option<usize>,
    #[arg(long)]
    iteration_limit: Option<u64>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Also write the LP or MILP model in CPLEX LP format.
    #[arg(long)]
    export_lp: Option<PathBuf>,
    /// Solver command line with `{lp}` and `{solution}` placeholders.
    #[arg(long)]
    external_solver: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// `results.json` written by `compare`.
    #[arg(long)]
    input: PathBuf,
    /// Summary CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveReport<'a> {
    schema_version: u32,
    seed: u64,
    #[serde(flatten)]
    run: &'a AlgorithmRun,
}

fn require_files(paths: &[&Path]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            let source = std::io::Error::new(std::io::ErrorKind::NotFound, "no such file");
            return Err(Error::Io { path: p.display().to_string(), source }.into());
        }
    }
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    require_files(&[&args.graphml])?;
    let topo = vneap::read_graphml(&args.graphml)?;
    let config = SubstrateConfig {
        tiers: match args.tier_attribute {
            Some(name) => TierMethod::Attribute { name },
            None => TierMethod::NaturalBreaks,
        },
        ratios: TierRatios { cost: args.tier_ratios, capacity: args.tier_ratios, link_cost: args.link_cost_ratio },
        anchors: CostAnchors { edge_node_cost: args.edge_node_cost, core_link_cost: args.core_link_cost },
    };
    let (net, tiers) = vneap::build_substrate(&topo, &config)?;
    let [e, t, c] = tiers.counts();
    log::info!("{} nodes ({e} edge, {t} transport, {c} core), {} links", topo.nodes.len(), topo.edges.len());
    write_json(&args.out, &net)?;
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<()> {
    require_files(&[&args.substrate, &args.apps])?;
    let net: SubstrateNetwork = read_json(&args.substrate)?;
    let catalog: Catalog = read_json(&args.apps)?;
    let config = RequestConfig {
        count: args.count,
        app: args.app,
        size: Default::default(),
        spatial: match args.spatial {
            SpatialArg::Uniform => Spatial::Uniform,
            SpatialArg::Lognormal => Spatial::LogNormal { mu: args.mu, sigma: args.sigma },
        },
        origin_cap: if args.no_origin_cap { OriginCap::Off } else { OriginCap::Local },
    };
    let generated = vneap::generate_requests(&net, &catalog, &config, args.seed)?;
    write_json(&args.out, &generated.requests)?;
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    require_files(&[&args.substrate, &args.apps, &args.requests])?;
    let net: SubstrateNetwork = read_json(&args.substrate)?;
    let catalog: Catalog = read_json(&args.apps)?;
    let requests: Vec<Request> = read_json(&args.requests)?;
    let scaled = vneap::calibrate(&net, &catalog, &requests, args.node_tu, args.link_tu)?;
    write_json(&args.out, &scaled)?;
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let mut inputs = vec![args.substrate.as_path(), args.apps.as_path(), args.requests.as_path()];
    inputs.extend(args.efficiency.as_deref());
    require_files(&inputs)?;
    let net: SubstrateNetwork = read_json(&args.substrate)?;
    let catalog: Catalog = read_json(&args.apps)?;
    let requests: Vec<Request> = read_json(&args.requests)?;
    let efficiency: EfficiencyMap = match &args.efficiency {
        Some(p) => read_json(p)?,
        None => EfficiencyMap::default(),
    };
    let problem = Problem::new(net, catalog, efficiency).map_err(Error::from)?;
    let resolved = problem.resolve_requests(&requests).map_err(Error::from)?;
    let psi = match args.psi {
        Some(psi) => psi,
        None => compute_rejection_penalty(&problem).map_err(Error::from)?.psi,
    };
    let mut solve = SolveOptions::default();
    if let Some(cap) = args.binary_cap {
        solve.binary_cap = cap;
    }
    solve.iteration_limit = args.iteration_limit;
    solve.time_limit = args.time_limit.map(std::time::Duration::from_secs_f64);
    let external = match &args.external_solver {
        Some(line) => Some(ExternalSolver::from_command_line(line).context("empty --external-solver")?),
        None => None,
    };

    if let Some(path) = &args.export_lp {
        let model = match args.algo {
            Algorithm::Lp => build_relaxed_aggregate_lp(&problem, &aggregate_requests(&resolved).aggregates, psi),
            Algorithm::Vnep(t) => {
                let p = restrict_problem(&problem, t).map_err(Error::from)?;
                build_relaxed_aggregate_lp(&p, &aggregate_requests(&resolved).aggregates, psi)
            }
            Algorithm::Milp => build_milp(&problem, &resolved, psi),
            Algorithm::Tanto => build_relaxed_aggregate_lp(&problem, &aggregate_requests(&resolved).aggregates, psi),
            Algorithm::Greedy => anyhow::bail!("greedy does not solve a linear program; nothing to export"),
        }
        .map_err(Error::from)?;
        write_text(path, &write_lp(&model.lp))?;
    }

    let opts = RunOptions { solve, external };
    let run = with_jobs(args.jobs, || run_algorithm(&problem, &resolved, psi, args.algo, args.seed, &opts))??;
    write_json(&args.out, &SolveReport { schema_version: SCHEMA_VERSION, seed: args.seed, run: &run })?;
    Ok(())
}

fn compare(args: CompareArgs) -> Result<ExitCode> {
    require_files(&[&args.scenario])?;
    let config = ScenarioConfig::load(&args.scenario)?;
    let result = with_jobs(args.jobs, || vneap::run_scenario(&config))??;
    write_json(&args.out.join("results.json"), &result)?;
    let mut csv = Vec::new();
    write_long_csv(&result.rows, &mut csv)?;
    write_text(&args.out.join("results.csv"), &String::from_utf8(csv)?)?;
    let mut summary = Vec::new();
    write_summary_csv(&result.summary, &mut summary)?;
    write_text(&args.out.join("summary.csv"), &String::from_utf8(summary)?)?;
    if result.rows.iter().any(|r| r.is_ok()) {
        return Ok(ExitCode::SUCCESS);
    }
    let kind = result.rows.first().and_then(|r| r.status.exit_kind()).unwrap_or(ExitKind::Input);
    eprintln!("error: every run of scenario {} failed", result.scenario);
    Ok(ExitCode::from(kind as u8))
}

fn report(args: ReportArgs) -> Result<()> {
    require_files(&[&args.input])?;
    let result: ScenarioResult = read_json(&args.input)?;
    let mut out = Vec::new();
    write_summary_csv(&vneap::report::summarize(&result.rows), &mut out)?;
    match &args.out {
        Some(path) => write_text(path, &String::from_utf8(out)?)?,
        None => print!("{}", String::from_utf8(out)?),
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> ExitCode {
    let kind = err.chain().find_map(|e| e.downcast_ref::<Error>()).map_or(ExitKind::Input, Error::exit_kind);
    ExitCode::from(kind as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VNEAP_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a).map(|_| ExitCode::SUCCESS),
        Command::Generate(a) => generate(a).map(|_| ExitCode::SUCCESS),
        Command::Calibrate(a) => calibrate(a).map(|_| ExitCode::SUCCESS),
        Command::Solve(a) => solve(a).map(|_| ExitCode::SUCCESS),
        Command::Compare(a) => compare(a),
        Command::Report(a) => report(a).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}
