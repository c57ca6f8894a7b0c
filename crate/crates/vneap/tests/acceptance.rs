//! Acceptance criteria A1-A10 and the rounding-time scaling check. Prints one
//! PASS/FAIL line per criterion and exits nonzero when any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use common::{instance, Instance, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vneap::algorithms::{run_algorithm, Algorithm, AlgorithmRun, RunOptions, SolutionDetail};
use vneap::io::to_json;
use vneap::report::{write_long_csv, ReportRow};
use vneap::scenario::{with_jobs, Calibration, CatalogSource, RequestSource, ScenarioConfig, TopologySource};
use vneap::substrate::{build_substrate, SubstrateConfig};
use vneap::workload::{calibrate, generate_requests, OriginCap, RequestConfig};
use vneap_core::formulation::{AltFlow, OwnerFlow};
use vneap_core::tanto::{assemble, embed_request, plan, round_aggregate, Outcome};
use vneap_core::validate::{check_feasibility, total_cost};
use vneap_core::{
    build_milp, compute_rejection_penalty, fixtures, solve_milp_exact, IntegralEmbedding, Placement, Problem,
    ResolvedRequest, SolveOptions, Status, TantoReport,
};

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(id: &'static str, title: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { id, title, pass, detail }
}

/// Bound and feasibility checks gathered from every GREEDY and TANTO run.
#[derive(Default)]
struct Tally {
    tanto_runs: usize,
    zeroing_failures: usize,
    gap_failures: usize,
    step_failures: usize,
    checked_outputs: usize,
    infeasible_outputs: usize,
    failed_runs: Vec<String>,
}

impl Tally {
    fn bounds(&mut self, report: &TantoReport) {
        self.tanto_runs += 1;
        self.zeroing_failures += usize::from(!report.zeroing_bound_holds);
        self.gap_failures += usize::from(!report.gap_bound_holds);
        self.step_failures += usize::from(!report.step_bound_holds);
    }

    fn run(&mut self, problem: &Problem, requests: &[ResolvedRequest], run: &AlgorithmRun) {
        if let SolutionDetail::Integral { embeddings } = &run.solution {
            self.checked_outputs += 1;
            if !check_feasibility(problem, requests, embeddings).is_empty() {
                self.infeasible_outputs += 1;
            }
        }
        if let Some(b) = &run.bounds {
            self.bounds(b);
        }
    }

    fn row(&mut self, row: &ReportRow) {
        if !matches!(row.algorithm, Algorithm::Greedy | Algorithm::Tanto) {
            return;
        }
        match &row.metrics {
            Some(m) => {
                self.checked_outputs += 1;
                self.infeasible_outputs += usize::from(m.violations > 0);
            }
            None => self.failed_runs.push(format!("{} rep {}: {:?}", row.algorithm, row.repetition, row.error)),
        }
        if let Some(b) = &row.bounds {
            self.bounds(b);
        }
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn embedded(alternative: usize, nodes: Vec<usize>, links: Vec<Vec<usize>>) -> IntegralEmbedding {
    IntegralEmbedding { request: 0, placement: Placement::Embedded { alternative, nodes, links } }
}

fn a1() -> Verdict {
    let problem = fixtures::toy_problem(1e9);
    let requests = problem.resolve_requests(&fixtures::toy_requests(1)).unwrap();
    // Edge = 0, Core = 1; arc 0 runs Edge -> Core.
    let options = [
        embedded(0, vec![0, 1, 1], vec![vec![0], vec![]]),
        embedded(0, vec![0, 0, 1], vec![vec![], vec![0]]),
        embedded(0, vec![0, 0, 0], vec![vec![], vec![]]),
        embedded(1, vec![0, 0, 0, 1], vec![vec![], vec![], vec![0]]),
    ];
    let costs: Vec<f64> = options
        .iter()
        .map(|e| total_cost(&problem, &requests, std::slice::from_ref(e), 1050.0).unwrap().total)
        .collect();
    let pass = costs == [205.0, 250.0, 1050.0, 280.0];
    verdict("A1", "toy embedding costs", pass, format!("costs {costs:?}, expected [205, 250, 1050, 280] exactly"))
}

fn a2(tally: &mut Tally) -> Verdict {
    let problem = fixtures::toy_problem(5000.0);
    let requests = problem.resolve_requests(&fixtures::toy_requests(100)).unwrap();
    let psi = compute_rejection_penalty(&problem).unwrap().psi;
    let opts = RunOptions::default();
    let lp = run_algorithm(&problem, &requests, psi, Algorithm::Lp, 1, &opts).unwrap();
    let tanto = run_algorithm(&problem, &requests, psi, Algorithm::Tanto, 1, &opts).unwrap();
    let g1 = run_algorithm(&problem, &requests, psi, Algorithm::Vnep(0), 1, &opts).unwrap();
    tally.run(&problem, &requests, &tanto);
    let lp_obj = lp.lp_objective.unwrap();
    let g1_obj = g1.lp_objective.unwrap();
    let b = tanto.bounds.as_ref().unwrap();
    let rejections = b.rounding_rejections + b.exhausted_rejections;
    let lp_acc = lp.shares.get("accelerated").copied().unwrap_or(0.0);
    let tanto_acc = tanto.shares.get("accelerated").copied().unwrap_or(0.0);
    let pass = lp_obj == 28_000.0
        && g1_obj == 62_750.0
        && rejections == 0
        && close(lp_acc, 1.0, 1e-9)
        && close(tanto_acc, 1.0, 1e-9);
    verdict(
        "A2",
        "toy capacity scenario",
        pass,
        format!(
            "LP {lp_obj} (expected 28000, accelerated share {lp_acc:.4}); TANTO cost {} with {rejections} rejections \
             (accelerated share {tanto_acc:.4}); VNEP(G1) {g1_obj} (expected 62750)",
            tanto.cost.total
        ),
    )
}

const MATRIX: Shape = Shape { max_nodes: 10, max_requests: 6, max_functions: 3, max_alternatives: 3 };
const MATRIX_SEEDS: u64 = 250;

fn a3(tally: &mut Tally) -> Verdict {
    let opts = RunOptions::default();
    let mut breaches = Vec::new();
    let mut checked = 0;
    for seed in 0..MATRIX_SEEDS {
        let Instance { problem, requests, psi } = instance(seed, &MATRIX);
        let run = |a| run_algorithm(&problem, &requests, psi, a, seed, &opts);
        let lp = match run(Algorithm::Lp) {
            Ok(r) => r.cost.total,
            Err(e) => {
                breaches.push(format!("seed {seed}: lp failed: {e}"));
                continue;
            }
        };
        for a in [Algorithm::Tanto, Algorithm::Greedy] {
            match run(a) {
                Ok(r) => {
                    tally.run(&problem, &requests, &r);
                    if lp > r.cost.total && !close(lp, r.cost.total, 1e-6) {
                        breaches.push(format!("seed {seed}: lp {lp} > {a} {}", r.cost.total));
                    }
                }
                Err(e) => {
                    tally.failed_runs.push(format!("seed {seed} {a}: {e}"));
                    breaches.push(format!("seed {seed}: {a} failed: {e}"));
                }
            }
        }
        let single = (0..problem.alternatives(0).len())
            .filter_map(|t| run(Algorithm::Vnep(t)).ok().map(|r| r.cost.total))
            .fold(f64::INFINITY, f64::min);
        if lp > single && !close(lp, single, 1e-6) {
            breaches.push(format!("seed {seed}: multi-alternative lp {lp} > single-alternative {single}"));
        }
        checked += 1;
    }
    let pass = breaches.is_empty() && checked >= 200;
    let detail =
        format!("{checked} instances (<= 10 nodes), {} breaches at 1e-6 relative{}", breaches.len(), first(&breaches));
    verdict("A3", "lower-bound ordering", pass, detail)
}

fn first(items: &[String]) -> String {
    items.first().map(|s| format!("; first: {s}")).unwrap_or_default()
}

/// All simple arc paths from `u` to `w`; only the empty path when equal.
fn simple_paths(problem: &Problem, u: usize, w: usize) -> Vec<Vec<usize>> {
    fn walk(
        problem: &Problem,
        at: usize,
        w: usize,
        seen: &mut Vec<usize>,
        path: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == w {
            out.push(path.clone());
            return;
        }
        let net = problem.substrate();
        for &a in net.out_arcs(at) {
            let (_, next) = net.arc_ends(a);
            if !seen.contains(&next) {
                seen.push(next);
                path.push(a);
                walk(problem, next, w, seen, path, out);
                path.pop();
                seen.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(problem, u, w, &mut vec![u], &mut Vec::new(), &mut out);
    out
}

/// Every placement of one request: rejection, or each alternative with every
/// host assignment and simple path per virtual link.
fn placements(problem: &Problem, request: &ResolvedRequest) -> Vec<Placement> {
    let n = problem.substrate().node_count();
    let mut out = vec![Placement::Rejected];
    for (t, alt) in problem.alternatives(request.app).iter().enumerate() {
        let free: Vec<usize> = (0..alt.node_sizes.len()).filter(|&i| i != alt.root).collect();
        for code in 0..n.pow(free.len() as u32) {
            let mut nodes = vec![request.origin; alt.node_sizes.len()];
            let mut c = code;
            for &i in &free {
                nodes[i] = c % n;
                c /= n;
            }
            let mut routes: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
            for &(i, j, _) in &alt.links {
                let paths = simple_paths(problem, nodes[i], nodes[j]);
                routes = routes
                    .iter()
                    .flat_map(|r| paths.iter().map(move |p| r.iter().cloned().chain([p.clone()]).collect()))
                    .collect();
            }
            out.extend(routes.into_iter().map(|links| Placement::Embedded {
                alternative: t,
                nodes: nodes.clone(),
                links,
            }));
        }
    }
    out
}

fn enumerate_optimum(problem: &Problem, requests: &[ResolvedRequest], psi: f64) -> f64 {
    let per_request: Vec<Vec<IntegralEmbedding>> = requests
        .iter()
        .enumerate()
        .map(|(r, req)| {
            placements(problem, req)
                .into_iter()
                .map(|placement| IntegralEmbedding { request: r, placement })
                .filter(|e| {
                    let mut single =
                        requests.iter().enumerate().map(|(k, _)| IntegralEmbedding::rejected(k)).collect::<Vec<_>>();
                    single[r] = e.clone();
                    check_feasibility(problem, requests, &single).is_empty()
                })
                .collect()
        })
        .collect();
    let mut best = f64::INFINITY;
    let mut choice = vec![0usize; requests.len()];
    loop {
        let embeddings: Vec<IntegralEmbedding> =
            choice.iter().enumerate().map(|(r, &k)| per_request[r][k].clone()).collect();
        if let Ok(c) = total_cost(problem, requests, &embeddings, psi) {
            best = best.min(c.total);
        }
        let mut r = 0;
        while r < choice.len() {
            choice[r] += 1;
            if choice[r] < per_request[r].len() {
                break;
            }
            choice[r] = 0;
            r += 1;
        }
        if r == choice.len() {
            return best;
        }
    }
}

const ORACLE: Shape = Shape { max_nodes: 3, max_requests: 2, max_functions: 2, max_alternatives: 2 };

fn a4() -> Verdict {
    let opts = SolveOptions { binary_cap: 200, ..SolveOptions::default() };
    let mut mismatches = Vec::new();
    let count = 300;
    for seed in 0..count {
        let Instance { problem, requests, psi } = instance(10_000 + seed, &ORACLE);
        let oracle = enumerate_optimum(&problem, &requests, psi);
        let model = build_milp(&problem, &requests, psi).unwrap();
        match solve_milp_exact(&model.lp, &opts) {
            Ok(sol) if sol.status == Status::Optimal => {
                if !close(sol.objective, oracle, 1e-9) {
                    mismatches.push(format!("seed {seed}: branch-and-bound {} vs enumeration {oracle}", sol.objective));
                }
            }
            Ok(sol) => mismatches.push(format!("seed {seed}: status {:?}", sol.status)),
            Err(e) => mismatches.push(format!("seed {seed}: {e}")),
        }
    }
    verdict(
        "A4",
        "branch-and-bound equals enumeration",
        mismatches.is_empty(),
        format!(
            "{count} instances (<= 3 nodes, <= 2 requests, <= 2 alternatives), {} mismatches at 1e-9{}",
            mismatches.len(),
            first(&mismatches)
        ),
    )
}

fn desk_config(link_tu: f64, count: usize, repetitions: usize, algorithms: Vec<Algorithm>) -> ScenarioConfig {
    let mut requests = RequestConfig::new(count);
    requests.origin_cap = OriginCap::Off;
    ScenarioConfig {
        schema_version: vneap::scenario::SCHEMA_VERSION,
        name: format!("desk-link{}", (link_tu * 100.0).round()),
        topology: TopologySource::Graphml {
            path: fixture("ten_node.graphml"),
            tiers: Default::default(),
            ratios: Default::default(),
            anchors: Default::default(),
        },
        catalog: CatalogSource::Builtin { name: "cctv".into() },
        efficiency: None,
        requests: RequestSource::Generate(requests),
        calibration: Some(Calibration { node_tu: 1.0, link_tu, requests: count }),
        seed: 2024,
        repetitions,
        algorithms,
        psi: None,
        solver: Default::default(),
        record_runtime: false,
    }
}

fn a8(tally: &mut Tally) -> Verdict {
    let algorithms = vec![Algorithm::Lp, Algorithm::Greedy, Algorithm::Tanto];
    let mut shares = Vec::new();
    let mut wins = (0, 0);
    let mut errors = Vec::new();
    for link_tu in [2.0, 1.0, 0.5] {
        let result = vneap::run_scenario(&desk_config(link_tu, 2000, 30, algorithms.clone())).unwrap();
        for row in &result.rows {
            tally.row(row);
            if !row.is_ok() {
                errors.push(format!("link-TU {link_tu} rep {} {}: {:?}", row.repetition, row.algorithm, row.error));
            }
        }
        let lp: Vec<f64> = result
            .rows
            .iter()
            .filter(|r| r.algorithm == Algorithm::Lp)
            .filter_map(|r| r.metrics.as_ref())
            .map(|m| m.shares.get("accelerated").copied().unwrap_or(0.0))
            .collect();
        shares.push(lp.iter().sum::<f64>() / lp.len().max(1) as f64);
        if link_tu == 1.0 {
            for rep in 0..30 {
                let rate = |a| {
                    result
                        .rows
                        .iter()
                        .find(|r| r.repetition == rep && r.algorithm == a)
                        .and_then(|r| r.metrics.as_ref())
                        .map(|m| m.rejection_rate)
                };
                if let (Some(g), Some(t)) = (rate(Algorithm::Greedy), rate(Algorithm::Tanto)) {
                    wins.1 += 1;
                    wins.0 += usize::from(g >= t);
                }
            }
        }
    }
    let monotone = shares[0] <= shares[1] && shares[1] <= shares[2];
    let greedy_ok = wins.1 == 30 && wins.0 * 10 >= 9 * wins.1;
    let pass = monotone && greedy_ok && errors.is_empty();
    let detail = format!(
        "(i) mean LP accelerated share at link-TU 200/100/50%: {:.4} / {:.4} / {:.4} ({}); (ii) GREEDY rejection >= TANTO in {}/{} seeds{}",
        shares[0],
        shares[1],
        shares[2],
        if monotone { "nondecreasing" } else { "not nondecreasing" },
        wins.0,
        wins.1,
        first(&errors)
    );
    verdict("A8", "desk-scale trends", pass, detail)
}

fn a9() -> Verdict {
    let problem = fixtures::toy_problem(1e9);
    let mut flow = OwnerFlow {
        origin: 0,
        app: 0,
        demand: 1e6,
        normalizer: 1e6,
        alternatives: problem.alternatives(0).iter().map(|a| AltFlow::zeros(a, 2, 2)).collect(),
    };
    for (t, w) in [0.7, 0.3].into_iter().enumerate() {
        for i in 0..problem.alternative(0, t).node_count() {
            *flow.alternatives[t].node_mut(i, 0) = w;
        }
    }
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut counts = [0usize; 2];
    let mut failures = 0;
    for _ in 0..n {
        let (placement, outcome, _) = embed_request(&problem, &mut flow, 1.0, &mut rng);
        match placement {
            Placement::Embedded { alternative, .. } if outcome == Outcome::Embedded => counts[alternative] += 1,
            _ => failures += 1,
        }
    }
    let sigma = (0.7 * 0.3 / n as f64).sqrt();
    let shares = [counts[0] as f64 / n as f64, counts[1] as f64 / n as f64];
    let pass = failures == 0 && (shares[0] - 0.7).abs() <= 3.0 * sigma && (shares[1] - 0.3).abs() <= 3.0 * sigma;
    verdict(
        "A9",
        "rounding fidelity",
        pass,
        format!(
            "shares ({:.4}, {:.4}) over {n} requests, 3 sigma = {:.4}, {failures} rejections",
            shares[0],
            shares[1],
            3.0 * sigma
        ),
    )
}

fn rendered(config: &ScenarioConfig, jobs: usize) -> (String, Vec<u8>) {
    let result = with_jobs(Some(jobs), || vneap::run_scenario(config)).unwrap().unwrap();
    let mut csv = Vec::new();
    write_long_csv(&result.rows, &mut csv).unwrap();
    (to_json(&result), csv)
}

fn a10() -> Verdict {
    let max_jobs = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let every = vec![
        Algorithm::Lp,
        Algorithm::Milp,
        Algorithm::Greedy,
        Algorithm::Tanto,
        Algorithm::Vnep(0),
        Algorithm::Vnep(1),
    ];
    let mut toy = ScenarioConfig::load(&fixture("toy/scenario.json")).unwrap();
    toy.requests = RequestSource::File { path: fixture("toy/requests_1.json") };
    toy.algorithms = every.clone();
    toy.repetitions = 4;
    let desk = desk_config(1.0, 300, 6, every);
    let mut diffs = Vec::new();
    for config in [&toy, &ScenarioConfig::load(&fixture("toy/scenario.json")).unwrap(), &desk] {
        let serial = rendered(config, 1);
        let again = rendered(config, 1);
        let parallel = rendered(config, max_jobs);
        if serial != again {
            diffs.push(format!("{}: rerun differs", config.name));
        }
        if serial != parallel {
            diffs.push(format!("{}: 1 vs {max_jobs} workers differ", config.name));
        }
    }
    verdict(
        "A10",
        "determinism",
        diffs.is_empty(),
        format!(
            "3 scenarios, JSON and CSV compared byte for byte across reruns and 1/{max_jobs} workers{}",
            first(&diffs)
        ),
    )
}

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

fn scaling() -> Verdict {
    let (net, _) =
        build_substrate(&vneap::read_graphml(&fixture("ten_node.graphml")).unwrap(), &SubstrateConfig::default())
            .unwrap();
    let catalog = fixtures::cctv_catalog();
    let sizes = [10_000usize, 50_000, 100_000];
    let mut times = Vec::new();
    for &count in &sizes {
        let mut rc = RequestConfig::new(count);
        rc.origin_cap = OriginCap::Off;
        let requests = generate_requests(&net, &catalog, &rc, 5).unwrap().requests;
        let calibrated = calibrate(&net, &catalog, &requests, 1.0, 1.0).unwrap();
        let problem = Problem::new(calibrated, catalog.clone(), Default::default()).unwrap();
        let resolved = problem.resolve_requests(&requests).unwrap();
        let psi = compute_rejection_penalty(&problem).unwrap().psi;
        let plan = plan(&problem, &resolved, psi, &SolveOptions::default()).unwrap();
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let start = Instant::now();
            let rounds = (0..plan.aggregation.aggregates.len())
                .map(|k| round_aggregate(&problem, &plan, k, &resolved, 3))
                .collect();
            let out = assemble(&problem, &resolved, &plan, rounds);
            best = best.min(start.elapsed().as_secs_f64());
            std::hint::black_box(out);
        }
        times.push(best);
    }
    let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let r2 = r_squared(&xs, &times);
    verdict(
        "SCALING",
        "linear rounding time",
        r2 >= 0.98,
        format!(
            "rounding wall time {:.3} / {:.3} / {:.3} s for 10K/50K/100K requests, R^2 = {r2:.4} (>= 0.98)",
            times[0], times[1], times[2]
        ),
    )
}

fn main() -> ExitCode {
    let mut tally = Tally::default();
    let mut verdicts = vec![a1(), a2(&mut tally), a3(&mut tally), a4()];
    let desk = a8(&mut tally);
    let fails = |n: usize| if n == 0 { "none".to_string() } else { n.to_string() };
    verdicts.push(verdict(
        "A5",
        "rejection bounds on every TANTO run",
        tally.tanto_runs > 0 && tally.zeroing_failures == 0 && tally.gap_failures == 0,
        format!(
            "{} runs; zeroing bound failures {}, deterministic gap bound failures {}",
            tally.tanto_runs,
            fails(tally.zeroing_failures),
            fails(tally.gap_failures)
        ),
    ));
    verdicts.push(verdict(
        "A6",
        "embed step bound",
        tally.tanto_runs > 0 && tally.step_failures == 0,
        format!("{} runs; step bound failures {}", tally.tanto_runs, fails(tally.step_failures)),
    ));
    verdicts.push(verdict(
        "A7",
        "GREEDY and TANTO feasibility",
        tally.checked_outputs > 0 && tally.infeasible_outputs == 0 && tally.failed_runs.is_empty(),
        format!(
            "{} outputs checked; infeasible {}, failed runs {}{}",
            tally.checked_outputs,
            fails(tally.infeasible_outputs),
            fails(tally.failed_runs.len()),
            first(&tally.failed_runs)
        ),
    ));
    verdicts.push(desk);
    verdicts.push(a9());
    verdicts.push(a10());
    verdicts.push(scaling());
    let order = ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10", "SCALING"];
    verdicts.sort_by_key(|v| order.iter().position(|id| *id == v.id));
    for v in &verdicts {
        println!("{} {:<7} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.title, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
