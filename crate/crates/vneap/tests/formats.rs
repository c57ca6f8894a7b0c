#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::os::unix::fs::PermissionsExt;

use common::{close, instance, SMALL};
use proptest::prelude::*;
use vneap::algorithms::{run_algorithm, Algorithm, RunOptions};
use vneap::external::ExternalSolver;
use vneap::lp_format::{parse_lp, write_lp, write_solution};
use vneap::Error;
use vneap_core::{
    aggregate_requests, build_milp, build_relaxed_aggregate_lp, build_relaxed_lp, fixtures, solve_lp, SolveOptions,
};

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn exported_models_read_back_unchanged(seed in any::<u64>()) {
        let inst = instance(seed, &SMALL);
        for model in [
            build_milp(&inst.problem, &inst.requests, inst.psi).unwrap(),
            build_relaxed_lp(&inst.problem, &inst.requests, inst.psi).unwrap(),
        ] {
            let text = write_lp(&model.lp);
            let back = parse_lp(&text).unwrap();
            let names = |lp: &vneap_core::LinearProgram| lp.variables.iter().map(|v| v.name.clone()).collect::<Vec<_>>();
            prop_assert_eq!(names(&back), names(&model.lp));
            prop_assert_eq!(write_lp(&back), text);
            let opts = SolveOptions::default();
            let (a, b) = (solve_lp(&model.lp, &opts).unwrap(), solve_lp(&back, &opts).unwrap());
            prop_assert_eq!(a.status, b.status);
            prop_assert!(close(a.objective, b.objective, 1e-9), "{} vs {}", a.objective, b.objective);
        }
    }
}

fn script(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("solver.sh");
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

#[test]
fn external_solver_results_flow_back() {
    let dir = tempfile::tempdir().unwrap();
    let problem = fixtures::toy_problem(5000.0);
    let requests = problem.resolve_requests(&fixtures::toy_requests(100)).unwrap();
    let model = build_relaxed_aggregate_lp(&problem, &aggregate_requests(&requests).aggregates, 1050.0).unwrap();
    let internal = solve_lp(&model.lp, &SolveOptions::default()).unwrap();
    let prepared = dir.path().join("prepared.sol");
    std::fs::write(&prepared, write_solution(&model.lp, &internal.values)).unwrap();
    // The script checks that the model file exists, then hands back the
    // prepared values.
    let solver = script(dir.path(), "test -s \"$1\" && cp \"$3\" \"$2\"");
    let external = ExternalSolver {
        program: solver.to_string_lossy().into_owned(),
        args: vec!["{lp}".into(), "{solution}".into(), prepared.to_string_lossy().into_owned()],
    };
    let opts = RunOptions { external: Some(external), ..RunOptions::default() };
    let via_file = run_algorithm(&problem, &requests, 1050.0, Algorithm::Lp, 0, &opts).unwrap();
    let direct = run_algorithm(&problem, &requests, 1050.0, Algorithm::Lp, 0, &RunOptions::default()).unwrap();
    assert!(close(via_file.cost.total, direct.cost.total, 1e-9));
    assert_eq!(via_file.shares.keys().collect::<Vec<_>>(), direct.shares.keys().collect::<Vec<_>>());
}

#[test]
fn failing_external_solver_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let solver = script(dir.path(), "echo license expired >&2; exit 3");
    let external = ExternalSolver { program: solver.to_string_lossy().into_owned(), args: vec!["{lp}".into()] };
    let problem = fixtures::toy_problem(5000.0);
    let requests = problem.resolve_requests(&fixtures::toy_requests(2)).unwrap();
    let opts = RunOptions { external: Some(external), ..RunOptions::default() };
    match run_algorithm(&problem, &requests, 1050.0, Algorithm::Lp, 0, &opts) {
        Err(Error::ExternalSolver(msg)) => assert!(msg.contains("license expired"), "{msg}"),
        other => panic!("expected an external solver error, got {other:?}"),
    }
}
