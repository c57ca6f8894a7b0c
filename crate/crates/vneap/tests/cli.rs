use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn vneap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vneap")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn solve(dir: &Path, substrate: &str, requests: &str, algo: &str, seed: &str, out: &str) -> (Output, PathBuf) {
    let out = dir.join(out);
    let output = vneap(&[
        "solve",
        "--substrate",
        path(&fixture(substrate)),
        "--apps",
        path(&fixture("toy/apps.json")),
        "--requests",
        path(&fixture(requests)),
        "--algo",
        algo,
        "--seed",
        seed,
        "--out",
        path(&out),
    ]);
    (output, out)
}

#[test]
fn missing_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = vneap(&["ingest", "--graphml", "/nonexistent/net.graphml", "--out", path(&dir.path().join("s.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/net.graphml"));
    assert!(!dir.path().join("s.json").exists());
}

#[test]
fn malformed_graphml_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.graphml");
    std::fs::write(&bad, "<graphml>\n  <graph>\n    <node id=\"a\">\n  </graph>\n</graphml>\n").unwrap();
    let out = vneap(&["ingest", "--graphml", path(&bad), "--out", path(&dir.path().join("s.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 4"), "{stderr}");
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (out, _) = solve(dir.path(), "toy/substrate.json", "toy/requests_1.json", "simplex", "1", "r.json");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn arnes_ingest_matches_the_tier_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("arnes.json");
    let out = vneap(&["ingest", "--graphml", path(&fixture("Arnes.graphml")), "--out", path(&out_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let net = read_json(&out_path);
    let nodes = net["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 34);
    let golden = read_json(&fixture("arnes_tiers.json"));
    let golden = golden.as_array().unwrap();
    assert_eq!(golden.len(), 34);
    for (node, expected) in nodes.iter().zip(golden) {
        assert_eq!(node["id"], expected["id"]);
        assert_eq!(node["tier"], expected["tier"], "node {}", expected["label"]);
    }
}

#[test]
fn tier_ratios_flag_scales_costs() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("ten.json");
    let graphml = fixture("ten_node.graphml");
    let out = vneap(&["ingest", "--graphml", path(&graphml), "--out", path(&out_path), "--tier-ratios", "2"]);
    assert!(out.status.success());
    let net = read_json(&out_path);
    let cost =
        |id: &str| net["nodes"].as_array().unwrap().iter().find(|n| n["id"] == id).unwrap()["cost"].as_f64().unwrap();
    assert!((cost("e0") - 0.09).abs() < 1e-12);
    assert!((cost("t0") - 0.045).abs() < 1e-12);
    assert!((cost("c0") - 0.0225).abs() < 1e-12);
}

#[test]
fn relaxation_on_abundant_toy_costs_205_per_unit() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = solve(dir.path(), "toy/substrate.json", "toy/requests_100.json", "lp", "0", "lp.json");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&report);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["algorithm"], "lp");
    assert!((report["cost"]["total"].as_f64().unwrap() - 20_500.0).abs() < 1e-6);
    assert_eq!(report["rejection_rate"].as_f64(), Some(0.0));
}

#[test]
fn tanto_is_reproducible_from_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, first) = solve(dir.path(), "toy/substrate_5000.json", "toy/requests_100.json", "tanto", "1", "a.json");
    let (b, second) = solve(dir.path(), "toy/substrate_5000.json", "toy/requests_100.json", "tanto", "1", "b.json");
    assert!(a.status.success() && b.status.success());
    assert_eq!(std::fs::read(first).unwrap(), std::fs::read(second).unwrap());
}

#[test]
fn single_alternative_baseline_uses_only_the_accelerated_topology() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = solve(dir.path(), "toy/substrate_5000.json", "toy/requests_100.json", "vnep:2", "0", "v.json");
    assert!(out.status.success());
    let report = read_json(&report);
    let shares = report["shares"].as_object().unwrap();
    assert_eq!(shares.keys().collect::<Vec<_>>(), vec!["accelerated"]);
}

#[test]
fn exceeding_the_binary_cap_is_a_resource_limit() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = solve(dir.path(), "toy/substrate.json", "toy/requests_100.json", "milp", "0", "m.json");
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!report.exists());
}

#[test]
fn export_writes_a_readable_model() {
    let dir = tempfile::tempdir().unwrap();
    let lp_path = dir.path().join("model.lp");
    let out = vneap(&[
        "solve",
        "--substrate",
        path(&fixture("toy/substrate.json")),
        "--apps",
        path(&fixture("toy/apps.json")),
        "--requests",
        path(&fixture("toy/requests_1.json")),
        "--algo",
        "milp",
        "--out",
        path(&dir.path().join("m.json")),
        "--export-lp",
        path(&lp_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&lp_path).unwrap();
    let lp = vneap::lp_format::parse_lp(&text).unwrap();
    assert!(lp.variables.iter().any(|v| v.binary));
    assert!(text.contains("Binaries"));
}

#[test]
fn generate_then_calibrate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let substrate = dir.path().join("ten.json");
    let requests = dir.path().join("requests.json");
    let calibrated = dir.path().join("calibrated.json");
    let cctv = fixture("cctv_catalog.json");
    assert!(vneap(&["ingest", "--graphml", path(&fixture("ten_node.graphml")), "--out", path(&substrate)])
        .status
        .success());
    let out = vneap(&[
        "generate",
        "--substrate",
        path(&substrate),
        "--apps",
        path(&cctv),
        "--count",
        "500",
        "--seed",
        "3",
        "--spatial",
        "lognormal",
        "--no-origin-cap",
        "--out",
        path(&requests),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reqs = read_json(&requests);
    assert_eq!(reqs.as_array().unwrap().len(), 500);
    assert!(reqs.as_array().unwrap().iter().all(|r| r["origin"].as_str().unwrap().starts_with('e')));
    let out = vneap(&[
        "calibrate",
        "--substrate",
        path(&substrate),
        "--apps",
        path(&cctv),
        "--requests",
        path(&requests),
        "--node-tu",
        "0.5",
        "--link-tu",
        "2",
        "--out",
        path(&calibrated),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let net: vneap_core::SubstrateNetwork = serde_json::from_value(read_json(&calibrated)).unwrap();
    let catalog: vneap_core::Catalog = serde_json::from_value(read_json(&cctv)).unwrap();
    let reqs: Vec<vneap_core::Request> = serde_json::from_value(reqs).unwrap();
    let (node, link) = vneap::target_utilization(&net, &catalog, &reqs).unwrap();
    assert!((node - 0.5).abs() < 1e-9 && (link - 2.0).abs() < 1e-9, "{node} {link}");
}

#[test]
fn compare_writes_the_result_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    let mut config = read_json(&fixture("toy/scenario.json"));
    for key in ["path"] {
        for section in ["topology", "catalog", "requests"] {
            let rel = config[section][key].as_str().unwrap().to_string();
            config[section][key] = Value::from(path(&fixture(&format!("toy/{rel}"))));
        }
    }
    config["algorithms"] = serde_json::json!(["lp", "tanto"]);
    config["repetitions"] = Value::from(3);
    std::fs::write(&scenario, serde_json::to_string(&config).unwrap()).unwrap();
    let out_dir = dir.path().join("out");
    let out = vneap(&["compare", "--scenario", path(&scenario), "--out", path(&out_dir), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = read_json(&out_dir.join("results.json"));
    assert_eq!(results["rows"].as_array().unwrap().len(), 6);
    let mut reader = csv::Reader::from_path(out_dir.join("results.csv")).unwrap();
    let mut groups = std::collections::BTreeSet::new();
    for record in reader.records() {
        let record = record.unwrap();
        groups.insert((record[1].to_string(), record[3].to_string()));
        if &record[5] == "rejection_rate" {
            let v: f64 = record[6].parse().unwrap();
            assert!((0.0..=1.0).contains(&v));
        }
    }
    assert_eq!(groups.len(), 6);
    let summary = vneap(&["report", "--input", path(&out_dir.join("results.json"))]);
    assert!(summary.status.success());
    assert_eq!(
        String::from_utf8(summary.stdout).unwrap(),
        std::fs::read_to_string(out_dir.join("summary.csv")).unwrap()
    );
}

#[test]
fn golden_toy_scenario_matches_the_stored_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = vneap(&["compare", "--scenario", path(&fixture("toy/scenario.json")), "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let produced = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let golden = std::fs::read_to_string(fixture("toy/results.csv")).unwrap();
    assert_eq!(produced, golden);
}

#[test]
fn scenario_where_every_run_fails_exits_with_the_failure_kind() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    let config = serde_json::json!({
        "schema_version": 1,
        "name": "too-big",
        "topology": {"kind": "substrate", "path": path(&fixture("toy/substrate.json"))},
        "catalog": {"kind": "builtin", "name": "toy"},
        "requests": {"kind": "file", "path": path(&fixture("toy/requests_100.json"))},
        "seed": 1,
        "repetitions": 1,
        "algorithms": ["milp"]
    });
    std::fs::write(&scenario, config.to_string()).unwrap();
    let out = vneap(&["compare", "--scenario", path(&scenario), "--out", path(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(4));
    let results = read_json(&dir.path().join("out/results.json"));
    assert_eq!(results["rows"][0]["status"], "resource_limit");
}

#[test]
fn unknown_scenario_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("scenario.json");
    let mut config = read_json(&fixture("toy/scenario.json"));
    config["repetitons"] = Value::from(3);
    std::fs::write(&scenario, config.to_string()).unwrap();
    let out = vneap(&["compare", "--scenario", path(&scenario), "--out", path(&dir.path().join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("repetitons"));
}
