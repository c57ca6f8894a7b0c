//! Report rows, long-format CSV and per-metric summaries.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use vneap_core::{LpError, Status, TantoReport};

use crate::algorithms::{Algorithm, AlgorithmRun};
use crate::error::{Error, ExitKind, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
    ResourceLimit,
    Error,
}

impl RowStatus {
    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::Status(Status::Infeasible) => RowStatus::Infeasible,
            Error::Status(Status::Unbounded) => RowStatus::Unbounded,
            Error::Status(Status::IterationLimit) => RowStatus::IterationLimit,
            Error::Status(Status::TimeLimit) => RowStatus::TimeLimit,
            Error::Lp(LpError::TooManyBinaries { .. }) => RowStatus::ResourceLimit,
            _ => RowStatus::Error,
        }
    }

    pub fn exit_kind(self) -> Option<ExitKind> {
        match self {
            RowStatus::Ok => None,
            RowStatus::Infeasible | RowStatus::Unbounded => Some(ExitKind::Infeasible),
            RowStatus::IterationLimit | RowStatus::TimeLimit | RowStatus::ResourceLimit => Some(ExitKind::Limit),
            RowStatus::Error => Some(ExitKind::Input),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Infeasible => "infeasible",
            RowStatus::Unbounded => "unbounded",
            RowStatus::IterationLimit => "iteration_limit",
            RowStatus::TimeLimit => "time_limit",
            RowStatus::ResourceLimit => "resource_limit",
            RowStatus::Error => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub requests: usize,
    pub total_demand: f64,
    pub served_demand: f64,
    pub rejected_demand: f64,
    pub rejection_rate: f64,
    pub compute_cost: f64,
    pub bandwidth_cost: f64,
    pub rejection_cost: f64,
    pub total_cost: f64,
    pub psi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_objective: Option<f64>,
    pub violations: usize,
    pub shares: BTreeMap<String, f64>,
}

impl Metrics {
    pub fn from_run(run: &AlgorithmRun, requests: usize) -> Self {
        let c = &run.cost;
        Metrics {
            requests,
            total_demand: c.served_demand + c.rejected_demand,
            served_demand: c.served_demand,
            rejected_demand: c.rejected_demand,
            rejection_rate: run.rejection_rate,
            compute_cost: c.compute,
            bandwidth_cost: c.bandwidth,
            rejection_cost: c.rejection,
            total_cost: c.total,
            psi: run.psi,
            lp_objective: run.lp_objective,
            violations: run.violations.len(),
            shares: run.shares.clone(),
        }
    }
}

/// One algorithm run within one repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub repetition: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Metrics>,
    /// TANTO bound checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<TantoReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_s: Option<f64>,
}

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }

    /// `(metric, value)` pairs in a fixed order.
    pub fn metric_values(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        if let Some(m) = &self.metrics {
            let mut push = |name: &str, v: f64| out.push((name.to_string(), v + 0.0));
            push("requests", m.requests as f64);
            push("total_demand", m.total_demand);
            push("served_demand", m.served_demand);
            push("rejected_demand", m.rejected_demand);
            push("rejection_rate", m.rejection_rate);
            push("compute_cost", m.compute_cost);
            push("bandwidth_cost", m.bandwidth_cost);
            push("rejection_cost", m.rejection_cost);
            push("total_cost", m.total_cost);
            push("psi", m.psi);
            if let Some(v) = m.lp_objective {
                push("lp_objective", v);
            }
            push("violations", m.violations as f64);
            for (name, share) in &m.shares {
                out.push((format!("share:{name}"), *share));
            }
        }
        if let Some(b) = &self.bounds {
            let flag = |x: bool| if x { 1.0 } else { 0.0 };
            for (name, v) in [
                ("lp_iterations", b.lp_iterations as f64),
                ("rounding_rejections", b.rounding_rejections as f64),
                ("exhausted_rejections", b.exhausted_rejections as f64),
                ("initial_nonzero", b.initial_nonzero as f64),
                ("zeroing_bound_holds", flag(b.zeroing_bound_holds)),
                ("rejection_gap", b.rejection_gap),
                ("rejection_gap_bound", b.rejection_gap_bound),
                ("gap_bound_holds", flag(b.gap_bound_holds)),
                ("max_steps", b.max_steps as f64),
                ("step_bound", b.step_bound as f64),
                ("step_bound_holds", flag(b.step_bound_holds)),
            ] {
                out.push((name.to_string(), v));
            }
        }
        if let Some(t) = self.runtime_s {
            out.push(("runtime_s".into(), t));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    /// Sample variance; zero for a single value.
    pub variance: f64,
}

/// Mean and variance of every metric per algorithm over successful rows.
pub fn summarize(rows: &[ReportRow]) -> Vec<SummaryRow> {
    let mut order: Vec<Algorithm> = Vec::new();
    let mut groups: BTreeMap<(Algorithm, String), (usize, Vec<f64>)> = BTreeMap::new();
    let mut metric_order: BTreeMap<String, usize> = BTreeMap::new();
    for row in rows.iter().filter(|r| r.is_ok()) {
        if !order.contains(&row.algorithm) {
            order.push(row.algorithm);
        }
        for (metric, v) in row.metric_values() {
            let next = metric_order.len();
            let rank = *metric_order.entry(metric.clone()).or_insert(next);
            groups.entry((row.algorithm, metric)).or_insert((rank, Vec::new())).1.push(v);
        }
    }
    let mut out = Vec::new();
    for alg in order {
        let mut metrics: Vec<(&String, &(usize, Vec<f64>))> =
            groups.iter().filter(|((a, _), _)| *a == alg).map(|((_, m), g)| (m, g)).collect();
        metrics.sort_by_key(|(_, (rank, _))| *rank);
        for (metric, (_, values)) in metrics {
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let variance =
                if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
            out.push(SummaryRow { algorithm: alg, metric: metric.clone(), count: n, mean, variance });
        }
    }
    out
}

/// Plot-ready CSV with one line per row and metric. Failed rows contribute
/// a single `failed` line.
pub fn write_long_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "repetition", "seed", "algorithm", "status", "metric", "value"])?;
    for row in rows {
        let head = [row.scenario.clone(), row.repetition.to_string(), row.seed.to_string(), row.algorithm.to_string()];
        let values = if row.is_ok() { row.metric_values() } else { vec![("failed".to_string(), 1.0)] };
        for (metric, value) in values {
            w.write_record(head.iter().cloned().chain([row.status.as_str().to_string(), metric, value.to_string()]))?;
        }
    }
    w.flush().map_err(|source| Error::Io { path: "<csv>".into(), source })?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "metric", "count", "mean", "variance"])?;
    for s in summary {
        w.write_record([
            s.algorithm.to_string(),
            s.metric.clone(),
            s.count.to_string(),
            s.mean.to_string(),
            s.variance.to_string(),
        ])?;
    }
    w.flush().map_err(|source| Error::Io { path: "<csv>".into(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rep: usize, algorithm: Algorithm, cost: f64) -> ReportRow {
        ReportRow {
            scenario: "s".into(),
            repetition: rep,
            seed: rep as u64,
            algorithm,
            status: RowStatus::Ok,
            error: None,
            metrics: Some(Metrics {
                requests: 2,
                total_demand: 2.0,
                served_demand: 1.0,
                rejected_demand: 1.0,
                rejection_rate: 0.5,
                compute_cost: cost,
                bandwidth_cost: 0.0,
                rejection_cost: 0.0,
                total_cost: cost,
                psi: 1.0,
                lp_objective: None,
                violations: 0,
                shares: BTreeMap::from([("main".to_string(), 1.0)]),
            }),
            bounds: None,
            runtime_s: None,
        }
    }

    #[test]
    fn summary_has_mean_and_sample_variance() {
        let rows = vec![row(0, Algorithm::Lp, 1.0), row(1, Algorithm::Lp, 3.0), row(0, Algorithm::Greedy, 5.0)];
        let s = summarize(&rows);
        let cost = s.iter().find(|r| r.algorithm == Algorithm::Lp && r.metric == "total_cost").unwrap();
        assert_eq!((cost.count, cost.mean, cost.variance), (2, 2.0, 2.0));
        let single = s.iter().find(|r| r.algorithm == Algorithm::Greedy && r.metric == "total_cost").unwrap();
        assert_eq!(single.variance, 0.0);
        assert_eq!(s[0].algorithm, Algorithm::Lp);
    }

    #[test]
    fn long_csv_lists_every_metric() {
        let mut failed = row(2, Algorithm::Milp, 0.0);
        failed.status = RowStatus::ResourceLimit;
        failed.metrics = None;
        let mut buf = Vec::new();
        write_long_csv(&[row(0, Algorithm::Lp, 1.0), failed], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scenario,repetition,seed,algorithm,status,metric,value\n"));
        assert!(text.contains("s,0,0,lp,ok,share:main,1\n"));
        assert!(text.ends_with("s,2,2,milp,resource_limit,failed,1\n"));
    }
}
