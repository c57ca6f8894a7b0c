//! Uniform driver over the solvers: the fractional relaxation, the exact
//! MILP, single-alternative baselines, GREEDY and TANTO.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use vneap_core::lp::{solve_lp_with_clock, solve_milp_exact_with_clock, Clock};
use vneap_core::tanto::{assemble, plan_with_clock, round_aggregate};
use vneap_core::validate::{check_feasibility, fractional_cost, fractional_shares};
use vneap_core::{
    alternative_shares, build_milp, build_relaxed_aggregate_lp, greedy_embed_all, restrict_problem, total_cost,
    CostBreakdown, FractionalSolution, IntegralEmbedding, Problem, ResolvedRequest, SolveOptions, Status, TantoOutcome,
    TantoReport, Violation,
};

use crate::error::{Error, Result};
use crate::external::ExternalSolver;
use crate::streams::stream_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    /// Fractional optimum over all alternatives.
    Lp,
    /// Exact integral optimum by branch-and-bound.
    Milp,
    Greedy,
    Tanto,
    /// Fractional optimum using only the alternative at this zero-based
    /// index; written `vnep:<index + 1>`.
    Vnep(usize),
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Lp => f.write_str("lp"),
            Algorithm::Milp => f.write_str("milp"),
            Algorithm::Greedy => f.write_str("greedy"),
            Algorithm::Tanto => f.write_str("tanto"),
            Algorithm::Vnep(t) => write!(f, "vnep:{}", t + 1),
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lp" => Ok(Algorithm::Lp),
            "milp" => Ok(Algorithm::Milp),
            "greedy" => Ok(Algorithm::Greedy),
            "tanto" => Ok(Algorithm::Tanto),
            other => match other.strip_prefix("vnep:").map(str::parse::<usize>) {
                Some(Ok(t)) if t >= 1 => Ok(Algorithm::Vnep(t - 1)),
                _ => Err(format!("unknown algorithm {s:?}; expected lp, milp, greedy, tanto or vnep:<T>")),
            },
        }
    }
}

impl Serialize for Algorithm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Wall-clock time for solver time limits.
#[derive(Clone, Copy, Debug)]
pub struct StdClock {
    start: Instant,
}

impl Default for StdClock {
    fn default() -> Self {
        StdClock { start: Instant::now() }
    }
}

impl Clock for StdClock {
    fn now(&self) -> Duration {
        self.start.elapsed()
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub solve: SolveOptions,
    /// Solves the LP algorithms' programs with an external solver instead.
    pub external: Option<ExternalSolver>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolutionDetail {
    Integral { embeddings: Vec<IntegralEmbedding> },
    Fractional { solution: FractionalSolution },
}

/// Everything one algorithm run produced, already validated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub psi: f64,
    pub cost: CostBreakdown,
    /// Demand-weighted fraction of rejected demand.
    pub rejection_rate: f64,
    /// Fraction of served demand per alternative name.
    pub shares: BTreeMap<String, f64>,
    /// Solver objective for LP-based algorithms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_objective: Option<f64>,
    pub violations: Vec<Violation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<TantoReport>,
    pub solution: SolutionDetail,
}

/// Alternative name used for share reporting: the first application's
/// name for that index, or `alt<index>`.
pub fn alternative_label(problem: &Problem, index: usize) -> String {
    problem
        .catalog()
        .applications
        .first()
        .and_then(|a| a.alternatives.get(index))
        .map_or_else(|| format!("alt{index}"), |a| a.name.clone())
}

fn named(problem: &Problem, shares: BTreeMap<usize, f64>, offset: Option<usize>) -> BTreeMap<String, f64> {
    shares.into_iter().map(|(t, s)| (alternative_label(problem, offset.unwrap_or(t)), s)).collect()
}

fn solve_fractional(
    problem: &Problem,
    requests: &[ResolvedRequest],
    psi: f64,
    opts: &RunOptions,
    clock: &dyn Clock,
) -> Result<(FractionalSolution, f64)> {
    let agg = vneap_core::aggregate_requests(requests);
    let model = build_relaxed_aggregate_lp(problem, &agg.aggregates, psi)?;
    let (values, objective) = match &opts.external {
        Some(solver) => {
            let values = solver.solve(&model.lp)?;
            let objective = model.lp.objective_value(&values);
            (values, objective)
        }
        None => {
            let sol = solve_lp_with_clock(&model.lp, &opts.solve, clock)?;
            if sol.status != Status::Optimal {
                return Err(Error::Status(sol.status));
            }
            (sol.values, sol.objective)
        }
    };
    Ok((model.fractional(problem, &values, objective)?, objective))
}

/// TANTO with aggregates rounded in parallel on the current rayon pool.
/// Output does not depend on the number of workers.
pub fn tanto_parallel(
    problem: &Problem,
    requests: &[ResolvedRequest],
    psi: f64,
    opts: &SolveOptions,
    seed: u64,
    clock: &dyn Clock,
) -> Result<TantoOutcome> {
    let plan = plan_with_clock(problem, requests, psi, opts, clock)?;
    let rounds = (0..plan.aggregation.aggregates.len())
        .into_par_iter()
        .map(|k| round_aggregate(problem, &plan, k, requests, seed))
        .collect();
    Ok(assemble(problem, requests, &plan, rounds))
}

fn integral_run(
    algorithm: Algorithm,
    problem: &Problem,
    requests: &[ResolvedRequest],
    psi: f64,
    embeddings: Vec<IntegralEmbedding>,
) -> Result<AlgorithmRun> {
    let cost = total_cost(problem, requests, &embeddings, psi)?;
    Ok(AlgorithmRun {
        algorithm,
        psi,
        rejection_rate: vneap_core::rejection_rate(requests, &embeddings),
        shares: named(problem, alternative_shares(requests, &embeddings), None),
        cost,
        lp_objective: None,
        violations: check_feasibility(problem, requests, &embeddings),
        bounds: None,
        solution: SolutionDetail::Integral { embeddings },
    })
}

/// Runs `algorithm` and validates its output. Randomized algorithms draw
/// from streams derived from `seed` and the algorithm name.
pub fn run_algorithm(
    problem: &Problem,
    requests: &[ResolvedRequest],
    psi: f64,
    algorithm: Algorithm,
    seed: u64,
    opts: &RunOptions,
) -> Result<AlgorithmRun> {
    opts.solve.check()?;
    let clock = StdClock::default();
    match algorithm {
        Algorithm::Lp | Algorithm::Vnep(_) => {
            let restricted;
            let (p, offset) = match algorithm {
                Algorithm::Vnep(t) => {
                    restricted = restrict_problem(problem, t)?;
                    (&restricted, Some(t))
                }
                _ => (problem, None),
            };
            let (solution, objective) = solve_fractional(p, requests, psi, opts, &clock)?;
            let cost = fractional_cost(p, &solution, psi);
            let total = cost.served_demand + cost.rejected_demand;
            Ok(AlgorithmRun {
                algorithm,
                psi,
                rejection_rate: if total > 0.0 { cost.rejected_demand / total } else { 0.0 },
                shares: named(problem, fractional_shares(p, &solution), offset),
                cost,
                lp_objective: Some(objective),
                violations: vneap_core::validate::check_fractional(p, &solution, 1e-6),
                bounds: None,
                solution: SolutionDetail::Fractional { solution },
            })
        }
        Algorithm::Milp => {
            let model = build_milp(problem, requests, psi)?;
            let values = match &opts.external {
                Some(solver) => solver.solve(&model.lp)?,
                None => {
                    let sol = solve_milp_exact_with_clock(&model.lp, &opts.solve, &clock)?;
                    if sol.status != Status::Optimal {
                        return Err(Error::Status(sol.status));
                    }
                    sol.values
                }
            };
            let objective = model.lp.objective_value(&values);
            let embeddings = model.integral_embeddings(problem, &values)?;
            let mut run = integral_run(algorithm, problem, requests, psi, embeddings)?;
            run.lp_objective = Some(objective);
            Ok(run)
        }
        Algorithm::Greedy => {
            let out = greedy_embed_all(problem, requests, psi, stream_seed(seed, "greedy"));
            integral_run(algorithm, problem, requests, psi, out.embeddings)
        }
        Algorithm::Tanto => {
            let out = tanto_parallel(problem, requests, psi, &opts.solve, stream_seed(seed, "tanto"), &clock)?;
            let mut run = integral_run(algorithm, problem, requests, psi, out.embeddings)?;
            run.lp_objective = Some(out.report.lp_objective);
            run.bounds = Some(out.report);
            Ok(run)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vneap_core::fixtures;

    #[test]
    fn algorithm_names_round_trip() {
        for a in [Algorithm::Lp, Algorithm::Milp, Algorithm::Greedy, Algorithm::Tanto, Algorithm::Vnep(1)] {
            assert_eq!(a.to_string().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("vnep:2".parse::<Algorithm>().unwrap(), Algorithm::Vnep(1));
        assert!("vnep:0".parse::<Algorithm>().is_err());
        assert!("simplex".parse::<Algorithm>().is_err());
    }

    #[test]
    fn relaxation_on_abundant_toy_costs_205_per_unit() {
        let p = fixtures::toy_problem(1e9);
        let r = p.resolve_requests(&fixtures::toy_requests(10)).unwrap();
        let run = run_algorithm(&p, &r, 1050.0, Algorithm::Lp, 0, &RunOptions::default()).unwrap();
        assert!((run.cost.total - 2050.0).abs() < 1e-6);
        assert_eq!(run.shares.keys().collect::<Vec<_>>(), vec!["main"]);
    }

    #[test]
    fn single_alternative_baseline_uses_only_that_alternative() {
        let p = fixtures::toy_problem(1e9);
        let r = p.resolve_requests(&fixtures::toy_requests(4)).unwrap();
        let run = run_algorithm(&p, &r, 1050.0, Algorithm::Vnep(1), 0, &RunOptions::default()).unwrap();
        assert_eq!(run.shares.keys().collect::<Vec<_>>(), vec!["accelerated"]);
        assert!((run.cost.total - 4.0 * 215.0).abs() < 1e-6, "{:?}", run.cost);
    }
}
