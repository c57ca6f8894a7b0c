//! Depth-first branch-and-bound over binary variables.

use alloc::vec::Vec;

use super::simplex::solve_bounded;
use super::{Clock, LinearProgram, LpError, Solution, SolveOptions, SolveStats, Status};

const INTEGRALITY_TOL: f64 = 1e-6;

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Solves `lp` to proven optimality over its binary variables.
///
/// Refuses models with more binaries than `opts.binary_cap`. With no
/// binaries this is a plain LP solve.
pub fn solve_milp_exact_with_clock(
    lp: &LinearProgram,
    opts: &SolveOptions,
    clock: &dyn Clock,
) -> Result<Solution, LpError> {
    lp.check()?;
    opts.check()?;
    let count = lp.binary_count();
    if count > opts.binary_cap {
        return Err(LpError::TooManyBinaries { count, cap: opts.binary_cap });
    }
    let started = clock.now();
    let binaries: Vec<usize> = (0..lp.variables.len()).filter(|&j| lp.variables[j].binary).collect();
    let mut root = Node {
        lower: lp.variables.iter().map(|v| v.lower).collect(),
        upper: lp.variables.iter().map(|v| v.upper).collect(),
    };
    for &j in &binaries {
        root.lower[j] = root.lower[j].max(0.0).ceil();
        root.upper[j] = root.upper[j].min(1.0).floor();
        if root.lower[j] > root.upper[j] {
            return Ok(Solution {
                status: Status::Infeasible,
                objective: f64::NAN,
                values: Vec::new(),
                duals: None,
                stats: SolveStats::default(),
            });
        }
    }

    let mut stats = SolveStats::default();
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut stack = alloc::vec![root];
    let mut stopped: Option<Status> = None;

    while let Some(node) = stack.pop() {
        if opts.node_limit.is_some_and(|limit| stats.nodes >= limit) {
            stopped = Some(Status::IterationLimit);
            break;
        }
        stats.nodes += 1;
        let relax = solve_bounded(lp, &node.lower, &node.upper, opts, clock, started);
        accumulate(&mut stats, &relax.stats);
        match relax.status {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded if incumbent.is_none() && binaries.is_empty() => {
                return Ok(Solution { stats, ..relax });
            }
            Status::Unbounded => continue,
            limit @ (Status::IterationLimit | Status::TimeLimit) => {
                stopped = Some(limit);
                break;
            }
        }
        if let Some((best, _)) = &incumbent {
            if relax.objective >= best - 1e-9 * (1.0 + best.abs()) {
                continue;
            }
        }
        let branch = binaries
            .iter()
            .copied()
            .map(|j| (j, relax.values[j]))
            .filter(|&(_, v)| (v - v.round()).abs() > INTEGRALITY_TOL)
            .min_by(|a, b| {
                let fa = (a.1 - 0.5).abs();
                let fb = (b.1 - 0.5).abs();
                fa.partial_cmp(&fb).unwrap_or(core::cmp::Ordering::Equal).then(a.0.cmp(&b.0))
            });
        match branch {
            None => {
                let candidate = settle(lp, &node, &binaries, &relax, opts, clock, started, &mut stats);
                if let Some((obj, x)) = candidate {
                    if incumbent.as_ref().is_none_or(|(best, _)| obj < *best) {
                        incumbent = Some((obj, x));
                    }
                }
            }
            Some((j, v)) => {
                let mut down = Node { lower: node.lower.clone(), upper: node.upper.clone() };
                down.upper[j] = 0.0;
                let mut up = node;
                up.lower[j] = 1.0;
                // The side nearer the relaxed value is explored first.
                if v >= 0.5 {
                    stack.push(down);
                    stack.push(up);
                } else {
                    stack.push(up);
                    stack.push(down);
                }
            }
        }
    }

    Ok(match (incumbent, stopped) {
        (Some((objective, values)), stopped) => {
            Solution { status: stopped.unwrap_or(Status::Optimal), objective, values, duals: None, stats }
        }
        (None, Some(status)) => Solution { status, objective: f64::NAN, values: Vec::new(), duals: None, stats },
        (None, None) => {
            Solution { status: Status::Infeasible, objective: f64::NAN, values: Vec::new(), duals: None, stats }
        }
    })
}

/// Rounds the binaries of an integral relaxation, re-optimizes the
/// continuous part with binaries fixed and recomputes the objective.
#[allow(clippy::too_many_arguments)]
fn settle(
    lp: &LinearProgram,
    node: &Node,
    binaries: &[usize],
    relax: &Solution,
    opts: &SolveOptions,
    clock: &dyn Clock,
    started: core::time::Duration,
    stats: &mut SolveStats,
) -> Option<(f64, Vec<f64>)> {
    let mut values = relax.values.clone();
    for &j in binaries {
        values[j] = values[j].round();
    }
    let continuous = lp.variables.iter().any(|v| !v.binary);
    if continuous {
        let mut lower = node.lower.clone();
        let mut upper = node.upper.clone();
        for &j in binaries {
            lower[j] = values[j];
            upper[j] = values[j];
        }
        let fixed = solve_bounded(lp, &lower, &upper, opts, clock, started);
        accumulate(stats, &fixed.stats);
        if fixed.status != Status::Optimal {
            return None;
        }
        values = fixed.values;
        for &j in binaries {
            values[j] = lower[j];
        }
    }
    if lp.max_violation(&values) > opts.feasibility_tol * 10.0 {
        return None;
    }
    Some((lp.objective_value(&values), values))
}

fn accumulate(total: &mut SolveStats, part: &SolveStats) {
    total.rows = part.rows;
    total.columns = part.columns;
    total.iterations += part.iterations;
    total.phase_one_iterations += part.phase_one_iterations;
    total.bound_flips += part.bound_flips;
    total.degenerate_pivots += part.degenerate_pivots;
    total.bland_pivots += part.bland_pivots;
    total.refactorizations += part.refactorizations;
    total.singular_repairs += part.singular_repairs;
}
