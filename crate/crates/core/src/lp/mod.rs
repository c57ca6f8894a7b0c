//! Linear programs and the built-in solvers.
//!
//! [`solve_lp`] runs a bounded revised simplex over a sparse LU basis
//! factorization. [`solve_milp_exact`] runs depth-first branch-and-bound over
//! the LP relaxation and is meant for small instances only.

mod bnb;
mod lu;
mod simplex;

use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bnb::solve_milp_exact_with_clock;
pub use simplex::solve_lp_with_clock;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub binary: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// Sparse row as (variable index, coefficient); repeated indices add up.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min c·x + offset` subject to linear rows and variable bounds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub objective: Vec<(usize, f64)>,
    pub objective_offset: f64,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64, binary: bool) -> usize {
        self.variables.push(Variable { name: name.into(), lower, upper, binary });
        self.variables.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint { name: name.into(), coeffs, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn binary_count(&self) -> usize {
        self.variables.iter().filter(|v| v.binary).count()
    }

    /// Copy with integrality dropped; binaries keep their `[0, 1]` bounds.
    pub fn relaxed(&self) -> LinearProgram {
        let mut lp = self.clone();
        for v in &mut lp.variables {
            if v.binary {
                v.binary = false;
                v.lower = v.lower.max(0.0);
                v.upper = v.upper.min(1.0);
            }
        }
        lp
    }

    /// Checks index ranges, finiteness and bound order.
    pub fn check(&self) -> Result<(), LpError> {
        let n = self.variables.len();
        for (j, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan()
                || v.upper.is_nan()
                || v.lower > v.upper
                || v.lower == f64::INFINITY
                || v.upper == f64::NEG_INFINITY
            {
                return Err(LpError::InvalidModel(alloc::format!(
                    "variable {j} ({}) has bounds [{}, {}]",
                    v.name,
                    v.lower,
                    v.upper
                )));
            }
        }
        for &(j, c) in &self.objective {
            if j >= n || !c.is_finite() {
                return Err(LpError::InvalidModel(alloc::format!("objective term ({j}, {c}) is invalid")));
            }
        }
        if !self.objective_offset.is_finite() {
            return Err(LpError::InvalidModel("objective offset is not finite".into()));
        }
        for row in &self.constraints {
            if !row.rhs.is_finite() {
                return Err(LpError::InvalidModel(alloc::format!("row {} has rhs {}", row.name, row.rhs)));
            }
            for &(j, c) in &row.coeffs {
                if j >= n || !c.is_finite() {
                    return Err(LpError::InvalidModel(alloc::format!("row {} has invalid term ({j}, {c})", row.name)));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }

    pub fn row_activity(&self, row: usize, x: &[f64]) -> f64 {
        self.constraints[row].coeffs.iter().map(|&(j, c)| c * x[j]).sum()
    }

    /// Largest absolute bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xj) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xj).max(xj - v.upper);
        }
        for (i, row) in self.constraints.iter().enumerate() {
            let a = self.row_activity(i, x);
            let gap = match row.sense {
                Sense::Le => a - row.rhs,
                Sense::Ge => row.rhs - a,
                Sense::Eq => (a - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    /// Lagrangian lower bound on the optimum for row multipliers `duals`:
    /// `min_x c·x - y·(A x - r)` over variable bounds and row ranges. Any
    /// multiplier vector yields a valid bound, which may be `-inf`.
    pub fn lagrangian_bound(&self, duals: &[f64]) -> f64 {
        let mut reduced = alloc::vec![0.0; self.variables.len()];
        for &(j, c) in &self.objective {
            reduced[j] += c;
        }
        let mut bound = self.objective_offset;
        for (row, &y) in self.constraints.iter().zip(duals) {
            for &(j, a) in &row.coeffs {
                reduced[j] -= y * a;
            }
            let (lo, hi) = row_range(row);
            bound += min_linear(y, lo, hi);
        }
        for (v, &d) in self.variables.iter().zip(&reduced) {
            bound += min_linear(d, v.lower, v.upper);
        }
        bound
    }
}

/// Range of the row activity implied by the constraint sense.
pub(crate) fn row_range(row: &Constraint) -> (f64, f64) {
    match row.sense {
        Sense::Le => (f64::NEG_INFINITY, row.rhs),
        Sense::Ge => (row.rhs, f64::INFINITY),
        Sense::Eq => (row.rhs, row.rhs),
    }
}

/// `min { c t : lo <= t <= hi }`.
fn min_linear(c: f64, lo: f64, hi: f64) -> f64 {
    if c > 0.0 {
        if lo.is_finite() {
            c * lo
        } else {
            f64::NEG_INFINITY
        }
    } else if c < 0.0 {
        if hi.is_finite() {
            c * hi
        } else {
            f64::NEG_INFINITY
        }
    } else {
        0.0
    }
}

/// Monotonic time source used for time limits.
pub trait Clock {
    fn now(&self) -> Duration;
}

/// A clock that never advances; time limits never trigger.
#[derive(Clone, Copy, Debug, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now(&self) -> Duration {
        Duration::ZERO
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// Simplex pivots; `None` picks a limit from the problem size.
    pub iteration_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    /// Accepted for interface stability; the built-in backend is
    /// deterministic and draws no random numbers.
    pub seed: u64,
    /// Largest binary count branch-and-bound accepts.
    pub binary_cap: usize,
    pub node_limit: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            iteration_limit: None,
            time_limit: None,
            seed: 0,
            binary_cap: 40,
            node_limit: None,
        }
    }
}

impl SolveOptions {
    pub fn check(&self) -> Result<(), LpError> {
        let ok = |t: f64| t > 0.0 && t.is_finite();
        if !ok(self.feasibility_tol) || !ok(self.optimality_tol) {
            return Err(LpError::BadOptions("tolerances must be finite and positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub rows: usize,
    pub columns: usize,
    pub iterations: u64,
    pub phase_one_iterations: u64,
    pub bound_flips: u64,
    pub degenerate_pivots: u64,
    pub bland_pivots: u64,
    pub refactorizations: u64,
    pub singular_repairs: u64,
    pub nodes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    /// Objective including the offset; meaningful when `Optimal` or when a
    /// limit stopped branch-and-bound with an incumbent.
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row multipliers of an optimal LP basis.
    pub duals: Option<Vec<f64>>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid solve options: {0}")]
    BadOptions(String),
    #[error("{count} binary variables exceed the branch-and-bound cap of {cap}")]
    TooManyBinaries { count: usize, cap: usize },
}

/// Solves the continuous relaxation of `lp` (integrality is ignored).
pub fn solve_lp(lp: &LinearProgram, opts: &SolveOptions) -> Result<Solution, LpError> {
    solve_lp_with_clock(lp, opts, &FrozenClock)
}

/// Solves `lp` to global optimality by branch-and-bound.
pub fn solve_milp_exact(lp: &LinearProgram, opts: &SolveOptions) -> Result<Solution, LpError> {
    solve_milp_exact_with_clock(lp, opts, &FrozenClock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tiny() -> LinearProgram {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable("x", 0.0, 10.0, false);
        lp.objective.push((x, 1.0));
        lp.add_constraint("r", vec![(x, 1.0)], Sense::Ge, 3.0);
        lp
    }

    #[test]
    fn min_x_subject_to_x_at_least_three() {
        let s = solve_lp(&tiny(), &SolveOptions::default()).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert!((s.values[0] - 3.0).abs() < 1e-9);
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn check_rejects_bad_references() {
        let mut lp = tiny();
        lp.constraints[0].coeffs.push((7, 1.0));
        assert!(matches!(lp.check(), Err(LpError::InvalidModel(_))));
        let mut lp = tiny();
        lp.variables[0].lower = 11.0;
        assert!(lp.check().is_err());
    }

    #[test]
    fn lagrangian_bound_at_optimal_duals() {
        let lp = tiny();
        let s = solve_lp(&lp, &SolveOptions::default()).unwrap();
        let bound = lp.lagrangian_bound(s.duals.as_ref().unwrap());
        assert!((bound - 3.0).abs() < 1e-9);
        assert!(lp.lagrangian_bound(&[0.5]) <= 3.0);
    }

    #[test]
    fn max_violation_measures_rows_and_bounds() {
        let lp = tiny();
        assert_eq!(lp.max_violation(&[3.0]), 0.0);
        assert_eq!(lp.max_violation(&[1.0]), 2.0);
        assert_eq!(lp.max_violation(&[12.0]), 2.0);
    }

    #[test]
    fn options_validation() {
        let opts = SolveOptions { feasibility_tol: 0.0, ..SolveOptions::default() };
        assert!(opts.check().is_err());
        assert!(SolveOptions::default().check().is_ok());
    }
}
