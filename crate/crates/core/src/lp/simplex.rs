//! Bounded primal revised simplex.
//!
//! Rows become `A x - r = 0` with one logical variable `r_i` per row whose
//! bounds encode the row sense. Phase one minimizes the sum of bound
//! violations of the basic variables (no artificial columns) and phase two
//! the scaled objective. Pricing is Dantzig's rule, switching to Bland's
//! rule after a run of degenerate pivots; the ratio test is Harris' two-pass
//! test with bound flips.

use alloc::vec;
use alloc::vec::Vec;
use core::time::Duration;

use super::lu::{Csc, Lu};
use super::{row_range, Clock, LinearProgram, LpError, Solution, SolveOptions, SolveStats, Status};

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
const DEGENERATE_RUN: u32 = 50;
const NONE: usize = usize::MAX;

/// Solves the continuous relaxation of `lp`, reading time from `clock`.
pub fn solve_lp_with_clock(lp: &LinearProgram, opts: &SolveOptions, clock: &dyn Clock) -> Result<Solution, LpError> {
    lp.check()?;
    opts.check()?;
    let lower: Vec<f64> = lp.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = lp.variables.iter().map(|v| v.upper).collect();
    Ok(solve_bounded(lp, &lower, &upper, opts, clock, clock.now()))
}

/// Solves `lp` with its variable bounds replaced; `started` is the clock
/// reading the time limit counts from.
pub(crate) fn solve_bounded(
    lp: &LinearProgram,
    lower: &[f64],
    upper: &[f64],
    opts: &SolveOptions,
    clock: &dyn Clock,
    started: Duration,
) -> Solution {
    let scaled = Scaled::new(lp, lower, upper);
    let mut s = Simplex::new(&scaled, opts, clock, started);
    let status = s.run();
    let mut stats = s.stats.clone();
    stats.rows = scaled.m;
    stats.columns = scaled.n;

    let mut values: Vec<f64> = (0..scaled.n).map(|j| s.x[j] * scaled.col_scale[j]).collect();
    for (j, v) in values.iter_mut().enumerate() {
        *v = v.clamp(lower[j], upper[j]);
    }
    let (objective, duals) = match status {
        Status::Optimal => {
            let y = s.duals();
            let duals = (0..scaled.m).map(|i| y[i] * scaled.row_scale[i] / scaled.obj_scale).collect();
            (lp.objective_value(&values), Some(duals))
        }
        _ => (f64::NAN, None),
    };
    Solution { status, objective, values, duals, stats }
}

fn exponent(x: f64) -> i32 {
    debug_assert!(x > 0.0 && x.is_finite());
    let e = ((x.to_bits() >> 52) & 0x7ff) as i32;
    if e == 0 {
        -1022
    } else {
        e - 1023
    }
}

fn pow2(k: i32) -> f64 {
    let k = k.clamp(-1022, 1023);
    f64::from_bits(((k + 1023) as u64) << 52)
}

/// The problem in scaled standard form. Structural columns come first, the
/// logical column of row `i` is column `n + i`.
struct Scaled {
    m: usize,
    n: usize,
    a: Csc,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    col_scale: Vec<f64>,
    row_scale: Vec<f64>,
    obj_scale: f64,
}

impl Scaled {
    fn new(lp: &LinearProgram, lower: &[f64], upper: &[f64]) -> Self {
        let m = lp.constraints.len();
        let n = lp.variables.len();
        let mut triples: Vec<(usize, usize, f64)> = Vec::new();
        for (i, row) in lp.constraints.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                triples.push((j, i, v));
            }
        }
        triples.sort_by_key(|t| (t.0, t.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triples.len());
        for (j, i, v) in triples {
            match merged.last_mut() {
                Some(last) if last.0 == j && last.1 == i => last.2 += v,
                _ => merged.push((j, i, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);

        let mut row_scale = vec![1.0; m];
        let mut row_lo = vec![i32::MAX; m];
        let mut row_hi = vec![i32::MIN; m];
        for &(_, i, v) in &merged {
            let e = exponent(v.abs());
            row_lo[i] = row_lo[i].min(e);
            row_hi[i] = row_hi[i].max(e);
        }
        for i in 0..m {
            if row_lo[i] <= row_hi[i] {
                row_scale[i] = pow2(-(row_lo[i] + row_hi[i]) / 2);
            }
        }
        let mut col_scale = vec![1.0; n];
        let mut col_lo = vec![i32::MAX; n];
        let mut col_hi = vec![i32::MIN; n];
        for &(j, i, v) in &merged {
            let e = exponent((v * row_scale[i]).abs());
            col_lo[j] = col_lo[j].min(e);
            col_hi[j] = col_hi[j].max(e);
        }
        for j in 0..n {
            if col_lo[j] <= col_hi[j] {
                col_scale[j] = pow2(-(col_lo[j] + col_hi[j]) / 2);
            }
        }

        let mut a = Csc { nrows: m, ptr: Vec::with_capacity(n + m + 1), idx: Vec::new(), val: Vec::new() };
        a.ptr.push(0);
        let mut t = 0;
        for (j, &scale) in col_scale.iter().enumerate().take(n) {
            while t < merged.len() && merged[t].0 == j {
                let (_, i, v) = merged[t];
                a.idx.push(i);
                a.val.push(v * row_scale[i] * scale);
                t += 1;
            }
            a.ptr.push(a.idx.len());
        }
        for i in 0..m {
            a.idx.push(i);
            a.val.push(-1.0);
            a.ptr.push(a.idx.len());
        }

        let mut raw_cost = vec![0.0; n];
        for &(j, c) in &lp.objective {
            raw_cost[j] += c;
        }
        let biggest = raw_cost.iter().zip(&col_scale).map(|(c, s)| (c * s).abs()).fold(0.0, f64::max);
        let obj_scale = if biggest > 0.0 { pow2(-exponent(biggest)) } else { 1.0 };

        let mut lo = Vec::with_capacity(n + m);
        let mut hi = Vec::with_capacity(n + m);
        let mut cost = vec![0.0; n + m];
        for j in 0..n {
            lo.push(lower[j] / col_scale[j]);
            hi.push(upper[j] / col_scale[j]);
            cost[j] = raw_cost[j] * col_scale[j] * obj_scale;
        }
        for (i, row) in lp.constraints.iter().enumerate() {
            let (l, u) = row_range(row);
            lo.push(l * row_scale[i]);
            hi.push(u * row_scale[i]);
        }
        Scaled { m, n, a, lower: lo, upper: hi, cost, col_scale, row_scale, obj_scale }
    }
}

struct Eta {
    pos: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

enum Step {
    Flip(f64),
    Pivot { pos: usize, theta: f64, leave_at: f64 },
    Unbounded,
}

struct Simplex<'a> {
    p: &'a Scaled,
    opts: &'a SolveOptions,
    clock: &'a dyn Clock,
    started: Duration,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    x: Vec<f64>,
    lu: Lu,
    etas: Vec<Eta>,
    fresh: bool,
    work: Vec<f64>,
    stats: SolveStats,
    last_y: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(p: &'a Scaled, opts: &'a SolveOptions, clock: &'a dyn Clock, started: Duration) -> Self {
        let (m, n) = (p.m, p.n);
        let basis: Vec<usize> = (n..n + m).collect();
        let mut pos_of = vec![NONE; n + m];
        for (pos, &j) in basis.iter().enumerate() {
            pos_of[j] = pos;
        }
        let mut x = vec![0.0; n + m];
        for (j, xj) in x.iter_mut().enumerate().take(n) {
            *xj = if p.lower[j].is_finite() {
                p.lower[j]
            } else if p.upper[j].is_finite() {
                p.upper[j]
            } else {
                0.0
            };
        }
        let (lu, _) = Lu::factor(&p.a, &basis, n);
        Simplex {
            p,
            opts,
            clock,
            started,
            basis,
            pos_of,
            x,
            lu,
            etas: Vec::new(),
            fresh: false,
            work: vec![0.0; m],
            stats: SolveStats::default(),
            last_y: vec![0.0; m],
        }
    }

    fn refactor(&mut self) {
        let (lu, repairs) = Lu::factor(&self.p.a, &self.basis, self.p.n);
        for r in &repairs {
            let old = self.basis[r.position];
            let logical = self.p.n + r.row;
            self.pos_of[old] = NONE;
            self.x[old] = self.nearest_bound(old);
            self.basis[r.position] = logical;
            self.pos_of[logical] = r.position;
        }
        self.stats.singular_repairs += repairs.len() as u64;
        self.lu = if repairs.is_empty() { lu } else { Lu::factor(&self.p.a, &self.basis, self.p.n).0 };
        self.etas.clear();
        self.stats.refactorizations += 1;
        self.recompute_basics();
        self.fresh = true;
    }

    fn nearest_bound(&self, j: usize) -> f64 {
        let (l, u, v) = (self.p.lower[j], self.p.upper[j], self.x[j]);
        if l.is_finite() && (v - l).abs() <= (u - v).abs() {
            l
        } else if u.is_finite() {
            u
        } else if l.is_finite() {
            l
        } else {
            0.0
        }
    }

    /// `x_B = B^{-1} (-N x_N)`.
    fn recompute_basics(&mut self) {
        let m = self.p.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.p.n + m {
            if self.pos_of[j] == NONE && self.x[j] != 0.0 {
                let (idx, val) = self.p.a.col(j);
                for (&i, &a) in idx.iter().zip(val) {
                    rhs[i] -= a * self.x[j];
                }
            }
        }
        self.ftran_dense(&mut rhs);
        for (pos, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[pos];
        }
    }

    fn ftran_dense(&mut self, v: &mut [f64]) {
        self.lu.ftran(v, &mut self.work);
        for eta in &self.etas {
            let xr = v[eta.pos] / eta.pivot;
            v[eta.pos] = xr;
            if xr != 0.0 {
                for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                    v[i] -= a * xr;
                }
            }
        }
    }

    fn btran_dense(&mut self, c: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                s -= a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        self.lu.btran(c, &mut self.work);
    }

    fn column(&mut self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.p.m];
        let (idx, val) = self.p.a.col(j);
        for (&i, &a) in idx.iter().zip(val) {
            v[i] = a;
        }
        self.ftran_dense(&mut v);
        v
    }

    fn infeasibility(&self) -> f64 {
        let tol = self.opts.feasibility_tol;
        self.basis
            .iter()
            .map(|&j| {
                let (l, u, v) = (self.p.lower[j], self.p.upper[j], self.x[j]);
                if v < l - tol {
                    l - v
                } else if v > u + tol {
                    v - u
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn phase_one_cost(&self, j: usize) -> f64 {
        let tol = self.opts.feasibility_tol;
        if self.x[j] < self.p.lower[j] - tol {
            -1.0
        } else if self.x[j] > self.p.upper[j] + tol {
            1.0
        } else {
            0.0
        }
    }

    /// Bounds the ratio test keeps basic variable `j` within.
    fn ratio_bounds(&self, j: usize, phase_one: bool) -> (f64, f64) {
        let (l, u) = (self.p.lower[j], self.p.upper[j]);
        if phase_one {
            let tol = self.opts.feasibility_tol;
            if self.x[j] < l - tol {
                return (f64::NEG_INFINITY, l);
            }
            if self.x[j] > u + tol {
                return (u, f64::INFINITY);
            }
        }
        (l, u)
    }

    fn iteration_limit(&self) -> u64 {
        self.opts.iteration_limit.unwrap_or(50 * (self.p.m + self.p.n) as u64 + 10_000)
    }

    fn out_of_time(&self) -> bool {
        match self.opts.time_limit {
            Some(limit) => self.clock.now().saturating_sub(self.started) >= limit,
            None => false,
        }
    }

    fn duals(&self) -> Vec<f64> {
        self.last_y.clone()
    }

    fn price(&self, y: &[f64], phase_one: bool, bland: bool, skip: &[usize]) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.p.n + self.p.m {
            if self.pos_of[j] != NONE || skip.contains(&j) {
                continue;
            }
            let (l, u, v) = (self.p.lower[j], self.p.upper[j], self.x[j]);
            if u - l <= 0.0 {
                continue;
            }
            let c = if phase_one { 0.0 } else { self.p.cost[j] };
            let d = c - self.p.a.dot(j, y);
            let dir = if d < -tol && v < u {
                1.0
            } else if d > tol && v > l {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if d.abs() > best_score {
                best_score = d.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    fn ratio(&self, q: usize, dir: f64, alpha: &[f64], phase_one: bool, bland: bool) -> Step {
        let tol = self.opts.feasibility_tol;
        let mut theta_max = f64::INFINITY;
        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let rate = -dir * a;
            let (lo, hi) = self.ratio_bounds(j, phase_one);
            let r = if rate < 0.0 { (self.x[j] - lo + tol) / -rate } else { (hi + tol - self.x[j]) / rate };
            if r < theta_max {
                theta_max = r;
            }
        }
        let range = self.p.upper[q] - self.p.lower[q];
        if range <= theta_max {
            return if range.is_finite() { Step::Flip(range) } else { Step::Unbounded };
        }
        if theta_max == f64::INFINITY {
            return Step::Unbounded;
        }

        let mut chosen: Option<(usize, f64, f64)> = None;
        let mut best_key = (f64::INFINITY, usize::MAX);
        for (pos, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[pos];
            let rate = -dir * a;
            let (lo, hi) = self.ratio_bounds(j, phase_one);
            let (exact, bound) = if rate < 0.0 {
                if !lo.is_finite() {
                    continue;
                }
                ((self.x[j] - lo) / -rate, lo)
            } else {
                if !hi.is_finite() {
                    continue;
                }
                ((hi - self.x[j]) / rate, hi)
            };
            let exact = exact.max(0.0);
            if exact > theta_max {
                continue;
            }
            // Harris picks the largest pivot, Bland the smallest ratio; both
            // break ties on the lowest variable index.
            let key = if bland { (exact, j) } else { (-a.abs(), j) };
            if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
                best_key = key;
                chosen = Some((pos, exact, bound));
            }
        }
        match chosen {
            Some((pos, theta, leave_at)) => Step::Pivot { pos, theta, leave_at },
            None => Step::Unbounded,
        }
    }

    fn run(&mut self) -> Status {
        let (m, n) = (self.p.m, self.p.n);
        let limit = self.iteration_limit();
        let mut degenerate_run = 0u32;
        let mut bland = false;
        let mut skip: Vec<usize> = Vec::new();
        self.refactor();
        loop {
            if self.stats.iterations >= limit {
                return Status::IterationLimit;
            }
            if self.out_of_time() {
                return Status::TimeLimit;
            }
            let phase_one = self.infeasibility() > self.opts.feasibility_tol;
            let mut y: Vec<f64> =
                self.basis.iter().map(|&j| if phase_one { self.phase_one_cost(j) } else { self.p.cost[j] }).collect();
            self.btran_dense(&mut y);

            let Some((q, dir)) = self.price(&y, phase_one, bland, &skip) else {
                if !self.fresh {
                    self.refactor();
                    skip.clear();
                    continue;
                }
                if phase_one {
                    return Status::Infeasible;
                }
                self.last_y = y;
                return Status::Optimal;
            };

            let alpha = self.column(q);
            match self.ratio(q, dir, &alpha, phase_one, bland) {
                Step::Unbounded if !phase_one && skip.is_empty() && self.fresh => return Status::Unbounded,
                Step::Unbounded => {
                    if self.fresh {
                        skip.push(q);
                    } else {
                        self.refactor();
                    }
                    continue;
                }
                Step::Flip(range) => {
                    self.apply(q, dir, &alpha, range);
                    self.x[q] = if dir > 0.0 { self.p.upper[q] } else { self.p.lower[q] };
                    self.stats.bound_flips += 1;
                }
                Step::Pivot { pos, theta, leave_at } => {
                    if alpha[pos].abs() < 1e-7 && !self.fresh {
                        self.refactor();
                        continue;
                    }
                    self.apply(q, dir, &alpha, theta);
                    let leaving = self.basis[pos];
                    self.x[leaving] = leave_at;
                    self.pos_of[leaving] = NONE;
                    self.basis[pos] = q;
                    self.pos_of[q] = pos;
                    let mut eta = Eta { pos, pivot: alpha[pos], idx: Vec::new(), val: Vec::new() };
                    for (i, &a) in alpha.iter().enumerate() {
                        if i != pos && a != 0.0 {
                            eta.idx.push(i);
                            eta.val.push(a);
                        }
                    }
                    self.etas.push(eta);
                    if theta <= 1e-12 {
                        self.stats.degenerate_pivots += 1;
                        degenerate_run += 1;
                        if degenerate_run > DEGENERATE_RUN {
                            bland = true;
                        }
                    } else {
                        degenerate_run = 0;
                        bland = false;
                    }
                }
            }
            if bland {
                self.stats.bland_pivots += 1;
            }
            if phase_one {
                self.stats.phase_one_iterations += 1;
            }
            self.stats.iterations += 1;
            self.fresh = false;
            skip.clear();
            if self.etas.len() >= REFACTOR_EVERY {
                self.refactor();
            }
            debug_assert_eq!(self.basis.len(), m);
            debug_assert_eq!(self.x.len(), n + m);
        }
    }

    fn apply(&mut self, q: usize, dir: f64, alpha: &[f64], theta: f64) {
        if theta == 0.0 {
            return;
        }
        self.x[q] += dir * theta;
        for (pos, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                let j = self.basis[pos];
                self.x[j] -= dir * a * theta;
            }
        }
    }
}
