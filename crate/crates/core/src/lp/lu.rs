//! Sparse LU factorization of simplex bases.
//!
//! Left-looking elimination: each basis column is solved against the `L`
//! built so far, touching only the rows reachable through `L`'s nonzero
//! pattern, then a pivot row is picked by threshold partial pivoting
//! preferring sparse rows. Columns without an acceptable pivot are reported
//! and replaced by the logical columns of the rows left unpivoted.

use alloc::vec;
use alloc::vec::Vec;

/// Compressed sparse columns.
#[derive(Clone, Debug, Default)]
pub(crate) struct Csc {
    pub nrows: usize,
    pub ptr: Vec<usize>,
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csc {
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.ptr[j]..self.ptr[j + 1];
        (&self.idx[r.clone()], &self.val[r])
    }

    pub fn nnz(&self, j: usize) -> usize {
        self.ptr[j + 1] - self.ptr[j]
    }

    pub fn dot(&self, j: usize, y: &[f64]) -> f64 {
        let (idx, val) = self.col(j);
        idx.iter().zip(val).map(|(&i, &a)| a * y[i]).sum()
    }
}

const PIVOT_THRESHOLD: f64 = 0.1;
const ABS_PIVOT_TOL: f64 = 1e-11;

/// `B Q = L U` with `L` unit lower triangular in pivot order.
#[derive(Clone, Debug)]
pub(crate) struct Lu {
    m: usize,
    /// Pivot row per pivot step.
    prow: Vec<usize>,
    /// Basis position per pivot step.
    q: Vec<usize>,
    /// Below-diagonal entries of `L` per pivot step, by original row.
    l_ptr: Vec<usize>,
    l_row: Vec<usize>,
    l_val: Vec<f64>,
    /// Above-diagonal entries of `U` per pivot step, by earlier pivot step.
    u_ptr: Vec<usize>,
    u_step: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
}

/// A basis position whose column was dropped as dependent, and the row whose
/// logical column replaces it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Repair {
    pub position: usize,
    pub row: usize,
}

impl Lu {
    /// Factors the basis whose position `p` holds column `basis[p]` of `a`.
    /// Column `logical0 + i` of `a` must be the logical column `-e_i`.
    pub fn factor(a: &Csc, basis: &[usize], logical0: usize) -> (Lu, Vec<Repair>) {
        let m = a.nrows;
        debug_assert_eq!(basis.len(), m);

        let mut row_count = vec![0usize; m];
        for &j in basis {
            for &i in a.col(j).0 {
                row_count[i] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (basis[p] < logical0, a.nnz(basis[p]), p));

        let mut lu = Lu {
            m,
            prow: Vec::with_capacity(m),
            q: Vec::with_capacity(m),
            l_ptr: vec![0],
            l_row: Vec::new(),
            l_val: Vec::new(),
            u_ptr: vec![0],
            u_step: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::with_capacity(m),
        };
        let mut pinv: Vec<Option<usize>> = vec![None; m];
        let mut x = vec![0.0; m];
        let mut mark = vec![false; m];
        let mut reach: Vec<usize> = Vec::with_capacity(m);
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut dropped = Vec::new();

        for &pos in &order {
            let (idx, val) = a.col(basis[pos]);
            lu.reach(idx, &pinv, &mut mark, &mut reach, &mut stack);
            for (&i, &v) in idx.iter().zip(val) {
                x[i] = v;
            }
            // `reach` holds a reverse topological order.
            for &r in reach.iter().rev() {
                if let Some(k) = pinv[r] {
                    let xr = x[r];
                    if xr != 0.0 {
                        for t in lu.l_ptr[k]..lu.l_ptr[k + 1] {
                            x[lu.l_row[t]] -= lu.l_val[t] * xr;
                        }
                    }
                }
            }
            let mut biggest: f64 = 0.0;
            for &r in &reach {
                if pinv[r].is_none() {
                    biggest = biggest.max(x[r].abs());
                }
            }
            let pivot = if biggest > ABS_PIVOT_TOL {
                let floor = PIVOT_THRESHOLD * biggest;
                reach
                    .iter()
                    .copied()
                    .filter(|&r| pinv[r].is_none() && x[r].abs() >= floor)
                    .min_by_key(|&r| (row_count[r], r))
            } else {
                None
            };
            match pivot {
                Some(pr) => {
                    let k = lu.prow.len();
                    let d = x[pr];
                    for &r in &reach {
                        match pinv[r] {
                            Some(step) => {
                                if x[r] != 0.0 {
                                    lu.u_step.push(step);
                                    lu.u_val.push(x[r]);
                                }
                            }
                            None if r != pr && x[r] != 0.0 => {
                                lu.l_row.push(r);
                                lu.l_val.push(x[r] / d);
                            }
                            None => {}
                        }
                    }
                    lu.u_diag.push(d);
                    lu.u_ptr.push(lu.u_step.len());
                    lu.l_ptr.push(lu.l_row.len());
                    lu.prow.push(pr);
                    lu.q.push(pos);
                    pinv[pr] = Some(k);
                }
                None => dropped.push(pos),
            }
            for &r in &reach {
                x[r] = 0.0;
                mark[r] = false;
            }
        }

        let mut repairs = Vec::with_capacity(dropped.len());
        let free_rows: Vec<usize> = (0..m).filter(|&r| pinv[r].is_none()).collect();
        for (position, row) in dropped.into_iter().zip(free_rows) {
            let k = lu.prow.len();
            lu.u_diag.push(-1.0);
            lu.u_ptr.push(lu.u_step.len());
            lu.l_ptr.push(lu.l_row.len());
            lu.prow.push(row);
            lu.q.push(position);
            pinv[row] = Some(k);
            repairs.push(Repair { position, row });
        }
        debug_assert_eq!(lu.prow.len(), m);
        (lu, repairs)
    }

    /// Rows reachable from `start` through the graph of `L`, in reverse
    /// topological order.
    fn reach(
        &self,
        start: &[usize],
        pinv: &[Option<usize>],
        mark: &mut [bool],
        out: &mut Vec<usize>,
        stack: &mut Vec<(usize, usize)>,
    ) {
        out.clear();
        for &s in start {
            if mark[s] {
                continue;
            }
            mark[s] = true;
            stack.push((s, 0));
            while let Some(&mut (r, ref mut next)) = stack.last_mut() {
                let children = match pinv[r] {
                    Some(k) => &self.l_row[self.l_ptr[k]..self.l_ptr[k + 1]],
                    None => &[][..],
                };
                if let Some(&c) = children.get(*next) {
                    *next += 1;
                    if !mark[c] {
                        mark[c] = true;
                        stack.push((c, 0));
                    }
                } else {
                    out.push(r);
                    stack.pop();
                }
            }
        }
    }

    /// Solves `B x = b` in place; on entry `b` is indexed by row, on exit by
    /// basis position.
    pub fn ftran(&self, b: &mut [f64], work: &mut [f64]) {
        for k in 0..self.m {
            let z = b[self.prow[k]];
            work[k] = z;
            if z != 0.0 {
                for t in self.l_ptr[k]..self.l_ptr[k + 1] {
                    b[self.l_row[t]] -= self.l_val[t] * z;
                }
            }
        }
        for k in (0..self.m).rev() {
            let y = work[k] / self.u_diag[k];
            work[k] = y;
            if y != 0.0 {
                for t in self.u_ptr[k]..self.u_ptr[k + 1] {
                    work[self.u_step[t]] -= self.u_val[t] * y;
                }
            }
        }
        for k in 0..self.m {
            b[self.q[k]] = work[k];
        }
    }

    /// Solves `B^T y = c` in place; on entry `c` is indexed by basis
    /// position, on exit by row.
    pub fn btran(&self, c: &mut [f64], work: &mut [f64]) {
        for k in 0..self.m {
            let mut s = c[self.q[k]];
            for t in self.u_ptr[k]..self.u_ptr[k + 1] {
                s -= self.u_val[t] * work[self.u_step[t]];
            }
            work[k] = s / self.u_diag[k];
        }
        for k in (0..self.m).rev() {
            let mut s = work[k];
            for t in self.l_ptr[k]..self.l_ptr[k + 1] {
                s -= self.l_val[t] * c[self.l_row[t]];
            }
            c[self.prow[k]] = s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Builds `[A | -I]` from dense columns of `A`.
    fn with_logicals(cols: &[Vec<f64>]) -> Csc {
        let m = cols[0].len();
        let mut a = Csc { nrows: m, ptr: vec![0], idx: vec![], val: vec![] };
        for col in cols {
            for (i, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    a.idx.push(i);
                    a.val.push(v);
                }
            }
            a.ptr.push(a.idx.len());
        }
        for i in 0..m {
            a.idx.push(i);
            a.val.push(-1.0);
            a.ptr.push(a.idx.len());
        }
        a
    }

    fn mul(a: &Csc, basis: &[usize], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.nrows];
        for (p, &j) in basis.iter().enumerate() {
            let (idx, val) = a.col(j);
            for (&i, &v) in idx.iter().zip(val) {
                out[i] += v * x[p];
            }
        }
        out
    }

    fn mul_t(a: &Csc, basis: &[usize], y: &[f64]) -> Vec<f64> {
        basis.iter().map(|&j| a.dot(j, y)).collect()
    }

    #[test]
    fn solves_dense_system_both_ways() {
        let cols = vec![
            vec![4.0, 1.0, 0.0, 2.0],
            vec![0.0, 3.0, 1.0, 0.0],
            vec![1.0, 0.0, 5.0, 1.0],
            vec![0.0, 2.0, 0.0, 6.0],
        ];
        let a = with_logicals(&cols);
        let basis = [2, 0, 3, 1];
        let (lu, repairs) = Lu::factor(&a, &basis, 4);
        assert!(repairs.is_empty());
        let mut work = vec![0.0; 4];

        let b = [1.0, -2.0, 0.5, 3.0];
        let mut x = b.to_vec();
        lu.ftran(&mut x, &mut work);
        let back = mul(&a, &basis, &x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }

        let c = [0.3, 1.0, -1.0, 2.0];
        let mut y = c.to_vec();
        lu.btran(&mut y, &mut work);
        let back = mul_t(&a, &basis, &y);
        for (u, v) in back.iter().zip(&c) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_logical_basis() {
        let cols = vec![vec![1.0, 1.0, 0.0], vec![0.0, 2.0, 1.0]];
        let a = with_logicals(&cols);
        let basis = [0, 3, 1];
        let (lu, repairs) = Lu::factor(&a, &basis, 2);
        assert!(repairs.is_empty());
        let mut work = vec![0.0; 3];
        let b = [2.0, 1.0, -1.0];
        let mut x = b.to_vec();
        lu.ftran(&mut x, &mut work);
        let back = mul(&a, &basis, &x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn dependent_columns_are_repaired_with_logicals() {
        let cols = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 1.0]];
        let a = with_logicals(&cols);
        let mut basis = vec![0, 1, 2];
        let (_, repairs) = Lu::factor(&a, &basis, 3);
        assert_eq!(repairs.len(), 1);
        let r = repairs[0];
        basis[r.position] = 3 + r.row;
        let (lu, again) = Lu::factor(&a, &basis, 3);
        assert!(again.is_empty());
        let mut work = vec![0.0; 3];
        let b = [1.0, 1.0, 1.0];
        let mut x = b.to_vec();
        lu.ftran(&mut x, &mut work);
        let back = mul(&a, &basis, &x);
        for (u, v) in back.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
