//! Row-streaming least squares by Givens rotations.
//!
//! Rows are folded one at a time into an upper-triangular factor, so the
//! design matrix is never stored. B-spline design rows are sparse and the
//! factor stays banded, which keeps the rotations short.

use crate::error::{Result, VcsError};

#[derive(Debug, Clone)]
pub(crate) struct GivensLsq {
    n: usize,
    nrhs: usize,
    r: Vec<f64>,
    qtb: Vec<f64>,
    /// Last column holding a nonzero in each row of `r`, or `None` if the row is empty.
    extent: Vec<Option<usize>>,
    rows: usize,
    work: Vec<f64>,
}

impl GivensLsq {
    pub fn new(n: usize, nrhs: usize) -> Self {
        Self {
            n,
            nrhs,
            r: vec![0.0; n * n],
            qtb: vec![0.0; n * nrhs],
            extent: vec![None; n],
            rows: 0,
            work: vec![0.0; n],
        }
    }


    /// Adds one observation row given as `(column, value)` pairs; repeated columns accumulate.
    pub fn add_row(&mut self, entries: &[(usize, f64)], rhs: &[f64]) {
        debug_assert_eq!(rhs.len(), self.nrhs);
        self.rows += 1;
        let n = self.n;
        let w = &mut self.work;
        let mut lo = n;
        let mut hi = 0;
        for &(c, v) in entries {
            w[c] += v;
            lo = lo.min(c);
            hi = hi.max(c);
        }
        if lo == n {
            return;
        }
        let mut b = [0.0f64; 8];
        let mut b_vec;
        let b: &mut [f64] = if self.nrhs <= 8 {
            b[..self.nrhs].copy_from_slice(rhs);
            &mut b[..self.nrhs]
        } else {
            b_vec = rhs.to_vec();
            &mut b_vec
        };

        let mut k = lo;
        while k <= hi {
            let wk = w[k];
            if wk == 0.0 {
                k += 1;
                continue;
            }
            let row = &mut self.r[k * n..(k + 1) * n];
            match self.extent[k] {
                None => {
                    for j in k..=hi {
                        row[j] = w[j];
                        w[j] = 0.0;
                    }
                    self.extent[k] = Some(hi);
                    self.qtb[k * self.nrhs..(k + 1) * self.nrhs].copy_from_slice(b);
                    return;
                }
                Some(ext) => {
                    let rkk = row[k];
                    let norm = rkk.hypot(wk);
                    let (c, s) = (rkk / norm, wk / norm);
                    let end = ext.max(hi);
                    for j in k..=end {
                        let (rj, wj) = (row[j], w[j]);
                        row[j] = c * rj + s * wj;
                        w[j] = -s * rj + c * wj;
                    }
                    w[k] = 0.0;
                    self.extent[k] = Some(end);
                    hi = end;
                    let q = &mut self.qtb[k * self.nrhs..(k + 1) * self.nrhs];
                    for (qi, bi) in q.iter_mut().zip(b.iter_mut()) {
                        let (x, y) = (*qi, *bi);
                        *qi = c * x + s * y;
                        *bi = -s * x + c * y;
                    }
                }
            }
            k += 1;
        }
    }

    /// Solves the accumulated problem. The result is laid out column-major by
    /// right-hand side: `solution[j][i]` is unknown `i` for rhs `j`.
    pub fn solve(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.n;
        let max_diag = (0..n).map(|k| self.r[k * n + k].abs()).fold(0.0, f64::max);
        if max_diag == 0.0 {
            return Err(VcsError::DegenerateGeometry("empty least-squares system".into()));
        }
        for k in 0..n {
            let d = self.r[k * n + k].abs();
            if self.extent[k].is_none() || d <= 1e-10 * max_diag {
                return Err(VcsError::DegenerateGeometry(format!(
                    "rank-deficient design matrix (unknown {k} of {n} unresolved)"
                )));
            }
        }
        let mut out = vec![vec![0.0; n]; self.nrhs];
        for (j, x) in out.iter_mut().enumerate() {
            for k in (0..n).rev() {
                let row = &self.r[k * n..(k + 1) * n];
                let ext = self.extent[k].unwrap_or(k);
                let mut acc = self.qtb[k * self.nrhs + j];
                for c in k + 1..=ext {
                    acc -= row[c] * x[c];
                }
                x[k] = acc / row[k];
            }
        }
        Ok(out)
    }
}
