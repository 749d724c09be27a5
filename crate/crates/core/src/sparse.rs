//! Minimal compressed-sparse-row matrix and a Jacobi-preconditioned
//! conjugate gradient solver.
//!
//! The two linear systems in the solver (the auxiliary-field update and the
//! Newton step) are symmetric positive definite and assembled from small
//! dense local blocks; a fixed sparsity pattern is built once per topology
//! and refilled each time. Matrix-vector products parallelize per row with a
//! fixed within-row summation order, so results are run-to-run deterministic.

use crate::error::{Error, Result};
use crate::parallel;

/// Symmetric sparse matrix in CSR layout with a reusable pattern.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    /// values index for (row, col) lookups during assembly.
    index: std::collections::HashMap<(usize, usize), usize>,
}

impl CsrMatrix {
    /// Builds the pattern from the union of index pairs produced by
    /// `stencils`; each stencil is a set of coupled unknowns (a dense local
    /// block). Diagonal entries are always present.
    pub fn from_stencils<I, S>(n: usize, stencils: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[usize]>,
    {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            cols[i].push(i);
        }
        for stencil in stencils {
            let s = stencil.as_ref();
            for &i in s {
                for &j in s {
                    cols[i].push(j);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for c in cols.iter_mut() {
            c.sort_unstable();
            c.dedup();
            col_idx.extend_from_slice(c);
            row_ptr.push(col_idx.len());
        }
        let mut index = std::collections::HashMap::with_capacity(col_idx.len());
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                index.insert((i, col_idx[k]), k);
            }
        }
        let values = vec![0.0; col_idx.len()];
        Self {
            n,
            row_ptr,
            col_idx,
            values,
            index,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds `v` to entry `(i, j)`; the pair must be part of the pattern.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.index[&(i, j)];
        self.values[k] += v;
    }

    /// Adds `v` to every diagonal entry.
    pub fn shift_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            let k = self.index[&(i, i)];
            self.values[k] += v;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.values[self.index[&(i, i)]])
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.n);
        *out = parallel::map_indexed(self.n, |i| {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            s
        });
    }
}

/// Outcome of a conjugate gradient solve.
#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    /// Set when a direction of nonpositive curvature was encountered; the
    /// caller may regularize the matrix and retry.
    pub indefinite: bool,
}

/// Jacobi-preconditioned conjugate gradient for `A x = b`, starting from
/// `x = 0`. Stops when the residual norm falls below `tol` times the initial
/// residual norm. Returns `CgNoConvergence` after `max_iters` unless
/// `allow_truncation` is set, in which case the current iterate is returned.
pub fn pcg(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iters: usize,
    allow_truncation: bool,
) -> Result<(Vec<f64>, CgOutcome)> {
    let n = a.n();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let norm0 = norm(&r);
    if norm0 == 0.0 {
        return Ok((
            x,
            CgOutcome {
                iterations: 0,
                relative_residual: 0.0,
                indefinite: false,
            },
        ));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = Vec::new();
    for iter in 0..max_iters {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Ok((
                x,
                CgOutcome {
                    iterations: iter,
                    relative_residual: norm(&r) / norm0,
                    indefinite: true,
                },
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / norm0;
        if rel <= tol {
            return Ok((
                x,
                CgOutcome {
                    iterations: iter + 1,
                    relative_residual: rel,
                    indefinite: false,
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm(&r) / norm0;
    if allow_truncation {
        Ok((
            x,
            CgOutcome {
                iterations: max_iters,
                relative_residual: rel,
                indefinite: false,
            },
        ))
    } else {
        Err(Error::CgNoConvergence(max_iters, rel))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
