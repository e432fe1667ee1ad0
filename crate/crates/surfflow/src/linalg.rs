//! Compressed sparse row matrices and the conjugate-gradient solvers used by
//! every Laplace/mass solve in the scheme.

use crate::error::{Error, Result};

/// CSR matrix. Column indices are strictly increasing within each row.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Preconditioner selector for [`cg_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precond {
    None,
    #[default]
    Jacobi,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn assemble(triplets: &[(usize, usize, f64)], nrows: usize, ncols: usize) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::IndexOutOfRange(format!(
                    "triplet ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
        }
        let mut counts = vec![0usize; nrows + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut entries: Vec<(usize, f64)> = vec![(0, 0.0); triplets.len()];
        let mut cursor = counts.clone();
        for &(r, c, v) in triplets {
            entries[cursor[r]] = (c, v);
            cursor[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..nrows {
            let row = &mut entries[counts[r]..counts[r + 1]];
            row.sort_unstable_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < row.len() {
                let c = row[i].0;
                let mut v = 0.0;
                while i < row.len() && row[i].0 == c {
                    v += row[i].1;
                    i += 1;
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Entrywise symmetry check, relative to the largest entry magnitude.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                if (self.values[k] - self.get(c, r)).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Restriction to a subset of indices (square submatrix A[keep, keep]).
    pub fn restrict(&self, keep: &[usize]) -> SparseMatrix {
        assert_eq!(self.nrows, self.ncols);
        let mut inv = vec![usize::MAX; self.ncols];
        for (new, &old) in keep.iter().enumerate() {
            inv[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &old_r in keep {
            for k in self.row_ptr[old_r]..self.row_ptr[old_r + 1] {
                let new_c = inv[self.col_idx[k]];
                if new_c != usize::MAX {
                    col_idx.push(new_c);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseMatrix {
            nrows: keep.len(),
            ncols: keep.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sum of two matrices with identical shape.
    pub fn add(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.nrows, other.nrows);
        assert_eq!(self.ncols, other.ncols);
        let mut triplets = Vec::with_capacity(self.nnz() + other.nnz());
        for m in [self, other] {
            for r in 0..m.nrows {
                for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                    triplets.push((r, m.col_idx[k], m.values[k]));
                }
            }
        }
        SparseMatrix::assemble(&triplets, self.nrows, self.ncols).unwrap()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[r][self.col_idx[k]] = self.values[k];
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradients for SPD systems.
///
/// Returns the best iterate together with a report; `converged = false` means
/// `max_iter` was exhausted. A NaN breakdown is a hard error.
pub fn cg_solve(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    precond: Precond,
) -> Result<(Vec<f64>, SolveReport)> {
    assert_eq!(a.nrows(), a.ncols());
    assert_eq!(b.len(), a.nrows());
    assert_eq!(x0.len(), a.nrows());
    let n = a.nrows();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        ));
    }
    let inv_diag: Option<Vec<f64>> = match precond {
        Precond::None => None,
        Precond::Jacobi => Some(
            a.diagonal()
                .iter()
                .map(|&d| if d.abs() > 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        ),
    };
    let apply_prec = |r: &[f64]| -> Vec<f64> {
        match &inv_diag {
            Some(di) => r.iter().zip(di).map(|(x, d)| x * d).collect(),
            None => r.to_vec(),
        }
    };

    let mut x = x0.to_vec();
    let mut r = b.to_vec();
    let ax = a.matvec(&x);
    for i in 0..n {
        r[i] -= ax[i];
    }
    let mut z = apply_prec(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm(&r) / b_norm;
    if res <= tol {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: res,
                converged: true,
            },
        ));
    }
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || pap == 0.0 {
            return Err(Error::SolverNan);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / b_norm;
        if !res.is_finite() {
            return Err(Error::SolverNan);
        }
        if res <= tol {
            return Ok((
                x,
                SolveReport {
                    iterations: it,
                    relative_residual: res,
                    converged: true,
                },
            ));
        }
        z = apply_prec(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok((
        x,
        SolveReport {
            iterations: max_iter,
            relative_residual: res,
            converged: false,
        },
    ))
}

/// CG for a symmetric positive semi-definite system whose kernel is the
/// constant vector. The right-hand side is projected onto the range, and the
/// returned solution is gauged to zero weighted mean: sum_i weights_i x_i = 0.
pub fn solve_singular_zero_mean(
    a: &SparseMatrix,
    b: &[f64],
    weights: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.nrows();
    assert_eq!(weights.len(), n);
    // Solvability: project b onto the orthogonal complement of the kernel.
    let mean = b.iter().sum::<f64>() / n as f64;
    let b_proj: Vec<f64> = b.iter().map(|v| v - mean).collect();
    let (mut x, report) = cg_solve(a, &b_proj, x0, tol, max_iter, Precond::Jacobi)?;
    let wsum: f64 = weights.iter().sum();
    let wmean = dot(weights, &x) / wsum;
    for v in &mut x {
        *v -= wmean;
    }
    Ok((x, report))
}
