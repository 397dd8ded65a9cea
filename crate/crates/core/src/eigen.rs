//! Cyclic Jacobi eigen-solver for small dense symmetric matrices.
//!
//! Each rotation zeroes one off-diagonal pair; a sweep visits every pair
//! once. Iteration stops when the off-diagonal Frobenius mass drops below
//! `tol * ||A||_F`.

#![allow(clippy::needless_range_loop)]

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error("dimension {dim} exceeds configured maximum {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("Jacobi iteration did not converge in {sweeps} sweeps (off-diagonal mass {off})")]
    NoConvergence { sweeps: usize, off: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiOptions {
    /// Relative off-diagonal stopping threshold.
    pub tol: f64,
    pub max_sweeps: usize,
    pub max_dim: usize,
    /// Allowed `|a_ij - a_ji|`.
    pub symmetry_tol: f64,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_sweeps: 100,
            max_dim: 64,
            symmetry_tol: 1e-10,
        }
    }
}

/// Eigenvalues (ascending) and matching unit eigenvectors
/// (`vectors[i]` belongs to `values[i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl SymEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

fn check(a: &[Vec<f64>], opts: &JacobiOptions) -> Result<(), EigenError> {
    let n = a.len();
    if n > opts.max_dim {
        return Err(EigenError::TooLarge {
            dim: n,
            max: opts.max_dim,
        });
    }
    for (row, r) in a.iter().enumerate() {
        if r.len() != n {
            return Err(EigenError::NotSquare {
                rows: n,
                row,
                len: r.len(),
            });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let gap = (a[i][j] - a[j][i]).abs();
            if gap > opts.symmetry_tol {
                return Err(EigenError::NotSymmetric { i, j, gap });
            }
        }
    }
    Ok(())
}

pub fn sym_eigen(a: &[Vec<f64>], opts: &JacobiOptions) -> Result<SymEigen, EigenError> {
    check(a, opts)?;
    let n = a.len();
    // symmetrize so rotations act on an exactly symmetric matrix
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (a[i][j] + a[j][i])).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let frob = m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let off = |m: &Vec<Vec<f64>>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i][j] * m[i][j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let o = off(&m);
        if o <= opts.tol * frob {
            break;
        }
        if sweeps == opts.max_sweeps {
            return Err(EigenError::NoConvergence { sweeps, off: o });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                // rotation angle from the 2x2 subproblem (stable tangent form)
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                m[p][q] = 0.0;
                m[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[a][a].total_cmp(&m[b][b]));
    Ok(SymEigen {
        values: order.iter().map(|&i| m[i][i]).collect(),
        vectors: order
            .iter()
            .map(|&i| v.iter().map(|row| row[i]).collect())
            .collect(),
    })
}

/// `(lambda_min, lambda_max)` of a symmetric matrix.
pub fn sym_eigen_extremes(a: &[Vec<f64>], opts: &JacobiOptions) -> Result<(f64, f64), EigenError> {
    let e = sym_eigen(a, opts)?;
    Ok((e.min(), e.max()))
}
