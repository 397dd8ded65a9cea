//! Reference computations that share no code with the library paths they
//! check: inertia-count bisection for eigenvalues, recursive subset
//! enumeration, and basic-feasible-solution enumeration for LPs.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sparsedecomp_core::{Matrix, Rng64};

/// All k-subsets of 0..n, built recursively.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Number of eigenvalues of symmetric `a` strictly below `sigma`, from the
/// signs of the pivots of `a - sigma I` (Sylvester's law of inertia).
fn count_below(a: &[Vec<f64>], sigma: f64) -> usize {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| a[i][j] - if i == j { sigma } else { 0.0 })
                .collect()
        })
        .collect();
    let mut negatives = 0;
    for p in 0..n {
        let mut d = m[p][p];
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            negatives += 1;
        }
        for i in p + 1..n {
            let f = m[i][p] / d;
            for j in p + 1..n {
                m[i][j] -= f * m[p][j];
            }
        }
    }
    negatives
}

/// `(lambda_min, lambda_max)` by bisection on the inertia count inside the
/// Gershgorin interval.
pub fn extreme_eigs_bisection(a: &[Vec<f64>]) -> (f64, f64) {
    let n = a.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[i][j].abs()).sum();
        lo = lo.min(a[i][i] - r);
        hi = hi.max(a[i][i] + r);
    }
    lo -= 1e-9;
    hi += 1e-9;
    // smallest sigma with count_below(sigma) >= target
    let search = |target: usize| {
        let (mut l, mut h) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (l + h);
            if mid <= l || mid >= h {
                break;
            }
            if count_below(a, mid) >= target {
                h = mid;
            } else {
                l = mid;
            }
        }
        0.5 * (l + h)
    };
    (search(1), search(n))
}

pub fn gram(phi: &Matrix, cols: &[usize]) -> Vec<Vec<f64>> {
    cols.iter()
        .map(|&a| {
            cols.iter()
                .map(|&b| (0..phi.rows()).map(|i| phi.get(i, a) * phi.get(i, b)).sum())
                .collect()
        })
        .collect()
}

/// `delta_k` by enumerating supports and bisecting each Gram spectrum.
pub fn delta_k_oracle(phi: &Matrix, k: usize) -> f64 {
    subsets(phi.cols(), k)
        .iter()
        .map(|t| {
            let (lo, hi) = extreme_eigs_bisection(&gram(phi, t));
            (hi - 1.0).max(1.0 - lo)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max_{i != j} |<φ_i, φ_j>|` by a double loop.
pub fn theta_11_oracle(phi: &Matrix) -> f64 {
    let p = phi.cols();
    let mut best: f64 = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                let g: f64 = (0..phi.rows()).map(|r| phi.get(r, i) * phi.get(r, j)).sum();
                best = best.max(g.abs());
            }
        }
    }
    best
}

/// Solves a square system by Gaussian elimination with partial pivoting;
/// `None` when numerically singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Minimum of `cᵀx` over all basic feasible solutions of `A x = b, x >= 0`
/// (`A` assumed full row rank). `None` if no basis is feasible.
pub fn lp_vertex_min(a: &Matrix, b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let (m, n) = (a.rows(), a.cols());
    let mut best: Option<(f64, Vec<f64>)> = None;
    for basis in subsets(n, m) {
        let sys: Vec<Vec<f64>> = (0..m)
            .map(|i| basis.iter().map(|&j| a.get(i, j)).collect())
            .collect();
        let Some(xb) = gauss_solve(sys, b.to_vec()) else {
            continue;
        };
        if xb.iter().any(|&v| v < -1e-10) {
            continue;
        }
        let mut x = vec![0.0; n];
        for (&j, &v) in basis.iter().zip(&xb) {
            x[j] = v.max(0.0);
        }
        let obj: f64 = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, x));
        }
    }
    best
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng64) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Matrix::from_row_major(rows, cols, data).unwrap()
}

/// Random vector with a mix of signs, exact zeros and repeated magnitudes.
pub fn random_vector(n: usize, rng: &mut Rng64) -> Vec<f64> {
    (0..n)
        .map(|_| match rng.random_range(0..10) {
            0 => 0.0,
            1 => 0.25,
            2 => -0.25,
            _ => rng.random_range(-1.0..1.0),
        })
        .collect()
}
