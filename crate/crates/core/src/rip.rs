//! Exact restricted isometry and restricted orthogonality constants by
//! exhaustive enumeration of column supports.
//!
//! `delta_k` is the largest deviation from 1 of any eigenvalue of a k×k
//! column Gram matrix `Φ_Tᵀ Φ_T`. `theta_{k,k'}` is the largest spectral norm
//! of a cross-Gram block `Φ_Tᵀ Φ_T'` over disjoint supports. Columns are
//! used as given, with no normalization.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinations::{binomial, Combinations};
use crate::eigen::{sym_eigen, EigenError, JacobiOptions};
use crate::matrix::Matrix;
use crate::vector::SupportSet;
use crate::Rng64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RipError {
    #[error("sparsity level out of range: {0}")]
    OutOfRange(String),
    #[error("enumeration of {count} {what} exceeds budget {limit}")]
    BudgetExceeded {
        what: &'static str,
        count: u128,
        limit: u128,
    },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Upper limits on exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationBudget {
    /// Maximum `C(p, k)` supports for `delta_k`.
    pub max_supports: u128,
    /// Maximum `C(p, k) * C(p - k, k')` support pairs for `theta_{k,k'}`.
    pub max_pairs: u128,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self {
            max_supports: 1_000_000,
            max_pairs: 100_000_000,
        }
    }
}

impl EnumerationBudget {
    /// Both limits scaled from a single support count; pairs keep the
    /// default 100:1 ratio.
    pub fn from_supports(max_supports: u128) -> Self {
        Self {
            max_supports,
            max_pairs: max_supports.saturating_mul(100),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RipOptions {
    pub budget: EnumerationBudget,
    pub jacobi: JacobiOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaResult {
    pub delta: f64,
    pub witness: SupportSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaResult {
    pub theta: f64,
    pub witness: (SupportSet, SupportSet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    pub k: usize,
    pub k_prime: usize,
    pub delta: f64,
    /// `theta_{k,k'}`.
    pub theta: f64,
    /// `theta_{k,k}`; equals `theta` when `k == k'`.
    pub theta_kk: f64,
    pub delta_witness: SupportSet,
    pub theta_witness: (SupportSet, SupportSet),
    /// `delta_k + theta_{k,k}`.
    pub condition_value: f64,
    /// `condition_value < 1`.
    pub condition_holds: bool,
}

fn gram_of(phi: &Matrix, support: &[usize]) -> Vec<Vec<f64>> {
    phi.cross_gram(support, support)
}

/// `max(lambda_max - 1, 1 - lambda_min)` of the Gram matrix on `support`.
pub fn support_deviation(
    phi: &Matrix,
    support: &[usize],
    jacobi: &JacobiOptions,
) -> Result<f64, RipError> {
    let e = sym_eigen(&gram_of(phi, support), jacobi)?;
    Ok((e.max() - 1.0).max(1.0 - e.min()))
}

/// Largest singular value of `Φ_Tᵀ Φ_T'`, via the smaller of `B Bᵀ`, `Bᵀ B`.
pub fn cross_norm(
    phi: &Matrix,
    left: &[usize],
    right: &[usize],
    jacobi: &JacobiOptions,
) -> Result<f64, RipError> {
    let b = phi.cross_gram(left, right);
    let (r, c) = (left.len(), right.len());
    let square: Vec<Vec<f64>> = if r <= c {
        (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| (0..c).map(|l| b[i][l] * b[j][l]).sum())
                    .collect()
            })
            .collect()
    } else {
        (0..c)
            .map(|i| {
                (0..c)
                    .map(|j| (0..r).map(|l| b[l][i] * b[l][j]).sum())
                    .collect()
            })
            .collect()
    };
    let e = sym_eigen(&square, jacobi)?;
    Ok(e.max().max(0.0).sqrt())
}

pub fn delta_k(phi: &Matrix, k: usize, opts: &RipOptions) -> Result<DeltaResult, RipError> {
    let p = phi.cols();
    if k == 0 || k > p {
        return Err(RipError::OutOfRange(format!(
            "need 1 <= k <= p, got k={k}, p={p}"
        )));
    }
    let count = binomial(p, k);
    if count > opts.budget.max_supports {
        return Err(RipError::BudgetExceeded {
            what: "supports",
            count,
            limit: opts.budget.max_supports,
        });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for t in Combinations::new(p, k) {
        let d = support_deviation(phi, &t, &opts.jacobi)?;
        // strict comparison keeps the lexicographically first maximizer
        if best.as_ref().is_none_or(|(b, _)| d > *b) {
            best = Some((d, t));
        }
    }
    let (delta, t) = best.expect("at least one support");
    Ok(DeltaResult {
        delta,
        witness: SupportSet::from_sorted(t),
    })
}

pub fn theta_kk(
    phi: &Matrix,
    k: usize,
    k_prime: usize,
    opts: &RipOptions,
) -> Result<ThetaResult, RipError> {
    let p = phi.cols();
    if k == 0 || k_prime == 0 || k + k_prime > p {
        return Err(RipError::OutOfRange(format!(
            "need k, k' >= 1 and k + k' <= p, got k={k}, k'={k_prime}, p={p}"
        )));
    }
    let count = binomial(p, k).saturating_mul(binomial(p - k, k_prime));
    if count > opts.budget.max_pairs {
        return Err(RipError::BudgetExceeded {
            what: "support pairs",
            count,
            limit: opts.budget.max_pairs,
        });
    }
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for t in Combinations::new(p, k) {
        let rest: Vec<usize> = (0..p).filter(|i| t.binary_search(i).is_err()).collect();
        for t2 in Combinations::of(&rest, k_prime) {
            // with equal sizes, (T, T') and (T', T) give the same value
            if k == k_prime && t2 < t {
                continue;
            }
            let s = cross_norm(phi, &t, &t2, &opts.jacobi)?;
            if best.as_ref().is_none_or(|(b, _, _)| s > *b) {
                best = Some((s, t.clone(), t2));
            }
        }
    }
    let (theta, a, b) = best.expect("at least one support pair");
    Ok(ThetaResult {
        theta,
        witness: (SupportSet::from_sorted(a), SupportSet::from_sorted(b)),
    })
}

/// `delta_k`, `theta_{k,k}` and the recovery condition `delta_k + theta_{k,k} < 1`.
pub fn rip_report(phi: &Matrix, k: usize, opts: &RipOptions) -> Result<RipReport, RipError> {
    rip_report_with_kprime(phi, k, k, opts)
}

/// Like [`rip_report`] but with `theta` evaluated at `(k, k')`. The
/// condition still uses `theta_{k,k}`, so `2k <= p` is required.
pub fn rip_report_with_kprime(
    phi: &Matrix,
    k: usize,
    k_prime: usize,
    opts: &RipOptions,
) -> Result<RipReport, RipError> {
    let d = delta_k(phi, k, opts)?;
    let th = theta_kk(phi, k, k_prime, opts)?;
    let theta_kk_value = if k_prime == k {
        th.theta
    } else {
        theta_kk(phi, k, k, opts)?.theta
    };
    let condition_value = d.delta + theta_kk_value;
    Ok(RipReport {
        k,
        k_prime,
        delta: d.delta,
        theta: th.theta,
        theta_kk: theta_kk_value,
        delta_witness: d.witness,
        theta_witness: th.witness,
        condition_value,
        condition_holds: condition_value < 1.0,
    })
}

/// Slack used by [`verify_rip_by_sampling`].
pub const SAMPLING_SLACK: f64 = 1e-10;

/// Checks `(1 - delta) ||c||^2 <= ||Φ c||^2 <= (1 + delta) ||c||^2` on
/// `trials` random k-sparse unit vectors.
pub fn verify_rip_by_sampling(
    phi: &Matrix,
    k: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> bool {
    let p = phi.cols();
    if k == 0 || k > p {
        return false;
    }
    let mut rng = Rng64::seed_from_u64(seed);
    let mut c = vec![0.0; p];
    for _ in 0..trials {
        c.iter_mut().for_each(|x| *x = 0.0);
        let support = sample(&mut rng, p, k);
        let mut norm2 = 0.0;
        for i in support.iter() {
            let x: f64 = StandardNormal.sample(&mut rng);
            c[i] = x;
            norm2 += x * x;
        }
        if norm2 == 0.0 {
            continue;
        }
        let scale = norm2.sqrt();
        c.iter_mut().for_each(|x| *x /= scale);
        if !rip_inequality_holds(phi, &c, delta) {
            return false;
        }
    }
    true
}

/// Two-sided RIP inequality for one coefficient vector, with [`SAMPLING_SLACK`].
pub fn rip_inequality_holds(phi: &Matrix, c: &[f64], delta: f64) -> bool {
    let c2: f64 = c.iter().map(|x| x * x).sum();
    let y = phi.mul_vec(c).expect("length matches columns");
    let y2: f64 = y.iter().map(|x| x * x).sum();
    (1.0 - delta) * c2 <= y2 + SAMPLING_SLACK && y2 <= (1.0 + delta) * c2 + SAMPLING_SLACK
}

/// Unit coefficient vector on the delta witness support along the
/// eigenvector that attains `delta_k`.
pub fn delta_extremal_vector(
    phi: &Matrix,
    witness: &SupportSet,
    jacobi: &JacobiOptions,
) -> Result<Vec<f64>, RipError> {
    let e = sym_eigen(&gram_of(phi, witness.indices()), jacobi)?;
    let eig = if e.max() - 1.0 >= 1.0 - e.min() {
        e.vectors.last().unwrap()
    } else {
        &e.vectors[0]
    };
    let mut c = vec![0.0; phi.cols()];
    for (&i, &x) in witness.indices().iter().zip(eig) {
        c[i] = x;
    }
    Ok(c)
}
