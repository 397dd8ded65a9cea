//! ℓ1 minimization (basis pursuit) as a linear program, and a direct
//! replay of the argument showing exact recovery under
//! `delta_k + theta_{k,k} < 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{
    decompose, verify_decomposition, DecompositionError, DecompositionInput,
};
use crate::matrix::{Matrix, MatrixError};
use crate::rip::RipReport;
use crate::simplex::{simplex_solve_with, LpProblem, LpSolution, LpStatus, SimplexOptions};
use crate::vector::{dot, l1_norm, l2_norm, linf_norm, Vector, VectorError};

pub const DEFAULT_RECOVERY_TOL: f64 = 1e-6;
/// Absolute slack on each inequality of the proof chain.
pub const CHAIN_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("measurement vector has length {got}, matrix has {rows} rows")]
    Dimension { rows: usize, got: usize },
    #[error("linear program ended with status {0:?}")]
    Lp(LpStatus),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

/// `min 1ᵀ(u + w)  s.t.  [Φ | -Φ] [u; w] = y,  u, w >= 0`.
pub fn build_bp_lp(phi: &Matrix, y: &[f64]) -> Result<LpProblem, RecoveryError> {
    let (n, p) = (phi.rows(), phi.cols());
    if y.len() != n {
        return Err(RecoveryError::Dimension {
            rows: n,
            got: y.len(),
        });
    }
    let mut data = Vec::with_capacity(n * 2 * p);
    for i in 0..n {
        let row = phi.row(i);
        data.extend_from_slice(row);
        data.extend(row.iter().map(|x| -x));
    }
    Ok(LpProblem {
        cost: vec![1.0; 2 * p],
        constraints: Matrix::from_row_major(n, 2 * p, data)?,
        rhs: y.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub beta_hat: Vector,
    /// `||Φ β̂ - y||_inf`.
    pub residual: f64,
    pub l1_value: f64,
    /// `||β̂ - reference||_inf`, when a reference was supplied.
    pub error: Option<f64>,
    /// Reference supplied and `error <= tol`.
    pub exact: bool,
}

/// Basis pursuit solution: `β̂ = u - w` plus the raw LP solution.
pub fn basis_pursuit(
    phi: &Matrix,
    y: &[f64],
    opts: &SimplexOptions,
) -> Result<(Vec<f64>, LpSolution), RecoveryError> {
    let lp = build_bp_lp(phi, y)?;
    let sol = simplex_solve_with(&lp, opts);
    if sol.status != LpStatus::Optimal {
        return Err(RecoveryError::Lp(sol.status));
    }
    let p = phi.cols();
    let beta: Vec<f64> = (0..p).map(|i| sol.x[i] - sol.x[p + i]).collect();
    Ok((beta, sol))
}

pub fn recover(
    phi: &Matrix,
    y: &[f64],
    reference: Option<&Vector>,
    tol: f64,
) -> Result<RecoveryResult, RecoveryError> {
    let (beta, _) = basis_pursuit(phi, y, &SimplexOptions::default())?;
    let fitted = phi.mul_vec(&beta)?;
    let residual = fitted
        .iter()
        .zip(y)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let error = match reference {
        Some(r) if r.len() != beta.len() => {
            return Err(VectorError::LengthMismatch {
                expected: beta.len(),
                actual: r.len(),
            }
            .into())
        }
        Some(r) => Some(
            beta.iter()
                .zip(r.iter())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())),
        ),
        None => None,
    };
    Ok(RecoveryResult {
        l1_value: l1_norm(&beta),
        beta_hat: Vector::new(beta)?,
        residual,
        exact: error.is_some_and(|e| e <= tol),
        error,
    })
}

/// Outcome of replaying the exact-recovery argument on `h = β̂ - β`.
///
/// With `T` the `k` largest entries of `|h|` and `S` the rest, the argument
/// needs `||h_S||_1 <= ||h_T||_1`, `||h_S||_inf <= ||h_T||_1 / k`, a convex
/// k-sparse split `h_S = sum x_j w_j` with `||w_j||_2 <= ||h_T||_2`, and
/// then `(1 - delta_k) ||h_T||^2 <= ||Φ h_T||^2 = |<Φ h_T, Φ h_S>| <= theta_{k,k} ||h_T||^2`.
/// Each step is checked with [`CHAIN_TOL`] slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofChainReport {
    pub h_inf: f64,
    pub h_nonzero: bool,
    pub h_t_l1: f64,
    pub h_t_l2: f64,
    pub h_s_l1: f64,
    pub h_s_inf: f64,
    /// `||h_S||_1 <= ||h_T||_1`.
    pub cone_ok: bool,
    /// `||h_S||_inf <= ||h_T||_1 / k`.
    pub tail_ok: bool,
    pub pieces: usize,
    pub decomposition_ok: bool,
    /// Every piece has `||w_j||_2 <= ||h_T||_2`.
    pub pieces_ok: bool,
    /// `|<Φ h_T, Φ w_j>| <= theta ||h_T||_2 ||w_j||_2` for every piece.
    pub cross_ok: bool,
    /// `(1 - delta) ||h_T||^2 <= ||Φ h_T||^2`.
    pub lower_isometry_ok: bool,
    /// `||Φ h_T||^2 = |<Φ h_T, Φ h_S>|`, from `Φ h = 0`.
    pub energy_identity_ok: bool,
    /// `(1 - delta) ||h_T||^2 <= theta ||h_T||^2`.
    pub contradiction_ok: bool,
    /// Not (`h != 0` and the condition holds).
    pub consistent_with_condition: bool,
}

impl ProofChainReport {
    pub fn all_ok(&self) -> bool {
        self.cone_ok
            && self.tail_ok
            && self.decomposition_ok
            && self.pieces_ok
            && self.cross_ok
            && self.lower_isometry_ok
            && self.energy_identity_ok
            && self.contradiction_ok
            && self.consistent_with_condition
    }
}

/// Replays the argument for `β̂` an ℓ1 minimizer of `Φγ = Φβ` with `β`
/// k-sparse (`k = rip.k`). `h` counts as nonzero when `||h||_inf > zero_tol`.
pub fn proof_chain(
    phi: &Matrix,
    beta: &[f64],
    beta_hat: &[f64],
    rip: &RipReport,
    zero_tol: f64,
) -> Result<ProofChainReport, RecoveryError> {
    let p = phi.cols();
    if beta.len() != p || beta_hat.len() != p {
        return Err(VectorError::LengthMismatch {
            expected: p,
            actual: beta.len().min(beta_hat.len()),
        }
        .into());
    }
    let k = rip.k;
    let h: Vec<f64> = beta_hat.iter().zip(beta).map(|(a, b)| a - b).collect();
    let h_inf = linf_norm(&h);
    let h_nonzero = h_inf > zero_tol;

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| h[b].abs().total_cmp(&h[a].abs()));
    let mut h_t = vec![0.0; p];
    let mut h_s = vec![0.0; p];
    for (rank, &i) in order.iter().enumerate() {
        if rank < k {
            h_t[i] = h[i];
        } else {
            h_s[i] = h[i];
        }
    }
    let h_t_l1 = l1_norm(&h_t);
    let h_t_l2 = l2_norm(&h_t);
    let h_s_l1 = l1_norm(&h_s);
    let h_s_inf = linf_norm(&h_s);

    let mut report = ProofChainReport {
        h_inf,
        h_nonzero,
        h_t_l1,
        h_t_l2,
        h_s_l1,
        h_s_inf,
        cone_ok: h_s_l1 <= h_t_l1 + CHAIN_TOL,
        tail_ok: h_s_inf <= h_t_l1 / k as f64 + CHAIN_TOL,
        pieces: 0,
        decomposition_ok: true,
        pieces_ok: true,
        cross_ok: true,
        lower_isometry_ok: true,
        energy_identity_ok: true,
        contradiction_ok: true,
        consistent_with_condition: !(h_nonzero && rip.condition_holds),
    };
    if !h_nonzero {
        return Ok(report);
    }

    let phi_ht = phi.mul_vec(&h_t)?;
    let ht2 = h_t_l2 * h_t_l2;
    let energy = dot(&phi_ht, &phi_ht);
    report.lower_isometry_ok = (1.0 - rip.delta) * ht2 <= energy + CHAIN_TOL;
    let phi_hs = phi.mul_vec(&h_s)?;
    report.energy_identity_ok = (energy - dot(&phi_ht, &phi_hs).abs()).abs() <= CHAIN_TOL;
    report.contradiction_ok = (1.0 - rip.delta) * ht2 <= rip.theta_kk * ht2 + CHAIN_TOL;

    if h_s_l1 > 0.0 && report.cone_ok && report.tail_ok {
        // absorb rounding-level excess so the decomposition hypotheses hold exactly
        let capacity = h_t_l1.max(h_s_l1).max(k as f64 * h_s_inf);
        let input = DecompositionInput::new(Vector::new(h_s)?, k, capacity)?;
        let d = decompose(&input)?;
        report.decomposition_ok = verify_decomposition(&d).passed();
        report.pieces = d.terms.len();
        let theta = rip.theta_kk;
        for t in &d.terms {
            let w = t.vector.as_slice();
            let w2 = l2_norm(w);
            report.pieces_ok &= w2 <= h_t_l2 + CHAIN_TOL;
            let phi_w = phi.mul_vec(w)?;
            report.cross_ok &= dot(&phi_ht, &phi_w).abs() <= theta * h_t_l2 * w2 + CHAIN_TOL;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rip::{rip_report, RipOptions};

    fn m(rows: &[Vec<f64>]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn lp_layout() {
        let phi = m(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let lp = build_bp_lp(&phi, &[1.0, 2.0]).unwrap();
        assert_eq!(lp.constraints.row(0), &[1.0, 2.0, -1.0, -2.0]);
        assert_eq!(lp.constraints.row(1), &[3.0, 4.0, -3.0, -4.0]);
        assert_eq!(lp.cost, vec![1.0; 4]);
        assert!(matches!(
            build_bp_lp(&phi, &[1.0]),
            Err(RecoveryError::Dimension { .. })
        ));
    }

    #[test]
    fn identity_recovers_exactly() {
        let phi = Matrix::identity(2);
        let r = recover(&phi, &[1.0, -2.0], None, DEFAULT_RECOVERY_TOL).unwrap();
        assert_eq!(r.beta_hat.as_slice(), &[1.0, -2.0]);
        assert_eq!(r.l1_value, 3.0);
        assert!(!r.exact);
        let reference = Vector::new(vec![1.0, -2.0]).unwrap();
        let r = recover(&phi, &[1.0, -2.0], Some(&reference), DEFAULT_RECOVERY_TOL).unwrap();
        assert!(r.exact);
        assert_eq!(r.error, Some(0.0));
    }

    #[test]
    fn two_by_three_instance() {
        let phi = m(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]]);
        let r = recover(&phi, &[1.0, 0.0], None, DEFAULT_RECOVERY_TOL).unwrap();
        for (a, b) in r.beta_hat.iter().zip([1.0, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((r.l1_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_measurements() {
        let phi = m(&[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]]);
        let r = recover(&phi, &[0.0, 0.0], None, DEFAULT_RECOVERY_TOL).unwrap();
        assert_eq!(r.l1_value, 0.0);
    }

    #[test]
    fn infeasible_measurements() {
        let phi = m(&[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(
            recover(&phi, &[1.0, 0.0], None, DEFAULT_RECOVERY_TOL),
            Err(RecoveryError::Lp(LpStatus::Infeasible))
        );
    }

    #[test]
    fn duplicated_columns_tie() {
        let phi = m(&[vec![1.0, 1.0], vec![0.0, 0.0]]);
        let beta = Vector::new(vec![0.0, 1.0]).unwrap();
        let r = recover(&phi, &[1.0, 0.0], Some(&beta), DEFAULT_RECOVERY_TOL).unwrap();
        assert!((r.l1_value - 1.0).abs() < 1e-12);
        // the first column enters first under Bland's rule
        assert!(!r.exact);
    }

    #[test]
    fn chain_on_failed_recovery() {
        // the short middle column is cheaper to synthesize from the outer two
        let phi = m(&[vec![1.0, 0.4, 0.0], vec![0.0, 0.4, 1.0]]);
        let rip = rip_report(&phi, 1, &RipOptions::default()).unwrap();
        assert!(!rip.condition_holds);
        let beta = vec![0.0, 1.0, 0.0];
        let y = phi.mul_vec(&beta).unwrap();
        let (beta_hat, _) = basis_pursuit(&phi, &y, &SimplexOptions::default()).unwrap();
        let report = proof_chain(&phi, &beta, &beta_hat, &rip, DEFAULT_RECOVERY_TOL).unwrap();
        assert!(report.h_nonzero);
        assert!(report.all_ok(), "{report:?}");
        assert_eq!(report.pieces, 2);
        assert!((report.h_t_l2 - 1.0).abs() < 1e-12);
        assert!((report.h_s_l1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn chain_on_exact_recovery_is_vacuous() {
        let phi = Matrix::identity(4);
        let rip = rip_report(&phi, 2, &RipOptions::default()).unwrap();
        let beta = vec![1.0, 0.0, -2.0, 0.0];
        let report = proof_chain(&phi, &beta, &beta, &rip, DEFAULT_RECOVERY_TOL).unwrap();
        assert!(!report.h_nonzero && report.all_ok());
    }

    #[test]
    fn chain_flags_impossible_pairing() {
        // a forged nonzero h alongside a condition that holds must be flagged
        let phi = Matrix::identity(4);
        let rip = rip_report(&phi, 1, &RipOptions::default()).unwrap();
        let report = proof_chain(&phi, &[0.0; 4], &[1.0, 0.5, 0.0, 0.0], &rip, 1e-6).unwrap();
        assert!(!report.consistent_with_condition);
        assert!(!report.contradiction_ok);
    }
}
