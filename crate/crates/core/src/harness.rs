//! Experiment driver: random measurement matrices and sparse signals, exact
//! RIP reports, ℓ1 recovery, and the consistency verdict
//! "condition holds ⇒ every recovery is exact".

use std::path::PathBuf;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{read_matrix, IoError};
use crate::matrix::Matrix;
use crate::recovery::{
    basis_pursuit, proof_chain, ProofChainReport, RecoveryError, RecoveryResult,
};
use crate::rip::{rip_report, EnumerationBudget, RipError, RipOptions, RipReport};
use crate::simplex::SimplexOptions;
use crate::vector::{l1_norm, Vector};
use crate::Rng64;

pub const REPORT_SCHEMA_VERSION: &str = "1";
pub const BUDGET_ENV_VAR: &str = "SPARSEDECOMP_BUDGET";
/// Signal entries below this magnitude are redrawn.
pub const MIN_SIGNAL_MAGNITUDE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("matrix {index}: {source}")]
    Rip {
        index: usize,
        #[source]
        source: RipError,
    },
    #[error("matrix {matrix}, signal {signal}: {source}")]
    Recovery {
        matrix: usize,
        signal: usize,
        #[source]
        source: RecoveryError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// i.i.d. N(0,1) entries, columns scaled to unit ℓ2 norm.
    Gaussian,
    /// First `n` rows of a random orthogonal `p x p` matrix times `sqrt(p/n)`.
    PartialOrthonormal,
    /// `n = p` identity.
    Identity,
    /// A single matrix read from `matrix_file`.
    UserFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// `||β̂ - β||_inf` at or below this counts as exact recovery.
    pub recovery: f64,
    /// Slack on `||β̂||_1 <= ||β||_1`.
    pub l1_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            recovery: crate::recovery::DEFAULT_RECOVERY_TOL,
            l1_slack: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub ensemble: Ensemble,
    pub num_matrices: usize,
    pub num_signals: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<EnumerationBudget>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.n == 0 || self.p == 0 {
            return bad(format!(
                "n and p must be positive, got n={}, p={}",
                self.n, self.p
            ));
        }
        if self.n > self.p {
            return bad(format!("need n <= p, got n={}, p={}", self.n, self.p));
        }
        if self.k == 0 || 2 * self.k > self.p {
            return bad(format!(
                "need 1 <= k and 2k <= p, got k={}, p={}",
                self.k, self.p
            ));
        }
        if self.num_matrices == 0 || self.num_signals == 0 {
            return bad("num_matrices and num_signals must be positive".into());
        }
        match self.ensemble {
            Ensemble::Identity if self.n != self.p => bad("identity ensemble needs n = p".into()),
            Ensemble::UserFile if self.matrix_file.is_none() => {
                bad("user_file ensemble needs matrix_file".into())
            }
            _ => Ok(()),
        }
    }

    fn rip_options(&self) -> RipOptions {
        RipOptions {
            budget: self.budget.unwrap_or_default(),
            ..Default::default()
        }
    }
}

/// Budget from `SPARSEDECOMP_BUDGET` (a support count), if set and valid.
pub fn budget_from_env() -> Option<EnumerationBudget> {
    std::env::var(BUDGET_ENV_VAR)
        .ok()
        .and_then(|s| s.trim().parse::<u128>().ok())
        .map(EnumerationBudget::from_supports)
}

/// splitmix64 finalizer; decorrelates seeds derived from nearby integers.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    mix(mix(seed ^ mix(stream)) ^ index)
}

const MATRIX_STREAM: u64 = 1;
const SIGNAL_STREAM: u64 = 2;

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng64) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Matrix::from_row_major(rows, cols, data).expect("finite gaussian draws")
}

/// Orthonormalizes the columns of a square matrix (two passes of modified
/// Gram-Schmidt).
fn orthonormal_columns(mut a: Matrix) -> Matrix {
    let (rows, cols) = (a.rows(), a.cols());
    for j in 0..cols {
        for _pass in 0..2 {
            for q in 0..j {
                let r: f64 = (0..rows).map(|i| a.get(i, q) * a.get(i, j)).sum();
                for i in 0..rows {
                    let x = a.get(i, j) - r * a.get(i, q);
                    a.set(i, j, x);
                }
            }
        }
        let norm = (0..rows).map(|i| a.get(i, j).powi(2)).sum::<f64>().sqrt();
        for i in 0..rows {
            let x = a.get(i, j) / norm;
            a.set(i, j, x);
        }
    }
    a
}

/// Deterministic in `(config.seed, index)`.
pub fn gen_matrix(config: &ExperimentConfig, index: usize) -> Result<Matrix, HarnessError> {
    let (n, p) = (config.n, config.p);
    let mut rng = Rng64::seed_from_u64(derive_seed(config.seed, MATRIX_STREAM, index as u64));
    Ok(match config.ensemble {
        Ensemble::Gaussian => {
            let mut m = gaussian_matrix(n, p, &mut rng);
            for j in 0..p {
                let norm = m.column(j).iter().map(|x| x * x).sum::<f64>().sqrt();
                for i in 0..n {
                    let x = m.get(i, j) / norm;
                    m.set(i, j, x);
                }
            }
            m
        }
        Ensemble::PartialOrthonormal => {
            let q = orthonormal_columns(gaussian_matrix(p, p, &mut rng));
            let scale = (p as f64 / n as f64).sqrt();
            let data = (0..n)
                .flat_map(|i| q.row(i).iter().map(move |x| x * scale).collect::<Vec<_>>())
                .collect();
            Matrix::from_row_major(n, p, data).expect("finite")
        }
        Ensemble::Identity => Matrix::identity(n),
        Ensemble::UserFile => {
            let path = config.matrix_file.as_ref().ok_or_else(|| {
                HarnessError::Config("user_file ensemble needs matrix_file".into())
            })?;
            read_matrix(path)?
        }
    })
}

/// Uniformly random support of size `k`, N(0,1) values with magnitude at
/// least [`MIN_SIGNAL_MAGNITUDE`].
///
/// # Panics
/// If `p == 0` or `k > p`.
pub fn gen_signal(p: usize, k: usize, seed: u64) -> Vector {
    assert!(p > 0 && k <= p, "need 0 <= k <= p, p > 0");
    let mut rng = Rng64::seed_from_u64(seed);
    let mut beta = vec![0.0; p];
    for i in sample(&mut rng, p, k).iter() {
        beta[i] = loop {
            let x: f64 = StandardNormal.sample(&mut rng);
            if x.abs() >= MIN_SIGNAL_MAGNITUDE {
                break x;
            }
        };
    }
    Vector::new(beta).expect("finite")
}

fn signal_seed(config: &ExperimentConfig, matrix: usize, signal: usize) -> u64 {
    derive_seed(
        config.seed,
        SIGNAL_STREAM,
        ((matrix as u64) << 32) | signal as u64,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalOutcome {
    pub index: usize,
    pub beta: Vector,
    pub recovery: RecoveryResult,
    /// `||β̂||_1 <= ||β||_1` within tolerance.
    pub l1_minimal: bool,
    pub proof_chain: ProofChainReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixOutcome {
    pub index: usize,
    pub rip: RipReport,
    pub signals: Vec<SignalOutcome>,
    pub exact_count: usize,
    /// `condition_holds ⇒ every recovery exact`.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub matrices: usize,
    pub condition_holds: usize,
    pub signals: usize,
    pub exact: usize,
    pub exact_under_condition: usize,
    pub signals_under_condition: usize,
    pub chain_failures: usize,
    pub l1_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryVerdict {
    pub schema_version: String,
    pub config: ExperimentConfig,
    pub matrices: Vec<MatrixOutcome>,
    pub summary: Summary,
    pub consistent: bool,
}

pub fn verify_recovery_condition(
    config: &ExperimentConfig,
) -> Result<RecoveryVerdict, HarnessError> {
    config.validate()?;
    let count = if config.ensemble == Ensemble::UserFile {
        1
    } else {
        config.num_matrices
    };
    let rip_opts = config.rip_options();
    let mut matrices = Vec::with_capacity(count);
    for index in 0..count {
        let phi = gen_matrix(config, index)?;
        if phi.cols() < 2 * config.k {
            return Err(HarnessError::Config(format!(
                "matrix has {} columns, need at least 2k = {}",
                phi.cols(),
                2 * config.k
            )));
        }
        let rip = rip_report(&phi, config.k, &rip_opts)
            .map_err(|source| HarnessError::Rip { index, source })?;
        let mut signals = Vec::with_capacity(config.num_signals);
        for s in 0..config.num_signals {
            let beta = gen_signal(phi.cols(), config.k, signal_seed(config, index, s));
            let outcome =
                run_signal(&phi, &rip, beta, s, &config.tolerances).map_err(|source| {
                    HarnessError::Recovery {
                        matrix: index,
                        signal: s,
                        source,
                    }
                })?;
            signals.push(outcome);
        }
        let exact_count = signals.iter().filter(|s| s.recovery.exact).count();
        let consistent = !rip.condition_holds || exact_count == signals.len();
        matrices.push(MatrixOutcome {
            index,
            rip,
            signals,
            exact_count,
            consistent,
        });
    }
    let summary = summarize(&matrices);
    let consistent = matrices.iter().all(|m| m.consistent);
    Ok(RecoveryVerdict {
        schema_version: REPORT_SCHEMA_VERSION.into(),
        config: config.clone(),
        matrices,
        summary,
        consistent,
    })
}

fn run_signal(
    phi: &Matrix,
    rip: &RipReport,
    beta: Vector,
    index: usize,
    tol: &Tolerances,
) -> Result<SignalOutcome, RecoveryError> {
    let y = phi.mul_vec(beta.as_slice())?;
    let (beta_hat, _) = basis_pursuit(phi, &y, &SimplexOptions::default())?;
    let fitted = phi.mul_vec(&beta_hat)?;
    let residual = fitted
        .iter()
        .zip(&y)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let error = beta_hat
        .iter()
        .zip(beta.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let l1_value = l1_norm(&beta_hat);
    let chain = proof_chain(phi, beta.as_slice(), &beta_hat, rip, tol.recovery)?;
    Ok(SignalOutcome {
        index,
        l1_minimal: l1_value <= beta.l1_norm() + tol.l1_slack,
        recovery: RecoveryResult {
            beta_hat: Vector::new(beta_hat)?,
            residual,
            l1_value,
            error: Some(error),
            exact: error <= tol.recovery,
        },
        beta,
        proof_chain: chain,
    })
}

fn summarize(matrices: &[MatrixOutcome]) -> Summary {
    let all = || matrices.iter().flat_map(|m| m.signals.iter());
    let under = || {
        matrices
            .iter()
            .filter(|m| m.rip.condition_holds)
            .flat_map(|m| m.signals.iter())
    };
    Summary {
        matrices: matrices.len(),
        condition_holds: matrices.iter().filter(|m| m.rip.condition_holds).count(),
        signals: all().count(),
        exact: all().filter(|s| s.recovery.exact).count(),
        exact_under_condition: under().filter(|s| s.recovery.exact).count(),
        signals_under_condition: under().count(),
        chain_failures: all().filter(|s| !s.proof_chain.all_ok()).count(),
        l1_violations: all().filter(|s| !s.l1_minimal).count(),
    }
}

/// Re-derives consistency from the raw fields of a (possibly hand-edited)
/// verdict. True only if every matrix whose recorded condition value is
/// below 1 has all recoveries exact, and every stored flag agrees.
pub fn audit_verdict(v: &RecoveryVerdict) -> bool {
    let tol = v.config.tolerances.recovery;
    let mut overall = true;
    for m in &v.matrices {
        let holds = m.rip.condition_value < 1.0;
        let flags_agree = holds == m.rip.condition_holds
            && m.signals.iter().all(|s| {
                let err = s
                    .recovery
                    .beta_hat
                    .iter()
                    .zip(s.beta.iter())
                    .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
                (err <= tol) == s.recovery.exact
            });
        let consistent = !holds || m.signals.iter().all(|s| s.recovery.exact);
        overall &= flags_agree && consistent && m.consistent == consistent;
    }
    overall && v.consistent == overall && v.schema_version == REPORT_SCHEMA_VERSION
}
