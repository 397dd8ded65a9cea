//! Convex k-sparse decomposition with invariant ℓ1 norm, exact restricted
//! isometry / orthogonality constants, and basis-pursuit recovery, plus a
//! harness that checks exact recovery whenever `delta_k + theta_{k,k} < 1`.

pub mod combinations;
pub mod decomposition;
pub mod eigen;
pub mod harness;
pub mod io;
pub mod matrix;
pub mod recovery;
pub mod rip;
pub mod simplex;
pub mod vector;

/// Seedable generator used for every random draw; identical streams on
/// every platform for a given 64-bit seed.
pub type Rng64 = rand_pcg::Pcg64;

pub use decomposition::{
    decompose, decompose_with, default_capacity, expand_step, l2_bound, l2_bound_check,
    verify_decomposition, DecomposeOptions, Decomposition, DecompositionError, DecompositionInput,
    ExpansionStep, MergeStrategy, SparseTerm, VerificationReport,
};
pub use eigen::{sym_eigen, sym_eigen_extremes, JacobiOptions, SymEigen};
pub use harness::{
    audit_verdict, gen_matrix, gen_signal, verify_recovery_condition, Ensemble, ExperimentConfig,
    HarnessError, RecoveryVerdict,
};
pub use matrix::Matrix;
pub use recovery::{
    build_bp_lp, proof_chain, recover, ProofChainReport, RecoveryError, RecoveryResult,
};
pub use rip::{
    delta_k, rip_report, theta_kk, verify_rip_by_sampling, EnumerationBudget, RipError, RipOptions,
    RipReport,
};
pub use simplex::{simplex_solve, LpProblem, LpSolution, LpStatus, SimplexOptions};
pub use vector::{canonicalize, decanonicalize, CanonicalVector, SupportSet, Vector, VectorError};
