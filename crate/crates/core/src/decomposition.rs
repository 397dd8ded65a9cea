//! Convex k-sparse decomposition with invariant ℓ1 norm.
//!
//! Any `v` with `||v||_1 <= C` and `||v||_inf <= C/k` is a convex
//! combination of k-sparse vectors `w_t`, each with `||w_t||_1 = ||v||_1`
//! and `||w_t||_inf <= C/k`. The construction works on the sorted,
//! nonnegative form of `v`: one [`expand_step`] replaces a vector with `m`
//! positive entries by `k + 1` children with `m - 1` positive entries, and
//! repeating it `m - k` times reaches k-sparse leaves. Leaves that share a
//! support are merged, which caps the number of terms at `C(n, k)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::combinations::binomial;
use crate::vector::{canonicalize, default_zero_tol, is_k_sparse, Vector, VectorError};

/// Slack applied to the input hypotheses `||v||_1 <= C`, `||v||_inf <= C/k`.
pub const HYPOTHESIS_SLACK: f64 = 1e-12;
/// Tolerance for the per-term and reconstruction checks.
pub const TERM_TOL: f64 = 1e-10;
/// Band in which a slightly negative `y_0` or `eta_j` is clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("decomposition would need {needed} distinct supports, cap is {cap}")]
    TermBudgetExceeded { needed: usize, cap: u128 },
    #[error("internal numerical error: {0}")]
    Internal(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

type Result<T> = std::result::Result<T, DecompositionError>;

/// Smallest `C` satisfying both hypotheses: `max(||v||_1, k ||v||_inf)`.
pub fn default_capacity(v: &Vector, k: usize) -> Result<f64> {
    check_k(k, v.len())?;
    let c = v.l1_norm().max(k as f64 * v.linf_norm());
    if c == 0.0 {
        return Err(DecompositionError::PreconditionViolated(
            "zero vector has no positive capacity".into(),
        ));
    }
    Ok(c)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(DecompositionError::PreconditionViolated(format!(
            "k must satisfy 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    Ok(())
}

/// A vector together with the sparsity level and capacity it is decomposed
/// against. Construction validates the hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionInput {
    v: Vector,
    k: usize,
    capacity: f64,
}

impl DecompositionInput {
    pub fn new(v: Vector, k: usize, capacity: f64) -> Result<Self> {
        check_k(k, v.len())?;
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(DecompositionError::PreconditionViolated(format!(
                "capacity must be positive and finite, got {capacity}"
            )));
        }
        let l1 = v.l1_norm();
        if l1 > capacity * (1.0 + HYPOTHESIS_SLACK) {
            return Err(DecompositionError::PreconditionViolated(format!(
                "||v||_1 = {l1} exceeds C = {capacity}"
            )));
        }
        let ceiling = capacity / k as f64;
        let linf = v.linf_norm();
        if linf > ceiling * (1.0 + HYPOTHESIS_SLACK) {
            return Err(DecompositionError::PreconditionViolated(format!(
                "||v||_inf = {linf} exceeds C/k = {ceiling}"
            )));
        }
        Ok(Self { v, k, capacity })
    }

    pub fn with_default_capacity(v: Vector, k: usize) -> Result<Self> {
        let c = default_capacity(&v, k)?;
        Self::new(v, k, c)
    }

    pub fn v(&self) -> &Vector {
        &self.v
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// The per-entry ceiling `C/k`.
    pub fn ceiling(&self) -> f64 {
        self.capacity / self.k as f64
    }

    pub fn zero_tol(&self) -> f64 {
        self.v.default_zero_tol()
    }
}

/// One weighted summand `x_t * w_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseTerm {
    #[serde(rename = "x")]
    pub weight: f64,
    #[serde(rename = "w")]
    pub vector: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub input: DecompositionInput,
    pub terms: Vec<SparseTerm>,
}

impl Decomposition {
    /// `sum_t x_t w_t`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.input.v.len()];
        for t in &self.terms {
            for (a, w) in acc.iter_mut().zip(t.vector.iter()) {
                *a += t.weight * w;
            }
        }
        acc
    }

    pub fn distinct_supports(&self) -> usize {
        let tol = self.input.zero_tol();
        let mut s: Vec<_> = self.terms.iter().map(|t| t.vector.support(tol)).collect();
        s.sort();
        s.dedup();
        s.len()
    }
}

/// Result of a single expansion of a sorted vector with `m > k` positive
/// entries into `k + 1` children.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionStep {
    /// `g_0 .. g_k`, same length as the expanded vector.
    pub children: Vec<Vec<f64>>,
    /// `y_0 .. y_k`.
    pub weights: Vec<f64>,
    pub etas: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Number of strictly positive entries in the expanded vector.
    pub active: usize,
}

/// Expands `u`, which must be nonnegative and descending with `m > k`
/// strictly positive leading entries followed by zeros. The smallest
/// positive entry `u[m-1]` is the one absorbed by the children.
pub fn expand_step(u: &[f64], k: usize, capacity: f64) -> Result<ExpansionStep> {
    if u.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(DecompositionError::PreconditionViolated(
            "entries must be finite and nonnegative".into(),
        ));
    }
    if u.windows(2).any(|w| w[0] < w[1]) {
        return Err(DecompositionError::PreconditionViolated(
            "entries must be sorted in descending order".into(),
        ));
    }
    let m = u.iter().take_while(|x| **x > 0.0).count();
    if k == 0 || m <= k {
        return Err(DecompositionError::PreconditionViolated(format!(
            "need m > k >= 1 positive entries, got m={m}, k={k}"
        )));
    }
    let (children, weights, etas, lambdas) = expand_sorted(&u[..m], k, capacity)?;
    let children = children
        .into_iter()
        .map(|mut g| {
            g.resize(u.len(), 0.0);
            g
        })
        .collect();
    Ok(ExpansionStep {
        children,
        weights,
        etas,
        lambdas,
        active: m,
    })
}

type Expansion = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, Vec<f64>);

/// Core formulas on `s`: descending, all strictly positive, `s.len() > k`.
fn expand_sorted(s: &[f64], k: usize, capacity: f64) -> Result<Expansion> {
    let m = s.len();
    let ceiling = capacity / k as f64;

    let mut etas = Vec::with_capacity(k);
    for (j, &sj) in s[..k].iter().enumerate() {
        let eta = ceiling - sj;
        if eta < -CLAMP_TOL * ceiling {
            return Err(DecompositionError::PreconditionViolated(format!(
                "entry {j} = {sj} exceeds C/k = {ceiling}"
            )));
        }
        etas.push(eta.max(0.0));
    }
    let eta_sum: f64 = etas.iter().sum();
    if eta_sum <= 0.0 {
        return Err(DecompositionError::PreconditionViolated(format!(
            "sum of slacks C/k - u(j) is {eta_sum}; requires ||u||_1 <= C with m > k"
        )));
    }
    let lambdas: Vec<f64> = etas.iter().map(|e| e / eta_sum).collect();

    let last = s[m - 1];
    // g_0: top-k entries absorb their share of the last entry, last entry dropped
    let mut base = s.to_vec();
    for j in 0..k {
        base[j] = s[j] + lambdas[j] * last;
    }
    base[m - 1] = 0.0;

    let mut children = Vec::with_capacity(k + 1);
    let mut weights = Vec::with_capacity(k + 1);
    children.push(base.clone());
    weights.push(0.0);
    for t in 0..k {
        let lifted = s[t] + lambdas[t] * last;
        let mut g = base.clone();
        g[t] = 0.0;
        g[m - 1] = lifted;
        children.push(g);
        weights.push(lambdas[t] * last / lifted);
    }

    let y0 = 1.0 - weights[1..].iter().sum::<f64>();
    weights[0] = if y0 < 0.0 {
        if y0 < -CLAMP_TOL {
            return Err(DecompositionError::Internal(format!(
                "y_0 = {y0} is negative"
            )));
        }
        0.0
    } else {
        y0.min(1.0)
    };
    Ok((children, weights, etas, lambdas))
}

/// Expands an arbitrary nonnegative vector: entries above `zero_tol` are
/// sorted (stable by index), expanded, and scattered back. Entries at or
/// below `zero_tol` are carried unchanged into every child.
fn expand_scattered(
    x: &[f64],
    k: usize,
    capacity: f64,
    zero_tol: f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let mut pos: Vec<usize> = (0..x.len()).filter(|&i| x[i] > zero_tol).collect();
    pos.sort_by(|&a, &b| x[b].total_cmp(&x[a]));
    let s: Vec<f64> = pos.iter().map(|&i| x[i]).collect();
    let (children, weights, _, _) = expand_sorted(&s, k, capacity)?;
    Ok(weights
        .into_iter()
        .zip(children)
        .map(|(y, g)| {
            let mut out = x.to_vec();
            for (r, &i) in pos.iter().enumerate() {
                out[i] = g[r];
            }
            (y, out)
        })
        .collect())
}

/// How leaves sharing a support are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeStrategy {
    /// Merge after every expansion level. Work is bounded by
    /// `sum_m C(n, m) (k + 1)` expansions.
    #[default]
    PerLevel,
    /// Expand the full tree depth-first and merge the leaves once.
    /// Up to `(k + 1)^(m - k)` leaves.
    AtEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    pub strategy: MergeStrategy,
    /// Cap on distinct supports; `None` means `C(n, k)`.
    pub term_cap: Option<u128>,
    /// Drop terms with weight below this and renormalize. Breaks exact
    /// reconstruction.
    pub prune_below: Option<f64>,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            strategy: MergeStrategy::PerLevel,
            term_cap: None,
            prune_below: None,
        }
    }
}

pub fn decompose(input: &DecompositionInput) -> Result<Decomposition> {
    decompose_with(input, &DecomposeOptions::default())
}

/// Accumulates `sum x_i w_i` and `sum x_i` for one support.
#[derive(Debug)]
struct Bucket {
    weight: f64,
    weighted: Vec<f64>,
}

impl Bucket {
    fn add(&mut self, x: f64, w: &[f64]) {
        self.weight += x;
        for (a, b) in self.weighted.iter_mut().zip(w) {
            *a += x * b;
        }
    }

    fn finish(self) -> (f64, Vec<f64>) {
        let w = self.weight;
        (w, self.weighted.into_iter().map(|a| a / w).collect())
    }
}

type Buckets = BTreeMap<Vec<usize>, Bucket>;

fn support_key(x: &[f64], zero_tol: f64) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i] > zero_tol).collect()
}

fn deposit(buckets: &mut Buckets, x: f64, w: Vec<f64>, zero_tol: f64, cap: u128) -> Result<()> {
    let key = support_key(&w, zero_tol);
    match buckets.get_mut(&key) {
        Some(b) => b.add(x, &w),
        None => {
            if buckets.len() as u128 >= cap {
                return Err(DecompositionError::TermBudgetExceeded {
                    needed: buckets.len() + 1,
                    cap,
                });
            }
            let n = w.len();
            let mut b = Bucket {
                weight: 0.0,
                weighted: vec![0.0; n],
            };
            b.add(x, &w);
            buckets.insert(key, b);
        }
    }
    Ok(())
}

pub fn decompose_with(
    input: &DecompositionInput,
    opts: &DecomposeOptions,
) -> Result<Decomposition> {
    let (n, k, capacity) = (input.v.len(), input.k, input.capacity);
    let zero_tol = input.zero_tol();
    let canon = canonicalize(&input.v, zero_tol);
    let root = canon.magnitudes.as_slice();

    if is_k_sparse(root, k, zero_tol) {
        return Ok(Decomposition {
            input: input.clone(),
            terms: vec![SparseTerm {
                weight: 1.0,
                vector: input.v.clone(),
            }],
        });
    }

    let cap = opts.term_cap.unwrap_or_else(|| binomial(n, k));
    let leaves = match opts.strategy {
        MergeStrategy::PerLevel => expand_per_level(root, k, capacity, zero_tol, cap)?,
        MergeStrategy::AtEnd => expand_depth_first(root, k, capacity, zero_tol, cap)?,
    };

    let mut terms = Vec::with_capacity(leaves.len());
    for bucket in leaves.into_values() {
        let (weight, w) = bucket.finish();
        if weight == 0.0 {
            continue;
        }
        terms.push(SparseTerm {
            weight,
            vector: canon.decanonicalize(&w)?,
        });
    }
    if let Some(threshold) = opts.prune_below {
        terms.retain(|t| t.weight >= threshold);
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        if total > 0.0 {
            terms.iter_mut().for_each(|t| t.weight /= total);
        }
    }
    // order by support in original coordinates
    terms.sort_by_cached_key(|t| t.vector.support(zero_tol));
    Ok(Decomposition {
        input: input.clone(),
        terms,
    })
}

fn expand_per_level(
    root: &[f64],
    k: usize,
    capacity: f64,
    zero_tol: f64,
    cap: u128,
) -> Result<Buckets> {
    let mut level: Vec<(f64, Vec<f64>)> = vec![(1.0, root.to_vec())];
    let mut active = support_key(root, zero_tol).len();
    loop {
        let mut next = Buckets::new();
        // support sizes within a level are uniform, so only the last level is capped
        let level_cap = if active - 1 == k { cap } else { u128::MAX };
        for (x, u) in &level {
            for (y, g) in expand_scattered(u, k, capacity, zero_tol)? {
                if y == 0.0 {
                    continue;
                }
                deposit(&mut next, x * y, g, zero_tol, level_cap)?;
            }
        }
        active -= 1;
        if active == k {
            return Ok(next);
        }
        level = next.into_values().map(Bucket::finish).collect();
    }
}

fn expand_depth_first(
    root: &[f64],
    k: usize,
    capacity: f64,
    zero_tol: f64,
    cap: u128,
) -> Result<Buckets> {
    let mut out = Buckets::new();
    let mut stack = vec![(1.0, root.to_vec())];
    while let Some((x, u)) = stack.pop() {
        if is_k_sparse(&u, k, zero_tol) {
            deposit(&mut out, x, u, zero_tol, cap)?;
            continue;
        }
        for (y, g) in expand_scattered(&u, k, capacity, zero_tol)? {
            if y > 0.0 {
                stack.push((x * y, g));
            }
        }
    }
    Ok(out)
}

/// Independent re-check of a decomposition against its input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    /// `||sum x_t w_t - v||_inf`.
    pub reconstruction_residual: f64,
    /// `|sum x_t - 1|`.
    pub weight_sum_residual: f64,
    pub min_weight: f64,
    /// Indices of terms with more than `k` entries above the zero tolerance.
    pub non_sparse_terms: Vec<usize>,
    /// `max_t | ||w_t||_1 - ||v||_1 |`.
    pub max_l1_deviation: f64,
    /// `max_t ||w_t||_inf - C/k` (negative when all terms are strictly inside).
    pub max_linf_excess: f64,
    pub distinct_supports: usize,
    pub support_limit: u128,
    pub reconstruction_ok: bool,
    pub weights_ok: bool,
    pub sparsity_ok: bool,
    pub l1_ok: bool,
    pub linf_ok: bool,
    pub support_count_ok: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.reconstruction_ok
            && self.weights_ok
            && self.sparsity_ok
            && self.l1_ok
            && self.linf_ok
            && self.support_count_ok
    }
}

pub fn verify_decomposition(d: &Decomposition) -> VerificationReport {
    let v = d.input.v.as_slice();
    let k = d.input.k;
    let zero_tol = default_zero_tol(v);
    let v_l1 = d.input.v.l1_norm();
    let v_inf = d.input.v.linf_norm();
    let ceiling = d.input.ceiling();

    let mut recon = vec![0.0; v.len()];
    let mut weight_sum = 0.0;
    let mut min_weight = f64::INFINITY;
    let mut non_sparse_terms = Vec::new();
    let mut max_l1_deviation: f64 = 0.0;
    let mut max_linf_excess = f64::NEG_INFINITY;
    let mut supports = Vec::with_capacity(d.terms.len());
    for (i, t) in d.terms.iter().enumerate() {
        let w = t.vector.as_slice();
        weight_sum += t.weight;
        min_weight = min_weight.min(t.weight);
        for (r, wi) in recon.iter_mut().zip(w) {
            *r += t.weight * wi;
        }
        if !is_k_sparse(w, k, zero_tol) || w.len() != v.len() {
            non_sparse_terms.push(i);
        }
        let l1: f64 = w.iter().map(|x| x.abs()).sum();
        max_l1_deviation = max_l1_deviation.max((l1 - v_l1).abs());
        let linf = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        max_linf_excess = max_linf_excess.max(linf - ceiling);
        supports.push(support_key(
            &w.iter().map(|x| x.abs()).collect::<Vec<_>>(),
            zero_tol,
        ));
    }
    supports.sort();
    supports.dedup();

    let reconstruction_residual = recon
        .iter()
        .zip(v)
        .fold(0.0f64, |m, (r, x)| m.max((r - x).abs()));
    let weight_sum_residual = (weight_sum - 1.0).abs();
    let support_limit = binomial(v.len(), k);
    VerificationReport {
        reconstruction_residual,
        weight_sum_residual,
        min_weight,
        max_l1_deviation,
        max_linf_excess,
        distinct_supports: supports.len(),
        support_limit,
        reconstruction_ok: reconstruction_residual <= TERM_TOL * v_inf.max(1.0),
        weights_ok: !d.terms.is_empty()
            && weight_sum_residual <= TERM_TOL
            && min_weight >= -CLAMP_TOL,
        sparsity_ok: non_sparse_terms.is_empty(),
        l1_ok: max_l1_deviation <= TERM_TOL * v_l1,
        linf_ok: max_linf_excess <= TERM_TOL * ceiling,
        support_count_ok: supports.len() as u128 <= support_limit,
        non_sparse_terms,
    }
}

/// ℓ2 comparison implied by the decomposition:
/// `||v||_2 <= sum x_t ||w_t||_2 <= C / sqrt(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2Bound {
    pub v_l2: f64,
    pub mixed_l2: f64,
    pub ceiling: f64,
    pub holds: bool,
}

pub fn l2_bound(input: &DecompositionInput) -> Result<L2Bound> {
    let d = decompose(input)?;
    let v_l2 = input.v.l2_norm();
    let mixed_l2: f64 = d.terms.iter().map(|t| t.weight * t.vector.l2_norm()).sum();
    let ceiling = input.capacity / (input.k as f64).sqrt();
    Ok(L2Bound {
        v_l2,
        mixed_l2,
        ceiling,
        holds: v_l2 <= mixed_l2 + TERM_TOL && mixed_l2 <= ceiling + TERM_TOL,
    })
}

pub fn l2_bound_check(input: &DecompositionInput) -> Result<bool> {
    Ok(l2_bound(input)?.holds)
}

/// On-disk form: `{ "k", "C", "v", "terms": [{ "x", "w" }] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionDoc {
    pub k: usize,
    #[serde(rename = "C")]
    pub capacity: f64,
    pub v: Vector,
    pub terms: Vec<SparseTerm>,
}

impl From<&Decomposition> for DecompositionDoc {
    fn from(d: &Decomposition) -> Self {
        Self {
            k: d.input.k,
            capacity: d.input.capacity,
            v: d.input.v.clone(),
            terms: d.terms.clone(),
        }
    }
}

impl TryFrom<DecompositionDoc> for Decomposition {
    type Error = DecompositionError;

    fn try_from(doc: DecompositionDoc) -> Result<Self> {
        Ok(Self {
            input: DecompositionInput::new(doc.v, doc.k, doc.capacity)?,
            terms: doc.terms,
        })
    }
}

impl Serialize for Decomposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DecompositionDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Decomposition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = DecompositionDoc::deserialize(d)?;
        Decomposition::try_from(doc).map_err(serde::de::Error::custom)
    }
}
