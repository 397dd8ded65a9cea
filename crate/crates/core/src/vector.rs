//! Dense real vectors, norms, sparsity predicates and the sign/sort
//! reduction that turns an arbitrary vector into a nonnegative,
//! descending one.

use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("vector must have at least one entry")]
    Empty,
    #[error("entry {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// A dense vector of finite reals with fixed length `n >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self, VectorError> {
        if entries.is_empty() {
            return Err(VectorError::Empty);
        }
        if let Some((index, &value)) = entries.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(VectorError::NonFinite { index, value });
        }
        Ok(Self(entries))
    }

    /// All-zero vector of length `n`.
    ///
    /// # Panics
    /// If `n == 0`.
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "vector length must be positive");
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn l1_norm(&self) -> f64 {
        l1_norm(&self.0)
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.0)
    }

    pub fn linf_norm(&self) -> f64 {
        linf_norm(&self.0)
    }

    pub fn is_k_sparse(&self, k: usize, zero_tol: f64) -> bool {
        is_k_sparse(&self.0, k, zero_tol)
    }

    /// Indices whose magnitude exceeds `zero_tol`.
    pub fn support(&self, zero_tol: f64) -> SupportSet {
        SupportSet(
            self.0
                .iter()
                .enumerate()
                .filter(|(_, x)| x.abs() > zero_tol)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    /// The module's default zero tolerance for this vector:
    /// `1e-12 * max(1, ||v||_inf)`.
    pub fn default_zero_tol(&self) -> f64 {
        default_zero_tol(&self.0)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = VectorError;

    fn try_from(entries: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(entries)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for Vector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn linf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// True iff at most `k` entries have magnitude strictly above `zero_tol`.
pub fn is_k_sparse(v: &[f64], k: usize, zero_tol: f64) -> bool {
    v.iter().filter(|x| x.abs() > zero_tol).count() <= k
}

pub fn default_zero_tol(v: &[f64]) -> f64 {
    1e-12 * linf_norm(v).max(1.0)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sorted, strictly increasing set of zero-based indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    /// Builds a support from arbitrary indices; sorts and rejects duplicates.
    pub fn new(mut indices: Vec<usize>) -> Option<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some(Self(indices))
    }

    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_disjoint(&self, other: &SupportSet) -> bool {
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Equal => return false,
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
            }
        }
        true
    }
}

/// A vector reduced to nonnegative, descending magnitudes together with
/// the bookkeeping needed to undo the reduction.
///
/// `permutation[r]` is the original index of the entry placed at rank `r`;
/// `signs[i]` is the sign of original entry `i` (+1 for zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalVector {
    pub magnitudes: Vector,
    pub signs: Vec<f64>,
    pub permutation: Vec<usize>,
    pub zero_count: usize,
}

/// Strips signs and sorts magnitudes in descending order, ties broken by
/// ascending original index.
pub fn canonicalize(v: &Vector, zero_tol: f64) -> CanonicalVector {
    let x = v.as_slice();
    let mut permutation: Vec<usize> = (0..x.len()).collect();
    // sort_by is stable, so equal magnitudes keep index order
    permutation.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    let magnitudes = Vector(permutation.iter().map(|&i| x[i].abs()).collect());
    let signs = x
        .iter()
        .map(|&e| if e < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let zero_count = x.iter().filter(|e| e.abs() <= zero_tol).count();
    CanonicalVector {
        magnitudes,
        signs,
        permutation,
        zero_count,
    }
}

impl CanonicalVector {
    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Maps a vector expressed in canonical (rank) coordinates back to the
    /// original ordering and signs.
    pub fn decanonicalize(&self, w: &[f64]) -> Result<Vector, VectorError> {
        if w.len() != self.len() {
            return Err(VectorError::LengthMismatch {
                expected: self.len(),
                actual: w.len(),
            });
        }
        let mut out = vec![0.0; w.len()];
        for (rank, &orig) in self.permutation.iter().enumerate() {
            out[orig] = self.signs[orig] * w[rank];
        }
        Vector::new(out)
    }
}

pub fn decanonicalize(c: &CanonicalVector, w: &Vector) -> Result<Vector, VectorError> {
    c.decanonicalize(w.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn norms_on_hand_examples() {
        assert_eq!(v(&[0.0, 0.0, 0.0]).l1_norm(), 0.0);
        assert!((v(&[1.0 / 3.0; 3]).l1_norm() - 1.0).abs() < 1e-15);
        assert_eq!(v(&[-2.0, 3.0, -0.5]).l1_norm(), 5.5);

        assert_eq!(v(&[0.0, 0.0]).linf_norm(), 0.0);
        assert_eq!(v(&[-2.0, 3.0, -0.5]).linf_norm(), 3.0);
        assert_eq!(v(&[1.0 / 3.0; 3]).linf_norm(), 1.0 / 3.0);

        assert_eq!(v(&[3.0, 4.0]).l2_norm(), 5.0);
        assert_eq!(v(&[0.0; 4]).l2_norm(), 0.0);
        assert!((v(&[0.5, 0.5, 0.0]).l2_norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn sparsity_predicate() {
        assert!(v(&[1.0, 0.0, 0.0, 2.0]).is_k_sparse(2, 1e-12));
        assert!(!v(&[1.0, 0.0, 0.0, 2.0]).is_k_sparse(1, 1e-12));
        assert!(v(&[1e-15, 1.0, 0.0]).is_k_sparse(1, 1e-12));
        assert!(v(&[0.0]).is_k_sparse(0, 0.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(Vector::new(vec![]), Err(VectorError::Empty));
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(VectorError::NonFinite { index: 1, .. })
        ));
        assert!(serde_json::from_str::<Vector>("[]").is_err());
        assert_eq!(
            serde_json::from_str::<Vector>("[1, -2.5]").unwrap(),
            v(&[1.0, -2.5])
        );
    }

    #[test]
    fn canonicalize_examples() {
        let c = canonicalize(&v(&[-3.0, 1.0, 2.0]), 1e-12);
        assert_eq!(c.magnitudes, v(&[3.0, 2.0, 1.0]));
        assert_eq!(c.permutation, vec![0, 2, 1]);
        assert_eq!(c.signs, vec![-1.0, 1.0, 1.0]);
        assert_eq!(c.zero_count, 0);

        let c = canonicalize(&v(&[5.0]), 1e-12);
        assert_eq!(c.magnitudes, v(&[5.0]));
        assert_eq!(c.permutation, vec![0]);

        let c = canonicalize(&v(&[0.0, -1.0]), 1e-12);
        assert_eq!(c.magnitudes, v(&[1.0, 0.0]));
        assert_eq!(c.zero_count, 1);
        assert_eq!(c.signs, vec![1.0, -1.0]);
    }

    #[test]
    fn canonicalize_ties_are_stable() {
        let c = canonicalize(&v(&[1.0, -2.0, -1.0, 2.0]), 1e-12);
        assert_eq!(c.permutation, vec![1, 3, 0, 2]);
    }

    #[test]
    fn decanonicalize_examples() {
        let id = canonicalize(&v(&[3.0, 2.0, 1.0]), 1e-12);
        assert_eq!(
            id.decanonicalize(&[0.1, -4.0, 7.0]).unwrap(),
            v(&[0.1, -4.0, 7.0])
        );

        let c = canonicalize(&v(&[-3.0, 1.0, 2.0]), 1e-12);
        assert_eq!(
            decanonicalize(&c, &v(&[3.0, 2.0, 1.0])).unwrap(),
            v(&[-3.0, 1.0, 2.0])
        );
        assert_eq!(
            decanonicalize(&c, &v(&[3.0, 0.0, 1.0])).unwrap(),
            v(&[-3.0, 1.0, 0.0])
        );
        assert_eq!(
            c.decanonicalize(&[1.0, 2.0]),
            Err(VectorError::LengthMismatch {
                expected: 3,
                actual: 2
            })
        );
    }

    #[test]
    fn support_set_ops() {
        let a = SupportSet::new(vec![3, 1]).unwrap();
        assert_eq!(a.indices(), &[1, 3]);
        assert!(SupportSet::new(vec![2, 2]).is_none());
        let b = SupportSet::new(vec![0, 2, 4]).unwrap();
        assert!(a.is_disjoint(&b));
        assert!(!a.is_disjoint(&SupportSet::new(vec![3]).unwrap()));
        assert!(a.contains(3) && !a.contains(2));
    }

    fn finite_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(
            prop_oneof![3 => -10.0..10.0f64, 1 => Just(0.0), 1 => Just(-2.5), 1 => Just(2.5)],
            1..16,
        )
    }

    proptest! {
        #[test]
        fn prop_round_trip_is_exact(x in finite_vec()) {
            let vx = Vector::new(x).unwrap();
            let c = canonicalize(&vx, vx.default_zero_tol());
            prop_assert!(c.magnitudes.as_slice().windows(2).all(|w| w[0] >= w[1]));
            prop_assert_eq!(decanonicalize(&c, &c.magnitudes).unwrap(), vx);
        }

        #[test]
        fn prop_norms_preserved(x in finite_vec()) {
            let vx = Vector::new(x).unwrap();
            let c = canonicalize(&vx, vx.default_zero_tol());
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            prop_assert!(close(vx.l1_norm(), c.magnitudes.l1_norm()));
            prop_assert!(close(vx.l2_norm(), c.magnitudes.l2_norm()));
            prop_assert_eq!(vx.linf_norm(), c.magnitudes.linf_norm());
        }

        #[test]
        fn prop_holder_type_bound(x in finite_vec(), k in 1usize..6) {
            let vx = Vector::new(x).unwrap();
            let l1 = vx.l1_norm();
            prop_assume!(l1 > 0.0);
            // largest admissible k for this vector, capped by the drawn one
            let k = k.min((l1 / vx.linf_norm()).floor() as usize).max(1);
            prop_assume!(vx.linf_norm() <= l1 / k as f64);
            prop_assert!(vx.l2_norm() <= l1 / (k as f64).sqrt() * (1.0 + 1e-12));
        }
    }
}
