//! Lexicographic k-subset enumeration and exact binomial coefficients.

/// `n choose k` in `u128`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Iterator over the `k`-element subsets of `{0, .., n-1}` in lexicographic
/// order, each yielded as a strictly increasing index vector.
///
/// `k == 0` yields exactly one empty subset; `k > n` yields nothing.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            current: (0..k).collect(),
            done: k > n,
        }
    }

    /// Subsets of an arbitrary ordered pool, e.g. the complement of a support.
    pub fn of<'a>(pool: &'a [usize], k: usize) -> impl Iterator<Item = Vec<usize>> + 'a {
        Combinations::new(pool.len(), k).map(move |c| c.into_iter().map(|i| pool[i]).collect())
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        // rightmost position that can still be incremented
        match (0..k).rev().find(|&i| self.current[i] < self.n - k + i) {
            Some(i) => {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}
