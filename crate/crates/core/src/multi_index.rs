use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Largest total order for which `factorial` is computed exactly.
pub const MAX_ORDER: u32 = 20;

/// A d-tuple of nonnegative integers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Self {
        MultiIndex(components)
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// The unit index `e_i` in dimension `d`.
    pub fn unit(d: usize, i: usize) -> Self {
        let mut v = vec![0; d];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|α| = Σ αᵢ`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `α! = Π αᵢ!`, exact for `|α| ≤ 20`.
    pub fn factorial(&self) -> Result<u64> {
        if self.order() > MAX_ORDER {
            return Err(invalid(format!(
                "multi-index order {} exceeds factorial guard {MAX_ORDER}",
                self.order()
            )));
        }
        Ok(self.0.iter().map(|&a| (1..=a as u64).product::<u64>()).product())
    }

    /// `α!` as a float; panics past the guard (internal use on validated indices).
    pub fn factorial_f64(&self) -> f64 {
        self.factorial().expect("multi-index order within guard") as f64
    }

    /// `xᵅ`.
    pub fn pow<S: Scalar>(&self, x: &[S]) -> S {
        let mut acc = S::one();
        for (xi, &a) in x.iter().zip(&self.0) {
            for _ in 0..a {
                acc *= *xi;
            }
        }
        acc
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other` when componentwise nonnegative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Coordinates repeated by multiplicity, e.g. (2,0,1) → [0,0,2].
    pub fn expand(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &a)| std::iter::repeat_n(i, a as usize))
            .collect()
    }

    /// All indices of dimension `d` with `|α| ≤ n`, graded then lexicographically descending.
    pub fn all_up_to(d: usize, n: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for k in 0..=n {
            out.extend(Self::all_of_order(d, k));
        }
        out
    }

    /// All indices of dimension `d` with `|α| = k`.
    pub fn all_of_order(d: usize, k: u32) -> Vec<MultiIndex> {
        fn rec(d: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == d {
                prefix.push(k);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for a in (0..=k).rev() {
                prefix.push(a);
                rec(d, k - a, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if d == 0 {
            if k == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        rec(d, k, &mut Vec::with_capacity(d), &mut out);
        out
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Binomial coefficient as f64 (small arguments).
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
