//! Multi-indices: elements of ℕʳ with componentwise arithmetic and order.
//!
//! A [`MultiIndex`] carries its dimension `r`; every binary operation checks
//! that both operands share it. Binomial coefficients and factorials are
//! arbitrary-precision integers.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of ℕʳ, `r ≥ 1`. Serializes as a JSON array of integers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyIndex);
        }
        Ok(MultiIndex(entries))
    }

    /// The zero index of dimension `r`.
    ///
    /// # Panics
    /// If `r == 0`.
    pub fn zero(r: usize) -> Self {
        assert!(r >= 1, "multi-index dimension must be positive");
        MultiIndex(vec![0; r])
    }

    /// The `i`-th unit index `e_i` of dimension `r`.
    pub fn unit(r: usize, i: usize) -> Self {
        let mut m = Self::zero(r);
        m.0[i] = 1;
        m
    }

    /// Rank-one index `(k)`.
    pub fn scalar(k: u32) -> Self {
        MultiIndex(vec![k])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `|α| = Σ αᵢ`.
    pub fn height(&self) -> u32 {
        self.0.iter().sum()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// `self − other`, defined only when `other ≤ self`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if !other.leq(self)? {
            return Err(Error::NotBelow {
                lower: other.clone(),
                upper: self.clone(),
            });
        }
        Ok(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// Componentwise `self ≤ other`.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| a <= b))
    }

    /// `self ⪇ other`: below and distinct.
    pub fn strictly_below(&self, other: &Self) -> Result<bool> {
        Ok(self.leq(other)? && self != other)
    }

    /// `α! = α₁!⋯α_r!`.
    pub fn factorial(&self) -> BigUint {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// `binom(α, β) = Π binom(αᵢ, βᵢ)`; requires `β ≤ α`.
    pub fn binom(&self, beta: &Self) -> Result<BigUint> {
        if !beta.leq(self)? {
            return Err(Error::NotBelow {
                lower: beta.clone(),
                upper: self.clone(),
            });
        }
        Ok(self.0.iter().zip(&beta.0).map(|(&n, &k)| binomial(n, k)).product())
    }

    /// All `β ≤ self`, each exactly once, in lexicographic order.
    pub fn enumerate_below(&self) -> Vec<MultiIndex> {
        let count: usize = self.0.iter().map(|&a| a as usize + 1).product();
        let mut out = Vec::with_capacity(count);
        let mut cur = vec![0u32; self.dim()];
        loop {
            out.push(MultiIndex(cur.clone()));
            // odometer, last coordinate fastest
            let mut i = self.dim();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if cur[i] < self.0[i] {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
            }
        }
    }
}

/// All `α ∈ ℕʳ` with `|α| ≤ max_height`, in lexicographic order.
/// There are `C(max_height + r, r)` of them.
pub fn enumerate_height_at_most(r: usize, max_height: u32) -> Vec<MultiIndex> {
    assert!(r >= 1, "multi-index dimension must be positive");
    let mut out = Vec::new();
    let mut cur = vec![0u32; r];
    fill(&mut cur, 0, max_height, &mut out);
    out
}

fn fill(cur: &mut Vec<u32>, pos: usize, budget: u32, out: &mut Vec<MultiIndex>) {
    if pos == cur.len() {
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in 0..=budget {
        cur[pos] = v;
        fill(cur, pos + 1, budget - v, out);
    }
    cur[pos] = 0;
}

/// All nonzero `α` with `|α| ≤ max_height`.
pub fn enumerate_nonzero(r: usize, max_height: u32) -> Vec<MultiIndex> {
    enumerate_height_at_most(r, max_height)
        .into_iter()
        .filter(|a| !a.is_zero())
        .collect()
}

pub fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// Scalar binomial by the multiplicative formula; `0` when `k > n`.
pub fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        // exact at every step: acc = C(n, i+1) after the division
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

impl TryFrom<Vec<u32>> for MultiIndex {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        MultiIndex::new(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.0
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

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
