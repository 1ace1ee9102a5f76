//! Exact multivariate polynomials over ℚ and symbolic `D^α`.
//!
//! Polynomials are kept in canonical form (no stored zero coefficients), so
//! structural equality is polynomial equality. This is what lets
//! [`check_leibniz`] compare both sides of the generalized Leibniz rule with
//! no tolerance.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::rational;

#[derive(Clone, PartialEq, Eq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, BigRational>,
}

/// A point of ℚʳ.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RationalPoint(#[serde(with = "rational::vec_as_strings")] pub Vec<BigRational>);

impl RationalPoint {
    pub fn new(coords: Vec<BigRational>) -> Self {
        RationalPoint(coords)
    }

    pub fn from_ratios(coords: &[(i64, i64)]) -> Self {
        RationalPoint(coords.iter().map(|&(p, q)| rational::ratio(p, q)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rational::to_f64).collect()
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "polynomial dimension must be positive");
        Polynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        Self::monomial(MultiIndex::zero(dim), c)
    }

    pub fn from_int(dim: usize, c: i64) -> Self {
        Self::constant(dim, rational::from_int(c))
    }

    /// The coordinate function `xᵢ` (0-based `i`).
    pub fn var(dim: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(dim, i), BigRational::one())
    }

    pub fn monomial(exponent: MultiIndex, coeff: BigRational) -> Self {
        let mut p = Self::zero(exponent.dim());
        if !coeff.is_zero() {
            p.terms.insert(exponent, coeff);
        }
        p
    }

    /// Builds a polynomial from `(exponent, coefficient)` pairs, summing
    /// repeated exponents and dropping zeros.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, BigRational)>,
    {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            check_dim(dim, e.dim())?;
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: MultiIndex, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::height).max()
    }

    /// The constant value if this polynomial has no non-constant terms.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.is_zero().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        if s.is_zero() {
            return Self::zero(self.dim);
        }
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut acc: BTreeMap<MultiIndex, BigRational> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.add(eb).expect("dimensions checked");
                *acc.entry(e).or_insert_with(BigRational::zero) += ca * cb;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(Polynomial {
            dim: self.dim,
            terms: acc,
        })
    }

    /// `D^α f`, the exact α-fold mixed partial derivative.
    pub fn dalpha(&self, alpha: &MultiIndex) -> Result<Self> {
        check_dim(self.dim, alpha.dim())?;
        if alpha.is_zero() {
            return Ok(self.clone());
        }
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if !alpha.leq(e)? {
                continue;
            }
            let factor: BigUint = e
                .entries()
                .iter()
                .zip(alpha.entries())
                .map(|(&n, &k)| falling_factorial(n, k))
                .product();
            let coeff = c * BigRational::from_integer(BigInt::from(factor));
            out.terms.insert(e.sub(alpha)?, coeff);
        }
        Ok(out)
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, x: &RationalPoint) -> Result<BigRational> {
        check_dim(self.dim, x.dim())?;
        let mut max_exp = vec![0u32; self.dim];
        for e in self.terms.keys() {
            for (m, &a) in max_exp.iter_mut().zip(e.entries()) {
                *m = (*m).max(a);
            }
        }
        // powers[i][k] = x_i^k
        let powers: Vec<Vec<BigRational>> = x
            .coords()
            .iter()
            .zip(&max_exp)
            .map(|(xi, &m)| {
                let mut row = Vec::with_capacity(m as usize + 1);
                row.push(BigRational::one());
                for k in 1..=m as usize {
                    let next = &row[k - 1] * xi;
                    row.push(next);
                }
                row
            })
            .collect();
        let mut total = BigRational::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, &a) in e.entries().iter().enumerate() {
                if a > 0 {
                    term *= &powers[i][a as usize];
                }
            }
            total += term;
        }
        Ok(total)
    }

    pub fn eval_f64(&self, x: &RationalPoint) -> Result<f64> {
        Ok(rational::to_f64(&self.eval(x)?))
    }

    /// Composition `f(τ₁(x), …, τ_r(x))` with polynomial coordinate maps.
    pub fn compose(&self, components: &[Polynomial]) -> Result<Self> {
        check_dim(self.dim, components.len())?;
        let out_dim = components.first().map(|c| c.dim).unwrap_or(self.dim);
        for c in components {
            check_dim(out_dim, c.dim)?;
        }
        let mut out = Self::zero(out_dim);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(out_dim, c.clone());
            for (comp, &a) in components.iter().zip(e.entries()) {
                for _ in 0..a {
                    term = term.checked_mul(comp)?;
                }
            }
            out = out.checked_add(&term)?;
        }
        Ok(out)
    }

    /// A random polynomial of total degree at most `max_degree` with up to
    /// `max_terms` monomials and coefficients `p/q`, `|p| ≤ 9`, `1 ≤ q ≤ 3`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_degree: u32, max_terms: usize) -> Self {
        let n_terms = rng.gen_range(1..=max_terms.max(1));
        let mut p = Self::zero(dim);
        for _ in 0..n_terms {
            let total = rng.gen_range(0..=max_degree);
            let mut e = vec![0u32; dim];
            for _ in 0..total {
                e[rng.gen_range(0..dim)] += 1;
            }
            let num = rng.gen_range(-9i64..=9);
            let den = rng.gen_range(1i64..=3);
            p.add_term(MultiIndex::new(e).unwrap(), rational::ratio(num, den));
        }
        p
    }
}

fn falling_factorial(n: u32, k: u32) -> BigUint {
    ((n - k + 1)..=n).fold(BigUint::one(), |acc, v| acc * v)
}

/// `Σ_{β≤α} binom(α,β) · D^β f · D^{α−β} g`.
pub fn leibniz_rhs(f: &Polynomial, g: &Polynomial, alpha: &MultiIndex) -> Result<Polynomial> {
    leibniz_rhs_with(f, g, alpha, |_, c| c)
}

/// [`leibniz_rhs`] with a hook that may rewrite each binomial weight. Used to
/// build deliberately wrong right-hand sides when testing the checker.
pub fn leibniz_rhs_with<W>(f: &Polynomial, g: &Polynomial, alpha: &MultiIndex, weight: W) -> Result<Polynomial>
where
    W: Fn(&MultiIndex, BigUint) -> BigUint,
{
    check_dim(f.dim, g.dim)?;
    check_dim(f.dim, alpha.dim())?;
    let mut acc = Polynomial::zero(f.dim);
    for beta in alpha.enumerate_below() {
        let w = weight(&beta, alpha.binom(&beta)?);
        if w.is_zero() {
            continue;
        }
        let df = f.dalpha(&beta)?;
        if df.is_zero() {
            continue;
        }
        let dg = g.dalpha(&alpha.sub(&beta)?)?;
        if dg.is_zero() {
            continue;
        }
        let term = df.checked_mul(&dg)?.scale(&BigRational::from_integer(BigInt::from(w)));
        acc = acc.checked_add(&term)?;
    }
    Ok(acc)
}

/// Exact check of `D^α(f·g) = Σ_{β≤α} binom(α,β) D^β f · D^{α−β} g`.
pub fn check_leibniz(f: &Polynomial, g: &Polynomial, alpha: &MultiIndex) -> Result<bool> {
    let lhs = f.checked_mul(g)?.dalpha(alpha)?;
    Ok(lhs == leibniz_rhs(f, g, alpha)?)
}

impl Add for &Polynomial {
    type Output = Polynomial;

    /// # Panics
    /// On dimension mismatch; use [`Polynomial::checked_add`] otherwise.
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial dimension mismatch")
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial dimension mismatch")
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        self.scale(&-BigRational::one())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().rev().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, &a) in e.entries().iter().enumerate() {
                match a {
                    0 => {}
                    1 => write!(f, "*x{}", i + 1)?,
                    _ => write!(f, "*x{}^{}", i + 1, a)?,
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial[r={}]({})", self.dim, self)
    }
}

#[derive(Serialize, Deserialize)]
struct TermWire {
    exponent: MultiIndex,
    #[serde(with = "rational::as_string")]
    coeff: BigRational,
}

// The zero polynomial is written as a single zero-coefficient constant term
// so the wire form always carries the dimension.
impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let wire: Vec<TermWire> = if self.terms.is_empty() {
            vec![TermWire {
                exponent: MultiIndex::zero(self.dim),
                coeff: BigRational::zero(),
            }]
        } else {
            self.terms
                .iter()
                .map(|(e, c)| TermWire {
                    exponent: e.clone(),
                    coeff: c.clone(),
                })
                .collect()
        };
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = Vec::<TermWire>::deserialize(d)?;
        let dim = wire
            .first()
            .map(|t| t.exponent.dim())
            .ok_or_else(|| serde::de::Error::custom("polynomial needs at least one term to fix its dimension"))?;
        Polynomial::from_terms(dim, wire.into_iter().map(|t| (t.exponent, t.coeff))).map_err(serde::de::Error::custom)
    }
}
