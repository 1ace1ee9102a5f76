//! Moment sequences of rank `r` on abelian monoids, independent of any
//! function space:
//!
//! ```text
//! f_α(x·y) = Σ_{β≤α} binom(α,β) · f_β(x) · f_{α−β}(y)
//! ```
//!
//! Carriers are `(ℝ, +)` and `(ℕ^d, +)`. For `r = 1` this is the moment
//! function recurrence `φ_k(x·y) = Σ_j binom(k,j) φ_j(x) φ_{k−j}(y)`.

use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::{binomial, enumerate_height_at_most, MultiIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "carrier", rename_all = "snake_case")]
pub enum Monoid {
    /// `(ℝ, +)`.
    Reals,
    /// `(ℕ^d, +)`.
    Lattice { d: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Element {
    Real(f64),
    Lattice(Vec<u32>),
}

impl Monoid {
    pub fn neutral(&self) -> Element {
        match self {
            Monoid::Reals => Element::Real(0.0),
            Monoid::Lattice { d } => Element::Lattice(vec![0; *d]),
        }
    }

    pub fn contains(&self, x: &Element) -> bool {
        match (self, x) {
            (Monoid::Reals, Element::Real(v)) => v.is_finite(),
            (Monoid::Lattice { d }, Element::Lattice(v)) => v.len() == *d,
            _ => false,
        }
    }

    pub fn op(&self, x: &Element, y: &Element) -> Result<Element> {
        match (self, x, y) {
            (Monoid::Reals, Element::Real(a), Element::Real(b)) => Ok(Element::Real(a + b)),
            (Monoid::Lattice { d }, Element::Lattice(a), Element::Lattice(b)) if a.len() == *d && b.len() == *d => {
                Ok(Element::Lattice(a.iter().zip(b).map(|(p, q)| p + q).collect()))
            }
            _ => Err(Error::InvalidDomain(format!(
                "{x:?} and {y:?} are not elements of {self:?}"
            ))),
        }
    }

    /// Draws an element; reals from `[-2, 2]`, lattice coordinates from `0..=3`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Element {
        match self {
            Monoid::Reals => Element::Real(rng.gen_range(-2.0..=2.0)),
            Monoid::Lattice { d } => Element::Lattice((0..*d).map(|_| rng.gen_range(0..=3)).collect()),
        }
    }

    pub fn probes<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<(Element, Element)> {
        let mut out = vec![(self.neutral(), self.sample(rng))];
        while out.len() < count {
            out.push((self.sample(rng), self.sample(rng)));
        }
        out.truncate(count);
        out
    }

    /// Associativity, commutativity and the neutral element on every triple
    /// drawn from the probe elements.
    pub fn check_laws(&self, elements: &[Element], tol: f64) -> Result<()> {
        let same = |a: &Element, b: &Element| match (a, b) {
            (Element::Real(p), Element::Real(q)) => (p - q).abs() <= tol * (1.0 + p.abs().max(q.abs())),
            _ => a == b,
        };
        let e = self.neutral();
        for x in elements {
            if !self.contains(x) {
                return Err(Error::InvalidDomain(format!("{x:?} is not an element of {self:?}")));
            }
            if !same(&self.op(x, &e)?, x) || !same(&self.op(&e, x)?, x) {
                return Err(Error::InvalidDomain(format!("neutral element fails at {x:?}")));
            }
            for y in elements {
                if !same(&self.op(x, y)?, &self.op(y, x)?) {
                    return Err(Error::InvalidDomain(format!("not commutative at {x:?}, {y:?}")));
                }
                for z in elements {
                    if !same(&self.op(&self.op(x, y)?, z)?, &self.op(x, &self.op(y, z)?)?) {
                        return Err(Error::InvalidDomain(format!("not associative at {x:?}, {y:?}, {z:?}")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A family `f_α : carrier → ℝ`, `|α| ≤ N`.
pub trait SequenceFunctions: Sync {
    fn monoid(&self) -> Monoid;
    fn rank(&self) -> usize;
    fn order(&self) -> u32;
    fn value(&self, alpha: &MultiIndex, x: &Element) -> Result<f64>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeqKind {
    /// `f_α(x) = e^{⟨λ,x⟩} · Π_i ⟨c_i, x⟩^{α_i}`.
    Exponential { lambda: Vec<f64>, c: Vec<Vec<f64>> },
    /// Every `f_α ≡ 0`.
    Zero,
    /// `inner` with `f_alpha` multiplied by `factor`.
    Scaled {
        inner: Box<SeqKind>,
        alpha: MultiIndex,
        factor: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSeq {
    pub monoid: Monoid,
    pub r: usize,
    #[serde(rename = "N")]
    pub order: u32,
    #[serde(flatten)]
    pub kind: SeqKind,
}

fn coords(x: &Element) -> Vec<f64> {
    match x {
        Element::Real(v) => vec![*v],
        Element::Lattice(v) => v.iter().map(|&k| k as f64).collect(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn kind_value(kind: &SeqKind, alpha: &MultiIndex, x: &Element) -> f64 {
    match kind {
        SeqKind::Exponential { lambda, c } => {
            let x = coords(x);
            alpha
                .entries()
                .iter()
                .zip(c)
                .fold(dot(lambda, &x).exp(), |acc, (&k, ci)| acc * dot(ci, &x).powi(k as i32))
        }
        SeqKind::Zero => 0.0,
        SeqKind::Scaled {
            inner,
            alpha: a,
            factor,
        } => {
            let v = kind_value(inner, alpha, x);
            if a == alpha {
                v * factor
            } else {
                v
            }
        }
    }
}

/// `f_α(x) = e^{λx} · Π_i (c_i x)^{α_i}` on `(ℝ, +)`.
pub fn make_exponential_moment_seq(r: usize, order: u32, lambda: f64, c: &[f64]) -> Result<MomentSeq> {
    make_exponential_on(
        Monoid::Reals,
        order,
        vec![lambda],
        c.iter().map(|&ci| vec![ci]).collect(),
    )
    .and_then(|s| {
        if s.r != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: s.r,
            });
        }
        Ok(s)
    })
}

/// `f_α(x) = e^{⟨λ,x⟩} · Π_i ⟨c_i, x⟩^{α_i}` on any supported carrier; the
/// rank is the number of `c_i`.
pub fn make_exponential_on(monoid: Monoid, order: u32, lambda: Vec<f64>, c: Vec<Vec<f64>>) -> Result<MomentSeq> {
    let d = match monoid {
        Monoid::Reals => 1,
        Monoid::Lattice { d } => d,
    };
    if c.is_empty() {
        return Err(Error::EmptyIndex);
    }
    for v in std::iter::once(&lambda).chain(&c) {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
        if let Some(bad) = v.iter().find(|t| !t.is_finite()) {
            return Err(Error::NonFinite {
                path: "parameters".into(),
                value: *bad,
            });
        }
    }
    Ok(MomentSeq {
        monoid,
        r: c.len(),
        order,
        kind: SeqKind::Exponential { lambda, c },
    })
}

pub fn make_zero_seq(monoid: Monoid, r: usize, order: u32) -> MomentSeq {
    MomentSeq {
        monoid,
        r,
        order,
        kind: SeqKind::Zero,
    }
}

impl MomentSeq {
    /// The same sequence with `f_alpha` multiplied by `factor`.
    pub fn tampered(&self, alpha: MultiIndex, factor: f64) -> MomentSeq {
        MomentSeq {
            kind: SeqKind::Scaled {
                inner: Box::new(self.kind.clone()),
                alpha,
                factor,
            },
            ..self.clone()
        }
    }
}

impl SequenceFunctions for MomentSeq {
    fn monoid(&self) -> Monoid {
        self.monoid
    }

    fn rank(&self) -> usize {
        self.r
    }

    fn order(&self) -> u32 {
        self.order
    }

    fn value(&self, alpha: &MultiIndex, x: &Element) -> Result<f64> {
        if alpha.dim() != self.r {
            return Err(Error::DimensionMismatch {
                expected: self.r,
                found: alpha.dim(),
            });
        }
        if alpha.height() > self.order {
            return Err(Error::IndexOutOfRange {
                alpha: alpha.clone(),
                order: self.order,
            });
        }
        if !self.monoid.contains(x) {
            return Err(Error::InvalidDomain(format!(
                "{x:?} is not an element of {:?}",
                self.monoid
            )));
        }
        Ok(kind_value(&self.kind, alpha, x))
    }
}

/// The summands `binom(α,β) · f_β(x) · f_{α−β}(y)` of the right-hand side,
/// with `β` in lexicographic order.
pub fn identity_terms<S: SequenceFunctions + ?Sized>(
    seq: &S,
    alpha: &MultiIndex,
    x: &Element,
    y: &Element,
) -> Result<Vec<f64>> {
    alpha
        .enumerate_below()
        .iter()
        .map(|b| {
            let w = alpha.binom(b)?.to_f64().unwrap_or(f64::INFINITY);
            Ok(w * seq.value(b, x)? * seq.value(&alpha.sub(b)?, y)?)
        })
        .collect()
}

/// The summands `binom(k,j) · φ_j(x) · φ_{k−j}(y)`, `j = 0..=k`, of the
/// rank-one moment function recurrence.
pub fn moment_function_terms<P>(phi: P, k: u32, x: &Element, y: &Element) -> Result<Vec<f64>>
where
    P: Fn(u32, &Element) -> Result<f64>,
{
    (0..=k)
        .map(|j| {
            let w = binomial(k, j).to_f64().unwrap_or(f64::INFINITY);
            Ok(w * phi(j, x)? * phi(k - j, y)?)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeqWitness {
    pub alpha: MultiIndex,
    pub x: Element,
    pub y: Element,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaMax {
    pub alpha: MultiIndex,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeqReport {
    pub probe_count: usize,
    pub tolerance: f64,
    /// `f_0` vanished at every probe point, so every `f_α` was required to.
    pub generator_zero: bool,
    pub per_alpha: Vec<AlphaMax>,
    pub max_residual: f64,
    pub pass: bool,
    pub failures: Vec<SeqWitness>,
}

const MAX_WITNESSES: usize = 16;

/// Checks the moment identity for all `|α| ≤ N` on all probe pairs, with
/// relative residual `|L − R| / (1 + max(|L|, Σ|terms|)) ≤ tol`. The `α = 0`
/// row is the multiplicativity of `f_0`. When `f_0` vanishes at every probe
/// point, every other `f_α` must vanish there too.
pub fn verify_moment_seq<S: SequenceFunctions + ?Sized>(
    seq: &S,
    probes: &[(Element, Element)],
    tol: f64,
) -> Result<SeqReport> {
    let monoid = seq.monoid();
    let indices = enumerate_height_at_most(seq.rank(), seq.order());
    let zero = MultiIndex::zero(seq.rank());

    let rows: Vec<(Vec<f64>, Vec<SeqWitness>, bool)> = probes
        .par_iter()
        .map(|(x, y)| {
            let xy = monoid.op(x, y)?;
            let mut resid = vec![0.0; indices.len()];
            let mut wit = Vec::new();
            for (i, alpha) in indices.iter().enumerate() {
                let lhs = seq.value(alpha, &xy)?;
                let terms = identity_terms(seq, alpha, x, y)?;
                let rhs: f64 = terms.iter().sum();
                let scale = terms.iter().map(|t| t.abs()).sum::<f64>().max(lhs.abs());
                let r = (lhs - rhs).abs() / (1.0 + scale);
                resid[i] = r;
                if !(r <= tol) {
                    wit.push(SeqWitness {
                        alpha: alpha.clone(),
                        x: x.clone(),
                        y: y.clone(),
                        lhs,
                        rhs,
                        residual: r,
                        reason: "moment identity residual above tolerance".into(),
                    });
                }
            }
            let mut f0_zero = true;
            for p in [x, y, &xy] {
                f0_zero &= seq.value(&zero, p)? == 0.0;
            }
            Ok((resid, wit, f0_zero))
        })
        .collect::<Result<_>>()?;

    let generator_zero = !rows.is_empty() && rows.iter().all(|r| r.2);
    let mut per_alpha = vec![0.0f64; indices.len()];
    let mut failures = Vec::new();
    let mut failed = false;
    for (resid, wit, _) in &rows {
        for (acc, v) in per_alpha.iter_mut().zip(resid) {
            *acc = acc.max(*v);
        }
        failed |= !wit.is_empty();
        failures.extend(wit.iter().take(MAX_WITNESSES.saturating_sub(failures.len())).cloned());
    }
    if generator_zero {
        for (x, y) in probes {
            for p in [x.clone(), y.clone(), monoid.op(x, y)?] {
                for alpha in indices.iter().filter(|a| !a.is_zero()) {
                    let v = seq.value(alpha, &p)?;
                    if v != 0.0 {
                        failed = true;
                        if failures.len() < MAX_WITNESSES {
                            failures.push(SeqWitness {
                                alpha: alpha.clone(),
                                x: x.clone(),
                                y: y.clone(),
                                lhs: v,
                                rhs: 0.0,
                                residual: v.abs(),
                                reason: format!("f_0 vanishes on the probes but f_alpha is nonzero at {p:?}"),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(SeqReport {
        probe_count: probes.len(),
        tolerance: tol,
        generator_zero,
        max_residual: per_alpha.iter().cloned().fold(0.0, f64::max),
        per_alpha: indices
            .into_iter()
            .zip(per_alpha)
            .map(|(alpha, max_residual)| AlphaMax { alpha, max_residual })
            .collect(),
        pass: !failed,
        failures,
    })
}

/// True iff `f0(x·y) = f0(x)·f0(y)` within `tol` (relative) on every probe
/// and `f0` is not identically zero on the probe points.
pub fn check_exponential<F>(monoid: Monoid, f0: F, probes: &[(Element, Element)], tol: f64) -> Result<bool>
where
    F: Fn(&Element) -> f64,
{
    let mut nonzero = false;
    for (x, y) in probes {
        let (a, b, c) = (f0(x), f0(y), f0(&monoid.op(x, y)?));
        nonzero |= a != 0.0 || b != 0.0 || c != 0.0;
        let rhs = a * b;
        if !((c - rhs).abs() <= tol * (1.0 + c.abs().max(rhs.abs()))) {
            return Ok(false);
        }
    }
    Ok(nonzero)
}
