//! Pointwise function model on a sampled box `Ω ⊂ ℝʳ`.
//!
//! Expressions ([`FuncExpr`]) are built from exact polynomial leaves and a
//! handful of combinators. Derivative-bearing nodes hold a polynomial
//! directly, so their derivatives stay exact; only transcendental nodes
//! (`f·ln|f|`, powers) drop to `f64`.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::polycalc::{Polynomial, RationalPoint};
use crate::rational;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const MIN_SAMPLES: usize = 8;

/// Open interval `(lo, hi)` with rational endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "rational::as_string")]
    pub lo: BigRational,
    #[serde(with = "rational::as_string")]
    pub hi: BigRational,
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo >= hi {
            return Err(Error::InvalidDomain(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn unit() -> Self {
        Interval {
            lo: BigRational::zero(),
            hi: BigRational::one(),
        }
    }

    pub fn contains(&self, t: &BigRational) -> bool {
        &self.lo < t && t < &self.hi
    }
}

/// An open box with a finite set of interior sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainWire")]
pub struct Domain {
    intervals: Vec<Interval>,
    samples: Vec<RationalPoint>,
    tolerance: f64,
}

#[derive(Deserialize)]
struct DomainWire {
    intervals: Vec<Interval>,
    samples: Vec<RationalPoint>,
    tolerance: f64,
}

impl TryFrom<DomainWire> for Domain {
    type Error = Error;

    fn try_from(w: DomainWire) -> Result<Self> {
        Domain::new(w.intervals, w.samples, w.tolerance)
    }
}

impl Domain {
    pub fn new(intervals: Vec<Interval>, samples: Vec<RationalPoint>, tolerance: f64) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        if samples.len() < MIN_SAMPLES {
            return Err(Error::InvalidDomain(format!(
                "need at least {MIN_SAMPLES} sample points, got {}",
                samples.len()
            )));
        }
        for iv in &intervals {
            if iv.lo >= iv.hi {
                return Err(Error::InvalidDomain(format!("empty interval ({}, {})", iv.lo, iv.hi)));
            }
        }
        let d = Domain {
            intervals,
            samples,
            tolerance,
        };
        for s in &d.samples {
            if !d.contains(s) {
                return Err(Error::OutsideDomain { point: s.to_string() });
            }
        }
        Ok(d)
    }

    /// `n` distinct random grid points `lo + (hi−lo)·k/256`, `0 < k < 256`,
    /// inside the given box.
    pub fn sampled<R: Rng + ?Sized>(intervals: Vec<Interval>, n: usize, tolerance: f64, rng: &mut R) -> Result<Self> {
        const GRID: i64 = 256;
        let mut samples: Vec<RationalPoint> = Vec::with_capacity(n);
        let mut attempts = 0;
        while samples.len() < n && attempts < 100 * n.max(1) {
            attempts += 1;
            let p = RationalPoint::new(
                intervals
                    .iter()
                    .map(|iv| {
                        let k = rng.gen_range(1..GRID);
                        &iv.lo + (&iv.hi - &iv.lo) * rational::ratio(k, GRID)
                    })
                    .collect(),
            );
            if !samples.contains(&p) {
                samples.push(p);
            }
        }
        Domain::new(intervals, samples, tolerance)
    }

    /// `(0,1)ʳ` with `n` random samples.
    pub fn unit_box<R: Rng + ?Sized>(r: usize, n: usize, rng: &mut R) -> Result<Self> {
        Self::sampled(vec![Interval::unit(); r], n, DEFAULT_TOLERANCE, rng)
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn samples(&self) -> &[RationalPoint] {
        &self.samples
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    /// Strict interior membership.
    pub fn contains(&self, x: &RationalPoint) -> bool {
        x.dim() == self.dim() && self.intervals.iter().zip(x.coords()).all(|(iv, t)| iv.contains(t))
    }
}

/// A polynomial coordinate map `τ = (τ₁, …, τ_r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordMap {
    pub components: Vec<Polynomial>,
}

impl CoordMap {
    pub fn new(components: Vec<Polynomial>) -> Result<Self> {
        let r = components.len();
        if r == 0 {
            return Err(Error::EmptyIndex);
        }
        for c in &components {
            if c.dim() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: c.dim(),
                });
            }
        }
        Ok(CoordMap { components })
    }

    pub fn identity(r: usize) -> Self {
        CoordMap {
            components: (0..r).map(|i| Polynomial::var(r, i)).collect(),
        }
    }

    /// `x ↦ A·x + b`.
    pub fn affine(matrix: &[Vec<BigRational>], offset: &[BigRational]) -> Result<Self> {
        let r = offset.len();
        if matrix.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: matrix.len(),
            });
        }
        let mut comps = Vec::with_capacity(r);
        for (row, b) in matrix.iter().zip(offset) {
            if row.len() != r {
                return Err(Error::DimensionMismatch {
                    expected: r,
                    found: row.len(),
                });
            }
            let mut terms = vec![(MultiIndex::zero(r), b.clone())];
            terms.extend(row.iter().enumerate().map(|(j, a)| (MultiIndex::unit(r, j), a.clone())));
            comps.push(Polynomial::from_terms(r, terms)?);
        }
        Ok(CoordMap { components: comps })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn apply(&self, x: &RationalPoint) -> Result<RationalPoint> {
        Ok(RationalPoint::new(
            self.components.iter().map(|c| c.eval(x)).collect::<Result<_>>()?,
        ))
    }

    /// `(self ∘ inner)(x) = self(inner(x))`, composed symbolically.
    pub fn after(&self, inner: &CoordMap) -> Result<CoordMap> {
        CoordMap::new(
            self.components
                .iter()
                .map(|c| c.compose(&inner.components))
                .collect::<Result<_>>()?,
        )
    }

    /// Checks that every sample is mapped strictly inside the box.
    pub fn validate_on(&self, domain: &Domain) -> Result<()> {
        if self.dim() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: self.dim(),
            });
        }
        for s in domain.samples() {
            let y = self.apply(s)?;
            if !domain.contains(&y) {
                return Err(Error::OutsideDomain {
                    point: format!("tau{s} = {y}"),
                });
            }
        }
        Ok(())
    }
}

/// Pointwise function expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum FuncExpr {
    Poly {
        poly: Polynomial,
    },
    Sum {
        terms: Vec<FuncExpr>,
    },
    Product {
        factors: Vec<FuncExpr>,
    },
    Scale {
        #[serde(with = "rational::as_string")]
        factor: BigRational,
        expr: Box<FuncExpr>,
    },
    /// `u ↦ u·ln|u|`, extended by `0` where `u = 0`.
    #[serde(rename = "xlogabs")]
    XLogAbs {
        expr: Box<FuncExpr>,
    },
    /// `⟨∇f(x), b(x)⟩`.
    GradDot {
        poly: Polynomial,
        field: Vec<FuncExpr>,
    },
    /// `⟨∇²f(x)·c(x), c(x)⟩`.
    HessQuad {
        poly: Polynomial,
        field: Vec<FuncExpr>,
    },
    /// `x ↦ expr(τ(x))`.
    Pullback {
        map: CoordMap,
        expr: Box<FuncExpr>,
    },
}

impl FuncExpr {
    pub fn poly(p: Polynomial) -> Self {
        FuncExpr::Poly { poly: p }
    }

    pub fn constant(dim: usize, c: BigRational) -> Self {
        FuncExpr::poly(Polynomial::constant(dim, c))
    }

    pub fn zero(dim: usize) -> Self {
        FuncExpr::poly(Polynomial::zero(dim))
    }

    pub fn product(factors: Vec<FuncExpr>) -> Self {
        FuncExpr::Product { factors }
    }

    pub fn sum(terms: Vec<FuncExpr>) -> Self {
        FuncExpr::Sum { terms }
    }

    pub fn scale(factor: BigRational, e: FuncExpr) -> Self {
        FuncExpr::Scale {
            factor,
            expr: Box::new(e),
        }
    }

    pub fn xlogabs(e: FuncExpr) -> Self {
        FuncExpr::XLogAbs { expr: Box::new(e) }
    }

    pub fn pullback(map: CoordMap, e: FuncExpr) -> Self {
        FuncExpr::Pullback { map, expr: Box::new(e) }
    }

    /// Structural zero test: zero leaves, zero scales, products with a zero
    /// factor, sums of zeros.
    pub fn is_identically_zero(&self) -> bool {
        match self {
            FuncExpr::Poly { poly } => poly.is_zero(),
            FuncExpr::Sum { terms } => terms.iter().all(FuncExpr::is_identically_zero),
            FuncExpr::Product { factors } => factors.iter().any(FuncExpr::is_identically_zero),
            FuncExpr::Scale { factor, expr } => factor.is_zero() || expr.is_identically_zero(),
            FuncExpr::XLogAbs { expr } | FuncExpr::Pullback { expr, .. } => expr.is_identically_zero(),
            FuncExpr::GradDot { poly, field } | FuncExpr::HessQuad { poly, field } => {
                poly.degree().is_none_or(|d| d == 0) || field.iter().all(FuncExpr::is_identically_zero)
            }
        }
    }

    /// True when the tree has no transcendental node, so
    /// [`eval_exact`](Self::eval_exact) succeeds everywhere.
    pub fn is_rational(&self) -> bool {
        match self {
            FuncExpr::Poly { .. } => true,
            FuncExpr::Sum { terms } => terms.iter().all(FuncExpr::is_rational),
            FuncExpr::Product { factors } => factors.iter().all(FuncExpr::is_rational),
            FuncExpr::Scale { expr, .. } | FuncExpr::Pullback { expr, .. } => expr.is_rational(),
            FuncExpr::XLogAbs { .. } => false,
            FuncExpr::GradDot { field, .. } | FuncExpr::HessQuad { field, .. } => {
                field.iter().all(FuncExpr::is_rational)
            }
        }
    }

    fn node_name(&self) -> &'static str {
        match self {
            FuncExpr::Poly { .. } => "poly",
            FuncExpr::Sum { .. } => "sum",
            FuncExpr::Product { .. } => "product",
            FuncExpr::Scale { .. } => "scale",
            FuncExpr::XLogAbs { .. } => "xlogabs",
            FuncExpr::GradDot { .. } => "grad_dot",
            FuncExpr::HessQuad { .. } => "hess_quad",
            FuncExpr::Pullback { .. } => "pullback",
        }
    }

    /// Floating-point evaluation. Non-finite values are reported with the
    /// path of the node that produced them, e.g. `product/1/xlogabs/poly`.
    pub fn eval(&self, x: &RationalPoint) -> Result<f64> {
        let v = self.eval_inner(x).map_err(|e| prefix(e, self.node_name()))?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                path: self.node_name().to_string(),
                value: v,
            });
        }
        Ok(v)
    }

    fn eval_inner(&self, x: &RationalPoint) -> Result<f64> {
        let child = |i: usize, e: &FuncExpr| e.eval(x).map_err(|err| prefix(err, &i.to_string()));
        Ok(match self {
            FuncExpr::Poly { poly } => poly.eval_f64(x)?,
            FuncExpr::Sum { terms } => {
                let mut acc = 0.0;
                for (i, t) in terms.iter().enumerate() {
                    acc += child(i, t)?;
                }
                acc
            }
            FuncExpr::Product { factors } => {
                let mut acc = 1.0;
                for (i, t) in factors.iter().enumerate() {
                    acc *= child(i, t)?;
                }
                acc
            }
            FuncExpr::Scale { factor, expr } => rational::to_f64(factor) * expr.eval(x)?,
            FuncExpr::XLogAbs { expr } => xlogabs(expr.eval(x)?),
            FuncExpr::GradDot { poly, field } => {
                check_field(poly, field)?;
                let mut acc = 0.0;
                for (i, b) in field.iter().enumerate() {
                    let d = poly.dalpha(&MultiIndex::unit(poly.dim(), i))?;
                    if d.is_zero() {
                        continue;
                    }
                    acc += d.eval_f64(x)? * child(i, b)?;
                }
                acc
            }
            FuncExpr::HessQuad { poly, field } => {
                check_field(poly, field)?;
                let c: Vec<f64> = field
                    .iter()
                    .enumerate()
                    .map(|(i, e)| child(i, e))
                    .collect::<Result<_>>()?;
                let r = poly.dim();
                let mut acc = 0.0;
                for i in 0..r {
                    for j in 0..r {
                        let idx = MultiIndex::unit(r, i).add(&MultiIndex::unit(r, j))?;
                        let d = poly.dalpha(&idx)?;
                        if !d.is_zero() {
                            acc += d.eval_f64(x)? * c[i] * c[j];
                        }
                    }
                }
                acc
            }
            FuncExpr::Pullback { map, expr } => expr.eval(&map.apply(x)?)?,
        })
    }

    /// Exact rational evaluation; fails on transcendental nodes.
    pub fn eval_exact(&self, x: &RationalPoint) -> Result<BigRational> {
        Ok(match self {
            FuncExpr::Poly { poly } => poly.eval(x)?,
            FuncExpr::Sum { terms } => {
                let mut acc = BigRational::zero();
                for t in terms {
                    acc += t.eval_exact(x)?;
                }
                acc
            }
            FuncExpr::Product { factors } => {
                let mut acc = BigRational::one();
                for t in factors {
                    acc *= t.eval_exact(x)?;
                }
                acc
            }
            FuncExpr::Scale { factor, expr } => factor * expr.eval_exact(x)?,
            FuncExpr::XLogAbs { .. } => return Err(Error::NotExact("xlogabs".into())),
            FuncExpr::GradDot { poly, field } => {
                check_field(poly, field)?;
                let mut acc = BigRational::zero();
                for (i, b) in field.iter().enumerate() {
                    let d = poly.dalpha(&MultiIndex::unit(poly.dim(), i))?;
                    if !d.is_zero() {
                        acc += d.eval(x)? * b.eval_exact(x)?;
                    }
                }
                acc
            }
            FuncExpr::HessQuad { poly, field } => {
                check_field(poly, field)?;
                let c: Vec<BigRational> = field.iter().map(|e| e.eval_exact(x)).collect::<Result<_>>()?;
                let r = poly.dim();
                let mut acc = BigRational::zero();
                for i in 0..r {
                    for j in 0..r {
                        let idx = MultiIndex::unit(r, i).add(&MultiIndex::unit(r, j))?;
                        let d = poly.dalpha(&idx)?;
                        if !d.is_zero() {
                            acc += d.eval(x)? * &c[i] * &c[j];
                        }
                    }
                }
                acc
            }
            FuncExpr::Pullback { map, expr } => expr.eval_exact(&map.apply(x)?)?,
        })
    }
}

fn check_field(poly: &Polynomial, field: &[FuncExpr]) -> Result<()> {
    if field.len() != poly.dim() {
        return Err(Error::DimensionMismatch {
            expected: poly.dim(),
            found: field.len(),
        });
    }
    Ok(())
}

fn prefix(err: Error, segment: &str) -> Error {
    match err {
        Error::NonFinite { path, value } => Error::NonFinite {
            path: format!("{segment}/{path}"),
            value,
        },
        other => other,
    }
}

/// `t·ln|t|` with its continuous extension `0` at `t = 0`.
pub fn xlogabs(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.abs().ln()
    }
}

/// A map `C(Ω) → C(Ω)` probed pointwise on polynomial inputs.
pub trait MultiplicativeMap {
    fn apply(&self, f: &Polynomial, x: &RationalPoint) -> Result<f64>;

    /// Exact value when the map stays inside ℚ; `None` otherwise.
    fn apply_exact(&self, _f: &Polynomial, _x: &RationalPoint) -> Result<Option<BigRational>> {
        Ok(None)
    }
}

/// `ℳ(f)(x) = |f(τ(x))|^{p(x)} · sgn(f(τ(x)))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSignMap {
    pub exponent: FuncExpr,
    pub tau: CoordMap,
}

impl PowerSignMap {
    /// Validates `p > 0` and `τ(x) ∈ Ω` at every sample.
    pub fn new(exponent: FuncExpr, tau: CoordMap, domain: &Domain) -> Result<Self> {
        tau.validate_on(domain)?;
        for s in domain.samples() {
            let p = exponent.eval(s)?;
            if p <= 0.0 {
                return Err(Error::InvalidDomain(format!("exponent p{s} = {p} is not positive")));
            }
        }
        Ok(PowerSignMap { exponent, tau })
    }
}

impl MultiplicativeMap for PowerSignMap {
    fn apply(&self, f: &Polynomial, x: &RationalPoint) -> Result<f64> {
        let v = f.eval(&self.tau.apply(x)?)?;
        if v.is_zero() {
            return Ok(0.0);
        }
        let p = self.exponent.eval(x)?;
        let mag = rational::to_f64(&v.abs()).powf(p);
        Ok(if v.is_negative() { -mag } else { mag })
    }

    /// Exact for constant positive integer exponents, where
    /// `|v|^p·sgn v = v^p` for odd `p` and `|v|^p·sgn v = |v|^{p-1}·v` generally.
    fn apply_exact(&self, f: &Polynomial, x: &RationalPoint) -> Result<Option<BigRational>> {
        let p = match &self.exponent {
            FuncExpr::Poly { poly } => match poly.as_constant() {
                Some(c) if c.is_integer() && c.is_positive() => c.to_integer(),
                _ => return Ok(None),
            },
            _ => return Ok(None),
        };
        let Some(p) = p.to_u32() else { return Ok(None) };
        let v = f.eval(&self.tau.apply(x)?)?;
        Ok(Some(num_traits::pow(v.abs(), (p - 1) as usize) * v))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeWitness {
    pub f: Polynomial,
    pub g: Polynomial,
    pub point: RationalPoint,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicativeReport {
    pub pass: bool,
    pub probe_count: usize,
    pub max_residual: f64,
    pub sign_preserving: bool,
    pub witness: Option<MultiplicativeWitness>,
}

impl fmt::Display for MultiplicativeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} probes, max residual {:e}, sign-preserving: {})",
            if self.pass { "pass" } else { "FAIL" },
            self.probe_count,
            self.max_residual,
            self.sign_preserving
        )
    }
}

/// Checks `|M(f·g)(x) − M(f)(x)·M(g)(x)| ≤ tol·(1 + |M(f·g)(x)|)` with
/// matching signs at every sample and probe. The constant `−1` is always
/// probed as well and must map to a negative function: plain
/// multiplicativity cannot tell `|f|^p` from `|f|^p·sgn f`.
pub fn check_multiplicative<M: MultiplicativeMap + ?Sized>(
    map: &M,
    probes: &[(Polynomial, Polynomial)],
    domain: &Domain,
) -> Result<MultiplicativeReport> {
    let r = domain.dim();
    let minus_one = Polynomial::from_int(r, -1);
    let mut all: Vec<(Polynomial, Polynomial)> = probes.to_vec();
    all.push((minus_one.clone(), minus_one.clone()));
    if let Some((f, _)) = probes.first() {
        all.push((minus_one.clone(), f.clone()));
    }

    let tol = domain.tolerance();
    let mut max_residual: f64 = 0.0;
    let mut witness = None;
    let mut sign_preserving = true;

    for x in domain.samples() {
        let m = map.apply(&minus_one, x)?;
        if !(m < 0.0) {
            sign_preserving = false;
            if witness.is_none() {
                witness = Some(MultiplicativeWitness {
                    f: minus_one.clone(),
                    g: Polynomial::from_int(r, 1),
                    point: x.clone(),
                    lhs: m,
                    rhs: -1.0,
                    residual: (m + 1.0).abs(),
                    reason: "sign not preserved: M(-1) is not negative".into(),
                });
            }
        }
    }

    for (f, g) in &all {
        let fg = f.checked_mul(g)?;
        for x in domain.samples() {
            if let (Some(l), Some(a), Some(b)) =
                (map.apply_exact(&fg, x)?, map.apply_exact(f, x)?, map.apply_exact(g, x)?)
            {
                let rhs = a * b;
                if l != rhs && witness.is_none() {
                    let (lhs, rhs) = (rational::to_f64(&l), rational::to_f64(&rhs));
                    let residual = (lhs - rhs).abs() / (1.0 + lhs.abs());
                    max_residual = max_residual.max(residual);
                    witness = Some(MultiplicativeWitness {
                        f: f.clone(),
                        g: g.clone(),
                        point: x.clone(),
                        lhs,
                        rhs,
                        residual,
                        reason: "exact values differ".into(),
                    });
                }
                continue;
            }
            let lhs = map.apply(&fg, x)?;
            let rhs = map.apply(f, x)? * map.apply(g, x)?;
            let residual = (lhs - rhs).abs() / (1.0 + lhs.abs());
            max_residual = max_residual.max(residual);
            let sign_ok = lhs.signum() == rhs.signum() || (lhs == 0.0 && rhs == 0.0);
            if (residual > tol || !sign_ok) && witness.is_none() {
                witness = Some(MultiplicativeWitness {
                    f: f.clone(),
                    g: g.clone(),
                    point: x.clone(),
                    lhs,
                    rhs,
                    residual,
                    reason: if sign_ok {
                        "residual above tolerance".into()
                    } else {
                        "sign mismatch".into()
                    },
                });
            }
        }
    }
    Ok(MultiplicativeReport {
        pass: witness.is_none(),
        probe_count: all.len(),
        max_residual,
        sign_preserving,
        witness,
    })
}

/// Probe pairs for identity checks. The fixed part covers the inputs the
/// characterization arguments hinge on: the zero function, constants
/// (including a negative one), coordinate monomials, and a function vanishing
/// at the first sample. Random pairs fill up to `count`.
pub fn standard_probes<R: Rng + ?Sized>(domain: &Domain, count: usize, rng: &mut R) -> Vec<(Polynomial, Polynomial)> {
    let r = domain.dim();
    let zero = Polynomial::zero(r);
    let two = Polynomial::from_int(r, 2);
    let minus_three = Polynomial::from_int(r, -3);
    let first = &domain.samples()[0];
    let vanishing = &Polynomial::var(r, 0) - &Polynomial::constant(r, first.coords()[0].clone());

    let mut out = vec![
        (zero.clone(), Polynomial::random(rng, r, 3, 4)),
        (two.clone(), minus_three.clone()),
        (vanishing.clone(), Polynomial::random(rng, r, 3, 4)),
        (vanishing.clone(), vanishing.clone()),
        (minus_three.clone(), vanishing),
    ];
    for i in 0..r {
        out.push((Polynomial::var(r, i), Polynomial::var(r, (i + 1) % r)));
    }
    while out.len() < count {
        out.push((Polynomial::random(rng, r, 4, 5), Polynomial::random(rng, r, 4, 5)));
    }
    out
}
