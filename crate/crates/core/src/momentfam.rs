//! Operator families `{T_α : |α| ≤ N}` and the moment identity
//!
//! ```text
//! T_α(f·g) = Σ_{β≤α} binom(α,β) · T_β(f) · T_{α−β}(g)
//! ```
//!
//! checked pointwise on sample points for polynomial probe pairs.
//!
//! Families whose values stay in ℚ (trivial, derivative, and conjugates of
//! those by polynomial maps) are compared exactly; the others go through a
//! relative tolerance. The choice is made by family kind, never by looking at
//! the values.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::coeffsolve::{check_constraint, CoeffFamily};
use crate::error::{Error, Result};
use crate::funcmodel::{CoordMap, Domain, FuncExpr};
use crate::multiindex::{enumerate_height_at_most, MultiIndex};
use crate::polycalc::{Polynomial, RationalPoint};
use crate::rational;

/// Anything that maps a multi-index and a polynomial to a function on Ω.
pub trait MomentFamily: Sync {
    /// Dimension of the multi-indices `α`.
    fn rank(&self) -> usize;
    /// Dimension of Ω.
    fn dim(&self) -> usize;
    fn order(&self) -> u32;
    fn apply(&self, alpha: &MultiIndex, f: &Polynomial) -> Result<FuncExpr>;
    /// Values are rational and compared exactly.
    fn exact(&self) -> bool {
        false
    }
    /// `T_α(h)(x) = 0` whenever `h(x) = 0`, for every `α`.
    fn vanishes_with_argument(&self) -> bool {
        false
    }
    fn descriptor(&self) -> Value;
}

/// The `(T, A)` pair of the second-order Leibniz rule
/// `T(f·g) = T(f)·g + f·T(g) + 2·A(f)·A(g)` with
///
/// ```text
/// T(f) = ⟨f″c, c⟩ + ⟨f′, b⟩ + a·f·ln|f|,     A(f) = ⟨f′, c⟩.
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderPair {
    pub r: usize,
    pub k: u32,
    pub a: FuncExpr,
    pub b: Vec<FuncExpr>,
    pub c: Vec<FuncExpr>,
}

impl SecondOrderPair {
    pub fn apply_t(&self, f: &Polynomial) -> FuncExpr {
        let mut terms = Vec::with_capacity(3);
        if !self.c.iter().all(FuncExpr::is_identically_zero) {
            terms.push(FuncExpr::HessQuad {
                poly: f.clone(),
                field: self.c.clone(),
            });
        }
        if !self.b.iter().all(FuncExpr::is_identically_zero) {
            terms.push(FuncExpr::GradDot {
                poly: f.clone(),
                field: self.b.clone(),
            });
        }
        if !self.a.is_identically_zero() {
            terms.push(FuncExpr::product(vec![
                self.a.clone(),
                FuncExpr::xlogabs(FuncExpr::poly(f.clone())),
            ]));
        }
        if terms.is_empty() {
            return FuncExpr::zero(self.r);
        }
        FuncExpr::sum(terms)
    }

    pub fn apply_a(&self, f: &Polynomial) -> FuncExpr {
        FuncExpr::GradDot {
            poly: f.clone(),
            field: self.c.clone(),
        }
    }

    /// True when neither operator involves the logarithmic term and all
    /// fields are rational, so the rule can be checked exactly.
    pub fn is_rational(&self) -> bool {
        self.a.is_identically_zero() && self.b.iter().chain(&self.c).all(FuncExpr::is_rational)
    }
}

/// Operator-family descriptor; this is also the JSON input format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `T_0 ≡ 1`, `T_α ≡ 0` otherwise.
    Trivial {
        r: usize,
        #[serde(rename = "N")]
        order: u32,
    },
    /// `T_α = D^α`.
    Derivative {
        r: usize,
        #[serde(rename = "N")]
        order: u32,
    },
    /// `T_0 = id`, `T_α(f) = c_α·f·ln|f|`.
    IdentityGenerated {
        #[serde(flatten)]
        coefficients: CoeffFamily,
    },
    /// `T̃_α(f)(x) = T_α(f)(τ(x))`.
    Conjugated { inner: Box<FamilyKind>, tau: CoordMap },
    /// Order-one family with `T_{e_i}(f) = c·f·ln|f|` for every unit index.
    FirstOrderLeibniz { r: usize, c: FuncExpr },
    /// Rank-one, order-two family `(id, A, T)`.
    SecondOrderLeibniz {
        #[serde(flatten)]
        pair: SecondOrderPair,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorFamily {
    kind: FamilyKind,
}

impl OperatorFamily {
    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Rebuilds a family from its descriptor, running the same validation as
    /// the dedicated constructors.
    pub fn from_descriptor(kind: FamilyKind, domain: &Domain) -> Result<Self> {
        match kind {
            FamilyKind::Trivial { r, order } => make_trivial(r, order),
            FamilyKind::Derivative { r, order } => make_derivative(r, order),
            FamilyKind::IdentityGenerated { coefficients } => make_identity_generated(coefficients, domain),
            FamilyKind::Conjugated { inner, tau } => {
                let inner = OperatorFamily::from_descriptor(*inner, domain)?;
                conjugate(&inner, tau, domain)
            }
            FamilyKind::FirstOrderLeibniz { r, c } => make_first_order_leibniz(r, c),
            FamilyKind::SecondOrderLeibniz { pair } => {
                let pair = make_second_order_leibniz(pair.a, pair.b, pair.c, pair.k, pair.r)?;
                Ok(pair.into_family())
            }
        }
    }
}

impl FamilyKind {
    pub fn rank(&self) -> usize {
        kind_rank(self)
    }

    pub fn dim(&self) -> usize {
        kind_dim(self)
    }

    pub fn order(&self) -> u32 {
        kind_order(self)
    }
}

fn kind_rank(kind: &FamilyKind) -> usize {
    match kind {
        FamilyKind::Trivial { r, .. } | FamilyKind::Derivative { r, .. } | FamilyKind::FirstOrderLeibniz { r, .. } => {
            *r
        }
        FamilyKind::IdentityGenerated { coefficients } => coefficients.rank(),
        FamilyKind::Conjugated { inner, .. } => kind_rank(inner),
        FamilyKind::SecondOrderLeibniz { .. } => 1,
    }
}

fn kind_dim(kind: &FamilyKind) -> usize {
    match kind {
        FamilyKind::SecondOrderLeibniz { pair } => pair.r,
        FamilyKind::Conjugated { inner, .. } => kind_dim(inner),
        other => kind_rank(other),
    }
}

fn kind_order(kind: &FamilyKind) -> u32 {
    match kind {
        FamilyKind::Trivial { order, .. } | FamilyKind::Derivative { order, .. } => *order,
        FamilyKind::IdentityGenerated { coefficients } => coefficients.order(),
        FamilyKind::Conjugated { inner, .. } => kind_order(inner),
        FamilyKind::FirstOrderLeibniz { .. } => 1,
        FamilyKind::SecondOrderLeibniz { .. } => 2,
    }
}

fn apply_kind(kind: &FamilyKind, alpha: &MultiIndex, f: &Polynomial) -> Result<FuncExpr> {
    let dim = kind_dim(kind);
    match kind {
        FamilyKind::Trivial { .. } => Ok(if alpha.is_zero() {
            FuncExpr::poly(Polynomial::from_int(dim, 1))
        } else {
            FuncExpr::zero(dim)
        }),
        FamilyKind::Derivative { .. } => Ok(FuncExpr::poly(f.dalpha(alpha)?)),
        FamilyKind::IdentityGenerated { coefficients } => Ok(if alpha.is_zero() {
            FuncExpr::poly(f.clone())
        } else {
            match coefficients.get(alpha) {
                Some(c) if !c.is_identically_zero() => {
                    FuncExpr::product(vec![c.clone(), FuncExpr::xlogabs(FuncExpr::poly(f.clone()))])
                }
                _ => FuncExpr::zero(dim),
            }
        }),
        FamilyKind::Conjugated { inner, tau } => Ok(FuncExpr::pullback(tau.clone(), apply_kind(inner, alpha, f)?)),
        FamilyKind::FirstOrderLeibniz { c, .. } => Ok(if alpha.is_zero() {
            FuncExpr::poly(f.clone())
        } else {
            FuncExpr::product(vec![c.clone(), FuncExpr::xlogabs(FuncExpr::poly(f.clone()))])
        }),
        FamilyKind::SecondOrderLeibniz { pair } => Ok(match alpha.entries()[0] {
            0 => FuncExpr::poly(f.clone()),
            1 => pair.apply_a(f),
            _ => pair.apply_t(f),
        }),
    }
}

fn kind_exact(kind: &FamilyKind) -> bool {
    match kind {
        FamilyKind::Trivial { .. } | FamilyKind::Derivative { .. } => true,
        FamilyKind::Conjugated { inner, .. } => kind_exact(inner),
        FamilyKind::SecondOrderLeibniz { pair } => pair.is_rational(),
        FamilyKind::IdentityGenerated { .. } | FamilyKind::FirstOrderLeibniz { .. } => false,
    }
}

impl MomentFamily for OperatorFamily {
    fn rank(&self) -> usize {
        kind_rank(&self.kind)
    }

    fn dim(&self) -> usize {
        kind_dim(&self.kind)
    }

    fn order(&self) -> u32 {
        kind_order(&self.kind)
    }

    fn apply(&self, alpha: &MultiIndex, f: &Polynomial) -> Result<FuncExpr> {
        if alpha.dim() != self.rank() {
            return Err(Error::DimensionMismatch {
                expected: self.rank(),
                found: alpha.dim(),
            });
        }
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.dim(),
            });
        }
        if alpha.height() > self.order() {
            return Err(Error::IndexOutOfRange {
                alpha: alpha.clone(),
                order: self.order(),
            });
        }
        apply_kind(&self.kind, alpha, f)
    }

    fn exact(&self) -> bool {
        kind_exact(&self.kind)
    }

    fn vanishes_with_argument(&self) -> bool {
        matches!(
            self.kind,
            FamilyKind::IdentityGenerated { .. } | FamilyKind::FirstOrderLeibniz { .. }
        )
    }

    fn descriptor(&self) -> Value {
        serde_json::to_value(&self.kind).unwrap_or(Value::Null)
    }
}

pub fn make_trivial(r: usize, order: u32) -> Result<OperatorFamily> {
    if r == 0 {
        return Err(Error::EmptyIndex);
    }
    Ok(OperatorFamily {
        kind: FamilyKind::Trivial { r, order },
    })
}

pub fn make_derivative(r: usize, order: u32) -> Result<OperatorFamily> {
    if r == 0 {
        return Err(Error::EmptyIndex);
    }
    Ok(OperatorFamily {
        kind: FamilyKind::Derivative { r, order },
    })
}

/// `T_0 = id`, `T_α(f) = c_α·f·ln|f|`. Rejects coefficient families that
/// violate the bilinear constraint at any sample of `domain`.
pub fn make_identity_generated(cf: CoeffFamily, domain: &Domain) -> Result<OperatorFamily> {
    if cf.rank() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            found: cf.rank(),
        });
    }
    if let Some(err) = check_constraint(&cf, domain)?.into_error() {
        return Err(err);
    }
    Ok(make_identity_generated_unchecked(cf))
}

/// Same as [`make_identity_generated`] without the constraint check. Only
/// useful for exercising the verifier on invalid families.
pub fn make_identity_generated_unchecked(cf: CoeffFamily) -> OperatorFamily {
    OperatorFamily {
        kind: FamilyKind::IdentityGenerated { coefficients: cf },
    }
}

/// Order-one family whose every first-order member is `f ↦ c·f·ln|f|`.
pub fn make_first_order_leibniz(r: usize, c: FuncExpr) -> Result<OperatorFamily> {
    if r == 0 {
        return Err(Error::EmptyIndex);
    }
    Ok(OperatorFamily {
        kind: FamilyKind::FirstOrderLeibniz { r, c },
    })
}

/// Builds the `(T, A)` pair, enforcing that `c ≡ 0` when `k = 1` and
/// `b ≡ 0, c ≡ 0` when `k = 0`.
pub fn make_second_order_leibniz(
    a: FuncExpr,
    b: Vec<FuncExpr>,
    c: Vec<FuncExpr>,
    k: u32,
    r: usize,
) -> Result<SecondOrderPair> {
    if r == 0 {
        return Err(Error::EmptyIndex);
    }
    for field in [&b, &c] {
        if field.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: field.len(),
            });
        }
    }
    let zero = |v: &[FuncExpr]| v.iter().all(FuncExpr::is_identically_zero);
    if k <= 1 && !zero(&c) {
        return Err(Error::NecessityClause { k, field: "c" });
    }
    if k == 0 && !zero(&b) {
        return Err(Error::NecessityClause { k, field: "b" });
    }
    Ok(SecondOrderPair { r, k, a, b, c })
}

impl SecondOrderPair {
    pub fn into_family(self) -> OperatorFamily {
        OperatorFamily {
            kind: FamilyKind::SecondOrderLeibniz { pair: self },
        }
    }
}

/// `T̃_α(f)(x) = T_α(f)(τ(x))`. `τ` must send every sample into the box.
pub fn conjugate(family: &OperatorFamily, tau: CoordMap, domain: &Domain) -> Result<OperatorFamily> {
    if tau.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: family.dim(),
            found: tau.dim(),
        });
    }
    tau.validate_on(domain)?;
    Ok(OperatorFamily {
        kind: FamilyKind::Conjugated {
            inner: Box::new(family.kind.clone()),
            tau,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaResidual {
    pub alpha: MultiIndex,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentWitness {
    pub alpha: MultiIndex,
    pub probe: usize,
    pub point: RationalPoint,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub family: Value,
    pub probe_count: usize,
    pub point_count: usize,
    pub exact: bool,
    pub tolerance: f64,
    pub per_alpha: Vec<AlphaResidual>,
    pub max_residual: f64,
    /// `(probe, point)` pairs where `f·g` vanished and both sides were
    /// required to be exactly zero.
    pub vanishing_checks: usize,
    pub pass: bool,
    pub seed: Option<u64>,
    pub failures: Vec<MomentWitness>,
}

const MAX_WITNESSES: usize = 16;

enum Val {
    Exact(BigRational),
    Float(f64),
}

impl Val {
    fn as_f64(&self) -> f64 {
        match self {
            Val::Exact(q) => rational::to_f64(q),
            Val::Float(v) => *v,
        }
    }
}

struct ProbeOutcome {
    per_alpha: Vec<f64>,
    vanishing_checks: usize,
    failures: Vec<MomentWitness>,
}

/// Values of `T_γ(h)` for every `γ` in `indices` at every sample.
fn table<F: MomentFamily + ?Sized>(
    family: &F,
    indices: &[MultiIndex],
    h: &Polynomial,
    points: &[RationalPoint],
    exact: bool,
) -> Result<Vec<Vec<Val>>> {
    indices
        .iter()
        .map(|g| {
            let e = family.apply(g, h)?;
            points
                .iter()
                .map(|x| {
                    Ok(if exact {
                        Val::Exact(e.eval_exact(x)?)
                    } else {
                        Val::Float(e.eval(x)?)
                    })
                })
                .collect()
        })
        .collect()
}

fn check_probe<F: MomentFamily + ?Sized>(
    family: &F,
    indices: &[MultiIndex],
    probe: usize,
    f: &Polynomial,
    g: &Polynomial,
    domain: &Domain,
) -> Result<ProbeOutcome> {
    let exact = family.exact();
    let points = domain.samples();
    let tol = domain.tolerance();
    let fg = f.checked_mul(g)?;
    let tf = table(family, indices, f, points, exact)?;
    let tg = table(family, indices, g, points, exact)?;
    let tfg = table(family, indices, &fg, points, exact)?;
    let position = |a: &MultiIndex| indices.binary_search(a).expect("index set is closed under ≤");
    let fg_zero: Vec<bool> = points
        .iter()
        .map(|x| fg.eval(x).map(|v| v.is_zero()))
        .collect::<Result<_>>()?;

    let mut out = ProbeOutcome {
        per_alpha: vec![0.0; indices.len()],
        vanishing_checks: 0,
        failures: Vec::new(),
    };
    for (ai, alpha) in indices.iter().enumerate() {
        let pairs: Vec<(usize, usize, BigInt)> = alpha
            .enumerate_below()
            .iter()
            .map(|b| {
                let rest = alpha.sub(b).expect("β ≤ α");
                (
                    position(b),
                    position(&rest),
                    BigInt::from(alpha.binom(b).expect("β ≤ α")),
                )
            })
            .collect();
        for (pi, x) in points.iter().enumerate() {
            let (lhs, rhs, residual, mut failed) = match &tfg[ai][pi] {
                Val::Exact(l) => {
                    let mut sum = BigRational::zero();
                    let mut scale = BigRational::zero();
                    for (b, rest, w) in &pairs {
                        if let (Val::Exact(u), Val::Exact(v)) = (&tf[*b][pi], &tg[*rest][pi]) {
                            let t = BigRational::from_integer(w.clone()) * u * v;
                            scale += t.abs();
                            sum += t;
                        }
                    }
                    let diff = (l - &sum).abs();
                    let residual = if diff.is_zero() {
                        0.0
                    } else {
                        rational::to_f64(&(diff / (BigRational::from_integer(1.into()) + l.abs().max(scale))))
                    };
                    (rational::to_f64(l), rational::to_f64(&sum), residual, residual != 0.0)
                }
                Val::Float(l) => {
                    let mut sum = 0.0;
                    let mut scale = 0.0;
                    for (b, rest, w) in &pairs {
                        let t = rational::to_f64(&BigRational::from_integer(w.clone()))
                            * tf[*b][pi].as_f64()
                            * tg[*rest][pi].as_f64();
                        scale += t.abs();
                        sum += t;
                    }
                    let residual = (l - sum).abs() / (1.0 + l.abs().max(scale));
                    (*l, sum, residual, !(residual <= tol))
                }
            };
            out.per_alpha[ai] = out.per_alpha[ai].max(residual);
            let mut reason = "moment identity residual above tolerance";
            if family.vanishes_with_argument() && fg_zero[pi] {
                out.vanishing_checks += 1;
                if lhs != 0.0 || rhs != 0.0 {
                    failed = true;
                    reason = "f*g vanishes but a side of the identity is nonzero";
                }
            }
            if failed && out.failures.len() < MAX_WITNESSES {
                out.failures.push(MomentWitness {
                    alpha: alpha.clone(),
                    probe,
                    point: x.clone(),
                    lhs,
                    rhs,
                    residual,
                    reason: reason.to_string(),
                });
            }
        }
    }
    Ok(out)
}

/// Checks the moment identity for every `|α| ≤ N`, every probe pair and every
/// sample point. The `α = 0` row is the multiplicativity of `T_0`.
pub fn verify_moment<F: MomentFamily + ?Sized>(
    family: &F,
    probes: &[(Polynomial, Polynomial)],
    domain: &Domain,
    seed: Option<u64>,
) -> Result<MomentReport> {
    if family.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            found: family.dim(),
        });
    }
    let indices = enumerate_height_at_most(family.rank(), family.order());
    let outcomes: Vec<ProbeOutcome> = probes
        .par_iter()
        .enumerate()
        .map(|(i, (f, g))| check_probe(family, &indices, i, f, g, domain))
        .collect::<Result<_>>()?;

    let mut per_alpha = vec![0.0f64; indices.len()];
    let mut vanishing_checks = 0;
    let mut failures = Vec::new();
    let mut failed = false;
    for o in outcomes {
        for (acc, v) in per_alpha.iter_mut().zip(&o.per_alpha) {
            *acc = acc.max(*v);
        }
        vanishing_checks += o.vanishing_checks;
        failed |= !o.failures.is_empty();
        for w in o.failures {
            if failures.len() < MAX_WITNESSES {
                failures.push(w);
            }
        }
    }
    let max_residual = per_alpha.iter().cloned().fold(0.0, f64::max);
    Ok(MomentReport {
        family: family.descriptor(),
        probe_count: probes.len(),
        point_count: domain.samples().len(),
        exact: family.exact(),
        tolerance: domain.tolerance(),
        per_alpha: indices
            .into_iter()
            .zip(per_alpha)
            .map(|(alpha, max_residual)| AlphaResidual { alpha, max_residual })
            .collect(),
        max_residual,
        vanishing_checks,
        pass: !failed,
        seed,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseWitness {
    pub alpha: MultiIndex,
    pub f: Polynomial,
    pub g: Polynomial,
    pub point: RationalPoint,
    pub expected: f64,
    pub found: f64,
    pub check: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub pass: bool,
    pub checked: usize,
    pub witness: Option<CollapseWitness>,
}

/// Replays the collapse argument for a candidate with `T_0 ≡ 1`: with a
/// constant-one generator every `T_α`, `α ≠ 0`, satisfies
/// `T_α(f·g) = T_α(f) + T_α(g)` once the lower orders vanish, so
/// `T_α(0) = 0` and then `T_α(f) = T_α(f·0) − T_α(0) = 0`. Any candidate with
/// a nonzero `T_α` is rejected with the first violated instance.
pub fn assert_trivial_collapse<F: MomentFamily + ?Sized>(
    candidate: &F,
    probes: &[(Polynomial, Polynomial)],
    domain: &Domain,
) -> Result<CollapseReport> {
    let r = candidate.dim();
    let tol = domain.tolerance();
    let zero_index = MultiIndex::zero(candidate.rank());
    let zero = Polynomial::zero(r);
    let mut inputs: Vec<Polynomial> = vec![zero.clone()];
    for (f, g) in probes {
        inputs.push(f.clone());
        inputs.push(g.clone());
    }

    for f in &inputs {
        let t0 = candidate.apply(&zero_index, f)?;
        for x in domain.samples() {
            let v = t0.eval(x)?;
            if v != 1.0 {
                return Err(Error::Precondition(format!("T_0({f}) at {x} is {v}, not 1")));
            }
        }
    }

    let mut checked = 0;
    let mut indices = enumerate_height_at_most(candidate.rank(), candidate.order());
    indices.retain(|a| !a.is_zero());
    indices.sort_by_key(MultiIndex::height);
    let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));

    for alpha in &indices {
        let t_zero = candidate.apply(alpha, &zero)?;
        let t_zero_vals: Vec<f64> = domain.samples().iter().map(|x| t_zero.eval(x)).collect::<Result<_>>()?;
        for (x, &z) in domain.samples().iter().zip(&t_zero_vals) {
            checked += 1;
            // T(0) = T(0·0) = 2·T(0)
            if !close(z, 0.0) {
                return Ok(CollapseReport {
                    pass: false,
                    checked,
                    witness: Some(CollapseWitness {
                        alpha: alpha.clone(),
                        f: zero.clone(),
                        g: zero.clone(),
                        point: x.clone(),
                        expected: 2.0 * z,
                        found: z,
                        check: "T_alpha(0) = T_alpha(0) + T_alpha(0)".into(),
                    }),
                });
            }
        }
        for f in &inputs[1..] {
            let tf = candidate.apply(alpha, f)?;
            let tf0 = candidate.apply(alpha, &f.checked_mul(&zero)?)?;
            for (x, &z) in domain.samples().iter().zip(&t_zero_vals) {
                checked += 1;
                let lhs = tf0.eval(x)?;
                let rhs = tf.eval(x)? + z;
                if !close(lhs, rhs) {
                    return Ok(CollapseReport {
                        pass: false,
                        checked,
                        witness: Some(CollapseWitness {
                            alpha: alpha.clone(),
                            f: f.clone(),
                            g: zero.clone(),
                            point: x.clone(),
                            expected: rhs,
                            found: lhs,
                            check: "T_alpha(f*0) = T_alpha(f) + T_alpha(0)".into(),
                        }),
                    });
                }
            }
        }
    }
    Ok(CollapseReport {
        pass: true,
        checked,
        witness: None,
    })
}

/// Direct check of `T(f·g) = T(f)·g + f·T(g) + 2·A(f)·A(g)` and of the
/// Leibniz rule for `A`, written out term by term rather than through the
/// moment-identity machinery. Returns the largest relative residual, which is
/// exactly `0.0` when the pair is rational and the rule holds.
pub fn check_second_order_rule(
    pair: &SecondOrderPair,
    probes: &[(Polynomial, Polynomial)],
    domain: &Domain,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (f, g) in probes {
        let fg = f.checked_mul(g)?;
        let (tf, tg, tfg) = (pair.apply_t(f), pair.apply_t(g), pair.apply_t(&fg));
        let (af, ag, afg) = (pair.apply_a(f), pair.apply_a(g), pair.apply_a(&fg));
        for x in domain.samples() {
            if pair.is_rational() {
                let (fv, gv) = (f.eval(x)?, g.eval(x)?);
                let (a_f, a_g) = (af.eval_exact(x)?, ag.eval_exact(x)?);
                let t_rhs = tf.eval_exact(x)? * &gv + &fv * tg.eval_exact(x)? + rational::from_int(2) * &a_f * &a_g;
                let a_rhs = &a_f * &gv + &fv * &a_g;
                for (l, r) in [(tfg.eval_exact(x)?, t_rhs), (afg.eval_exact(x)?, a_rhs)] {
                    if l != r {
                        let diff = rational::to_f64(&(l.clone() - r).abs());
                        worst = worst.max(diff / (1.0 + rational::to_f64(&l.abs())));
                    }
                }
            } else {
                let (fv, gv) = (f.eval_f64(x)?, g.eval_f64(x)?);
                let (a_f, a_g) = (af.eval(x)?, ag.eval(x)?);
                let (t_f, t_g) = (tf.eval(x)?, tg.eval(x)?);
                let t_rhs = t_f * gv + fv * t_g + 2.0 * a_f * a_g;
                let a_rhs = a_f * gv + fv * a_g;
                let t_scale = (t_f * gv).abs() + (fv * t_g).abs() + (2.0 * a_f * a_g).abs();
                let a_scale = (a_f * gv).abs() + (fv * a_g).abs();
                for (l, r, s) in [(tfg.eval(x)?, t_rhs, t_scale), (afg.eval(x)?, a_rhs, a_scale)] {
                    worst = worst.max((l - r).abs() / (1.0 + l.abs().max(s)));
                }
            }
        }
    }
    Ok(worst)
}
