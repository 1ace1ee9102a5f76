//! The bilinear constraint on the coefficients of `T_α(f) = c_α·f·ln|f|`:
//!
//! ```text
//! Σ_{0 ⪇ β ⪇ α} binom(α,β) · c_β(x) · c_{α−β}(x) = 0      for 2 ≤ |α| ≤ N
//! ```
//!
//! Checking it pointwise, deducing which `c_α` it forces to vanish, and
//! enumerating supports that admit nonzero constant solutions.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcmodel::{Domain, FuncExpr};
use crate::multiindex::{enumerate_nonzero, MultiIndex};
use crate::polycalc::{Polynomial, RationalPoint};
use crate::rational;

/// Default cap on `|{α : 0 < |α| ≤ N}|` for support searches.
pub const DEFAULT_MAX_INDICES: usize = 20;

/// `{c_α : 0 ≠ |α| ≤ N}`; absent entries are identically zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffFamilyWire", into = "CoeffFamilyWire")]
pub struct CoeffFamily {
    rank: usize,
    order: u32,
    coefficients: BTreeMap<MultiIndex, FuncExpr>,
}

#[derive(Clone, Serialize, Deserialize)]
struct CoeffEntry {
    index: MultiIndex,
    c: FuncExpr,
}

#[derive(Clone, Serialize, Deserialize)]
struct CoeffFamilyWire {
    r: usize,
    #[serde(rename = "N")]
    order: u32,
    coefficients: Vec<CoeffEntry>,
}

impl TryFrom<CoeffFamilyWire> for CoeffFamily {
    type Error = Error;

    fn try_from(w: CoeffFamilyWire) -> Result<Self> {
        CoeffFamily::new(w.r, w.order, w.coefficients.into_iter().map(|e| (e.index, e.c)))
    }
}

impl From<CoeffFamily> for CoeffFamilyWire {
    fn from(cf: CoeffFamily) -> Self {
        CoeffFamilyWire {
            r: cf.rank,
            order: cf.order,
            coefficients: cf
                .coefficients
                .into_iter()
                .map(|(index, c)| CoeffEntry { index, c })
                .collect(),
        }
    }
}

fn check_index(alpha: &MultiIndex, rank: usize, order: u32) -> Result<()> {
    if alpha.dim() != rank {
        return Err(Error::DimensionMismatch {
            expected: rank,
            found: alpha.dim(),
        });
    }
    if alpha.is_zero() || alpha.height() > order {
        return Err(Error::IndexOutOfRange {
            alpha: alpha.clone(),
            order,
        });
    }
    Ok(())
}

impl CoeffFamily {
    pub fn new<I>(rank: usize, order: u32, coefficients: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, FuncExpr)>,
    {
        if rank == 0 {
            return Err(Error::EmptyIndex);
        }
        let mut map = BTreeMap::new();
        for (a, c) in coefficients {
            check_index(&a, rank, order)?;
            map.insert(a, c);
        }
        Ok(CoeffFamily {
            rank,
            order,
            coefficients: map,
        })
    }

    pub fn zero(rank: usize, order: u32) -> Self {
        CoeffFamily {
            rank,
            order,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn get(&self, alpha: &MultiIndex) -> Option<&FuncExpr> {
        self.coefficients.get(alpha)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &FuncExpr)> {
        self.coefficients.iter()
    }

    pub fn support(&self) -> BTreeSet<MultiIndex> {
        self.coefficients
            .iter()
            .filter(|(_, c)| !c.is_identically_zero())
            .map(|(a, _)| a.clone())
            .collect()
    }

    /// A copy with `c_α` removed (set to zero) for every `α` in `indices`.
    pub fn without(&self, indices: &BTreeSet<MultiIndex>) -> Self {
        let mut out = self.clone();
        out.coefficients.retain(|a, _| !indices.contains(a));
        out
    }

    fn all_rational(&self) -> bool {
        self.coefficients.values().all(FuncExpr::is_rational)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintWitness {
    pub alpha: MultiIndex,
    pub point: RationalPoint,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub pass: bool,
    /// True when all coefficients were rational and sums were computed exactly.
    pub exact: bool,
    pub checked: usize,
    pub max_abs: f64,
    pub worst: Option<ConstraintWitness>,
}

impl ConstraintReport {
    pub fn into_error(self) -> Option<Error> {
        if self.pass {
            return None;
        }
        self.worst.map(|w| Error::ConstraintViolated {
            alpha: w.alpha,
            point: w.point.to_string(),
            value: w.value,
        })
    }
}

/// Pairs `(β, α−β)` with `0 ⪇ β ⪇ α` and their binomial weight.
fn inner_pairs(alpha: &MultiIndex) -> Vec<(MultiIndex, MultiIndex, BigInt)> {
    alpha
        .enumerate_below()
        .into_iter()
        .filter(|b| !b.is_zero() && b != alpha)
        .map(|b| {
            let rest = alpha.sub(&b).expect("β ≤ α");
            let w = BigInt::from(alpha.binom(&b).expect("β ≤ α"));
            (b, rest, w)
        })
        .collect()
}

/// Checks the constraint for every `α` with `2 ≤ |α| ≤ N` at every sample.
/// Sums are exact when every coefficient is a rational expression; otherwise
/// only the pointwise products are floating and `|Σ| ≤ tol` is required.
pub fn check_constraint(cf: &CoeffFamily, domain: &Domain) -> Result<ConstraintReport> {
    let exact = cf.all_rational();
    let tol = domain.tolerance();
    let alphas: Vec<MultiIndex> = enumerate_nonzero(cf.rank, cf.order)
        .into_iter()
        .filter(|a| a.height() >= 2)
        .collect();
    let mut report = ConstraintReport {
        pass: true,
        exact,
        checked: 0,
        max_abs: 0.0,
        worst: None,
    };
    for x in domain.samples() {
        let mut exact_vals: BTreeMap<&MultiIndex, BigRational> = BTreeMap::new();
        let mut float_vals: BTreeMap<&MultiIndex, f64> = BTreeMap::new();
        for (a, c) in &cf.coefficients {
            if exact {
                exact_vals.insert(a, c.eval_exact(x)?);
            } else {
                float_vals.insert(a, c.eval(x)?);
            }
        }
        for alpha in &alphas {
            report.checked += 1;
            let (value, violated) = if exact {
                let mut sum = BigRational::zero();
                for (b, rest, w) in inner_pairs(alpha) {
                    if let (Some(u), Some(v)) = (exact_vals.get(&b), exact_vals.get(&rest)) {
                        sum += BigRational::from_integer(w) * u * v;
                    }
                }
                (rational::to_f64(&sum), !sum.is_zero())
            } else {
                let mut sum = 0.0;
                for (b, rest, w) in inner_pairs(alpha) {
                    if let (Some(u), Some(v)) = (float_vals.get(&b), float_vals.get(&rest)) {
                        sum += w.to_f64().unwrap_or(f64::INFINITY) * u * v;
                    }
                }
                (sum, !(sum.abs() <= tol))
            };
            report.max_abs = report.max_abs.max(value.abs());
            if violated {
                report.pass = false;
                if report.worst.as_ref().is_none_or(|w| value.abs() > w.value.abs()) {
                    report.worst = Some(ConstraintWitness {
                        alpha: alpha.clone(),
                        point: x.clone(),
                        value,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Which coefficients may be nonzero, optionally with a constant assignment
/// certifying that the constraint can be met on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportPattern {
    pub r: usize,
    #[serde(rename = "N")]
    pub order: u32,
    pub support: BTreeSet<MultiIndex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<CertificateEntry>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub index: MultiIndex,
    #[serde(with = "rational::as_string")]
    pub value: BigRational,
}

impl SupportPattern {
    pub fn new<I: IntoIterator<Item = MultiIndex>>(r: usize, order: u32, support: I) -> Result<Self> {
        if r == 0 {
            return Err(Error::EmptyIndex);
        }
        let support: BTreeSet<MultiIndex> = support.into_iter().collect();
        for a in &support {
            check_index(a, r, order).map_err(|e| Error::InvalidPattern(e.to_string()))?;
        }
        Ok(SupportPattern {
            r,
            order,
            support,
            certificate: None,
        })
    }

    /// Ordered pairs `(β, γ)` of support elements with `β + γ = α`.
    pub fn decompositions(&self, alpha: &MultiIndex) -> Vec<(MultiIndex, MultiIndex)> {
        decompositions_in(&self.support, alpha)
    }

    /// No in-range `α` splits into two support elements, so every
    /// constrained sum is empty and any coefficients on the support work.
    pub fn is_structure_valid(&self) -> bool {
        self.support
            .iter()
            .all(|b| self.support.iter().all(|c| b.height() + c.height() > self.order))
    }

    fn certificate_map(&self) -> Option<BTreeMap<MultiIndex, BigRational>> {
        self.certificate
            .as_ref()
            .map(|c| c.iter().map(|e| (e.index.clone(), e.value.clone())).collect())
    }
}

fn decompositions_in(support: &BTreeSet<MultiIndex>, alpha: &MultiIndex) -> Vec<(MultiIndex, MultiIndex)> {
    support
        .iter()
        .filter(|b| b.leq(alpha).unwrap_or(false))
        .filter_map(|b| {
            let rest = alpha.sub(b).ok()?;
            support.contains(&rest).then(|| (b.clone(), rest))
        })
        .collect()
}

/// Indices whose coefficient the constraint forces to vanish identically.
///
/// For `γ` in the support with `|2γ| ≤ N` whose only decomposition inside the
/// (remaining) support is `γ + γ`, the `α = 2γ` constraint reads
/// `binom(2γ,γ)·c_γ² = 0`. Such `γ` are removed and the scan repeats until
/// nothing changes.
pub fn forced_zero_analysis(pattern: &SupportPattern) -> BTreeSet<MultiIndex> {
    let mut live = pattern.support.clone();
    let mut forced = BTreeSet::new();
    loop {
        let newly: Vec<MultiIndex> = live
            .iter()
            .filter(|g| 2 * g.height() <= pattern.order)
            .filter(|g| {
                let double = g.add(g).expect("same dimension");
                let decomp = decompositions_in(&live, &double);
                decomp.len() == 1 && &decomp[0].0 == *g
            })
            .cloned()
            .collect();
        if newly.is_empty() {
            return forced;
        }
        for g in newly {
            live.remove(&g);
            forced.insert(g);
        }
    }
}

/// Limits for [`enumerate_valid_constant_supports`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_indices: usize,
    pub max_subsets: u128,
    pub max_assignments: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_indices: DEFAULT_MAX_INDICES,
            max_subsets: 1 << 22,
            max_assignments: 1 << 20,
        }
    }
}

/// Nonzero certificate values `±p/q`, `p, q ∈ {1, 2, 3}`, deduplicated.
fn certificate_values() -> Vec<BigRational> {
    let mut vals = BTreeSet::new();
    for p in 1..=3i64 {
        for q in 1..=3i64 {
            vals.insert(rational::ratio(p, q));
            vals.insert(rational::ratio(-p, q));
        }
    }
    vals.into_iter().collect()
}

/// Constrained sum at `α` for constant coefficients.
fn constant_sum(values: &BTreeMap<MultiIndex, BigRational>, alpha: &MultiIndex) -> BigRational {
    let mut sum = BigRational::zero();
    for (b, rest, w) in inner_pairs(alpha) {
        if let (Some(u), Some(v)) = (values.get(&b), values.get(&rest)) {
            sum += BigRational::from_integer(w) * u * v;
        }
    }
    sum
}

/// Brute-force search for nonzero constants on the support satisfying every
/// constraint. Returns `Ok(None)` when the search space is exhausted.
pub fn search_certificate(pattern: &SupportPattern, budget: &Budget) -> Result<Option<Vec<CertificateEntry>>> {
    let support: Vec<MultiIndex> = pattern.support.iter().cloned().collect();
    let vals = certificate_values();
    let needed = (vals.len() as u128)
        .checked_pow(support.len() as u32)
        .unwrap_or(u128::MAX);
    if needed > budget.max_assignments {
        return Err(Error::BudgetExceeded {
            needed,
            budget: budget.max_assignments,
        });
    }
    let constrained: Vec<MultiIndex> = enumerate_nonzero(pattern.r, pattern.order)
        .into_iter()
        .filter(|a| a.height() >= 2 && !decompositions_in(&pattern.support, a).is_empty())
        .collect();
    let mut digits = vec![0usize; support.len()];
    loop {
        let assignment: BTreeMap<MultiIndex, BigRational> = support
            .iter()
            .zip(&digits)
            .map(|(a, &d)| (a.clone(), vals[d].clone()))
            .collect();
        if constrained.iter().all(|a| constant_sum(&assignment, a).is_zero()) {
            return Ok(Some(
                assignment
                    .into_iter()
                    .map(|(index, value)| CertificateEntry { index, value })
                    .collect(),
            ));
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(None);
            }
            digits[i] += 1;
            if digits[i] < vals.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

fn count_subsets(n: usize, max_size: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for k in 0..=max_size.min(n) {
        total = total.saturating_add(c);
        c = c * (n - k) as u128 / (k + 1) as u128;
    }
    total
}

/// All supports of size at most `max_support_size` on which nonzero constant
/// coefficients can satisfy the constraint, ordered by size then
/// lexicographically. Structure-valid supports are returned bare; any other
/// support is returned only with a cancellation certificate.
pub fn enumerate_valid_constant_supports(
    r: usize,
    order: u32,
    max_support_size: usize,
    budget: &Budget,
) -> Result<Vec<SupportPattern>> {
    if r == 0 {
        return Err(Error::EmptyIndex);
    }
    let indices = enumerate_nonzero(r, order);
    if indices.len() > budget.max_indices {
        return Err(Error::BudgetExceeded {
            needed: indices.len() as u128,
            budget: budget.max_indices as u128,
        });
    }
    let subsets = count_subsets(indices.len(), max_support_size);
    if subsets > budget.max_subsets {
        return Err(Error::BudgetExceeded {
            needed: subsets,
            budget: budget.max_subsets,
        });
    }

    let mut out = Vec::new();
    for size in 0..=max_support_size.min(indices.len()) {
        for combo in Combinations::new(indices.len(), size) {
            let mut pattern = SupportPattern::new(r, order, combo.iter().map(|&i| indices[i].clone()))?;
            if pattern.is_structure_valid() {
                out.push(pattern);
                continue;
            }
            // a forced coefficient cannot be a nonzero constant
            if !forced_zero_analysis(&pattern).is_empty() {
                continue;
            }
            if let Some(cert) = search_certificate(&pattern, budget)? {
                pattern.certificate = Some(cert);
                out.push(pattern);
            }
        }
    }
    Ok(out)
}

/// k-subsets of `0..n` in lexicographic order.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let k = cur.len();
        let mut next = cur.clone();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(cur)
    }
}

/// Random polynomial coefficients of degree ≤ 2 on the support. With a
/// certificate, every coefficient is its certificate constant times one
/// shared random polynomial `h`, so each constrained sum is `h²·0`.
pub fn random_valid_family(pattern: &SupportPattern, seed: u64) -> Result<CoeffFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = pattern.r;
    let nonzero_poly = |rng: &mut ChaCha8Rng| loop {
        let p = Polynomial::random(rng, r, 2, 3);
        if !p.is_zero() {
            return p;
        }
    };
    if pattern.is_structure_valid() {
        let coeffs = pattern
            .support
            .iter()
            .map(|a| (a.clone(), FuncExpr::poly(nonzero_poly(&mut rng))))
            .collect::<Vec<_>>();
        return CoeffFamily::new(r, pattern.order, coeffs);
    }
    if let Some(cert) = pattern.certificate_map() {
        if cert.keys().cloned().collect::<BTreeSet<_>>() != pattern.support {
            return Err(Error::InvalidPattern("certificate does not cover the support".into()));
        }
        let constrained = enumerate_nonzero(r, pattern.order)
            .into_iter()
            .filter(|a| a.height() >= 2);
        for a in constrained {
            if !constant_sum(&cert, &a).is_zero() {
                return Err(Error::InvalidPattern(format!("certificate fails at {a}")));
            }
        }
        let h = nonzero_poly(&mut rng);
        let coeffs = cert
            .into_iter()
            .map(|(a, k)| (a, FuncExpr::poly(h.scale(&k))))
            .collect::<Vec<_>>();
        return CoeffFamily::new(r, pattern.order, coeffs);
    }
    let forced = forced_zero_analysis(pattern);
    Err(Error::InvalidPattern(format!(
        "support {:?} is not structure-valid and carries no certificate; forced zero: {:?}",
        pattern.support, forced
    )))
}

/// A random structure-valid support: a random subset of the indices of
/// height above `N/2`.
pub fn random_structure_valid_pattern(r: usize, order: u32, seed: u64) -> Result<SupportPattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let high = enumerate_nonzero(r, order)
        .into_iter()
        .filter(|a| 2 * a.height() > order)
        .filter(|_| rng.gen_bool(0.5));
    SupportPattern::new(r, order, high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::from_int;
    use proptest::prelude::*;
    use rand::Rng;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec()).unwrap()
    }

    fn domain(r: usize) -> Domain {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        Domain::unit_box(r, 10, &mut rng).unwrap()
    }

    fn constant(c: i64) -> FuncExpr {
        FuncExpr::constant(1, from_int(c))
    }

    #[test]
    fn rank_one_order_two() {
        let d = domain(1);
        let ok = CoeffFamily::new(1, 2, [(mi(&[1]), constant(0)), (mi(&[2]), constant(7))]).unwrap();
        assert!(check_constraint(&ok, &d).unwrap().pass);

        let bad = CoeffFamily::new(1, 2, [(mi(&[1]), constant(1))]).unwrap();
        let rep = check_constraint(&bad, &d).unwrap();
        assert!(!rep.pass);
        let w = rep.worst.unwrap();
        assert_eq!(w.alpha, mi(&[2]));
        assert_eq!(w.value, 2.0);
    }

    #[test]
    fn height_one_is_unconstrained() {
        let d = domain(2);
        let cf = CoeffFamily::new(2, 1, [(mi(&[1, 0]), constant2(3)), (mi(&[0, 1]), constant2(-4))]).unwrap();
        let rep = check_constraint(&cf, &d).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.checked, 0);
    }

    fn constant2(c: i64) -> FuncExpr {
        FuncExpr::constant(2, from_int(c))
    }

    #[test]
    fn family_indices_are_validated() {
        assert!(CoeffFamily::new(1, 2, [(mi(&[0]), constant(1))]).is_err());
        assert!(CoeffFamily::new(1, 2, [(mi(&[3]), constant(1))]).is_err());
        assert!(CoeffFamily::new(2, 2, [(mi(&[1]), constant(1))]).is_err());
    }

    #[test]
    fn forced_zero_examples() {
        let p = SupportPattern::new(1, 2, [mi(&[1]), mi(&[2])]).unwrap();
        assert_eq!(forced_zero_analysis(&p), [mi(&[1])].into());

        let p = SupportPattern::new(2, 2, [mi(&[1, 0]), mi(&[0, 1]), mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]).unwrap();
        assert_eq!(forced_zero_analysis(&p), [mi(&[1, 0]), mi(&[0, 1])].into());

        let p = SupportPattern::new(2, 3, [mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 3])]).unwrap();
        assert!(forced_zero_analysis(&p).is_empty());
    }

    #[test]
    fn forced_zero_iterates() {
        // α=(2,2): (1,1)+(1,1) and (2,0)+(0,2); α=(4,0): (2,0)+(2,0) only.
        // Once (2,0) is gone, (1,1) has a sole square decomposition.
        let p = SupportPattern::new(2, 4, [mi(&[1, 1]), mi(&[2, 0]), mi(&[0, 2])]).unwrap();
        let forced = forced_zero_analysis(&p);
        assert_eq!(forced, [mi(&[1, 1]), mi(&[2, 0]), mi(&[0, 2])].into());
    }

    #[test]
    fn rank_one_supports() {
        let b = Budget::default();
        let got: Vec<BTreeSet<MultiIndex>> = enumerate_valid_constant_supports(1, 3, 3, &b)
            .unwrap()
            .into_iter()
            .map(|p| p.support)
            .collect();
        let expected: Vec<BTreeSet<MultiIndex>> = vec![
            BTreeSet::new(),
            [mi(&[2])].into(),
            [mi(&[3])].into(),
            [mi(&[2]), mi(&[3])].into(),
        ];
        assert_eq!(got, expected);

        let got: Vec<_> = enumerate_valid_constant_supports(1, 2, 2, &b)
            .unwrap()
            .into_iter()
            .map(|p| p.support)
            .collect();
        assert_eq!(got, vec![BTreeSet::new(), [mi(&[2])].into()]);
    }

    #[test]
    fn rank_two_supports() {
        let b = Budget::default();
        let got = enumerate_valid_constant_supports(2, 2, 5, &b).unwrap();
        assert_eq!(got.len(), 8);
        let top: BTreeSet<_> = [mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])].into();
        assert!(got.iter().all(|p| p.support.is_subset(&top) && p.certificate.is_none()));

        let high = SupportPattern::new(
            2,
            3,
            crate::multiindex::enumerate_nonzero(2, 3)
                .into_iter()
                .filter(|a| a.height() >= 2),
        )
        .unwrap();
        assert!(high.is_structure_valid());
    }

    #[test]
    fn no_certificate_for_squares() {
        let p = SupportPattern::new(1, 2, [mi(&[1])]).unwrap();
        assert_eq!(search_certificate(&p, &Budget::default()).unwrap(), None);
        let p = SupportPattern::new(2, 4, [mi(&[1, 1]), mi(&[2, 0]), mi(&[0, 2])]).unwrap();
        assert_eq!(search_certificate(&p, &Budget::default()).unwrap(), None);
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            enumerate_valid_constant_supports(3, 6, 3, &Budget::default()),
            Err(Error::BudgetExceeded { needed: 83, budget: 20 })
        ));
        let tight = Budget {
            max_subsets: 10,
            ..Budget::default()
        };
        assert!(enumerate_valid_constant_supports(2, 3, 9, &tight).is_err());
    }

    #[test]
    fn random_families() {
        let d = domain(2);
        let p = SupportPattern::new(
            2,
            3,
            crate::multiindex::enumerate_nonzero(2, 3)
                .into_iter()
                .filter(|a| a.height() >= 2),
        )
        .unwrap();
        let cf = random_valid_family(&p, 42).unwrap();
        assert_eq!(cf.support(), p.support);
        let rep = check_constraint(&cf, &d).unwrap();
        assert!(rep.pass && rep.exact);
        assert_eq!(rep.max_abs, 0.0);

        let empty = SupportPattern::new(2, 3, []).unwrap();
        assert!(random_valid_family(&empty, 1).unwrap().support().is_empty());

        let bad = SupportPattern::new(1, 2, [mi(&[1])]).unwrap();
        assert!(matches!(random_valid_family(&bad, 1), Err(Error::InvalidPattern(_))));
    }

    #[test]
    fn certificate_families_cancel() {
        // hand-made certificate exercising the shared-factor construction;
        // with N=2 and support {(1,0),(0,1)} the constraints are
        // 2c₁₀² (α=(2,0)), 2c₁₀c₀₁ (α=(1,1)), 2c₀₁² (α=(0,2)), which are not
        // satisfiable, so the pattern is rejected
        let mut p = SupportPattern::new(2, 2, [mi(&[1, 0]), mi(&[0, 1])]).unwrap();
        p.certificate = Some(vec![
            CertificateEntry {
                index: mi(&[1, 0]),
                value: from_int(1),
            },
            CertificateEntry {
                index: mi(&[0, 1]),
                value: from_int(-1),
            },
        ]);
        assert!(random_valid_family(&p, 3).is_err());
    }

    #[test]
    fn json_forms() {
        let p = SupportPattern::new(2, 2, [mi(&[2, 0])]).unwrap();
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v, serde_json::json!({"r": 2, "N": 2, "support": [[2, 0]]}));
        let cf = random_valid_family(&p, 9).unwrap();
        let back: CoeffFamily = serde_json::from_str(&serde_json::to_string(&cf).unwrap()).unwrap();
        assert_eq!(back, cf);
        assert!(serde_json::from_value::<CoeffFamily>(serde_json::json!({
            "r": 1, "N": 1, "coefficients": [{"index": [2], "c": {"node": "poly", "poly": [{"exponent": [0], "coeff": "1"}]}}]
        }))
        .is_err());
    }

    fn valid_pattern() -> impl Strategy<Value = (SupportPattern, u64)> {
        (1usize..=2, 1u32..=4, any::<u64>(), any::<u64>())
            .prop_map(|(r, n, s1, s2)| (random_structure_valid_pattern(r, n, s1).unwrap(), s2))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn random_valid_families_pass((p, seed) in valid_pattern()) {
            let cf = random_valid_family(&p, seed).unwrap();
            prop_assert!(check_constraint(&cf, &domain(p.r)).unwrap().pass);
        }

        #[test]
        fn zeroing_forced_indices_restores_validity(r in 1usize..=2, n in 2u32..=4, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let support = enumerate_nonzero(r, n).into_iter().filter(|_| rng.gen_bool(0.5));
            let p = SupportPattern::new(r, n, support).unwrap();
            let forced = forced_zero_analysis(&p);
            let rest = SupportPattern::new(r, n, p.support.difference(&forced).cloned()).unwrap();
            if rest.is_structure_valid() {
                let cf = random_valid_family(&rest, seed).unwrap();
                prop_assert!(check_constraint(&cf, &domain(r)).unwrap().pass);
            }
        }

        #[test]
        fn order_two_rank_one_forces_small_c1(c1 in -1.0f64..1.0, c2 in -5.0f64..5.0) {
            // the constraint is 2·c₁(x)² = 0; any pass needs |c₁| ≤ √(tol/2)
            let d = domain(1);
            let q = |v: f64| BigRational::from_float(v).unwrap();
            let cf = CoeffFamily::new(1, 2, [
                (mi(&[1]), FuncExpr::xlogabs(FuncExpr::constant(1, q(1.0)))),
                (mi(&[2]), FuncExpr::constant(1, q(c2))),
            ]).unwrap();
            prop_assert!(check_constraint(&cf, &d).unwrap().pass);
            let cf = CoeffFamily::new(1, 2, [
                (mi(&[1]), FuncExpr::sum(vec![
                    FuncExpr::constant(1, q(c1)),
                    FuncExpr::xlogabs(FuncExpr::constant(1, q(1.0))),
                ])),
            ]).unwrap();
            let rep = check_constraint(&cf, &d).unwrap();
            if rep.pass {
                prop_assert!(c1.abs() <= (d.tolerance() / 2.0).sqrt());
            }
        }
    }
}
