//! Acceptance checks. Each test prints one `[PASS]` or `[FAIL]` line and then
//! asserts on the same outcome.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use moment_leibniz_core::coeffsolve::{
    enumerate_valid_constant_supports, forced_zero_analysis, random_valid_family, Budget, CoeffFamily, SupportPattern,
};
use moment_leibniz_core::funcmodel::{check_multiplicative, standard_probes, CoordMap, Domain, FuncExpr, PowerSignMap};
use moment_leibniz_core::momentfam::{
    assert_trivial_collapse, check_second_order_rule, conjugate, make_derivative, make_identity_generated,
    make_second_order_leibniz, make_trivial, verify_moment, MomentFamily, OperatorFamily,
};
use moment_leibniz_core::multiindex::{enumerate_height_at_most, enumerate_nonzero};
use moment_leibniz_core::polycalc::check_leibniz;
use moment_leibniz_core::rational::{from_int, ratio};
use moment_leibniz_core::semigroup::{
    identity_terms, make_exponential_moment_seq, moment_function_terms, verify_moment_seq, Element, Monoid,
    SequenceFunctions,
};
use moment_leibniz_core::{Error, MultiIndex, Polynomial, Result};
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TIME_LIMIT: Duration = Duration::from_secs(60);

fn criterion<F: FnOnce() -> std::result::Result<String, String>>(id: &str, title: &str, body: F) {
    let outcome = match panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let line = match &outcome {
        Ok(note) => format!("[PASS] {id} {title}: {note}\n"),
        Err(why) => format!("[FAIL] {id} {title}: {why}\n"),
    };
    // bypasses the test harness capture so the line always shows up
    let _ = std::io::stdout().write_all(line.as_bytes());
    if let Err(why) = outcome {
        panic!("{id} failed: {why}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec()).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `∂_i p`, computed term by term.
fn partial(p: &Polynomial, i: usize) -> Polynomial {
    let terms = p.terms().filter(|(e, _)| e.entries()[i] > 0).map(|(e, c)| {
        let mut v = e.entries().to_vec();
        let k = v[i];
        v[i] -= 1;
        (mi(&v), c * BigRational::from_integer(k.into()))
    });
    Polynomial::from_terms(p.dim(), terms.collect::<Vec<_>>()).unwrap()
}

/// `D^α p` as repeated first partials.
fn naive_dalpha(p: &Polynomial, alpha: &MultiIndex) -> Polynomial {
    let mut out = p.clone();
    for (i, &k) in alpha.entries().iter().enumerate() {
        for _ in 0..k {
            out = partial(&out, i);
        }
    }
    out
}

fn choose(n: u32, k: u32) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

fn multi_choose(a: &[u32], b: &[u32]) -> u64 {
    a.iter().zip(b).map(|(&n, &k)| choose(n, k)).product()
}

/// Every `β ≤ α`, built without the library's enumerator.
fn below(alpha: &[u32]) -> Vec<Vec<u32>> {
    alpha.iter().fold(vec![vec![]], |acc, &a| {
        acc.into_iter()
            .flat_map(|prefix| {
                (0..=a).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect()
    })
}

#[test]
fn ac1_generalized_leibniz_rule() {
    criterion("AC1", "generalized Leibniz rule, exact, 500 pairs", || {
        let start = Instant::now();
        let mut r = rng(1);
        let mut checks = 0usize;
        for pair in 0..500 {
            let dim = 1 + pair % 3;
            let f = Polynomial::random(&mut r, dim, 6, 8);
            let g = Polynomial::random(&mut r, dim, 6, 8);
            let fg = &f * &g;
            for alpha in enumerate_height_at_most(dim, 4) {
                checks += 1;
                ensure(check_leibniz(&f, &g, &alpha).unwrap(), || {
                    format!("library check fails at pair {pair}, alpha {alpha}")
                })?;
                // independent expansion of the right-hand side
                let mut rhs = Polynomial::zero(dim);
                for b in below(alpha.entries()) {
                    let rest: Vec<u32> = alpha.entries().iter().zip(&b).map(|(a, b)| a - b).collect();
                    let w = from_int(multi_choose(alpha.entries(), &b) as i64);
                    rhs = &rhs + &(&naive_dalpha(&f, &mi(&b)) * &naive_dalpha(&g, &mi(&rest))).scale(&w);
                }
                ensure(naive_dalpha(&fg, &alpha) == rhs, || {
                    format!("oracle disagrees at pair {pair}, alpha {alpha}")
                })?;
                ensure(fg.dalpha(&alpha).unwrap() == rhs, || {
                    format!("dalpha disagrees at pair {pair}, alpha {alpha}")
                })?;
            }
        }
        let elapsed = start.elapsed();
        ensure(elapsed < TIME_LIMIT, || format!("took {elapsed:?}"))?;
        Ok(format!(
            "{checks} exact checks, 0 failures, {:.1}s",
            elapsed.as_secs_f64()
        ))
    });
}

#[test]
fn ac2_derivative_family() {
    criterion("AC2", "derivative family is a moment sequence", || {
        let start = Instant::now();
        let mut runs = 0;
        for dim in 1..=3 {
            for order in 0..=4 {
                let mut r = rng(100 + 10 * dim as u64 + order as u64);
                let domain = Domain::unit_box(dim, 8, &mut r).unwrap();
                let probes = standard_probes(&domain, 100, &mut r);
                let fam = make_derivative(dim, order).unwrap();
                let rep = verify_moment(&fam, &probes, &domain, None).unwrap();
                ensure(rep.exact && rep.pass && rep.max_residual == 0.0, || {
                    format!("r={dim} N={order}: {:?}", rep.failures.first())
                })?;
                runs += 1;
            }
        }
        let elapsed = start.elapsed();
        ensure(elapsed < TIME_LIMIT, || format!("took {elapsed:?}"))?;
        Ok(format!("{runs} (r, N) cases exact, {:.1}s", elapsed.as_secs_f64()))
    });
}

/// `T_0 ≡ 1` and a single nonzero `T_α`.
struct Perturbed {
    alpha: MultiIndex,
    op: Box<dyn Fn(&Polynomial) -> FuncExpr + Sync>,
}

impl MomentFamily for Perturbed {
    fn rank(&self) -> usize {
        2
    }
    fn dim(&self) -> usize {
        2
    }
    fn order(&self) -> u32 {
        3
    }
    fn apply(&self, alpha: &MultiIndex, f: &Polynomial) -> Result<FuncExpr> {
        Ok(if alpha.is_zero() {
            FuncExpr::constant(2, from_int(1))
        } else if alpha == &self.alpha {
            (self.op)(f)
        } else {
            FuncExpr::zero(2)
        })
    }
    fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({ "perturbed": self.alpha.to_string() })
    }
}

#[test]
fn ac3_trivial_family() {
    criterion("AC3", "trivial family and collapse of perturbations", || {
        let mut r = rng(3);
        for (dim, order) in [(1, 3), (2, 3), (3, 2)] {
            let domain = Domain::unit_box(dim, 10, &mut r).unwrap();
            let probes = standard_probes(&domain, 30, &mut r);
            let rep = verify_moment(&make_trivial(dim, order).unwrap(), &probes, &domain, None).unwrap();
            ensure(rep.pass && rep.max_residual == 0.0, || {
                format!("trivial r={dim} N={order} residual {}", rep.max_residual)
            })?;
        }

        let domain = Domain::unit_box(2, 10, &mut r).unwrap();
        let probes = standard_probes(&domain, 20, &mut r);
        ensure(
            assert_trivial_collapse(&make_trivial(2, 3).unwrap(), &probes, &domain)
                .unwrap()
                .pass,
            || "trivial family rejected".into(),
        )?;

        let x1 = Polynomial::var(2, 0);
        let d = |a: MultiIndex| move |f: &Polynomial| FuncExpr::poly(f.dalpha(&a).unwrap());
        let candidates: Vec<Perturbed> = vec![
            Perturbed {
                alpha: mi(&[1, 0]),
                op: Box::new(|f| FuncExpr::poly(f.clone())),
            },
            Perturbed {
                alpha: mi(&[0, 1]),
                op: Box::new(|_| FuncExpr::constant(2, from_int(5))),
            },
            Perturbed {
                alpha: mi(&[1, 1]),
                op: Box::new(|f| FuncExpr::poly(f * f)),
            },
            Perturbed {
                alpha: mi(&[2, 0]),
                op: Box::new(|f| FuncExpr::xlogabs(FuncExpr::poly(f.clone()))),
            },
            Perturbed {
                alpha: mi(&[1, 0]),
                op: Box::new(d(mi(&[1, 0]))),
            },
            Perturbed {
                alpha: mi(&[0, 2]),
                op: Box::new(|f| FuncExpr::poly(f + &Polynomial::from_int(2, 1))),
            },
            Perturbed {
                alpha: mi(&[2, 1]),
                op: Box::new(|_| FuncExpr::constant(2, from_int(-1))),
            },
            Perturbed {
                alpha: mi(&[0, 3]),
                op: Box::new(move |_| FuncExpr::poly(x1.clone())),
            },
            Perturbed {
                alpha: mi(&[1, 2]),
                op: Box::new(|f| FuncExpr::scale(ratio(1, 1000), FuncExpr::poly(f.clone()))),
            },
            Perturbed {
                alpha: mi(&[1, 1]),
                op: Box::new(d(mi(&[1, 1]))),
            },
        ];
        for (i, c) in candidates.iter().enumerate() {
            let rep = assert_trivial_collapse(c, &probes, &domain).unwrap();
            ensure(!rep.pass && rep.witness.is_some(), || {
                format!("candidate {i} at {} not rejected", c.alpha)
            })?;
        }
        Ok(format!("residual 0, {} perturbations rejected", candidates.len()))
    });
}

#[test]
fn ac4_identity_generated_converse() {
    criterion("AC4", "structure-valid supports yield moment families", || {
        let mut families = 0;
        for dim in 1..=2 {
            for order in 1..=3 {
                let patterns = enumerate_valid_constant_supports(dim, order, usize::MAX, &Budget::default()).unwrap();
                for p in &patterns {
                    ensure(p.is_structure_valid(), || {
                        format!("non-structure-valid support {:?}", p.support)
                    })?;
                }
                for (k, p) in patterns.iter().enumerate() {
                    for seed in 0..5u64 {
                        let s = 1000 * dim as u64 + 100 * order as u64 + 7 * k as u64 + seed;
                        let mut r = rng(s);
                        let domain = Domain::unit_box(dim, 8, &mut r).unwrap();
                        let probes = standard_probes(&domain, 10, &mut r);
                        let cf = random_valid_family(p, s).unwrap();
                        let fam = make_identity_generated(cf, &domain).unwrap();
                        let rep = verify_moment(&fam, &probes, &domain, Some(s)).unwrap();
                        ensure(rep.pass && rep.max_residual <= 1e-9, || {
                            format!("support {:?} seed {s}: {:?}", p.support, rep.failures.first())
                        })?;
                        ensure(rep.vanishing_checks > 0, || "no vanishing probe was exercised".into())?;
                        families += 1;
                    }
                }
            }
        }
        Ok(format!(
            "{families} families pass, both sides exactly 0 where f*g vanishes"
        ))
    });
}

/// Constrained sums for constant coefficients, expanded directly.
fn constraint_sums(values: &BTreeMap<Vec<u32>, i64>, r: usize, order: u32) -> Vec<i64> {
    let mut out = Vec::new();
    for alpha in enumerate_nonzero(r, order).iter().filter(|a| a.height() >= 2) {
        let a = alpha.entries();
        let mut sum = 0i64;
        for b in below(a) {
            let rest: Vec<u32> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            if b.iter().all(|&v| v == 0) || rest.iter().all(|&v| v == 0) {
                continue;
            }
            let w = multi_choose(a, &b) as i64;
            sum += w * values.get(&b).copied().unwrap_or(0) * values.get(&rest).copied().unwrap_or(0);
        }
        out.push(sum);
    }
    out
}

/// Supports of all integer solutions with entries in `-2..=2`.
fn brute_force_supports(r: usize, order: u32) -> BTreeSet<BTreeSet<Vec<u32>>> {
    let idx: Vec<Vec<u32>> = enumerate_nonzero(r, order)
        .iter()
        .map(|a| a.entries().to_vec())
        .collect();
    let mut digits = vec![0usize; idx.len()];
    let grid = [-2i64, -1, 0, 1, 2];
    let mut supports = BTreeSet::new();
    loop {
        let values: BTreeMap<Vec<u32>, i64> = idx.iter().cloned().zip(digits.iter().map(|&d| grid[d])).collect();
        if constraint_sums(&values, r, order).iter().all(|&s| s == 0) {
            supports.insert(values.iter().filter(|(_, &v)| v != 0).map(|(k, _)| k.clone()).collect());
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return supports;
            }
            digits[i] += 1;
            if digits[i] < grid.len() {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn ac5_constraint_forcing() {
    criterion("AC5", "forced-zero coefficients match brute-force expansion", || {
        let full = |r: usize, n: u32| SupportPattern::new(r, n, enumerate_nonzero(r, n)).unwrap();
        let forced = forced_zero_analysis(&full(1, 2));
        ensure(forced == BTreeSet::from([mi(&[1])]), || {
            format!("r=1 N=2 forced {forced:?}")
        })?;
        let forced = forced_zero_analysis(&full(2, 2));
        ensure(forced == BTreeSet::from([mi(&[1, 0]), mi(&[0, 1])]), || {
            format!("r=2 N=2 forced {forced:?}")
        })?;

        for (r, n) in [(1, 2), (1, 3), (1, 4), (2, 2)] {
            let oracle = brute_force_supports(r, n);
            // a coefficient is forced to zero iff no solution uses it
            let used: BTreeSet<Vec<u32>> = oracle.iter().flatten().cloned().collect();
            let oracle_forced: BTreeSet<MultiIndex> = enumerate_nonzero(r, n)
                .into_iter()
                .filter(|a| !used.contains(a.entries()))
                .collect();
            let solver_forced = forced_zero_analysis(&full(r, n));
            ensure(oracle_forced == solver_forced, || {
                format!("r={r} N={n}: oracle {oracle_forced:?}, solver {solver_forced:?}")
            })?;
            let solver: BTreeSet<BTreeSet<Vec<u32>>> =
                enumerate_valid_constant_supports(r, n, usize::MAX, &Budget::default())
                    .unwrap()
                    .iter()
                    .map(|p| p.support.iter().map(|a| a.entries().to_vec()).collect())
                    .collect();
            ensure(oracle == solver, || format!("r={r} N={n}: supports differ"))?;
        }

        let mut r = rng(5);
        let domain = Domain::unit_box(1, 8, &mut r).unwrap();
        let bad = CoeffFamily::new(1, 2, [(mi(&[1]), FuncExpr::constant(1, from_int(1)))]).unwrap();
        ensure(
            matches!(
                make_identity_generated(bad, &domain),
                Err(Error::ConstraintViolated { .. })
            ),
            || "c_1 = 1 accepted".into(),
        )?;
        Ok("r=1 N=2 forces c_1; r=2 N=2 forces both height-1 coefficients".into())
    });
}

#[test]
fn ac6_second_order_rule() {
    criterion("AC6", "second-order Leibniz rule and necessity clauses", || {
        let zero = || FuncExpr::zero(1);
        let one = || FuncExpr::constant(1, from_int(1));
        let pair = make_second_order_leibniz(zero(), vec![zero()], vec![one()], 2, 1).unwrap();
        let mut r = rng(6);
        let domain = Domain::unit_box(1, 10, &mut r).unwrap();
        let probes: Vec<(Polynomial, Polynomial)> = (0..100)
            .map(|_| (Polynomial::random(&mut r, 1, 5, 6), Polynomial::random(&mut r, 1, 5, 6)))
            .collect();
        let worst = check_second_order_rule(&pair, &probes, &domain).unwrap();
        ensure(worst == 0.0, || format!("residual {worst}"))?;

        // T = d²/dx², A = d/dx; symbolic oracle (fg)'' = f''g + fg'' + 2f'g'
        for (f, g) in &probes {
            let (f1, g1) = (partial(f, 0), partial(g, 0));
            let expected = &(&(&partial(&f1, 0) * g) + &(f * &partial(&g1, 0))) + &(&f1 * &g1).scale(&from_int(2));
            let fg = f * g;
            for x in domain.samples() {
                let lhs = pair.apply_t(&fg).eval_exact(x).unwrap();
                ensure(lhs == expected.eval(x).unwrap(), || format!("T(fg) differs at {x}"))?;
                ensure(pair.apply_a(f).eval_exact(x).unwrap() == f1.eval(x).unwrap(), || {
                    format!("A(f) differs at {x}")
                })?;
            }
        }

        let k1 = make_second_order_leibniz(zero(), vec![one()], vec![one()], 1, 1);
        ensure(k1 == Err(Error::NecessityClause { k: 1, field: "c" }), || {
            format!("k=1 gave {k1:?}")
        })?;
        let k0 = make_second_order_leibniz(zero(), vec![one()], vec![zero()], 0, 1);
        ensure(k0 == Err(Error::NecessityClause { k: 0, field: "b" }), || {
            format!("k=0 gave {k0:?}")
        })?;
        let k0c = make_second_order_leibniz(zero(), vec![zero()], vec![one()], 0, 1);
        ensure(k0c.is_err(), || "k=0 with c = 1 accepted".into())?;
        Ok("exact on 100 pairs, k=0 and k=1 violations rejected".into())
    });
}

fn sample_values(fam: &OperatorFamily, probes: &[(Polynomial, Polynomial)], domain: &Domain) -> Vec<f64> {
    let mut out = Vec::new();
    for alpha in enumerate_height_at_most(fam.rank(), fam.order()) {
        for (f, g) in probes {
            for h in [f, g] {
                let e = fam.apply(&alpha, h).unwrap();
                out.extend(domain.samples().iter().map(|x| e.eval(x).unwrap()));
            }
        }
    }
    out
}

fn agree(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

#[test]
fn ac7_conjugation() {
    criterion("AC7", "conjugated families", || {
        let mut r = rng(7);
        let reflect = CoordMap::new(vec![&Polynomial::from_int(1, 1) - &Polynomial::var(1, 0)]).unwrap();
        let d1 = Domain::unit_box(1, 10, &mut r).unwrap();
        let p1 = standard_probes(&d1, 20, &mut r);
        let ig1 = CoeffFamily::new(
            1,
            3,
            [
                (mi(&[2]), FuncExpr::constant(1, from_int(1))),
                (mi(&[3]), FuncExpr::poly(Polynomial::var(1, 0))),
            ],
        )
        .unwrap();
        let fams1 = [
            make_derivative(1, 3).unwrap(),
            make_identity_generated(ig1, &d1).unwrap(),
        ];

        // (x, y) ↦ ((x+y)/2, (x−y+1)/2) contracts the unit square into itself
        let half = ratio(1, 2);
        let shear = CoordMap::affine(
            &[vec![half.clone(), half.clone()], vec![half.clone(), -half.clone()]],
            &[BigRational::zero(), half.clone()],
        )
        .unwrap();
        // (x, y) ↦ (1−y, x) and its inverse (u, v) ↦ (v, 1−u)
        let rot = CoordMap::affine(
            &[vec![from_int(0), from_int(-1)], vec![from_int(1), from_int(0)]],
            &[from_int(1), from_int(0)],
        )
        .unwrap();
        let rot_inv = CoordMap::affine(
            &[vec![from_int(0), from_int(1)], vec![from_int(-1), from_int(0)]],
            &[from_int(0), from_int(1)],
        )
        .unwrap();
        let d2 = Domain::unit_box(2, 10, &mut r).unwrap();
        let p2 = standard_probes(&d2, 20, &mut r);
        let ig2 = random_valid_family(
            &SupportPattern::new(2, 3, [mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 3])]).unwrap(),
            7,
        )
        .unwrap();
        let fams2 = [
            make_derivative(2, 3).unwrap(),
            make_identity_generated(ig2, &d2).unwrap(),
        ];

        let mut worst: f64 = 0.0;
        let mut cases = 0;
        let mut run = |fam: &OperatorFamily,
                       tau: &CoordMap,
                       tau_inv: Option<&CoordMap>,
                       d: &Domain,
                       p: &[(Polynomial, Polynomial)]| {
            let conj = conjugate(fam, tau.clone(), d).unwrap();
            let rep = verify_moment(&conj, p, d, None).unwrap();
            ensure(rep.pass && rep.max_residual <= 1e-9, || {
                format!("{}: {:?}", conj.descriptor(), rep.failures.first())
            })?;
            worst = worst.max(rep.max_residual);
            cases += 1;
            if let Some(inv) = tau_inv {
                let back = conjugate(&conj, inv.clone(), d).unwrap();
                ensure(
                    agree(&sample_values(&back, p, d), &sample_values(fam, p, d), 1e-12),
                    || format!("double conjugation of {} drifts", fam.descriptor()),
                )?;
            }
            Ok::<(), String>(())
        };
        for fam in &fams1 {
            run(fam, &reflect, Some(&reflect), &d1, &p1)?;
        }
        for fam in &fams2 {
            run(fam, &shear, None, &d2, &p2)?;
            run(fam, &rot, Some(&rot_inv), &d2, &p2)?;
        }
        Ok(format!(
            "{cases} conjugated families, max residual {worst:e}, round trips within 1e-12"
        ))
    });
}

#[test]
fn ac8_power_sign_map() {
    criterion("AC8", "power-sign map is multiplicative", || {
        let mut r = rng(8);
        let domain = Domain::unit_box(1, 12, &mut r).unwrap();
        let probes = standard_probes(&domain, 50, &mut r);
        let exponents = [
            FuncExpr::constant(1, from_int(1)),
            FuncExpr::constant(1, from_int(2)),
            FuncExpr::poly(&Polynomial::constant(1, ratio(1, 2)) + &Polynomial::var(1, 0)),
        ];
        let taus = [
            CoordMap::identity(1),
            CoordMap::new(vec![&Polynomial::from_int(1, 1) - &Polynomial::var(1, 0)]).unwrap(),
        ];
        let mut worst: f64 = 0.0;
        for p in &exponents {
            for tau in &taus {
                let map = PowerSignMap::new(p.clone(), tau.clone(), &domain).unwrap();
                let rep = check_multiplicative(&map, &probes, &domain).unwrap();
                ensure(rep.pass && rep.sign_preserving && rep.max_residual <= 1e-9, || {
                    format!("{rep}: {:?}", rep.witness)
                })?;
                worst = worst.max(rep.max_residual);
            }
        }
        Ok(format!("6 maps, 50 probes each, max residual {worst:e}"))
    });
}

#[test]
fn ac9_semigroup_moment_sequences() {
    criterion("AC9", "exponential moment sequences on (R, +)", || {
        let mut cases = 0;
        let mut worst: f64 = 0.0;
        for rank in 1..=3usize {
            for order in 0..=4u32 {
                for lambda in [-1.0, 0.0, 1.0] {
                    let mut r = rng(900 + 100 * rank as u64 + 10 * order as u64 + (lambda + 1.0) as u64);
                    let c: Vec<f64> = (0..rank).map(|_| r.gen_range(-2.0..2.0)).collect();
                    let seq = make_exponential_moment_seq(rank, order, lambda, &c).unwrap();
                    let probes = Monoid::Reals.probes(100, &mut r);
                    let rep = verify_moment_seq(&seq, &probes, 1e-10).unwrap();
                    ensure(rep.pass && rep.max_residual <= 1e-10, || {
                        format!("r={rank} N={order} lambda={lambda}: {:?}", rep.failures.first())
                    })?;
                    worst = worst.max(rep.max_residual);
                    cases += 1;
                }
            }
        }

        // rank one: the verifier's summands are the recurrence's summands
        let mut r = rng(99);
        for lambda in [-1.0, 0.0, 1.0] {
            let c = r.gen_range(-2.0..2.0);
            let seq = make_exponential_moment_seq(1, 4, lambda, &[c]).unwrap();
            let phi = |j: u32, x: &Element| -> f64 {
                let Element::Real(t) = x else { unreachable!() };
                (lambda * t).exp() * (c * t).powi(j as i32)
            };
            for (x, y) in Monoid::Reals.probes(100, &mut r) {
                for k in 0..=4u32 {
                    let alpha = MultiIndex::scalar(k);
                    let verifier = identity_terms(&seq, &alpha, &x, &y).unwrap();
                    let library =
                        moment_function_terms(|j, p| seq.value(&MultiIndex::scalar(j), p), k, &x, &y).unwrap();
                    ensure(verifier == library, || format!("summands differ at k={k}"))?;
                    let oracle: Vec<f64> = (0..=k)
                        .map(|j| choose(k, j) as f64 * phi(j, &x) * phi(k - j, &y))
                        .collect();
                    ensure(agree(&verifier, &oracle, 1e-14), || {
                        format!("oracle summands differ at k={k}")
                    })?;
                }
            }
        }
        Ok(format!(
            "{cases} sequences, max residual {worst:e}; rank-1 summands match term for term"
        ))
    });
}
