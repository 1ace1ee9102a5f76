use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moment_leibniz_core::coeffsolve::{
    enumerate_valid_constant_supports, random_structure_valid_pattern, random_valid_family, Budget,
};
use moment_leibniz_core::funcmodel::{standard_probes, Domain, Interval};
use moment_leibniz_core::momentfam::{verify_moment, FamilyKind, OperatorFamily};
use moment_leibniz_core::multiindex::{enumerate_height_at_most, MultiIndex};
use moment_leibniz_core::polycalc::check_leibniz;
use moment_leibniz_core::semigroup::{make_exponential_on, verify_moment_seq, Monoid};
use moment_leibniz_core::{rational, Error, Polynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

const SEED_ENV: &str = "MOMENT_LEIBNIZ_SEED";

#[derive(Parser, Debug)]
#[command(
    name = "moment-leibniz",
    version,
    about = "Checks Leibniz-type operator identities and moment sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Multi-index rank r.
    #[arg(long, global = true, default_value_t = 2)]
    rank: usize,

    /// Maximal order N.
    #[arg(long, global = true, default_value_t = 3)]
    order: u32,

    /// Master seed; overridden by MOMENT_LEIBNIZ_SEED.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Sample points in the box.
    #[arg(long, global = true, default_value_t = 16)]
    samples: usize,

    /// Probe pairs per run.
    #[arg(long, global = true, default_value_t = 20)]
    probes: usize,

    /// Relative tolerance for non-exact checks.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Largest index set the support search may enumerate.
    #[arg(long, global = true)]
    budget: Option<usize>,

    /// Write the JSON output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact check of D^α(fg) = Σ binom(α,β) D^β f D^{α−β} g on random polynomials.
    VerifyLeibniz {
        /// Maximal degree of the random polynomials.
        #[arg(long, default_value_t = 4)]
        degree: u32,
    },
    /// Checks the moment identity for an operator family given as JSON.
    VerifyFamily {
        /// Descriptor file, or "-" for stdin.
        descriptor: String,
        /// Interval used for every coordinate of the box, as "lo:hi".
        #[arg(long, default_value = "0:1")]
        interval: String,
    },
    /// Lists the supports that admit nonzero constant coefficients.
    SearchSupports {
        /// Largest support size to consider (default: all).
        #[arg(long)]
        max_size: Option<usize>,
    },
    /// Checks exponential moment sequences over a sweep of seeds.
    VerifySemigroup {
        /// Comma-separated exponential rates.
        #[arg(long, default_value = "-1,0,1", value_delimiter = ',', allow_hyphen_values = true)]
        lambdas: Vec<f64>,
        /// Number of seeds in the sweep.
        #[arg(long, default_value_t = 5)]
        sweep: u64,
        /// Use (ℕ^d, +) instead of (ℝ, +).
        #[arg(long)]
        lattice: Option<usize>,
        /// Scale f_{2e_1} by 1.01 in every sequence.
        #[arg(long)]
        tamper: bool,
    },
    /// Emits a random identity-generated family descriptor.
    GenFamily,
}

enum Failure {
    Input(String),
    /// Input rejected with a concrete witness.
    Witnessed(String, Value),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
            Error::ConstraintViolated {
                ref alpha,
                ref point,
                value,
            } => {
                let w = json!({ "alpha": alpha, "point": point, "value": value });
                Failure::Witnessed(e.to_string(), w)
            }
            other => Failure::Input(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Report {
    command: &'static str,
    config: Value,
    config_hash: String,
    seed: u64,
    failures: Vec<Value>,
    max_residual: f64,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    details: Value,
}

struct Outcome {
    failures: Vec<Value>,
    max_residual: f64,
    pass: bool,
    details: Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = match std::env::var(SEED_ENV) {
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(v) => v,
            Err(_) => {
                eprintln!("error: {SEED_ENV}={s:?} is not an unsigned integer");
                return ExitCode::from(2);
            }
        },
        Err(_) => cli.seed,
    };
    let (name, config) = describe(&cli, seed);

    if let Command::GenFamily = cli.command {
        return match gen_family(&cli, seed) {
            Ok(v) => emit(&cli, &v, 0),
            Err(f) => fail(&cli, name, config, seed, f),
        };
    }

    let result = match &cli.command {
        Command::VerifyLeibniz { degree } => verify_leibniz(&cli, seed, *degree),
        Command::VerifyFamily { descriptor, interval } => verify_family(&cli, seed, descriptor, interval),
        Command::SearchSupports { max_size } => search_supports(&cli, *max_size),
        Command::VerifySemigroup {
            lambdas,
            sweep,
            lattice,
            tamper,
        } => verify_semigroup(&cli, seed, lambdas, *sweep, *lattice, *tamper),
        Command::GenFamily => unreachable!(),
    };
    match result {
        Ok(o) => {
            let code = if o.pass { 0 } else { 1 };
            let report = Report {
                command: name,
                config_hash: hash(&config),
                config,
                seed,
                failures: o.failures,
                max_residual: o.max_residual,
                pass: o.pass,
                error: None,
                details: o.details,
            };
            emit(&cli, &serde_json::to_value(report).expect("report serializes"), code)
        }
        Err(f) => fail(&cli, name, config, seed, f),
    }
}

fn fail(cli: &Cli, name: &'static str, config: Value, seed: u64, f: Failure) -> ExitCode {
    let (code, msg, failures) = match f {
        Failure::Input(m) => (2, m, vec![]),
        Failure::Witnessed(m, w) => (2, m, vec![w]),
        Failure::Budget(m) => (3, m, vec![]),
    };
    eprintln!("error: {msg}");
    let report = Report {
        command: name,
        config_hash: hash(&config),
        config,
        seed,
        failures,
        max_residual: 0.0,
        pass: false,
        error: Some(msg),
        details: Value::Null,
    };
    emit(cli, &serde_json::to_value(report).expect("report serializes"), code)
}

fn emit(cli: &Cli, v: &Value, code: u8) -> ExitCode {
    let mut text = serde_json::to_string_pretty(v).expect("json value serializes");
    text.push('\n');
    let written = match &cli.out {
        Some(path) => fs::write(path, text),
        None => io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}

fn hash(config: &Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

/// The effective configuration; everything that influences the result.
fn describe(cli: &Cli, seed: u64) -> (&'static str, Value) {
    let base = json!({
        "rank": cli.rank,
        "order": cli.order,
        "seed": seed,
        "samples": cli.samples,
        "probes": cli.probes,
        "tol": cli.tol,
        "budget": cli.budget,
    });
    let (name, extra) = match &cli.command {
        Command::VerifyLeibniz { degree } => ("verify-leibniz", json!({ "degree": degree })),
        Command::VerifyFamily { descriptor, interval } => (
            "verify-family",
            json!({ "descriptor": descriptor, "interval": interval }),
        ),
        Command::SearchSupports { max_size } => ("search-supports", json!({ "max_size": max_size })),
        Command::VerifySemigroup {
            lambdas,
            sweep,
            lattice,
            tamper,
        } => (
            "verify-semigroup",
            json!({ "lambdas": lambdas, "sweep": sweep, "lattice": lattice, "tamper": tamper }),
        ),
        Command::GenFamily => ("gen-family", json!({})),
    };
    let mut config = base;
    if let (Value::Object(c), Value::Object(e)) = (&mut config, extra) {
        c.extend(e);
    }
    (name, config)
}

fn require_rank(r: usize) -> Result<(), Failure> {
    if r == 0 {
        return Err(Failure::Input("rank must be at least 1".into()));
    }
    Ok(())
}

fn verify_leibniz(cli: &Cli, seed: u64, degree: u32) -> Result<Outcome, Failure> {
    require_rank(cli.rank)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = enumerate_height_at_most(cli.rank, cli.order);
    let mut failures = Vec::new();
    let mut checks = 0usize;
    for probe in 0..cli.probes {
        let f = Polynomial::random(&mut rng, cli.rank, degree, 6);
        let g = Polynomial::random(&mut rng, cli.rank, degree, 6);
        for alpha in &indices {
            checks += 1;
            if !check_leibniz(&f, &g, alpha)? {
                failures.push(json!({ "probe": probe, "alpha": alpha, "f": f, "g": g }));
            }
        }
    }
    Ok(Outcome {
        pass: failures.is_empty(),
        failures,
        max_residual: 0.0,
        details: json!({ "exact": true, "pairs": cli.probes, "indices": indices.len(), "checks": checks }),
    })
}

fn parse_interval(s: &str) -> Result<Interval, Failure> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Failure::Input(format!("interval {s:?} is not of the form lo:hi")))?;
    Ok(Interval::new(rational::parse(lo)?, rational::parse(hi)?)?)
}

fn read_input(path: &str) -> Result<String, Failure> {
    let mut text = String::new();
    if path == "-" {
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure::Input(format!("cannot read stdin: {e}")))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {path}: {e}")))?;
    }
    Ok(text)
}

fn verify_family(cli: &Cli, seed: u64, descriptor: &str, interval: &str) -> Result<Outcome, Failure> {
    let text = read_input(descriptor)?;
    let kind: FamilyKind =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("bad family descriptor: {e}")))?;
    if kind.dim() == 0 {
        return Err(Failure::Input("rank must be at least 1".into()));
    }
    let iv = parse_interval(interval)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = cli.tol.unwrap_or(moment_leibniz_core::funcmodel::DEFAULT_TOLERANCE);
    let domain = Domain::sampled(vec![iv; kind.dim()], cli.samples, tol, &mut rng)?;
    let family = OperatorFamily::from_descriptor(kind, &domain)?;
    let probes = standard_probes(&domain, cli.probes, &mut rng);
    let report = verify_moment(&family, &probes, &domain, Some(seed))?;
    Ok(Outcome {
        failures: report
            .failures
            .iter()
            .map(|w| serde_json::to_value(w).expect("witness serializes"))
            .collect(),
        max_residual: report.max_residual,
        pass: report.pass,
        details: serde_json::to_value(&report).expect("report serializes"),
    })
}

fn search_supports(cli: &Cli, max_size: Option<usize>) -> Result<Outcome, Failure> {
    require_rank(cli.rank)?;
    let mut budget = Budget::default();
    if let Some(b) = cli.budget {
        budget.max_indices = b;
    }
    let max_size = max_size.unwrap_or(usize::MAX);
    let patterns = enumerate_valid_constant_supports(cli.rank, cli.order, max_size, &budget)?;
    Ok(Outcome {
        failures: vec![],
        max_residual: 0.0,
        pass: true,
        details: json!({ "count": patterns.len(), "patterns": patterns }),
    })
}

fn verify_semigroup(
    cli: &Cli,
    seed: u64,
    lambdas: &[f64],
    sweep: u64,
    lattice: Option<usize>,
    tamper: bool,
) -> Result<Outcome, Failure> {
    require_rank(cli.rank)?;
    if tamper && cli.order < 2 {
        return Err(Failure::Input("--tamper needs order at least 2".into()));
    }
    let monoid = match lattice {
        None => Monoid::Reals,
        Some(0) => return Err(Failure::Input("lattice dimension must be at least 1".into())),
        Some(d) => Monoid::Lattice { d },
    };
    let d = lattice.unwrap_or(1);
    let tol = cli.tol.unwrap_or(1e-10);
    let mut failures = Vec::new();
    let mut runs = Vec::new();
    let mut max_residual: f64 = 0.0;
    for s in 0..sweep {
        let run_seed = seed.wrapping_add(s);
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let c: Vec<Vec<f64>> = (0..cli.rank)
            .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let probes = monoid.probes(cli.probes, &mut rng);
        for &lambda in lambdas {
            let mut seq = make_exponential_on(monoid, cli.order, vec![lambda; d], c.clone())?;
            if tamper {
                let mut a = vec![0; cli.rank];
                a[0] = 2;
                seq = seq.tampered(MultiIndex::new(a)?, 1.01);
            }
            let report = verify_moment_seq(&seq, &probes, tol)?;
            max_residual = max_residual.max(report.max_residual);
            for w in &report.failures {
                let mut v = serde_json::to_value(w).expect("witness serializes");
                v["seed"] = json!(run_seed);
                v["lambda"] = json!(lambda);
                failures.push(v);
            }
            runs.push(json!({
                "seed": run_seed,
                "lambda": lambda,
                "c": c,
                "pass": report.pass,
                "max_residual": report.max_residual,
            }));
        }
    }
    Ok(Outcome {
        pass: failures.is_empty(),
        failures,
        max_residual,
        details: json!({ "monoid": monoid, "tolerance": tol, "runs": runs }),
    })
}

fn gen_family(cli: &Cli, seed: u64) -> Result<Value, Failure> {
    require_rank(cli.rank)?;
    let pattern = random_structure_valid_pattern(cli.rank, cli.order, seed)?;
    let cf = random_valid_family(&pattern, seed)?;
    Ok(serde_json::to_value(FamilyKind::IdentityGenerated { coefficients: cf }).expect("descriptor serializes"))
}
