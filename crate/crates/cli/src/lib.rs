//! Reproduction registry, report rows and sweeps behind the `interdep-trade` binary.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use interdep_core::error::{Error, Result};

pub mod jobs;
pub mod sweep;

pub const DEFAULT_SEED: u64 = 42;
pub const THREADS_ENV: &str = "INTERDEP_TRADE_THREADS";

/// Registry job names, in the order `repro all` runs them.
pub const REGISTRY: [&str; 17] = [
    "thm-3.1-reduction",
    "cor-3.2-single-crossing",
    "cor-3.3-offer-dominance",
    "thm-4.2-seller-signal-lp",
    "thm-5.1-buyer-signal-lp",
    "lemma-5.2-alloc-mass",
    "lemma-c1-alloc-mass",
    "thm-6.1-zero-beta",
    "thm-6.2-bound-chain",
    "prop-8.1-bound",
    "prop-8.2-bound",
    "thm-7.1-polynomial-mech",
    "thm-7.2-polynomial-lb",
    "claim-a1-expost",
    "example-no-equilibrium",
    "intro-0-0-mechanism",
    "myerson-identity",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    /// `lhs rel rhs` with absolute slack `tol`; non-finite sides never hold.
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        if !lhs.is_finite() || !rhs.is_finite() {
            return false;
        }
        match self {
            Relation::Ge => lhs >= rhs - tol,
            Relation::Gt => lhs > rhs - tol,
            Relation::Le => lhs <= rhs + tol,
            Relation::Lt => lhs < rhs + tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "=",
        }
    }
}

/// The two sides of one checked inequality.
#[derive(Clone, Copy, Debug)]
pub struct Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub tolerance: f64,
}

impl Outcome {
    pub fn new(lhs: f64, relation: Relation, rhs: f64, tolerance: f64) -> Self {
        Outcome {
            lhs,
            rhs,
            relation,
            tolerance,
        }
    }

    /// A count that must be zero.
    pub fn zero_count(n: usize) -> Self {
        Outcome::new(n as f64, Relation::Eq, 0.0, 0.0)
    }
}

type CheckFn = Box<dyn Fn(u64) -> Result<Outcome> + Send + Sync>;

/// One CSV row's worth of work.
pub struct Check {
    pub name: String,
    run: CheckFn,
}

impl Check {
    pub fn new(name: impl Into<String>, run: impl Fn(u64) -> Result<Outcome> + Send + Sync + 'static) -> Self {
        Check {
            name: name.into(),
            run: Box::new(run),
        }
    }
}

/// CSV row; the column set is fixed.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_ms: u64,
    pub seed: u64,
    #[serde(skip)]
    pub error: Option<String>,
}

/// Checks behind a registry name or one of the parameterised aliases
/// `thm-polynomial-lb-k<k>` and `bound-2-over-3beta@beta=<v>`.
pub fn checks_for(name: &str) -> Result<Vec<Check>> {
    if name == "all" {
        return Ok(REGISTRY.iter().flat_map(|n| jobs::checks(n).expect("registry job")).collect());
    }
    if let Some(c) = jobs::checks(name) {
        return Ok(c);
    }
    if let Some(c) = jobs::alias(name)? {
        return Ok(c);
    }
    Err(Error::Validation(format!(
        "unknown job `{name}`; known jobs: all, {}",
        REGISTRY.join(", ")
    )))
}

/// Runs every check in parallel and returns rows sorted by name. With
/// `timing` off, `runtime_ms` is 0 so reports are byte-identical across runs.
pub fn run_checks(checks: &[Check], seed: u64, timing: bool) -> Vec<Row> {
    let mut rows: Vec<Row> = checks
        .par_iter()
        .map(|c| {
            let start = Instant::now();
            let out = (c.run)(seed);
            let runtime_ms = if timing { start.elapsed().as_millis() as u64 } else { 0 };
            match out {
                Ok(o) => Row {
                    name: c.name.clone(),
                    lhs: o.lhs,
                    rhs: o.rhs,
                    relation: o.relation,
                    tolerance: o.tolerance,
                    pass: o.relation.holds(o.lhs, o.rhs, o.tolerance),
                    runtime_ms,
                    seed,
                    error: None,
                },
                Err(e) => Row {
                    name: c.name.clone(),
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    relation: Relation::Eq,
                    tolerance: 0.0,
                    pass: false,
                    runtime_ms,
                    seed,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    rows
}

pub fn repro(name: &str, seed: u64, timing: bool) -> Result<Vec<Row>> {
    Ok(run_checks(&checks_for(name)?, seed, timing))
}

pub fn write_csv<W: std::io::Write>(rows: &[Row], w: W) -> std::result::Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    if rows.is_empty() {
        out.write_record(["name", "lhs", "rhs", "relation", "tolerance", "pass", "runtime_ms", "seed"])?;
    }
    out.flush()?;
    Ok(())
}

/// Sizes the global rayon pool from `INTERDEP_TRADE_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Validation(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    // A pool already built by an earlier call keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// `x` with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        format!("{:.*}", (11 - e) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

/// Parses `lo:hi:step` (inclusive, empty when `lo > hi`) or a comma list.
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Validation(format!("expected `lo:hi:step` or a comma list, got `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').map(num).collect(),
        3 => {
            let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if step.is_nan() || step <= 0.0 || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Validation(format!("range `{s}` needs finite ends and step > 0")));
            }
            if lo > hi {
                return Ok(Vec::new());
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            // Values are rounded to the step's decimals so 0.1 + 2·0.1 prints as 0.3.
            Ok((0..=n).map(|k| round_like(lo + k as f64 * step, step)).collect())
        }
        _ => Err(bad()),
    }
}

fn round_like(x: f64, step: f64) -> f64 {
    let digits = (-(step.log10().floor()) as i32 + 2).clamp(0, 15);
    let scale = 10f64.powi(digits);
    (x * scale).round() / scale
}
