use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use interdep_core::equilibrium::{solve_equilibrium, EqOptions, EquilibriumResult, EquilibriumStatus};
use interdep_core::error::{Error, Result};
use interdep_core::instances::{build, bound_buyer_signal, bound_seller_signal, Family, HardInstanceSpec};
use interdep_core::lp_oracle::{
    discretize, expost_violation, solve_optimal, verify_impossibility, Arithmetic, LpOptions, LpRegime,
};
use interdep_core::mechanisms::*;
use interdep_core::valuations::{opt_welfare, single_crossing, InfoStructure};
use interdep_trade::sweep::{self, SweepParams, Target};
use interdep_trade::{init_threads, parse_values, repro, sig12, write_csv, DEFAULT_SEED, REGISTRY};

#[derive(Parser)]
#[command(name = "interdep-trade", version, about = "Bilateral trade with interdependent values")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Informedness, expected values, OPT and single-crossing of an instance.
    Info {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Write a hard instance as JSON.
    Build {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Closed-form ratio bound of a construction, 12 significant digits.
    Bound {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Ratio and grid checks of a mechanism on an instance.
    Eval {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        mechanism: MechanismArg,
        /// Price for `posted-price`.
        #[arg(long)]
        price: Option<f64>,
        /// Grid for the incentive checks.
        #[arg(long, default_value_t = 41)]
        grid: usize,
    },
    /// Threshold equilibrium of the posted-price game.
    Equilibrium {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, required_unless_present = "price_grid")]
        price: Option<f64>,
        /// `lo:hi:step`, inclusive.
        #[arg(long, conflicts_with = "price")]
        price_grid: Option<String>,
        #[arg(long, default_value_t = EqOptions::default().grid_points)]
        grid_points: usize,
    },
    /// Welfare-optimal mechanism on a grid.
    Lp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "bic")]
        regime: RegimeArg,
        #[arg(long, default_value_t = 41)]
        nb: usize,
        #[arg(long, default_value_t = 41)]
        ns: usize,
        #[arg(long, value_enum, default_value = "auto")]
        arithmetic: ArithmeticArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// LP check of a construction's ratio bound.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 41)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a registry job, or `all`, and print the CSV report.
    Repro {
        job: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Write 0 in `runtime_ms` so reports are byte-identical across runs.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        list: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sweep a mechanism or corollary bound over parameter values.
    Sweep {
        /// One of the sweep targets, e.g. `zero-beta` or `buyer-c`.
        target: String,
        /// `lo:hi:step` or a comma list.
        #[arg(long, default_value = "")]
        alpha: String,
        #[arg(long, default_value = "")]
        beta: String,
        #[arg(long, default_value = "")]
        c: String,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        check_grid: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    family: Family,
    #[arg(long, default_value_t = 0)]
    k: u32,
    #[arg(long, default_value_t = 0)]
    m: u32,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
}

impl SpecArgs {
    fn spec(&self) -> HardInstanceSpec {
        HardInstanceSpec {
            family: self.family,
            k: self.k,
            m: self.m,
            alpha: self.alpha,
            beta: self.beta,
            c: self.c,
            eps: self.eps,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    NoTrade,
    PostedPrice,
    UninformedPair,
    ZeroBeta,
    Reduction,
    SingleCrossing,
    Polynomial,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegimeArg {
    Bic,
    Expost,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArithmeticArg {
    Auto,
    Exact,
    F64,
}

fn read_instance(path: &Path) -> Result<InfoStructure> {
    let text = fs::read_to_string(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    InfoStructure::from_json(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Error::Validation(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| v.to_string())
}

fn cmd_info(instance: &Path) -> Result<()> {
    let i = read_instance(instance)?;
    let p = i.informedness()?;
    let (eb, es) = i.expected_values()?;
    println!("alpha: {}", fmt_opt(p.alpha));
    println!("beta: {}", fmt_opt(p.beta));
    println!("E[v_b]: {eb}");
    println!("E[v_s]: {es}");
    println!("OPT: {}", opt_welfare(&i)?);
    println!("single_crossing: {}", single_crossing(&i)?);
    Ok(())
}

fn cmd_bound(spec: &HardInstanceSpec) -> Result<()> {
    let b = match spec.family {
        Family::BuyerSignal => bound_buyer_signal(spec.k, spec.m, spec.alpha, spec.beta)?,
        Family::SellerSignal => bound_seller_signal(spec.k, spec.m, spec.alpha, spec.beta)?,
        Family::PolynomialLB if spec.k >= 1 => spec.k as f64,
        _ => {
            return Err(Error::Precondition(
                "bounds exist for buyer-signal, seller-signal and polynomial-lb (k >= 1)".into(),
            ))
        }
    };
    println!("{}", sig12(b));
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    mechanism: String,
    opt: f64,
    alg: f64,
    ratio: f64,
    bound: Option<f64>,
    checks: CheckReport,
    pass: bool,
}

fn posted_price(i: &InfoStructure, price: f64) -> Result<Designed> {
    let eq = solve_equilibrium(i, price, &EqOptions::default())?;
    let thresholds = match eq.status {
        EquilibriumStatus::TradingEquilibrium { buyer, seller } => ThresholdProfile { buyer, seller },
        _ => ThresholdProfile {
            buyer: Threshold::Never,
            seller: Threshold::Never,
        },
    };
    Ok(Designed {
        mechanism: Mechanism::PostedPrice { price, thresholds },
        label: format!("posted-price@{price}"),
        bound: f64::INFINITY,
    })
}

fn cmd_eval(instance: &Path, m: MechanismArg, price: Option<f64>, grid: usize) -> Result<bool> {
    let i = read_instance(instance)?;
    let d = match m {
        MechanismArg::NoTrade => Designed {
            mechanism: mech_no_trade(),
            label: "no-trade".into(),
            bound: f64::INFINITY,
        },
        MechanismArg::PostedPrice => {
            posted_price(&i, price.ok_or_else(|| Error::Validation("posted-price needs --price".into()))?)?
        }
        MechanismArg::UninformedPair => mech_uninformed_pair(&i)?,
        MechanismArg::ZeroBeta => mech_zero_beta(&i)?,
        MechanismArg::Reduction => mech_reduction_informed_seller(&i, OfferGrid::default())?.designed,
        MechanismArg::SingleCrossing => mech_single_crossing(&i, OfferGrid::default())?,
        MechanismArg::Polynomial => mech_polynomial(&i)?.designed,
    };
    let r = ratio_report(&i, &d)?;
    let grid_inst = discretize(&i, grid, grid)?;
    let checks = check_mechanism(&grid_inst, &tabulate(&grid_inst, &d.mechanism)?);
    let report = EvalReport {
        mechanism: d.label,
        opt: r.opt,
        alg: r.alg,
        ratio: r.ratio,
        bound: d.bound.is_finite().then_some(d.bound),
        checks,
        pass: r.holds && checks.all_pass(),
    };
    println!("{}", pretty(&report)?);
    Ok(report.pass)
}

fn equilibrium_json(r: &EquilibriumResult) -> serde_json::Value {
    json!({
        "price": r.price,
        "status": r.status,
        "thresholds": r.profile,
        "trade_probability": r.trade_probability,
        "residual_buyer": r.residual_buyer,
        "residual_seller": r.residual_seller,
        "history_len": r.history.len(),
        "null_event": r.null_event,
        "certification": r.certification,
    })
}

fn cmd_equilibrium(instance: &Path, price: Option<f64>, grid: Option<&str>, grid_points: usize) -> Result<()> {
    let i = read_instance(instance)?;
    let opts = EqOptions {
        grid_points,
        ..EqOptions::default()
    };
    let out = match (price, grid) {
        (Some(p), _) => equilibrium_json(&solve_equilibrium(&i, p, &opts)?),
        (None, Some(g)) => {
            let rows: Result<Vec<_>> = parse_values(g)?
                .into_iter()
                .map(|p| Ok(equilibrium_json(&solve_equilibrium(&i, p, &opts)?)))
                .collect();
            serde_json::Value::Array(rows?)
        }
        (None, None) => return Err(Error::Validation("need --price or --price-grid".into())),
    };
    println!("{}", pretty(&out)?);
    Ok(())
}

fn matrix(flat: &[f64], ns: usize) -> Vec<Vec<f64>> {
    flat.chunks(ns).map(|r| r.to_vec()).collect()
}

fn cmd_lp(
    instance: &Path,
    regime: RegimeArg,
    nb: usize,
    ns: usize,
    arithmetic: ArithmeticArg,
    output: Option<&Path>,
) -> Result<()> {
    let i = read_instance(instance)?;
    let d = discretize(&i, nb, ns)?;
    let regime = match regime {
        RegimeArg::Bic => LpRegime::BayesianInterim,
        RegimeArg::Expost => LpRegime::ExPost,
    };
    let arithmetic = match arithmetic {
        ArithmeticArg::Auto => Arithmetic::Auto,
        ArithmeticArg::Exact => Arithmetic::Exact,
        ArithmeticArg::F64 => Arithmetic::F64,
    };
    let s = solve_optimal(&d, LpOptions { regime, arithmetic })?;
    let (_, es) = d.expected_values();
    eprintln!(
        "status {:?}, welfare {}, no-trade {es}, max violation {:.3e}, exact {}",
        s.status, s.welfare, s.max_violation, s.exact
    );
    let out = json!({
        "regime": s.regime,
        "status": s.status,
        "welfare": s.welfare,
        "no_trade_welfare": es,
        "opt_welfare": d.opt_welfare(),
        "max_violation": s.max_violation,
        "welfare_gap": s.welfare_gap,
        "exact": s.exact,
        "pooled": [s.pooled_buyers, s.pooled_sellers],
        "iterations": s.iterations,
        "checks": check_mechanism(&d, &s.table),
        "expost_violation": expost_violation(&d, &s.table),
        "buyer_labels": d.buyer_labels,
        "seller_labels": d.seller_labels,
        "x": matrix(&s.table.x, d.ns()),
        "p": matrix(&s.table.p, d.ns()),
    });
    emit(output, &pretty(&out)?)
}

fn cmd_verify(spec: &Path, n: usize, tol: f64, output: Option<&Path>) -> Result<bool> {
    let text = fs::read_to_string(spec).map_err(|e| Error::Validation(format!("{}: {e}", spec.display())))?;
    let spec: HardInstanceSpec =
        serde_json::from_str(&text).map_err(|e| Error::Validation(format!("spec: {e}")))?;
    let r = verify_impossibility(&spec, n, tol)?;
    let floor = r.bound * (1.0 - tol);
    println!(
        "ratio: OPT/LP = {} / {} = {} >= bound·(1-tol) = {} : {}",
        r.opt,
        r.lp_welfare,
        r.ratio,
        floor,
        r.ratio >= floor
    );
    if let Some(a) = &r.allocation_mass {
        println!("allocation mass: {} <= {} : {}", a.lhs, a.rhs, a.slack >= -1e-9);
    }
    println!("lp: status {:?}, exact {}, max violation {:.3e}", r.lp_status, r.lp_exact, r.max_violation);
    println!("pass: {}", r.pass);
    if let Some(p) = output {
        emit(Some(p), &pretty(&r)?)?;
    }
    Ok(r.pass)
}

fn cmd_repro(job: Option<&str>, seed: u64, timing: bool, list: bool, output: Option<&Path>) -> Result<bool> {
    if list {
        for n in REGISTRY {
            println!("{n}");
        }
        return Ok(true);
    }
    let job = job.ok_or_else(|| Error::Validation("need a job name, `all`, or --list".into()))?;
    let rows = repro(job, seed, timing)?;
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("{}: {e}", r.name);
        }
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(|e| Error::Validation(e.to_string()))?;
    match output {
        Some(p) => fs::write(p, &buf).map_err(|e| Error::Validation(format!("{}: {e}", p.display())))?,
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| Error::Validation(e.to_string()))?,
    }
    Ok(rows.iter().all(|r| r.pass))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    target: &str,
    alpha: &str,
    beta: &str,
    c: &str,
    count: u64,
    check_grid: usize,
    seed: u64,
    output: Option<&Path>,
) -> Result<bool> {
    let t: Target = target.parse()?;
    let p = SweepParams {
        alpha: parse_values(alpha)?,
        beta: parse_values(beta)?,
        c: parse_values(c)?,
        count,
        check_grid,
        seed,
    };
    let rows = sweep::sweep(t, &p)?;
    let mut buf = Vec::new();
    sweep::write_csv(&rows, &mut buf).map_err(|e| Error::Validation(e.to_string()))?;
    match output {
        Some(path) => fs::write(path, &buf).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?,
        None => std::io::stdout()
            .write_all(&buf)
            .map_err(|e| Error::Validation(e.to_string()))?,
    }
    Ok(rows.iter().all(|r| r.pass))
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    match cli.cmd {
        Cmd::Info { instance } => cmd_info(&instance).map(|_| true),
        Cmd::Build { spec, output } => {
            let i = build(&spec.spec())?;
            emit(output.as_deref(), &i.to_json()).map(|_| true)
        }
        Cmd::Bound { spec } => cmd_bound(&spec.spec()).map(|_| true),
        Cmd::Eval {
            instance,
            mechanism,
            price,
            grid,
        } => cmd_eval(&instance, mechanism, price, grid),
        Cmd::Equilibrium {
            instance,
            price,
            price_grid,
            grid_points,
        } => cmd_equilibrium(&instance, price, price_grid.as_deref(), grid_points).map(|_| true),
        Cmd::Lp {
            instance,
            regime,
            nb,
            ns,
            arithmetic,
            output,
        } => cmd_lp(&instance, regime, nb, ns, arithmetic, output.as_deref()).map(|_| true),
        Cmd::Verify { spec, n, tol, output } => cmd_verify(&spec, n, tol, output.as_deref()),
        Cmd::Repro {
            job,
            seed,
            no_timing,
            list,
            output,
        } => cmd_repro(job.as_deref(), seed, !no_timing, list, output.as_deref()),
        Cmd::Sweep {
            target,
            alpha,
            beta,
            c,
            count,
            check_grid,
            seed,
            output,
        } => cmd_sweep(&target, &alpha, &beta, &c, count, check_grid, seed, output.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
