//! Parameter sweeps over random mechanism instances and corollary bounds.

use rayon::prelude::*;
use serde::Serialize;

use interdep_core::error::{Error, Result};
use interdep_core::instances::*;
use interdep_core::lp_oracle::discretize;
use interdep_core::mechanisms::*;
use interdep_core::sampling::*;
use interdep_core::valuations::{ComponentFn, InfoStructure, SignalDist};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    ZeroBeta,
    Polynomial,
    SingleCrossing,
    Reduction,
    UninformedPair,
    TwoOverThreeBeta,
    SellerC,
    BuyerC,
    SqrtChain,
    LeftCorner,
    RightCorner,
    UninformedBuyerC,
}

impl std::str::FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Target> {
        Ok(match s {
            "zero-beta" => Target::ZeroBeta,
            "polynomial" => Target::Polynomial,
            "single-crossing" => Target::SingleCrossing,
            "reduction" => Target::Reduction,
            "uninformed-pair" => Target::UninformedPair,
            "two-over-three-beta" => Target::TwoOverThreeBeta,
            "seller-c" => Target::SellerC,
            "buyer-c" => Target::BuyerC,
            "sqrt-chain" => Target::SqrtChain,
            "left-corner" => Target::LeftCorner,
            "right-corner" => Target::RightCorner,
            "uninformed-buyer-c" => Target::UninformedBuyerC,
            _ => return Err(Error::Validation(format!("unknown sweep target `{s}`"))),
        })
    }
}

impl Target {
    pub const NAMES: [&'static str; 12] = [
        "zero-beta",
        "polynomial",
        "single-crossing",
        "reduction",
        "uninformed-pair",
        "two-over-three-beta",
        "seller-c",
        "buyer-c",
        "sqrt-chain",
        "left-corner",
        "right-corner",
        "uninformed-buyer-c",
    ];

    fn name(self) -> &'static str {
        Target::NAMES[self as usize]
    }

    /// Which of `(α, β, c)` the target is swept over.
    fn uses(self) -> (bool, bool, bool) {
        match self {
            Target::ZeroBeta | Target::TwoOverThreeBeta | Target::SqrtChain => (false, true, false),
            Target::Polynomial | Target::SingleCrossing | Target::Reduction | Target::UninformedPair => {
                (false, false, false)
            }
            Target::SellerC => (false, false, true),
            Target::BuyerC | Target::UninformedBuyerC => (true, false, true),
            Target::LeftCorner | Target::RightCorner => (true, true, false),
        }
    }

    fn is_mechanism(self) -> bool {
        (self as usize) < 5
    }
}

pub struct SweepParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub c: Vec<f64>,
    /// Random instances per parameter point for mechanism targets.
    pub count: u64,
    /// Grid for the incentive checks; 0 skips them.
    pub check_grid: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub target: &'static str,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub c: Option<f64>,
    pub instance: Option<u64>,
    pub seed: u64,
    pub opt: Option<f64>,
    pub alg: Option<f64>,
    pub ratio: Option<f64>,
    pub bound: f64,
    /// Target the bound must reach, for corollary targets.
    pub target_value: Option<f64>,
    pub checks: Option<bool>,
    pub pass: bool,
}

type Point = (Option<f64>, Option<f64>, Option<f64>);

/// Cartesian product of the lists the target uses; an empty list gives no points.
fn points(t: Target, p: &SweepParams) -> Vec<Point> {
    let (ua, ub, uc) = t.uses();
    let pick = |used: bool, v: &[f64]| -> Vec<Option<f64>> {
        if used {
            v.iter().copied().map(Some).collect()
        } else {
            vec![None]
        }
    };
    let mut out = Vec::new();
    for a in pick(ua, &p.alpha) {
        for b in pick(ub, &p.beta) {
            for c in pick(uc, &p.c) {
                out.push((a, b, c));
            }
        }
    }
    out
}

fn need(x: Option<f64>) -> f64 {
    x.expect("parameter present for this target")
}

fn uninformed_pair_instance(g: &mut ChaCha8Rng) -> InfoStructure {
    InfoStructure {
        buyer_own: ComponentFn::zero(),
        buyer_cross: random_poly(g),
        seller_own: ComponentFn::zero(),
        seller_cross: random_poly(g),
        buyer_sig: SignalDist::UniformUnit,
        seller_sig: SignalDist::UniformUnit,
        require_monotone: false,
    }
}

fn mechanism_row(t: Target, (a, b, c): Point, point: u64, idx: u64, p: &SweepParams) -> Result<SweepRow> {
    let mut g = stream(p.seed.wrapping_add(point << 32), idx);
    let i = match t {
        Target::ZeroBeta => random_zero_beta(&mut g, need(b)),
        Target::Polynomial => random_polynomial_instance(&mut g),
        Target::SingleCrossing => random_single_crossing(&mut g),
        Target::Reduction => random_informed_seller(&mut g),
        _ => uninformed_pair_instance(&mut g),
    };
    let designed = match t {
        Target::ZeroBeta => mech_zero_beta(&i)?,
        Target::Polynomial => mech_polynomial(&i)?.designed,
        Target::SingleCrossing => mech_single_crossing(&i, OfferGrid::default())?,
        Target::Reduction => mech_reduction_informed_seller(&i, OfferGrid::default())?.designed,
        _ => mech_uninformed_pair(&i)?,
    };
    let r = ratio_report(&i, &designed)?;
    let checks = if p.check_grid > 0 {
        let d = discretize(&i, p.check_grid, p.check_grid)?;
        Some(check_mechanism(&d, &tabulate(&d, &designed.mechanism)?).all_pass())
    } else {
        None
    };
    Ok(SweepRow {
        target: t.name(),
        alpha: a,
        beta: b,
        c,
        instance: Some(idx),
        seed: p.seed,
        opt: Some(r.opt),
        alg: Some(r.alg),
        ratio: Some(r.ratio),
        bound: r.bound,
        target_value: None,
        checks,
        pass: r.holds && checks != Some(false),
    })
}

fn bound_row(t: Target, (a, b, c): Point, p: &SweepParams) -> Result<SweepRow> {
    let inst = match t {
        Target::TwoOverThreeBeta => inst_two_over_three_beta(need(b))?,
        Target::SellerC => inst_seller_c(need(c))?,
        Target::BuyerC => inst_buyer_c(need(a), need(c))?,
        Target::SqrtChain => inst_sqrt_chain(need(b))?,
        Target::LeftCorner => inst_left_corner(need(a), need(b))?,
        Target::RightCorner => inst_right_corner(need(a), need(b))?,
        _ => inst_uninformed_buyer_c(need(a), need(c))?,
    };
    Ok(SweepRow {
        target: t.name(),
        alpha: a,
        beta: b,
        c,
        instance: None,
        seed: p.seed,
        opt: None,
        alg: None,
        ratio: None,
        bound: inst.bound,
        target_value: Some(inst.target),
        checks: None,
        pass: inst.holds(),
    })
}

/// One row per parameter point (times `count` instances for mechanism
/// targets), in parameter order then instance order.
pub fn sweep(t: Target, p: &SweepParams) -> Result<Vec<SweepRow>> {
    let pts = points(t, p);
    if t.is_mechanism() {
        let jobs: Vec<(Point, u64, u64)> = pts
            .iter()
            .enumerate()
            .flat_map(|(n, &pt)| (0..p.count).map(move |k| (pt, n as u64, k)))
            .collect();
        jobs.par_iter().map(|&(pt, n, k)| mechanism_row(t, pt, n, k, p)).collect()
    } else {
        pts.par_iter().map(|&pt| bound_row(t, pt, p)).collect()
    }
}

pub fn write_csv<W: std::io::Write>(rows: &[SweepRow], w: W) -> std::result::Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record([
            "target",
            "alpha",
            "beta",
            "c",
            "instance",
            "seed",
            "opt",
            "alg",
            "ratio",
            "bound",
            "target_value",
            "checks",
            "pass",
        ])?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
