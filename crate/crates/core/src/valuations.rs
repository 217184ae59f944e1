//! Separable interdependent valuations.
//!
//! `v_b = buyer_own(x_b) + buyer_cross(x_s)` and
//! `v_s = seller_cross(x_b) + seller_own(x_s)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{Threshold, ThresholdProfile};
use crate::poly::{Piecewise, Poly};
use crate::quad;

/// Tolerance on the total mass of a discrete pmf.
pub const PMF_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComponentFn {
    /// Ascending coefficients.
    Polynomial { coefficients: Vec<f64> },
    /// `values[i]` on `[breakpoints[i-1], breakpoints[i])`; one more value than breakpoints.
    Step {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Constant { value: f64 },
    /// Table over discrete signal labels.
    Discrete { support: Vec<f64>, values: Vec<f64> },
}

impl ComponentFn {
    pub fn zero() -> Self {
        ComponentFn::Constant { value: 0.0 }
    }

    pub fn constant(value: f64) -> Self {
        ComponentFn::Constant { value }
    }

    pub fn poly(coefficients: &[f64]) -> Self {
        ComponentFn::Polynomial {
            coefficients: coefficients.to_vec(),
        }
    }

    pub fn table(support: Vec<f64>, values: Vec<f64>) -> Self {
        ComponentFn::Discrete { support, values }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ComponentFn::Polynomial { coefficients } => {
                if !finite(coefficients) {
                    return Err(Error::Validation("non-finite polynomial coefficient".into()));
                }
            }
            ComponentFn::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Validation("non-finite constant".into()));
                }
            }
            ComponentFn::Step { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err(Error::Validation(format!(
                        "step function needs {} values for {} breakpoints, got {}",
                        breakpoints.len() + 1,
                        breakpoints.len(),
                        values.len()
                    )));
                }
                if breakpoints.iter().any(|b| !(0.0..=1.0).contains(b)) {
                    return Err(Error::Validation("step breakpoint outside [0, 1]".into()));
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Validation("step breakpoints not strictly increasing".into()));
                }
                if !finite(values) {
                    return Err(Error::Validation("non-finite step value".into()));
                }
            }
            ComponentFn::Discrete { support, values } => {
                if support.len() != values.len() {
                    return Err(Error::Validation("discrete support and values differ in length".into()));
                }
                if !finite(support) || !finite(values) {
                    return Err(Error::Validation("non-finite discrete entry".into()));
                }
                let mut s = support.clone();
                s.sort_by(f64::total_cmp);
                if s.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Validation("duplicate discrete support label".into()));
                }
            }
        }
        Ok(())
    }

    /// Value at signal `x`. Tables only answer for labels in their support.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            ComponentFn::Polynomial { coefficients } => {
                Ok(coefficients.iter().rev().fold(0.0, |acc, &a| acc * x + a))
            }
            ComponentFn::Constant { value } => Ok(*value),
            ComponentFn::Step { breakpoints, values } => {
                Ok(values[breakpoints.partition_point(|&b| b <= x)])
            }
            ComponentFn::Discrete { support, values } => support
                .iter()
                .position(|&s| s == x)
                .map(|i| values[i])
                .ok_or_else(|| Error::Validation(format!("label {x} not in table support"))),
        }
    }

    /// Representation on the continuous signal space [0, 1].
    pub fn piecewise(&self) -> Result<Piecewise> {
        match self {
            ComponentFn::Polynomial { coefficients } => {
                Ok(Piecewise::single(Poly::new(coefficients.clone())))
            }
            ComponentFn::Constant { value } => Ok(Piecewise::single(Poly::constant(*value))),
            ComponentFn::Step { breakpoints, values } => Ok(Piecewise::step(breakpoints, values)),
            ComponentFn::Discrete { .. } => Err(Error::Validation(
                "discrete table paired with a continuous signal; embed the signal first".into(),
            )),
        }
    }

    pub fn scaled(&self, s: f64) -> ComponentFn {
        match self {
            ComponentFn::Polynomial { coefficients } => ComponentFn::Polynomial {
                coefficients: coefficients.iter().map(|a| a * s).collect(),
            },
            _ => self.map_values(|v| v * s),
        }
    }

    /// Adds `c` to every value.
    pub fn shifted(&self, c: f64) -> ComponentFn {
        match self {
            ComponentFn::Polynomial { coefficients } => {
                let mut co = coefficients.clone();
                if co.is_empty() {
                    co.push(0.0);
                }
                co[0] += c;
                ComponentFn::Polynomial { coefficients: co }
            }
            _ => self.map_values(|v| v + c),
        }
    }

    /// Applies `f` to the stored values of non-polynomial components.
    fn map_values(&self, f: impl Fn(f64) -> f64) -> ComponentFn {
        match self {
            ComponentFn::Polynomial { .. } => unreachable!("polynomials are handled by the callers"),
            ComponentFn::Constant { value } => ComponentFn::Constant { value: f(*value) },
            ComponentFn::Step { breakpoints, values } => ComponentFn::Step {
                breakpoints: breakpoints.clone(),
                values: values.iter().map(|&v| f(v)).collect(),
            },
            ComponentFn::Discrete { support, values } => ComponentFn::Discrete {
                support: support.clone(),
                values: values.iter().map(|&v| f(v)).collect(),
            },
        }
    }

    /// Largest polynomial degree; constants and zero have degree 0.
    pub fn degree(&self) -> Option<usize> {
        match self {
            ComponentFn::Polynomial { coefficients } => Some(Poly::new(coefficients.clone()).degree()),
            ComponentFn::Constant { .. } => Some(0),
            _ => None,
        }
    }

    /// Coefficients for polynomial and constant components.
    pub fn poly_coefficients(&self) -> Option<Vec<f64>> {
        match self {
            ComponentFn::Polynomial { coefficients } => Some(coefficients.clone()),
            ComponentFn::Constant { value } => Some(vec![*value]),
            _ => None,
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            ComponentFn::Polynomial { coefficients } => coefficients.iter().all(|&a| a == 0.0),
            ComponentFn::Constant { value } => *value == 0.0,
            ComponentFn::Step { values, .. } | ComponentFn::Discrete { values, .. } => {
                values.iter().all(|&v| v == 0.0)
            }
        }
    }

    /// Monotone non-decreasing check. Polynomials are sampled on a
    /// 1001-point grid of [0, 1]; tables are ordered by label.
    fn is_non_decreasing(&self) -> bool {
        match self {
            ComponentFn::Polynomial { coefficients } => {
                let d = Poly::new(coefficients.clone()).derivative();
                (0..=1000).all(|i| d.eval(i as f64 / 1000.0) >= -1e-12)
            }
            ComponentFn::Constant { .. } => true,
            ComponentFn::Step { values, .. } => values.windows(2).all(|w| w[1] >= w[0]),
            ComponentFn::Discrete { support, values } => {
                let mut pairs: Vec<(f64, f64)> = support.iter().copied().zip(values.iter().copied()).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                pairs.windows(2).all(|w| w[1].1 >= w[0].1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalDist {
    UniformUnit,
    /// `(label, probability)` pairs.
    Discrete { pmf: Vec<(f64, f64)> },
}

impl SignalDist {
    pub fn discrete(labels: &[f64], probs: &[f64]) -> Self {
        SignalDist::Discrete {
            pmf: labels.iter().copied().zip(probs.iter().copied()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let SignalDist::Discrete { pmf } = self {
            if pmf.is_empty() {
                return Err(Error::Validation("empty pmf".into()));
            }
            if pmf.iter().any(|(l, p)| !l.is_finite() || !p.is_finite() || *p < 0.0) {
                return Err(Error::Validation("pmf entries must be finite with non-negative mass".into()));
            }
            let total: f64 = pmf.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > PMF_TOL {
                return Err(Error::Validation(format!("pmf sums to {total}, not 1")));
            }
            let mut labels: Vec<f64> = pmf.iter().map(|(l, _)| *l).collect();
            labels.sort_by(f64::total_cmp);
            if labels.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation("duplicate pmf label".into()));
            }
        }
        Ok(())
    }

    /// Atoms with positive mass, ascending by label.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            SignalDist::UniformUnit => None,
            SignalDist::Discrete { pmf } => {
                let mut a: Vec<(f64, f64)> = pmf.iter().copied().filter(|(_, p)| *p > 0.0).collect();
                a.sort_by(|x, y| x.0.total_cmp(&y.0));
                Some(a)
            }
        }
    }
}

/// `E[f(x)]` for `x ~ d`.
pub fn expect(f: &ComponentFn, d: &SignalDist) -> Result<f64> {
    f.validate()?;
    d.validate()?;
    match d.atoms() {
        None => Ok(f.piecewise()?.integral(0.0, 1.0)),
        Some(atoms) => {
            let mut s = 0.0;
            for (l, p) in atoms {
                s += p * f.eval(l)?;
            }
            Ok(s)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoStructure {
    pub buyer_own: ComponentFn,
    pub buyer_cross: ComponentFn,
    pub seller_own: ComponentFn,
    pub seller_cross: ComponentFn,
    pub buyer_sig: SignalDist,
    pub seller_sig: SignalDist,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub require_monotone: bool,
}

/// `alpha` for the seller, `beta` for the buyer; `None` when both parts have zero mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InformednessPair {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

/// One agent's signal together with the two functions of it: the owner's
/// own part and the counterparty's cross part.
#[derive(Clone, Debug)]
pub enum Side {
    Atoms {
        labels: Vec<f64>,
        probs: Vec<f64>,
        own: Vec<f64>,
        cross: Vec<f64>,
    },
    Pieces { own: Piecewise, cross: Piecewise },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Own,
    Cross,
}

impl Side {
    fn build(own: &ComponentFn, cross: &ComponentFn, sig: &SignalDist) -> Result<Side> {
        match sig.atoms() {
            None => Ok(Side::Pieces {
                own: own.piecewise()?,
                cross: cross.piecewise()?,
            }),
            Some(atoms) => {
                let mut labels = Vec::with_capacity(atoms.len());
                let mut probs = Vec::with_capacity(atoms.len());
                let mut o = Vec::with_capacity(atoms.len());
                let mut c = Vec::with_capacity(atoms.len());
                for (l, p) in atoms {
                    labels.push(l);
                    probs.push(p);
                    o.push(own.eval(l)?);
                    c.push(cross.eval(l)?);
                }
                Ok(Side::Atoms {
                    labels,
                    probs,
                    own: o,
                    cross: c,
                })
            }
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Side::Atoms { .. })
    }

    pub fn mean(&self, part: Part) -> f64 {
        match self {
            Side::Atoms { probs, own, cross, .. } => {
                let v = if part == Part::Own { own } else { cross };
                probs.iter().zip(v).map(|(p, x)| p * x).sum()
            }
            Side::Pieces { own, cross } => {
                let f = if part == Part::Own { own } else { cross };
                f.integral(0.0, 1.0)
            }
        }
    }

    pub fn value(&self, part: Part, x: f64) -> f64 {
        match self {
            Side::Atoms { labels, own, cross, .. } => {
                let v = if part == Part::Own { own } else { cross };
                let i = labels.partition_point(|&l| l < x).min(labels.len() - 1);
                v[i]
            }
            Side::Pieces { own, cross } => {
                if part == Part::Own {
                    own.eval(x)
                } else {
                    cross.eval(x)
                }
            }
        }
    }

    pub fn min_point(&self) -> f64 {
        match self {
            Side::Atoms { labels, .. } => labels[0],
            Side::Pieces { .. } => 0.0,
        }
    }

    pub fn max_point(&self) -> f64 {
        match self {
            Side::Atoms { labels, .. } => *labels.last().expect("non-empty"),
            Side::Pieces { .. } => 1.0,
        }
    }

    /// `(Pr[x in S], E[part · 1[x in S]])` for `S = {x >= t}` when `upper`,
    /// else `S = {x <= t}`.
    pub fn tail(&self, part: Part, t: f64, upper: bool) -> (f64, f64) {
        match self {
            Side::Atoms { labels, probs, own, cross } => {
                let v = if part == Part::Own { own } else { cross };
                let mut m = 0.0;
                let mut e = 0.0;
                for i in 0..labels.len() {
                    let inside = if upper { labels[i] >= t } else { labels[i] <= t };
                    if inside {
                        m += probs[i];
                        e += probs[i] * v[i];
                    }
                }
                (m, e)
            }
            Side::Pieces { own, cross } => {
                let f = if part == Part::Own { own } else { cross };
                let t = t.clamp(0.0, 1.0);
                if upper {
                    (1.0 - t, f.integral(t, 1.0))
                } else {
                    (t, f.integral(0.0, t))
                }
            }
        }
    }

    /// Acceptance mass and partial mean of `part` under a threshold.
    /// Buyers accept upper sets, sellers lower sets.
    pub fn accept(&self, part: Part, th: Threshold, upper: bool) -> (f64, f64) {
        match th {
            Threshold::Always => (1.0, self.mean(part)),
            Threshold::Never => (0.0, 0.0),
            Threshold::At(t) => self.tail(part, t, upper),
        }
    }

    /// Candidate thresholds: the support for discrete signals, otherwise an
    /// `n`-point uniform grid of [0, 1].
    pub fn lattice(&self, n: usize) -> Vec<f64> {
        match self {
            Side::Atoms { labels, .. } => labels.clone(),
            Side::Pieces { .. } => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        }
    }

    /// Points in [0, 1] where the own part crosses `level` (continuous only).
    pub fn own_crossings(&self, level: f64) -> Vec<f64> {
        match self {
            Side::Atoms { .. } => Vec::new(),
            Side::Pieces { own, .. } => {
                let mut out = Vec::new();
                for (a, b, p) in own.pieces() {
                    out.extend(p.sub(&Poly::constant(level)).roots_in(a, b));
                }
                out
            }
        }
    }

    /// Own part minus cross part, the quantity that orders types.
    fn difference(&self) -> DiffSide {
        match self {
            Side::Atoms { probs, own, cross, .. } => DiffSide::Atoms(
                probs
                    .iter()
                    .zip(own.iter().zip(cross))
                    .map(|(p, (o, c))| (*p, o - c))
                    .collect(),
            ),
            Side::Pieces { own, cross } => {
                let g = own.sub(cross);
                if g.is_piecewise_constant() {
                    DiffSide::Atoms(g.pieces().map(|(a, b, p)| (b - a, p.eval(a))).collect())
                } else {
                    DiffSide::Pieces(g)
                }
            }
        }
    }

    /// Quadrature nodes `(x, weight)` for integrating arbitrary functions of the signal.
    fn nodes(&self) -> Vec<(f64, f64)> {
        match self {
            Side::Atoms { labels, probs, .. } => labels.iter().copied().zip(probs.iter().copied()).collect(),
            Side::Pieces { own, cross } => {
                let merged = own.add(cross);
                merged
                    .pieces()
                    .flat_map(|(a, b, _)| quad::gauss_legendre(a, b, 16))
                    .collect()
            }
        }
    }

    fn non_decreasing_difference(&self, tol: f64) -> bool {
        match self {
            Side::Atoms { own, cross, .. } => {
                let d: Vec<f64> = own.iter().zip(cross).map(|(o, c)| o - c).collect();
                d.windows(2).all(|w| w[1] >= w[0] - tol)
            }
            Side::Pieces { own, cross } => own.sub(cross).is_non_decreasing(tol),
        }
    }
}

enum DiffSide {
    Atoms(Vec<(f64, f64)>),
    Pieces(Piecewise),
}

impl InfoStructure {
    pub fn validate(&self) -> Result<()> {
        for f in self.components() {
            f.validate()?;
        }
        self.buyer_sig.validate()?;
        self.seller_sig.validate()?;
        self.buyer_side()?;
        self.seller_side()?;
        if self.require_monotone {
            for (name, f) in [
                ("buyer_own", &self.buyer_own),
                ("buyer_cross", &self.buyer_cross),
                ("seller_own", &self.seller_own),
                ("seller_cross", &self.seller_cross),
            ] {
                if !f.is_non_decreasing() {
                    return Err(Error::Validation(format!("{name} is not monotone non-decreasing")));
                }
            }
        }
        Ok(())
    }

    fn components(&self) -> [&ComponentFn; 4] {
        [&self.buyer_own, &self.buyer_cross, &self.seller_own, &self.seller_cross]
    }

    pub fn from_json(s: &str) -> Result<InfoStructure> {
        let i: InfoStructure = serde_json::from_str(s)?;
        i.validate()?;
        Ok(i)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Buyer's signal with `buyer_own` as own part and `seller_cross` as cross part.
    pub fn buyer_side(&self) -> Result<Side> {
        Side::build(&self.buyer_own, &self.seller_cross, &self.buyer_sig)
    }

    /// Seller's signal with `seller_own` as own part and `buyer_cross` as cross part.
    pub fn seller_side(&self) -> Result<Side> {
        Side::build(&self.seller_own, &self.buyer_cross, &self.seller_sig)
    }

    /// `(E[v_b], E[v_s])`.
    pub fn expected_values(&self) -> Result<(f64, f64)> {
        let b = self.buyer_side()?;
        let s = self.seller_side()?;
        Ok((
            b.mean(Part::Own) + s.mean(Part::Cross),
            b.mean(Part::Cross) + s.mean(Part::Own),
        ))
    }

    pub fn informedness(&self) -> Result<InformednessPair> {
        let b = self.buyer_side()?;
        let s = self.seller_side()?;
        let frac = |own: f64, cross: f64| {
            let t = own + cross;
            if t == 0.0 {
                None
            } else {
                Some(own / t)
            }
        };
        Ok(InformednessPair {
            alpha: frac(s.mean(Part::Own), b.mean(Part::Cross)),
            beta: frac(b.mean(Part::Own), s.mean(Part::Cross)),
        })
    }

    pub fn scaled(&self, s: f64) -> InfoStructure {
        InfoStructure {
            buyer_own: self.buyer_own.scaled(s),
            buyer_cross: self.buyer_cross.scaled(s),
            seller_own: self.seller_own.scaled(s),
            seller_cross: self.seller_cross.scaled(s),
            ..self.clone()
        }
    }
}

/// `E[max(v_b, v_s)]`, computed as `E[v_s] + E[(v_b - v_s)^+]`.
///
/// Discrete signals are summed exactly. Continuous signals are integrated
/// piece by piece over the regions where the difference is positive, with
/// the crossing points found by polynomial root isolation; when both signals
/// are continuous the outer integral is adaptive Gauss-Kronrod.
pub fn opt_welfare(i: &InfoStructure) -> Result<f64> {
    i.validate()?;
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    let es = b.mean(Part::Cross) + s.mean(Part::Own);
    Ok(es + positive_gain(&b.difference(), &s.difference()))
}

/// `E[(g(x_b) - h(x_s))^+]`.
fn positive_gain(g: &DiffSide, h: &DiffSide) -> f64 {
    match (g, h) {
        (DiffSide::Atoms(ga), DiffSide::Atoms(ha)) => {
            let mut s = 0.0;
            for (wb, gb) in ga {
                for (ws, hs) in ha {
                    s += wb * ws * (gb - hs).max(0.0);
                }
            }
            s
        }
        (DiffSide::Atoms(ga), DiffSide::Pieces(hp)) => {
            ga.iter().map(|(w, c)| w * hp.negative_part_integral(*c)).sum()
        }
        (DiffSide::Pieces(gp), DiffSide::Atoms(ha)) => {
            ha.iter().map(|(w, c)| w * gp.positive_part_integral(*c)).sum()
        }
        (DiffSide::Pieces(gp), DiffSide::Pieces(hp)) => {
            let scale = gp.range().1.abs().max(hp.range().1.abs()).max(1.0);
            hp.pieces()
                .map(|(a, b, p)| {
                    quad::integrate(
                        |y| gp.positive_part_integral(p.eval(y)),
                        a,
                        b,
                        1e-14 * scale,
                        1e-12,
                    )
                })
                .sum()
        }
    }
}

/// Allocation rules `mech_welfare` can integrate.
pub enum Allocation<'a> {
    Constant(f64),
    Thresholds(ThresholdProfile),
    /// Arbitrary `x(x_b, x_s)`; continuous signals use composite Gauss-Legendre nodes.
    Function(&'a dyn Fn(f64, f64) -> f64),
}

/// `E[v_s] + E[x · (v_b - v_s)]`.
pub fn mech_welfare(i: &InfoStructure, alloc: &Allocation<'_>) -> Result<f64> {
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    let es = b.mean(Part::Cross) + s.mean(Part::Own);
    let eb = b.mean(Part::Own) + s.mean(Part::Cross);
    let out_of_range = |x: f64| !(-1e-12..=1.0 + 1e-12).contains(&x) || x.is_nan();
    match alloc {
        Allocation::Constant(q) => {
            if out_of_range(*q) {
                return Err(Error::Validation(format!("allocation {q} outside [0, 1]")));
            }
            Ok(es + q * (eb - es))
        }
        Allocation::Thresholds(th) => Ok(es + threshold_gain(&b, &s, th)),
        Allocation::Function(f) => {
            let nb = b.nodes();
            let ns = s.nodes();
            let mut gain = 0.0;
            for &(xb, wb) in &nb {
                let gb = b.value(Part::Own, xb) - b.value(Part::Cross, xb);
                for &(xs, ws) in &ns {
                    let x = f(xb, xs);
                    if out_of_range(x) {
                        return Err(Error::Validation(format!(
                            "allocation {x} outside [0, 1] at ({xb}, {xs})"
                        )));
                    }
                    let hs = s.value(Part::Own, xs) - s.value(Part::Cross, xs);
                    gain += wb * ws * x * (gb - hs);
                }
            }
            Ok(es + gain)
        }
    }
}

/// `E[1[buyer accepts] 1[seller accepts] (v_b - v_s)]`, exact by separability.
pub(crate) fn threshold_gain(b: &Side, s: &Side, th: &ThresholdProfile) -> f64 {
    let (qb, bo) = b.accept(Part::Own, th.buyer, true);
    let (_, bc) = b.accept(Part::Cross, th.buyer, true);
    let (qs, so) = s.accept(Part::Own, th.seller, false);
    let (_, sc) = s.accept(Part::Cross, th.seller, false);
    // v_b - v_s = (buyer_own - seller_cross)(x_b) + (buyer_cross - seller_own)(x_s)
    qs * (bo - bc) + qb * (sc - so)
}

/// Single-crossing: `buyer_own - seller_cross` non-decreasing in `x_b` and
/// `seller_own - buyer_cross` non-decreasing in `x_s`. This is the
/// derivative condition in integrated form; discrete signals use differences.
pub fn single_crossing(i: &InfoStructure) -> Result<bool> {
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    Ok(b.non_decreasing_difference(1e-12) && s.non_decreasing_difference(1e-12))
}

/// Replace each discrete signal by a uniform one on [0, 1] with step
/// components whose breakpoints are the cumulative masses in label order.
pub fn embed_discrete_as_uniform(i: &InfoStructure) -> Result<InfoStructure> {
    i.validate()?;
    let mut out = i.clone();
    if let Some(atoms) = i.buyer_sig.atoms() {
        let (own, cross) = embed_side(&atoms, &i.buyer_own, &i.seller_cross)?;
        out.buyer_own = own;
        out.seller_cross = cross;
        out.buyer_sig = SignalDist::UniformUnit;
    }
    if let Some(atoms) = i.seller_sig.atoms() {
        let (own, cross) = embed_side(&atoms, &i.seller_own, &i.buyer_cross)?;
        out.seller_own = own;
        out.buyer_cross = cross;
        out.seller_sig = SignalDist::UniformUnit;
    }
    Ok(out)
}

fn embed_side(
    atoms: &[(f64, f64)],
    own: &ComponentFn,
    cross: &ComponentFn,
) -> Result<(ComponentFn, ComponentFn)> {
    let mut breakpoints = Vec::with_capacity(atoms.len().saturating_sub(1));
    let mut acc = 0.0;
    for (_, p) in &atoms[..atoms.len() - 1] {
        acc += p;
        breakpoints.push(acc.min(1.0));
    }
    if breakpoints.windows(2).any(|w| w[1] <= w[0]) || breakpoints.last().is_some_and(|&b| b >= 1.0) {
        return Err(Error::Numerical(
            "atom mass below floating-point resolution of the cumulative sum".into(),
        ));
    }
    let to_step = |f: &ComponentFn| -> Result<ComponentFn> {
        let values = atoms.iter().map(|(l, _)| f.eval(*l)).collect::<Result<Vec<_>>>()?;
        Ok(ComponentFn::Step {
            breakpoints: breakpoints.clone(),
            values,
        })
    };
    Ok((to_step(own)?, to_step(cross)?))
}
