//! Mechanisms with ratio guarantees, tabulation onto grids, and BIC/IR checks.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_equilibrium, EqOptions, EquilibriumStatus};
use crate::error::{Error, Result};
use crate::lp_oracle::DiscreteInstance;
use crate::valuations::{mech_welfare, opt_welfare, single_crossing, Allocation, InfoStructure, Part, Side};

/// Acceptance cutoff. Buyers accept signals `>= t`, sellers accept `<= t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t", rename_all = "snake_case")]
pub enum Threshold {
    Always,
    Never,
    At(f64),
}

impl Threshold {
    pub fn accepts_upper(&self, x: f64) -> bool {
        match self {
            Threshold::Always => true,
            Threshold::Never => false,
            Threshold::At(t) => x >= *t,
        }
    }

    pub fn accepts_lower(&self, x: f64) -> bool {
        match self {
            Threshold::Always => true,
            Threshold::Never => false,
            Threshold::At(t) => x <= *t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProfile {
    pub buyer: Threshold,
    pub seller: Threshold,
}

impl ThresholdProfile {
    pub fn always() -> Self {
        ThresholdProfile {
            buyer: Threshold::Always,
            seller: Threshold::Always,
        }
    }
}

/// Allocation and payment tables on a grid, row-major with buyer rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismTable {
    pub buyer_labels: Vec<f64>,
    pub seller_labels: Vec<f64>,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl MechanismTable {
    pub fn zeros(d: &DiscreteInstance) -> Self {
        let n = d.nb() * d.ns();
        MechanismTable {
            buyer_labels: d.buyer_labels.clone(),
            seller_labels: d.seller_labels.clone(),
            x: vec![0.0; n],
            p: vec![0.0; n],
        }
    }

    #[inline]
    pub fn x(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.seller_labels.len() + j]
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.seller_labels.len() + j]
    }
}

/// Buyer's take-it-or-leave-it offer as a function of the buyer's signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuyerOffer {
    /// Signal labels (discrete) or cell midpoints (continuous).
    pub points: Vec<f64>,
    /// Cell boundaries for a continuous buyer signal; `points.len() + 1` entries.
    pub cell_edges: Option<Vec<f64>>,
    pub offers: Vec<f64>,
    pub price_step: f64,
}

impl BuyerOffer {
    pub fn offer_at(&self, x: f64) -> f64 {
        match &self.cell_edges {
            Some(edges) => {
                let k = edges[1..edges.len() - 1].partition_point(|&e| e <= x);
                self.offers[k]
            }
            None => {
                let k = self.points.partition_point(|&l| l < x).min(self.points.len() - 1);
                self.offers[k]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    NoTrade,
    PostedPrice {
        price: f64,
        thresholds: ThresholdProfile,
    },
    BuyerOffer(BuyerOffer),
    Table(MechanismTable),
}

/// A mechanism together with the branch taken and its ratio guarantee.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Designed {
    pub mechanism: Mechanism,
    pub label: String,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    pub opt: f64,
    pub alg: f64,
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub bic_buyer: bool,
    pub bic_seller: bool,
    pub ir_buyer: bool,
    pub ir_seller: bool,
    pub max_bic_violation_buyer: f64,
    pub max_bic_violation_seller: f64,
    pub min_ir_buyer: f64,
    pub min_ir_seller: f64,
    pub myerson_residual_buyer: f64,
    pub myerson_residual_seller: f64,
}

impl CheckReport {
    pub fn all_pass(&self) -> bool {
        self.bic_buyer && self.bic_seller && self.ir_buyer && self.ir_seller
    }
}

/// Tolerance for incentive and participation checks on tables.
pub const CHECK_TOL: f64 = 1e-9;

pub fn mech_no_trade() -> Mechanism {
    Mechanism::NoTrade
}

fn uniform_signals(i: &InfoStructure) -> bool {
    matches!(i.buyer_sig, crate::valuations::SignalDist::UniformUnit)
        && matches!(i.seller_sig, crate::valuations::SignalDist::UniformUnit)
}

fn posted(i: &InfoStructure, price: f64) -> Result<Mechanism> {
    let eq = solve_equilibrium(i, price, &EqOptions::default())?;
    let thresholds = match eq.status {
        EquilibriumStatus::TradingEquilibrium { buyer, seller } => ThresholdProfile { buyer, seller },
        _ => ThresholdProfile {
            buyer: Threshold::Never,
            seller: Threshold::Never,
        },
    };
    Ok(Mechanism::PostedPrice { price, thresholds })
}

/// Both agents uninformed: trade at the midpoint of the two expected values
/// when the buyer's is larger. Ratio at most 2.
pub fn mech_uninformed_pair(i: &InfoStructure) -> Result<Designed> {
    i.validate()?;
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    if b.mean(Part::Own) != 0.0 || s.mean(Part::Own) != 0.0 {
        return Err(Error::Precondition("both agents must be uninformed".into()));
    }
    let eb = s.mean(Part::Cross);
    let es = b.mean(Part::Cross);
    if es >= eb {
        return Ok(Designed {
            mechanism: Mechanism::NoTrade,
            label: "no-trade".into(),
            bound: 2.0,
        });
    }
    Ok(Designed {
        mechanism: posted(i, 0.5 * (eb + es))?,
        label: "midpoint-price".into(),
        bound: 2.0,
    })
}

/// Uninformed seller: post the mean of the buyer's cross part when it covers
/// the seller's expected value, otherwise no trade.
pub fn mech_zero_beta(i: &InfoStructure) -> Result<Designed> {
    i.validate()?;
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    if s.mean(Part::Own) != 0.0 {
        return Err(Error::Precondition("seller must be uninformed".into()));
    }
    let beta = i
        .informedness()?
        .beta
        .ok_or_else(|| Error::Domain("buyer informedness undefined".into()))?;
    if beta >= 1.0 {
        return Err(Error::Domain("buyer informedness must be below 1".into()));
    }
    let mu_s = b.mean(Part::Cross);
    let mu_2 = s.mean(Part::Cross);
    if mu_s > mu_2 {
        return Ok(Designed {
            mechanism: Mechanism::NoTrade,
            label: "no-trade".into(),
            bound: 1.0 + 1.0 / (1.0 - beta),
        });
    }
    Ok(Designed {
        mechanism: posted(i, mu_2)?,
        label: "cross-mean-price".into(),
        bound: 2.0 - beta,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct OfferGrid {
    /// Spacing of candidate prices on `[0, max value]`.
    pub price_step: f64,
    /// Cells used for a continuous buyer signal.
    pub buyer_cells: usize,
}

impl Default for OfferGrid {
    fn default() -> Self {
        OfferGrid {
            price_step: 1e-3,
            buyer_cells: 400,
        }
    }
}

/// Seller-side quantities at price `p` when the seller accepts iff
/// `seller_own <= p`: `(Pr[accept], E[buyer_cross 1], E[seller_own 1])`.
fn seller_acceptance(s: &Side, p: f64) -> (f64, f64, f64) {
    match s {
        Side::Atoms { probs, own, cross, .. } => {
            let mut m = 0.0;
            let mut g = 0.0;
            let mut h = 0.0;
            for k in 0..probs.len() {
                if own[k] <= p {
                    m += probs[k];
                    g += probs[k] * cross[k];
                    h += probs[k] * own[k];
                }
            }
            (m, g, h)
        }
        Side::Pieces { own, cross } => {
            let mut m = 0.0;
            let mut g = 0.0;
            let mut h = 0.0;
            for (a, b) in own.level_set(p, true) {
                m += b - a;
                g += cross.integral(a, b);
                h += own.integral(a, b);
            }
            (m, g, h)
        }
    }
}

fn side_sup(s: &Side, part: Part) -> f64 {
    match s {
        Side::Atoms { own, cross, .. } => {
            let v = if part == Part::Own { own } else { cross };
            v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        }
        Side::Pieces { own, cross } => {
            if part == Part::Own {
                own.range().1
            } else {
                cross.range().1
            }
        }
    }
}

fn buyer_points(b: &Side, cells: usize) -> (Vec<f64>, Option<Vec<f64>>) {
    match b {
        Side::Atoms { labels, .. } => (labels.clone(), None),
        Side::Pieces { .. } => {
            let edges: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
            let pts = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            (pts, Some(edges))
        }
    }
}

/// Offers of the buyer maximising `Pr[v_s <= p] (own - p)`, plus
/// `E[buyer_cross 1[v_s <= p]]` when `lifted`. Ties go to the lower price.
fn compute_offers(b: &Side, s: &Side, lifted: bool, grid: OfferGrid) -> BuyerOffer {
    let vmax = (side_sup(b, Part::Own) + side_sup(s, Part::Cross)).max(side_sup(s, Part::Own)).max(0.0);
    let n = (vmax / grid.price_step).ceil() as usize + 1;
    let prices: Vec<f64> = (0..=n).map(|k| k as f64 * grid.price_step).collect();
    let mut f = Vec::with_capacity(prices.len());
    let mut g = Vec::with_capacity(prices.len());
    let (mut fm, mut gm) = (0.0f64, f64::NEG_INFINITY);
    for &p in &prices {
        let (m, c, _) = seller_acceptance(s, p);
        // Both are non-decreasing in p; the running max removes rounding noise.
        fm = fm.max(m);
        gm = gm.max(c);
        f.push(fm);
        g.push(gm);
    }
    let (points, cell_edges) = buyer_points(b, grid.buyer_cells);
    let offers = points
        .iter()
        .map(|&x| {
            let a = b.value(Part::Own, x);
            let mut best = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            for k in 0..prices.len() {
                let v = f[k] * (a - prices[k]) + if lifted { g[k] } else { 0.0 };
                if v > best_v {
                    best_v = v;
                    best = k;
                }
            }
            prices[best]
        })
        .collect();
    BuyerOffer {
        points,
        cell_edges,
        offers,
        price_step: grid.price_step,
    }
}

/// Buyer-offer posted price for private values: `argmax_p Pr[v_s <= p](v_b - p)`.
pub fn mech_buyer_offer_pv(i: &InfoStructure, grid: OfferGrid) -> Result<BuyerOffer> {
    i.validate()?;
    if !i.buyer_cross.is_identically_zero() || !i.seller_cross.is_identically_zero() {
        return Err(Error::Precondition("private-values instance required".into()));
    }
    Ok(compute_offers(&i.buyer_side()?, &i.seller_side()?, false, grid))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Reduction {
    pub designed: Designed,
    /// Offers against the private-values projection `v_b = buyer_own`.
    pub pv_offers: BuyerOffer,
    /// Offers that also credit the buyer's expected cross part on acceptance.
    pub lifted_offers: BuyerOffer,
}

/// Fully informed seller: the buyer makes the offer that is optimal once the
/// conditional mean of the buyer's cross part given acceptance is added to
/// the buyer's own value. No trade when `E[v_s] >= E[v_b]`.
pub fn mech_reduction_informed_seller(i: &InfoStructure, grid: OfferGrid) -> Result<Reduction> {
    i.validate()?;
    if !i.seller_cross.is_identically_zero() {
        return Err(Error::Precondition("seller must be fully informed".into()));
    }
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    let s_pv = i_with_zero_cross(i).seller_side()?;
    let pv = compute_offers(&b, &s_pv, false, grid);
    let lifted = compute_offers(&b, &s, true, grid);
    let beta = i.informedness()?.beta.unwrap_or(0.0);
    let bound = if beta > 0.0 { 4.0 / beta } else { f64::INFINITY };
    let (eb, es) = i.expected_values()?;
    let designed = if es >= eb {
        Designed {
            mechanism: Mechanism::NoTrade,
            label: "no-trade".into(),
            bound,
        }
    } else {
        Designed {
            mechanism: Mechanism::BuyerOffer(lifted.clone()),
            label: "buyer-offer".into(),
            bound,
        }
    };
    Ok(Reduction {
        designed,
        pv_offers: pv,
        lifted_offers: lifted,
    })
}

fn i_with_zero_cross(i: &InfoStructure) -> InfoStructure {
    InfoStructure {
        buyer_cross: crate::valuations::ComponentFn::zero(),
        ..i.clone()
    }
}

/// Single-crossing with a fully informed seller: move the buyer's cross
/// part at the lowest seller signal into the buyer's own part, run the
/// reduction, and keep whichever of it and no trade has more welfare.
pub fn mech_single_crossing(i: &InfoStructure, grid: OfferGrid) -> Result<Designed> {
    i.validate()?;
    if !i.seller_cross.is_identically_zero() {
        return Err(Error::Precondition("seller must be fully informed".into()));
    }
    if !single_crossing(i)? {
        return Err(Error::Precondition("instance is not single-crossing".into()));
    }
    let s = i.seller_side()?;
    let c0 = s.value(Part::Cross, s.min_point());
    let norm = InfoStructure {
        buyer_cross: i.buyer_cross.shifted(-c0),
        buyer_own: i.buyer_own.shifted(c0),
        ..i.clone()
    };
    let beta = norm.informedness()?.beta.unwrap_or(0.0);
    let bound = (1.0 + 1.0 / (1.0 - beta)).min(4.0 / beta);
    let red = mech_reduction_informed_seller(&norm, grid)?;
    let w_red = welfare(i, &red.designed.mechanism)?;
    let w_none = welfare(i, &Mechanism::NoTrade)?;
    let (mechanism, label) = if w_red > w_none {
        (red.designed.mechanism, "reduction")
    } else {
        (Mechanism::NoTrade, "no-trade")
    };
    Ok(Designed {
        mechanism,
        label: label.into(),
        bound,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolynomialDesign {
    pub designed: Designed,
    pub degree: usize,
    /// 1 when every buyer type accepts, 2 otherwise; `None` for no trade.
    pub case: Option<u8>,
    /// Index of the dominant own coefficient in case 2.
    pub j: Option<usize>,
    pub price: Option<f64>,
    /// Equilibrium thresholds match the predicted shape.
    pub prediction_holds: bool,
}

/// Polynomial valuations with non-negative coefficients: no trade when the
/// seller's expected value is at least `E[v_b] / (k+1)^2`, otherwise post
/// `E[v_b] / (k+1)`. Ratio at most `1 + (k+1)^2`.
pub fn mech_polynomial(i: &InfoStructure) -> Result<PolynomialDesign> {
    i.validate()?;
    if !uniform_signals(i) {
        return Err(Error::Precondition("uniform signals required".into()));
    }
    let mut coeffs = Vec::new();
    for f in [&i.buyer_own, &i.buyer_cross, &i.seller_own, &i.seller_cross] {
        let c = f
            .poly_coefficients()
            .ok_or_else(|| Error::Precondition("polynomial components required".into()))?;
        if c.iter().any(|&a| a < 0.0) {
            return Err(Error::Precondition("coefficients must be non-negative".into()));
        }
        coeffs.push(c);
    }
    let degree = [&i.buyer_own, &i.buyer_cross, &i.seller_own, &i.seller_cross]
        .iter()
        .filter_map(|f| f.degree())
        .max()
        .unwrap_or(0)
        .max(1);
    let k1 = (degree + 1) as f64;
    let gamma = k1 * k1;
    let bound = 1.0 + gamma;
    let (eb, es) = i.expected_values()?;
    if es >= eb / gamma {
        return Ok(PolynomialDesign {
            designed: Designed {
                mechanism: Mechanism::NoTrade,
                label: "no-trade".into(),
                bound,
            },
            degree,
            case: None,
            j: None,
            price: None,
            prediction_holds: true,
        });
    }
    let price = eb / k1;
    let own = &coeffs[0];
    let cross = &coeffs[1];
    let mut lead = 0.0;
    let mut j = None;
    for (idx, &a) in own.iter().enumerate().skip(1) {
        let v = a / (idx + 1) as f64;
        if v > lead {
            lead = v;
            j = Some(idx);
        }
    }
    let base: f64 = cross.iter().enumerate().skip(1).map(|(idx, &b)| b / (idx + 1) as f64).sum::<f64>()
        + own.first().copied().unwrap_or(0.0)
        + cross.first().copied().unwrap_or(0.0);
    let (case, j) = if lead <= base { (1u8, None) } else { (2u8, j) };
    let mechanism = posted(i, price)?;
    let prediction_holds = match (&mechanism, case, j) {
        (Mechanism::PostedPrice { thresholds, .. }, 1, _) => *thresholds == ThresholdProfile::always(),
        (Mechanism::PostedPrice { thresholds, .. }, 2, Some(j)) => {
            let cap = (1.0 / (j as f64 + 1.0)).powf(1.0 / j as f64);
            thresholds.seller == Threshold::Always
                && match thresholds.buyer {
                    Threshold::Always => true,
                    Threshold::At(t) => t <= cap + 1e-9,
                    Threshold::Never => false,
                }
        }
        _ => false,
    };
    Ok(PolynomialDesign {
        designed: Designed {
            mechanism,
            label: format!("case-{case}"),
            bound,
        },
        degree,
        case: Some(case),
        j,
        price: Some(price),
        prediction_holds,
    })
}

/// Expected welfare of a mechanism on a continuous or discrete instance.
pub fn welfare(i: &InfoStructure, m: &Mechanism) -> Result<f64> {
    match m {
        Mechanism::NoTrade => mech_welfare(i, &Allocation::Constant(0.0)),
        Mechanism::PostedPrice { thresholds, .. } => {
            mech_welfare(i, &Allocation::Thresholds(*thresholds))
        }
        Mechanism::BuyerOffer(offer) => buyer_offer_welfare(i, offer),
        Mechanism::Table(_) => Err(Error::Precondition(
            "tables are evaluated on their discrete instance".into(),
        )),
    }
}

fn buyer_offer_welfare(i: &InfoStructure, offer: &BuyerOffer) -> Result<f64> {
    if !i.seller_cross.is_identically_zero() {
        return Err(Error::Precondition("seller must be fully informed".into()));
    }
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    let es = s.mean(Part::Own);
    let mut gain = 0.0;
    match (&b, &offer.cell_edges) {
        (Side::Atoms { labels, probs, own, .. }, _) => {
            for k in 0..labels.len() {
                let (m, g, h) = seller_acceptance(&s, offer.offer_at(labels[k]));
                gain += probs[k] * (m * own[k] + g - h);
            }
        }
        (Side::Pieces { own, .. }, Some(edges)) => {
            for (c, w) in edges.windows(2).enumerate() {
                let (m, g, h) = seller_acceptance(&s, offer.offers[c]);
                gain += m * own.integral(w[0], w[1]) + (w[1] - w[0]) * (g - h);
            }
        }
        (Side::Pieces { .. }, None) => {
            return Err(Error::Validation("offer table lacks cells for a continuous buyer".into()))
        }
    }
    Ok(es + gain)
}

pub fn ratio_report(i: &InfoStructure, d: &Designed) -> Result<RatioReport> {
    let opt = opt_welfare(i)?;
    let alg = welfare(i, &d.mechanism)?;
    let ratio = opt / alg;
    Ok(RatioReport {
        opt,
        alg,
        ratio,
        bound: d.bound,
        holds: ratio <= d.bound * (1.0 + 1e-9),
    })
}

/// Lays a mechanism onto a grid. Posted prices are re-solved for their
/// threshold equilibrium on the grid so the table is exactly incentive
/// compatible there; buyer offers are looked up at the grid signals.
pub fn tabulate(d: &DiscreteInstance, m: &Mechanism) -> Result<MechanismTable> {
    let mut t = MechanismTable::zeros(d);
    let ns = d.ns();
    match m {
        Mechanism::NoTrade => {}
        Mechanism::PostedPrice { price, .. } => {
            let inst = d.to_structure();
            if let Mechanism::PostedPrice { thresholds, .. } = posted(&inst, *price)? {
                for i in 0..d.nb() {
                    for j in 0..ns {
                        if thresholds.buyer.accepts_upper(d.buyer_labels[i])
                            && thresholds.seller.accepts_lower(d.seller_labels[j])
                        {
                            t.x[i * ns + j] = 1.0;
                            t.p[i * ns + j] = *price;
                        }
                    }
                }
            }
        }
        Mechanism::BuyerOffer(offer) => {
            for i in 0..d.nb() {
                let o = offer.offer_at(d.buyer_labels[i]);
                for j in 0..ns {
                    if d.vs(i, j) <= o {
                        t.x[i * ns + j] = 1.0;
                        t.p[i * ns + j] = o;
                    }
                }
            }
        }
        Mechanism::Table(tab) => {
            if tab.buyer_labels != d.buyer_labels || tab.seller_labels != d.seller_labels {
                return Err(Error::Validation("table grid does not match the instance".into()));
            }
            t = tab.clone();
        }
    }
    Ok(t)
}

/// Interim BIC and IR for both agents plus the discrete payment-identity
/// residuals.
///
/// With types in label order, BIC between neighbours pins the increment of
/// interim utility between `E[x(l,.) Δ_l]` and `E[x(l+1,.) Δ_l]`, where
/// `Δ_l` is the value change from type `l` to `l+1`. The residual is how far
/// the cumulative utility change leaves the cumulative band; it tends to
/// the continuous identity as the grid refines.
pub fn check_mechanism(d: &DiscreteInstance, t: &MechanismTable) -> CheckReport {
    let nb = d.nb();
    let ns = d.ns();
    let wb = &d.buyer_probs;
    let ws = &d.seller_probs;
    let scale = d.value_scale().max(1.0);
    let tol = CHECK_TOL * scale;

    // ub[i][k]: buyer type i reporting k.
    let ub = |i: usize, k: usize| -> f64 {
        (0..ns).map(|j| ws[j] * (t.x(k, j) * d.vb(i, j) - t.p(k, j))).sum()
    };
    let us = |j: usize, k: usize| -> f64 {
        (0..nb).map(|i| wb[i] * (t.p(i, k) - t.x(i, k) * d.vs(i, j))).sum()
    };

    let mut viol_b = 0.0f64;
    let mut min_ir_b = f64::INFINITY;
    let truth_b: Vec<f64> = (0..nb).map(|i| ub(i, i)).collect();
    for i in 0..nb {
        min_ir_b = min_ir_b.min(truth_b[i]);
        for k in 0..nb {
            if k != i {
                viol_b = viol_b.max(ub(i, k) - truth_b[i]);
            }
        }
    }
    let mut viol_s = 0.0f64;
    let mut min_ir_s = f64::INFINITY;
    let truth_s: Vec<f64> = (0..ns).map(|j| us(j, j)).collect();
    for j in 0..ns {
        min_ir_s = min_ir_s.min(truth_s[j]);
        for k in 0..ns {
            if k != j {
                viol_s = viol_s.max(us(j, k) - truth_s[j]);
            }
        }
    }

    let mut res_b = 0.0f64;
    let (mut lo, mut hi) = (0.0, 0.0);
    for l in 0..nb.saturating_sub(1) {
        for j in 0..ns {
            let delta = d.vb(l + 1, j) - d.vb(l, j);
            lo += ws[j] * t.x(l, j) * delta;
            hi += ws[j] * t.x(l + 1, j) * delta;
        }
        let du = truth_b[l + 1] - truth_b[0];
        res_b = res_b.max(lo - du).max(du - hi);
    }
    let mut res_s = 0.0f64;
    let (mut lo, mut hi) = (0.0, 0.0);
    for l in 0..ns.saturating_sub(1) {
        for i in 0..nb {
            let delta = d.vs(i, l + 1) - d.vs(i, l);
            lo -= wb[i] * t.x(i, l) * delta;
            hi -= wb[i] * t.x(i, l + 1) * delta;
        }
        let du = truth_s[l + 1] - truth_s[0];
        res_s = res_s.max(lo - du).max(du - hi);
    }

    CheckReport {
        bic_buyer: viol_b <= tol,
        bic_seller: viol_s <= tol,
        ir_buyer: min_ir_b >= -tol,
        ir_seller: min_ir_s >= -tol,
        max_bic_violation_buyer: viol_b.max(0.0),
        max_bic_violation_seller: viol_s.max(0.0),
        min_ir_buyer: min_ir_b,
        min_ir_seller: min_ir_s,
        myerson_residual_buyer: res_b.max(0.0),
        myerson_residual_seller: res_s.max(0.0),
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MyersonResidual {
    pub buyer: f64,
    pub seller: f64,
}

/// Payment identity for a threshold posted price on continuous signals,
/// evaluated in closed form at `n` grid signals and at the thresholds:
/// interim payment against
/// `E[p(0,.)] + E[x(z,.) v(z,.)] - E[x(0,.) v(0,.)] - ∫_0^z X(u) ∂v/∂u du`.
pub fn myerson_residual_posted_price(
    i: &InfoStructure,
    price: f64,
    th: &ThresholdProfile,
    n: usize,
) -> Result<MyersonResidual> {
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    let (own_b, own_s) = match (&b, &s) {
        (Side::Pieces { own: ob, .. }, Side::Pieces { own: os, .. }) => (ob.clone(), os.clone()),
        _ => return Err(Error::Precondition("continuous signals required".into())),
    };
    let (qb, _) = b.accept(Part::Own, th.buyer, true);
    let (_, d_cross) = b.accept(Part::Cross, th.buyer, true);
    let (qs, _) = s.accept(Part::Own, th.seller, false);
    let (_, c_cross) = s.accept(Part::Cross, th.seller, false);

    // Integral of the derivative over [0, z] restricted to the accept set.
    let deriv_integral = |f: &crate::poly::Piecewise, lo: f64, hi: f64| -> f64 {
        if hi <= lo {
            return 0.0;
        }
        f.pieces()
            .map(|(a, bb, p)| {
                let l = a.max(lo);
                let h = bb.min(hi);
                if h > l {
                    p.eval(h) - p.eval(l)
                } else {
                    0.0
                }
            })
            .sum()
    };
    let mut pts: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    for t in [th.buyer, th.seller] {
        if let Threshold::At(t) = t {
            pts.push(t);
        }
    }

    let acc_b = |z: f64| th.buyer.accepts_upper(z);
    let acc_s = |z: f64| th.seller.accepts_lower(z);
    let accept_interval_b = |z: f64| -> (f64, f64) {
        match th.buyer {
            Threshold::Always => (0.0, z),
            Threshold::Never => (0.0, 0.0),
            Threshold::At(t) => (t.max(0.0), z),
        }
    };
    let accept_interval_s = |z: f64| -> (f64, f64) {
        match th.seller {
            Threshold::Always => (0.0, z),
            Threshold::Never => (0.0, 0.0),
            Threshold::At(t) => (0.0, t.min(z)),
        }
    };

    let mut rb = 0.0f64;
    let mut rs = 0.0f64;
    for &z in &pts {
        // Buyer at signal z.
        let xz = if acc_b(z) { qs } else { 0.0 };
        let x0 = if acc_b(0.0) { qs } else { 0.0 };
        let pay = price * xz;
        let pay0 = price * x0;
        let val_z = if acc_b(z) { qs * own_b.eval(z) + c_cross } else { 0.0 };
        let val_0 = if acc_b(0.0) { qs * own_b.eval(0.0) + c_cross } else { 0.0 };
        let (l, h) = accept_interval_b(z);
        let env = qs * deriv_integral(&own_b, l, h);
        rb = rb.max((pay - (pay0 + val_z - val_0 - env)).abs());

        // Seller at signal z.
        let yz = if acc_s(z) { qb } else { 0.0 };
        let y0 = if acc_s(0.0) { qb } else { 0.0 };
        let rev = price * yz;
        let rev0 = price * y0;
        let cost_z = if acc_s(z) { qb * own_s.eval(z) + d_cross } else { 0.0 };
        let cost_0 = if acc_s(0.0) { qb * own_s.eval(0.0) + d_cross } else { 0.0 };
        let (l, h) = accept_interval_s(z);
        let env = qb * deriv_integral(&own_s, l, h);
        rs = rs.max((rev - (rev0 + cost_z - cost_0 - env)).abs());
    }
    Ok(MyersonResidual { buyer: rb, seller: rs })
}
