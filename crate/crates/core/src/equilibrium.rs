//! Threshold best responses and equilibria of posted-price games.
//!
//! At price `p` a buyer with signal `x_b` accepts when
//! `buyer_own(x_b) + E[buyer_cross | seller accepts] >= p`, and a seller
//! accepts when `seller_own(x_s) + E[seller_cross | buyer accepts] <= p`.
//! Separability reduces each best response to a level set of the own part.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mechanisms::{Threshold, ThresholdProfile};
use crate::valuations::{InfoStructure, Part, Side};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EqOptions {
    /// Uniform grid points on [0, 1] for continuous signals.
    pub grid_points: usize,
    pub max_iter: usize,
    /// Weak inequalities hold within `tol * (1 + |p|)`.
    pub tol: f64,
}

impl Default for EqOptions {
    fn default() -> Self {
        EqOptions {
            grid_points: 2001,
            max_iter: 10_000,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EquilibriumStatus {
    TradingEquilibrium { buyer: Threshold, seller: Threshold },
    NoTradeOnly,
    NotConverged,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Certification {
    /// No pair of lattice thresholds with positive trade probability
    /// satisfies both acceptance inequalities.
    pub exhaustive: bool,
    pub buyer_candidates: usize,
    pub seller_candidates: usize,
    /// Grid spacing when a side is continuous; certification holds at this
    /// resolution only.
    pub grid_resolution: Option<f64>,
    /// A feasible pair when `exhaustive` is false.
    pub witness: Option<ThresholdProfile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub status: EquilibriumStatus,
    pub price: f64,
    pub profile: ThresholdProfile,
    pub trade_probability: f64,
    /// Largest violation of the accept and reject inequalities over the lattice.
    pub residual_buyer: f64,
    pub residual_seller: f64,
    pub history: Vec<ThresholdProfile>,
    /// Some best response conditioned on a probability-zero event.
    pub null_event: bool,
    pub certification: Option<Certification>,
}

/// Best response of the buyer and whether it conditioned on a null event.
pub fn best_response_buyer(i: &InfoStructure, p: f64, ts: Threshold, opts: &EqOptions) -> Result<(Threshold, bool)> {
    let g = Game::new(i, opts)?;
    Ok(g.br_buyer(p, ts))
}

/// Best response of the seller and whether it conditioned on a null event.
pub fn best_response_seller(i: &InfoStructure, p: f64, tb: Threshold, opts: &EqOptions) -> Result<(Threshold, bool)> {
    let g = Game::new(i, opts)?;
    Ok(g.br_seller(p, tb))
}

struct Game {
    b: Side,
    s: Side,
    /// Lattice points and own values, ascending.
    b_grid: Vec<(f64, f64)>,
    s_grid: Vec<(f64, f64)>,
    tol: f64,
    max_iter: usize,
}

impl Game {
    fn new(i: &InfoStructure, opts: &EqOptions) -> Result<Game> {
        i.validate()?;
        let b = i.buyer_side()?;
        let s = i.seller_side()?;
        let grid = |side: &Side| -> Vec<(f64, f64)> {
            side.lattice(opts.grid_points)
                .into_iter()
                .map(|x| (x, side.value(Part::Own, x)))
                .collect()
        };
        Ok(Game {
            b_grid: grid(&b),
            s_grid: grid(&s),
            b,
            s,
            tol: opts.tol,
            max_iter: opts.max_iter,
        })
    }

    fn tol_at(&self, p: f64) -> f64 {
        self.tol * (1.0 + p.abs())
    }

    /// `E[cross | accept]` on `side`, falling back to the unconditional mean.
    fn conditional_cross(side: &Side, th: Threshold, upper: bool) -> (f64, bool) {
        let (q, c) = side.accept(Part::Cross, th, upper);
        if q > 0.0 {
            (c / q, false)
        } else {
            (side.mean(Part::Cross), true)
        }
    }

    /// Lattice merged with the points where the own part crosses `level`.
    fn candidates(side: &Side, grid: &[(f64, f64)], level: f64) -> Vec<(f64, f64)> {
        let roots = side.own_crossings(level);
        if roots.is_empty() {
            return grid.to_vec();
        }
        let mut out = Vec::with_capacity(grid.len() + roots.len());
        out.extend_from_slice(grid);
        out.extend(roots.into_iter().map(|r| (r, side.value(Part::Own, r))));
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out.dedup_by(|a, b| a.0 == b.0);
        out
    }

    fn br_buyer(&self, p: f64, ts: Threshold) -> (Threshold, bool) {
        // The seller's cross part is the buyer's cross value.
        let (cm, null) = Self::conditional_cross(&self.s, ts, false);
        let level = p - cm;
        let tol = self.tol_at(p);
        let cand = Self::candidates(&self.b, &self.b_grid, level);
        let mut k = cand.len();
        while k > 0 && cand[k - 1].1 >= level - tol {
            k -= 1;
        }
        let th = if k == 0 {
            Threshold::Always
        } else if k == cand.len() {
            Threshold::Never
        } else {
            Threshold::At(cand[k].0)
        };
        (th, null)
    }

    fn br_seller(&self, p: f64, tb: Threshold) -> (Threshold, bool) {
        let (cm, null) = Self::conditional_cross(&self.b, tb, true);
        let level = p - cm;
        let tol = self.tol_at(p);
        let cand = Self::candidates(&self.s, &self.s_grid, level);
        let mut k = 0;
        while k < cand.len() && cand[k].1 <= level + tol {
            k += 1;
        }
        let th = if k == cand.len() {
            Threshold::Always
        } else if k == 0 {
            Threshold::Never
        } else {
            Threshold::At(cand[k - 1].0)
        };
        (th, null)
    }

    fn trade_probability(&self, th: &ThresholdProfile) -> f64 {
        let (qb, _) = self.b.accept(Part::Own, th.buyer, true);
        let (qs, _) = self.s.accept(Part::Own, th.seller, false);
        qb * qs
    }

    /// Post-hoc check of both inequality families at every lattice signal,
    /// independent of the iteration.
    fn residuals(&self, p: f64, th: &ThresholdProfile) -> (f64, f64) {
        let (cb, _) = Self::conditional_cross(&self.s, th.seller, false);
        let (cs, _) = Self::conditional_cross(&self.b, th.buyer, true);
        let mut rb = 0.0f64;
        for (x, own) in Self::candidates(&self.b, &self.b_grid, p - cb) {
            let surplus = own + cb - p;
            let v = if th.buyer.accepts_upper(x) { -surplus } else { surplus };
            rb = rb.max(v);
        }
        let mut rs = 0.0f64;
        for (x, own) in Self::candidates(&self.s, &self.s_grid, p - cs) {
            let surplus = p - own - cs;
            let v = if th.seller.accepts_lower(x) { -surplus } else { surplus };
            rs = rs.max(v);
        }
        (rb, rs)
    }

    /// Looks for a threshold pair with positive trade probability where both
    /// accepting sets satisfy their inequalities.
    ///
    /// For buyer threshold `i` and seller threshold `j` the pair is feasible
    /// iff `A_i + C_j >= p` and `S_j + D_i <= p`, with `A_i` the least own
    /// value accepted by the buyer, `D_i` the seller's conditional cross
    /// value, and `S_j`, `C_j` the mirror quantities. Sorting buyer
    /// thresholds by `D_i` with a running max of `A_i` answers each `j` by
    /// binary search.
    fn certify(&self, p: f64) -> Certification {
        let tol = self.tol_at(p);
        // Buyer thresholds: suffix sets {x >= t} with positive mass.
        let mut buyers: Vec<(f64, f64, f64)> = Vec::new(); // (D, A, t)
        let mut suffix_min = f64::INFINITY;
        for k in (0..self.b_grid.len()).rev() {
            let (t, own) = self.b_grid[k];
            suffix_min = suffix_min.min(own);
            let th = Threshold::At(t);
            let (q, d) = self.b.accept(Part::Cross, th, true);
            if q > 0.0 {
                buyers.push((d / q, suffix_min, t));
            }
        }
        let mut sellers: Vec<(f64, f64, f64)> = Vec::new(); // (S, C, t)
        let mut prefix_max = f64::NEG_INFINITY;
        for &(t, own) in &self.s_grid {
            prefix_max = prefix_max.max(own);
            let (q, c) = self.s.accept(Part::Cross, Threshold::At(t), false);
            if q > 0.0 {
                sellers.push((prefix_max, c / q, t));
            }
        }
        buyers.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(buyers.len());
        for (k, b) in buyers.iter().enumerate() {
            match best.last() {
                Some(&(a, _)) if a >= b.1 => best.push((a, best[k - 1].1)),
                _ => best.push((b.1, k)),
            }
        }
        let mut witness = None;
        for &(s_max, c, ts) in &sellers {
            let cap = p + tol - s_max;
            let n = buyers.partition_point(|b| b.0 <= cap);
            if n == 0 {
                continue;
            }
            let (a, k) = best[n - 1];
            if a + c >= p - tol {
                witness = Some(ThresholdProfile {
                    buyer: Threshold::At(buyers[k].2),
                    seller: Threshold::At(ts),
                });
                break;
            }
        }
        let res = |s: &Side, g: &[(f64, f64)]| -> Option<f64> {
            if s.is_discrete() || g.len() < 2 {
                None
            } else {
                Some(g[1].0 - g[0].0)
            }
        };
        let grid_resolution = match (res(&self.b, &self.b_grid), res(&self.s, &self.s_grid)) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        Certification {
            exhaustive: witness.is_none(),
            buyer_candidates: buyers.len(),
            seller_candidates: sellers.len(),
            grid_resolution,
            witness,
        }
    }
}

fn same(a: Threshold, b: Threshold) -> bool {
    match (a, b) {
        (Threshold::At(x), Threshold::At(y)) => (x - y).abs() <= 1e-13,
        _ => a == b,
    }
}

/// Simultaneous best responses from the trade-maximal profile.
///
/// Best responses are monotone in the opponent's threshold, so the trade
/// region only shrinks and the iteration stops at the largest equilibrium
/// reachable from always-accept. The iteration stops once the trade
/// probability is zero; that outcome is certified by checking every pair of
/// lattice thresholds.
pub fn solve_equilibrium(i: &InfoStructure, p: f64, opts: &EqOptions) -> Result<EquilibriumResult> {
    let g = Game::new(i, opts)?;
    let mut th = ThresholdProfile::always();
    let mut history = vec![th];
    let mut null_event = false;
    let mut converged = false;
    for _ in 0..g.max_iter {
        // Zero trade is absorbing: responses to a null event no longer shrink
        // the trade region and may cycle.
        if g.trade_probability(&th) == 0.0 {
            converged = true;
            break;
        }
        let (tb, nb) = g.br_buyer(p, th.seller);
        let (ts, ns) = g.br_seller(p, th.buyer);
        null_event |= nb || ns;
        let next = ThresholdProfile { buyer: tb, seller: ts };
        if same(next.buyer, th.buyer) && same(next.seller, th.seller) {
            converged = true;
            break;
        }
        th = next;
        history.push(th);
    }
    let q = g.trade_probability(&th);
    let (rb, rs) = g.residuals(p, &th);
    let (status, certification) = if !converged {
        (EquilibriumStatus::NotConverged, None)
    } else if q > 0.0 {
        (
            EquilibriumStatus::TradingEquilibrium {
                buyer: th.buyer,
                seller: th.seller,
            },
            None,
        )
    } else {
        (EquilibriumStatus::NoTradeOnly, Some(g.certify(p)))
    };
    Ok(EquilibriumResult {
        status,
        price: p,
        profile: th,
        trade_probability: q,
        residual_buyer: rb,
        residual_seller: rs,
        history,
        null_event,
        certification,
    })
}

/// Each step of a best-response history weakly shrinks both acceptance regions.
pub fn history_is_monotone(i: &InfoStructure, history: &[ThresholdProfile]) -> Result<bool> {
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    let mass = |th: &ThresholdProfile| {
        (
            b.accept(Part::Own, th.buyer, true).0,
            s.accept(Part::Own, th.seller, false).0,
        )
    };
    Ok(history.windows(2).all(|w| {
        let (b0, s0) = mass(&w[0]);
        let (b1, s1) = mass(&w[1]);
        b1 <= b0 + 1e-15 && s1 <= s0 + 1e-15
    }))
}
