//! Welfare-optimal mechanisms on finite grids by linear programming.
//!
//! Interim regime: maximise `E[v_s] + Σ w_i w_j x_ij (vb_ij - vs_ij)` over
//! `x ∈ [0,1]` subject to interim BIC and interim IR for both agents.
//! Interim constraints only see payments through the buyer's expected
//! payment `P_b(i)` and the seller's expected receipt `P_s(j)`; any pair
//! with `Σ w_i P_b(i) = Σ w_j P_s(j)` is realised by the ex-post payments
//! `p_ij = P_b(i) + P_s(j) - T`, `T = Σ w_i P_b(i)`. The LP works on `x`
//! alone and the payments are rebuilt from the solution (see `build_lp`).
//!
//! Types whose value rows coincide are pooled before solving and the
//! solution is expanded afterwards; averaging a mechanism over such a pool
//! keeps it feasible and leaves welfare unchanged.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use simplex::{simplest_rounding_to, LinearProgram, Relation, Scalar, Status};

use crate::error::{Error, Result};
use crate::instances::{bound_buyer_signal, bound_seller_signal, build, Family, HardInstanceSpec};
use crate::mechanisms::{check_mechanism, MechanismTable};
use crate::valuations::{opt_welfare, ComponentFn, InfoStructure, Part, Side, SignalDist};

/// Finite grid instance with separable values:
/// `vb(i,j) = buyer_own[i] + buyer_cross[j]`, `vs(i,j) = seller_cross[i] + seller_own[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteInstance {
    pub buyer_labels: Vec<f64>,
    pub buyer_probs: Vec<f64>,
    pub seller_labels: Vec<f64>,
    pub seller_probs: Vec<f64>,
    pub buyer_own: Vec<f64>,
    pub seller_cross: Vec<f64>,
    pub seller_own: Vec<f64>,
    pub buyer_cross: Vec<f64>,
}

fn side_grid(side: &Side, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    match side {
        Side::Atoms {
            labels,
            probs,
            own,
            cross,
        } => (labels.clone(), probs.clone(), own.clone(), cross.clone()),
        Side::Pieces { own, cross } => {
            let labels: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
            let probs = vec![1.0 / n as f64; n];
            let o = labels.iter().map(|&x| own.eval(x)).collect();
            let c = labels.iter().map(|&x| cross.eval(x)).collect();
            (labels, probs, o, c)
        }
    }
}

/// Midpoint grid with equal weights for uniform signals; discrete signals
/// pass through.
pub fn discretize(i: &InfoStructure, n_buyer: usize, n_seller: usize) -> Result<DiscreteInstance> {
    i.validate()?;
    let b = i.buyer_side()?;
    let s = i.seller_side()?;
    if (!b.is_discrete() && n_buyer < 2) || (!s.is_discrete() && n_seller < 2) {
        return Err(Error::Validation("a continuous side needs at least 2 grid points".into()));
    }
    let (bl, bp, bo, sc) = side_grid(&b, n_buyer);
    let (sl, sp, so, bc) = side_grid(&s, n_seller);
    Ok(DiscreteInstance {
        buyer_labels: bl,
        buyer_probs: bp,
        seller_labels: sl,
        seller_probs: sp,
        buyer_own: bo,
        seller_cross: sc,
        seller_own: so,
        buyer_cross: bc,
    })
}

impl DiscreteInstance {
    pub fn nb(&self) -> usize {
        self.buyer_labels.len()
    }

    pub fn ns(&self) -> usize {
        self.seller_labels.len()
    }

    #[inline]
    pub fn vb(&self, i: usize, j: usize) -> f64 {
        self.buyer_own[i] + self.buyer_cross[j]
    }

    #[inline]
    pub fn vs(&self, i: usize, j: usize) -> f64 {
        self.seller_cross[i] + self.seller_own[j]
    }

    pub fn vb_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.nb()).map(|i| (0..self.ns()).map(|j| self.vb(i, j)).collect()).collect()
    }

    pub fn vs_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.nb()).map(|i| (0..self.ns()).map(|j| self.vs(i, j)).collect()).collect()
    }

    pub fn value_scale(&self) -> f64 {
        let m = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        m(&self.buyer_own) + m(&self.buyer_cross) + m(&self.seller_own) + m(&self.seller_cross)
    }

    pub fn validate(&self) -> Result<()> {
        let nb = self.nb();
        let ns = self.ns();
        if nb == 0 || ns == 0 {
            return Err(Error::Validation("empty support".into()));
        }
        if self.buyer_probs.len() != nb
            || self.buyer_own.len() != nb
            || self.seller_cross.len() != nb
            || self.seller_probs.len() != ns
            || self.seller_own.len() != ns
            || self.buyer_cross.len() != ns
        {
            return Err(Error::Validation("shape mismatch".into()));
        }
        SignalDist::discrete(&self.buyer_labels, &self.buyer_probs).validate()?;
        SignalDist::discrete(&self.seller_labels, &self.seller_probs).validate()?;
        let all = [&self.buyer_own, &self.seller_cross, &self.seller_own, &self.buyer_cross];
        if all.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Validation("non-finite value".into()));
        }
        Ok(())
    }

    /// The same grid as an information structure with discrete signals.
    pub fn to_structure(&self) -> InfoStructure {
        InfoStructure {
            buyer_own: ComponentFn::table(self.buyer_labels.clone(), self.buyer_own.clone()),
            seller_cross: ComponentFn::table(self.buyer_labels.clone(), self.seller_cross.clone()),
            seller_own: ComponentFn::table(self.seller_labels.clone(), self.seller_own.clone()),
            buyer_cross: ComponentFn::table(self.seller_labels.clone(), self.buyer_cross.clone()),
            buyer_sig: SignalDist::discrete(&self.buyer_labels, &self.buyer_probs),
            seller_sig: SignalDist::discrete(&self.seller_labels, &self.seller_probs),
            require_monotone: false,
        }
    }

    pub fn expected_values(&self) -> (f64, f64) {
        let eb: f64 = dot(&self.buyer_probs, &self.buyer_own) + dot(&self.seller_probs, &self.buyer_cross);
        let es: f64 = dot(&self.buyer_probs, &self.seller_cross) + dot(&self.seller_probs, &self.seller_own);
        (eb, es)
    }

    pub fn opt_welfare(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.nb() {
            for j in 0..self.ns() {
                s += self.buyer_probs[i] * self.seller_probs[j] * self.vb(i, j).max(self.vs(i, j));
            }
        }
        s
    }

    pub fn welfare(&self, t: &MechanismTable) -> f64 {
        let (_, es) = self.expected_values();
        let mut g = 0.0;
        for i in 0..self.nb() {
            for j in 0..self.ns() {
                g += self.buyer_probs[i] * self.seller_probs[j] * t.x(i, j) * (self.vb(i, j) - self.vs(i, j));
            }
        }
        es + g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpRegime {
    BayesianInterim,
    ExPost,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arithmetic {
    F64,
    Exact,
    /// Exact when the pooled grid has at most `EXACT_CELLS` cells and every
    /// input has a rational preimage with denominator at most `EXACT_DENOM`.
    Auto,
}

/// Rational pivoting cost grows quickly with generic data; 6×6 pooled grids
/// (every hard construction) stay well under a second.
pub const EXACT_CELLS: usize = 36;
/// The simplest preimage of a generic float has a denominator near 2^26;
/// construction data (`k^-x`, `k^x`, midpoints) stays far below 2^20.
pub const EXACT_DENOM: u64 = 1 << 20;

fn short_rationals(d: &DiscreteInstance) -> bool {
    let cap = num_bigint::BigInt::from(EXACT_DENOM);
    [
        &d.buyer_probs,
        &d.seller_probs,
        &d.buyer_own,
        &d.seller_cross,
        &d.seller_own,
        &d.buyer_cross,
    ]
    .iter()
    .flat_map(|v| v.iter())
    .all(|&x| simplest_rounding_to(x).denom() <= &cap)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LpOptions {
    pub regime: LpRegime,
    pub arithmetic: Arithmetic,
}

impl LpOptions {
    pub fn new(regime: LpRegime) -> Self {
        LpOptions {
            regime,
            arithmetic: Arithmetic::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericalIssue,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub regime: LpRegime,
    pub table: MechanismTable,
    pub welfare: f64,
    /// Largest violation of the regime's constraints, recomputed on the full grid.
    pub max_violation: f64,
    /// `|LP objective - welfare recomputed from x|`.
    pub welfare_gap: f64,
    pub exact: bool,
    pub pooled_buyers: usize,
    pub pooled_sellers: usize,
    pub iterations: usize,
}

/// Pools equal `(own, cross)` pairs: returns class per type and class weights.
fn pool(own: &[f64], cross: &[f64], probs: &[f64]) -> (Vec<usize>, Vec<(f64, f64, f64)>) {
    let mut classes: Vec<(f64, f64, f64)> = Vec::new();
    let mut of = Vec::with_capacity(own.len());
    for k in 0..own.len() {
        match classes.iter().position(|c| c.0 == own[k] && c.1 == cross[k]) {
            Some(c) => {
                classes[c].2 += probs[k];
                of.push(c);
            }
            None => {
                classes.push((own[k], cross[k], probs[k]));
                of.push(classes.len() - 1);
            }
        }
    }
    (of, classes)
}

struct Pooled {
    b_of: Vec<usize>,
    s_of: Vec<usize>,
    /// (own, cross, weight) per class.
    b: Vec<(f64, f64, f64)>,
    s: Vec<(f64, f64, f64)>,
}

impl Pooled {
    fn new(d: &DiscreteInstance) -> Pooled {
        let (b_of, b) = pool(&d.buyer_own, &d.seller_cross, &d.buyer_probs);
        let (s_of, s) = pool(&d.seller_own, &d.buyer_cross, &d.seller_probs);
        Pooled { b_of, s_of, b, s }
    }
    fn vb(&self, i: usize, j: usize) -> f64 {
        self.b[i].0 + self.s[j].1
    }
    fn vs(&self, i: usize, j: usize) -> f64 {
        self.b[i].1 + self.s[j].0
    }
}

/// Pooled classes sorted by own value (ascending for the buyer, descending
/// for the seller) and grouped by equal own value.
fn own_groups(classes: &[(f64, f64, f64)], ascending: bool) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..classes.len()).collect();
    idx.sort_by(|&a, &b| {
        let o = classes[a].0.total_cmp(&classes[b].0);
        if ascending {
            o
        } else {
            o.reverse()
        }
    });
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match out.last_mut() {
            Some(g) if classes[g[0]].0 == classes[i].0 => g.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// Builds the LP for `regime`. Allocation variables come first, row-major.
///
/// Each agent's utility is linear in its own value with slope equal to its
/// allocation, so incentive compatibility reduces to constraints between
/// neighbouring own-value groups.
///
/// Interim: interim allocations are monotone across groups, `U` variables
/// (one per group) dominate the minimal information-rent chain, and the
/// expected gain from trade covers both agents' expected rents. Interim
/// payments exist exactly when these hold, so no payment variables are
/// needed; `recover_payments` rebuilds them from `x`.
///
/// Ex post: free payments `p_ij`, with the same neighbour constraints per
/// column (buyer) and per row (seller), equal utilities within a group, and
/// IR at the group with the least utility.
fn build_lp<T: Scalar>(q: &Pooled, regime: LpRegime) -> LinearProgram<T> {
    let nb = q.b.len();
    let ns = q.s.len();
    let nx = nb * ns;
    let xi = |i: usize, j: usize| i * ns + j;
    let c = |v: f64| T::from_f64(v);
    let wb: Vec<f64> = q.b.iter().map(|c| c.2).collect();
    let ws: Vec<f64> = q.s.iter().map(|c| c.2).collect();
    let gb = own_groups(&q.b, true);
    let gs = own_groups(&q.s, false);
    match regime {
        LpRegime::BayesianInterim => {
            let ub = |g: usize| nx + g;
            let us = |h: usize| nx + gb.len() + h;
            let mut lp = LinearProgram::new(nx + gb.len() + gs.len());
            let mut budget: Vec<(usize, T)> = Vec::with_capacity(nx + gb.len() + gs.len());
            for i in 0..nb {
                for j in 0..ns {
                    let gain = c(wb[i] * ws[j] * (q.vb(i, j) - q.vs(i, j)));
                    lp.set_objective(xi(i, j), gain.clone());
                    budget.push((xi(i, j), gain));
                    lp.add_constraint(vec![(xi(i, j), T::one())], Relation::Le, T::one());
                }
            }
            let (wbr, wsr) = (&wb, &ws);
            let xb = |i: usize, s: f64| (0..ns).map(move |j| (xi(i, j), c(s * wsr[j])));
            let xs = |j: usize, s: f64| (0..nb).map(move |i| (xi(i, j), c(s * wbr[i])));
            for g in 0..gb.len().saturating_sub(1) {
                let dt = q.b[gb[g + 1][0]].0 - q.b[gb[g][0]].0;
                for &i in &gb[g] {
                    for &k in &gb[g + 1] {
                        lp.add_constraint(xb(k, 1.0).chain(xb(i, -1.0)).collect(), Relation::Ge, T::zero());
                    }
                    let mut row: Vec<(usize, T)> = xb(i, -dt).collect();
                    row.push((ub(g + 1), T::one()));
                    row.push((ub(g), c(-1.0)));
                    lp.add_constraint(row, Relation::Ge, T::zero());
                }
            }
            for h in 0..gs.len().saturating_sub(1) {
                let dt = q.s[gs[h][0]].0 - q.s[gs[h + 1][0]].0;
                for &j in &gs[h] {
                    for &l in &gs[h + 1] {
                        lp.add_constraint(xs(l, 1.0).chain(xs(j, -1.0)).collect(), Relation::Ge, T::zero());
                    }
                    let mut row: Vec<(usize, T)> = xs(j, -dt).collect();
                    row.push((us(h + 1), T::one()));
                    row.push((us(h), c(-1.0)));
                    lp.add_constraint(row, Relation::Ge, T::zero());
                }
            }
            for (g, members) in gb.iter().enumerate() {
                budget.push((ub(g), c(-members.iter().map(|&i| wb[i]).sum::<f64>())));
            }
            for (h, members) in gs.iter().enumerate() {
                budget.push((us(h), c(-members.iter().map(|&j| ws[j]).sum::<f64>())));
            }
            lp.add_constraint(budget, Relation::Ge, T::zero());
            lp
        }
        LpRegime::ExPost => {
            let pi = |i: usize, j: usize| nx + i * ns + j;
            let mut lp = LinearProgram::new(2 * nx);
            for i in 0..nb {
                for j in 0..ns {
                    lp.set_objective(xi(i, j), c(wb[i] * ws[j] * (q.vb(i, j) - q.vs(i, j))));
                    lp.add_constraint(vec![(xi(i, j), T::one())], Relation::Le, T::one());
                    lp.set_free(pi(i, j));
                }
            }
            // Utility of a type valuing the good at `v` when reporting cell (i, j).
            let buyer_u = |v: f64, i: usize, j: usize, s: f64| vec![(xi(i, j), c(s * v)), (pi(i, j), c(-s))];
            let seller_u = |v: f64, i: usize, j: usize, s: f64| vec![(pi(i, j), c(s)), (xi(i, j), c(-s * v))];
            let ic = |lp: &mut LinearProgram<T>, truth: Vec<(usize, T)>, lie: Vec<(usize, T)>| {
                let mut row = truth;
                row.extend(lie);
                lp.add_constraint(row, Relation::Ge, T::zero());
            };
            for j in 0..ns {
                let v = |i: usize| q.vb(i, j);
                for g in &gb {
                    for w in g.windows(2) {
                        let mut row = buyer_u(v(w[0]), w[0], j, 1.0);
                        row.extend(buyer_u(v(w[1]), w[1], j, -1.0));
                        lp.add_constraint(row, Relation::Eq, T::zero());
                    }
                }
                for &i in &gb[0] {
                    lp.add_constraint(buyer_u(v(i), i, j, 1.0), Relation::Ge, T::zero());
                }
                for g in gb.windows(2) {
                    for &i in &g[0] {
                        for &k in &g[1] {
                            ic(&mut lp, buyer_u(v(k), k, j, 1.0), buyer_u(v(k), i, j, -1.0));
                            ic(&mut lp, buyer_u(v(i), i, j, 1.0), buyer_u(v(i), k, j, -1.0));
                        }
                    }
                }
            }
            for i in 0..nb {
                let v = |j: usize| q.vs(i, j);
                for h in &gs {
                    for w in h.windows(2) {
                        let mut row = seller_u(v(w[0]), i, w[0], 1.0);
                        row.extend(seller_u(v(w[1]), i, w[1], -1.0));
                        lp.add_constraint(row, Relation::Eq, T::zero());
                    }
                }
                for &j in &gs[0] {
                    lp.add_constraint(seller_u(v(j), i, j, 1.0), Relation::Ge, T::zero());
                }
                for h in gs.windows(2) {
                    for &j in &h[0] {
                        for &l in &h[1] {
                            ic(&mut lp, seller_u(v(l), i, l, 1.0), seller_u(v(l), i, j, -1.0));
                            ic(&mut lp, seller_u(v(j), i, j, 1.0), seller_u(v(j), i, l, -1.0));
                        }
                    }
                }
            }
            lp
        }
    }
}

fn max_of<T: Scalar>(it: impl Iterator<Item = T>) -> T {
    it.fold(T::zero(), |m, v| if m.lt(&v) { v } else { m })
}

/// Ex-post payments implementing an interim-feasible `x`: minimal rents on
/// both sides, the buyer's payments lowered by any surplus so expected
/// payments balance, then `p_ij = P_b(i) + P_s(j) - E[P_s]`.
fn recover_payments<T: Scalar>(q: &Pooled, x: &[T]) -> Vec<T> {
    let nb = q.b.len();
    let ns = q.s.len();
    let wb: Vec<T> = q.b.iter().map(|c| T::from_f64(c.2)).collect();
    let ws: Vec<T> = q.s.iter().map(|c| T::from_f64(c.2)).collect();
    let f = |v: f64| T::from_f64(v);
    let sum = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), |a, v| a.add(&v));
    let xb: Vec<T> = (0..nb).map(|i| sum(&mut (0..ns).map(|j| ws[j].mul(&x[i * ns + j])))).collect();
    let cb: Vec<T> = (0..nb)
        .map(|i| sum(&mut (0..ns).map(|j| ws[j].mul(&x[i * ns + j]).mul(&f(q.s[j].1)))))
        .collect();
    let xs: Vec<T> = (0..ns).map(|j| sum(&mut (0..nb).map(|i| wb[i].mul(&x[i * ns + j])))).collect();
    let ds: Vec<T> = (0..ns)
        .map(|j| sum(&mut (0..nb).map(|i| wb[i].mul(&x[i * ns + j]).mul(&f(q.b[i].1)))))
        .collect();

    let mut pb = vec![T::zero(); nb];
    let mut u = T::zero();
    let gb = own_groups(&q.b, true);
    for (g, members) in gb.iter().enumerate() {
        if g > 0 {
            let prev = &gb[g - 1];
            let dt = f(q.b[members[0]].0).sub(&f(q.b[prev[0]].0));
            u = u.add(&dt.mul(&max_of(prev.iter().map(|&i| xb[i].clone()))));
        }
        for &i in members {
            pb[i] = f(q.b[i].0).mul(&xb[i]).add(&cb[i]).sub(&u);
        }
    }
    let mut ps = vec![T::zero(); ns];
    let mut u = T::zero();
    let gs = own_groups(&q.s, false);
    for (h, members) in gs.iter().enumerate() {
        if h > 0 {
            let prev = &gs[h - 1];
            let dt = f(q.s[prev[0]].0).sub(&f(q.s[members[0]].0));
            u = u.add(&dt.mul(&max_of(prev.iter().map(|&j| xs[j].clone()))));
        }
        for &j in members {
            ps[j] = f(q.s[j].0).mul(&xs[j]).add(&ds[j]).add(&u);
        }
    }
    let revenue = sum(&mut (0..nb).map(|i| wb[i].mul(&pb[i])));
    let cost = sum(&mut (0..ns).map(|j| ws[j].mul(&ps[j])));
    let surplus = revenue.sub(&cost);
    for v in pb.iter_mut() {
        *v = v.sub(&surplus);
    }
    let mut out = Vec::with_capacity(nb * ns);
    for i in 0..nb {
        for j in 0..ns {
            out.push(pb[i].add(&ps[j]).sub(&cost));
        }
    }
    out
}

/// Pooled-grid allocation and payments, converted to `f64`.
struct RawSolution {
    status: Status,
    x: Vec<f64>,
    pay: Vec<f64>,
    iterations: usize,
}

fn run<T: Scalar>(q: &Pooled, regime: LpRegime) -> RawSolution {
    let lp = build_lp::<T>(q, regime);
    let sol = lp.solve();
    let nx = q.b.len() * q.s.len();
    if sol.status != Status::Optimal {
        return RawSolution {
            status: sol.status,
            x: vec![0.0; nx],
            pay: vec![0.0; nx],
            iterations: sol.iterations,
        };
    }
    let x: Vec<f64> = sol.x[..nx].iter().map(|v| v.to_f64().clamp(0.0, 1.0)).collect();
    let pay = match regime {
        LpRegime::ExPost => sol.x[nx..2 * nx].iter().map(|v| v.to_f64()).collect(),
        LpRegime::BayesianInterim => recover_payments(q, &sol.x[..nx]).iter().map(|v| v.to_f64()).collect(),
    };
    RawSolution {
        status: sol.status,
        x,
        pay,
        iterations: sol.iterations,
    }
}

pub fn solve_optimal(d: &DiscreteInstance, opts: LpOptions) -> Result<LpSolution> {
    d.validate()?;
    let q = Pooled::new(d);
    let exact = match opts.arithmetic {
        Arithmetic::Exact => true,
        Arithmetic::F64 => false,
        Arithmetic::Auto => q.b.len() * q.s.len() <= EXACT_CELLS && short_rationals(d),
    };
    let raw = if exact {
        run::<BigRational>(&q, opts.regime)
    } else {
        run::<f64>(&q, opts.regime)
    };
    let nsq = q.s.len();
    let mut table = MechanismTable::zeros(d);
    for i in 0..d.nb() {
        for j in 0..d.ns() {
            let k = q.b_of[i] * nsq + q.s_of[j];
            table.x[i * d.ns() + j] = raw.x[k];
            table.p[i * d.ns() + j] = raw.pay[k];
        }
    }
    let (_, es) = d.expected_values();
    let mut lp_gain = 0.0;
    for i in 0..q.b.len() {
        for j in 0..nsq {
            lp_gain += q.b[i].2 * q.s[j].2 * raw.x[i * nsq + j] * (q.vb(i, j) - q.vs(i, j));
        }
    }
    let welfare = d.welfare(&table);
    let max_violation = match opts.regime {
        LpRegime::BayesianInterim => {
            let r = check_mechanism(d, &table);
            r.max_bic_violation_buyer
                .max(r.max_bic_violation_seller)
                .max(-r.min_ir_buyer)
                .max(-r.min_ir_seller)
                .max(0.0)
        }
        LpRegime::ExPost => expost_violation(d, &table),
    };
    let status = match raw.status {
        Status::Optimal => LpStatus::Optimal,
        Status::Infeasible => LpStatus::Infeasible,
        Status::Unbounded | Status::IterationLimit => LpStatus::NumericalIssue,
    };
    Ok(LpSolution {
        status,
        regime: opts.regime,
        table,
        welfare,
        max_violation,
        welfare_gap: (es + lp_gain - welfare).abs(),
        exact,
        pooled_buyers: q.b.len(),
        pooled_sellers: nsq,
        iterations: raw.iterations,
    })
}

/// Largest violation of ex-post IC and IR for both agents.
pub fn expost_violation(d: &DiscreteInstance, t: &MechanismTable) -> f64 {
    let mut v = 0.0f64;
    for j in 0..d.ns() {
        for i in 0..d.nb() {
            let vb = d.vb(i, j);
            let u = t.x(i, j) * vb - t.p(i, j);
            v = v.max(-u);
            for k in 0..d.nb() {
                v = v.max(t.x(k, j) * vb - t.p(k, j) - u);
            }
        }
    }
    for i in 0..d.nb() {
        for j in 0..d.ns() {
            let vs = d.vs(i, j);
            let u = t.p(i, j) - t.x(i, j) * vs;
            v = v.max(-u);
            for l in 0..d.ns() {
                v = v.max(t.p(i, l) - t.x(i, l) * vs - u);
            }
        }
    }
    v
}

/// `(E_s[x(i, .)] per buyer type, E_b[x(., j)] per seller type)`.
pub fn interim_allocations(d: &DiscreteInstance, t: &MechanismTable) -> (Vec<f64>, Vec<f64>) {
    let xb = (0..d.nb())
        .map(|i| (0..d.ns()).map(|j| d.seller_probs[j] * t.x(i, j)).sum())
        .collect();
    let xs = (0..d.ns())
        .map(|j| (0..d.nb()).map(|i| d.buyer_probs[i] * t.x(i, j)).sum())
        .collect();
    (xb, xs)
}

/// Interim allocation non-decreasing in the buyer's signal and
/// non-increasing in the seller's, between neighbouring types whose own
/// values strictly increase (BIC pins nothing between equal own values).
pub fn interim_monotone(d: &DiscreteInstance, t: &MechanismTable, tol: f64) -> bool {
    let (xb, xs) = interim_allocations(d, t);
    let mut ok = true;
    for i in 1..d.nb() {
        if d.buyer_own[i] > d.buyer_own[i - 1] {
            ok &= xb[i] >= xb[i - 1] - tol;
        }
    }
    for j in 1..d.ns() {
        if d.seller_own[j] > d.seller_own[j - 1] {
            ok &= xs[j] <= xs[j - 1] + tol;
        }
    }
    ok
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AllocationMassReport {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// Allocation mass on the informative signal's non-zero labels against the
/// cap every feasible mechanism on the construction obeys.
///
/// Buyer signal: `Σ_{x_b=1..m} E_s[x(x_b, .)] <= 2k (1 + E[buyer_cross])`.
/// Seller signal: `Σ_{x_s=1..m} E_b[x(., x_s)] <= (2/k)(buyer constant + E[seller_cross]) + 4`.
pub fn verify_allocation_mass(
    spec: &HardInstanceSpec,
    d: &DiscreteInstance,
    t: &MechanismTable,
) -> Result<AllocationMassReport> {
    let (xb, xs) = interim_allocations(d, t);
    let k = spec.k as f64;
    let (lhs, rhs) = match spec.family {
        Family::BuyerSignal => {
            let lhs = (0..d.nb()).filter(|&i| d.buyer_labels[i] >= 1.0).map(|i| xb[i]).sum();
            let cross = dot(&d.seller_probs, &d.buyer_cross);
            (lhs, 2.0 * k * (1.0 + cross))
        }
        Family::SellerSignal => {
            let lhs = (0..d.ns()).filter(|&j| d.seller_labels[j] >= 1.0).map(|j| xs[j]).sum();
            let own = dot(&d.buyer_probs, &d.buyer_own);
            let cross = dot(&d.buyer_probs, &d.seller_cross);
            (lhs, (2.0 / k) * (own + cross) + 4.0)
        }
        _ => {
            return Err(Error::Precondition(
                "allocation-mass caps exist for the buyer-signal and seller-signal constructions".into(),
            ))
        }
    };
    Ok(AllocationMassReport {
        lhs,
        rhs,
        slack: rhs - lhs,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImpossibilityReport {
    pub spec: HardInstanceSpec,
    pub opt: f64,
    pub lp_welfare: f64,
    pub no_trade_welfare: f64,
    pub ratio: f64,
    pub bound: f64,
    pub tol: f64,
    pub pass: bool,
    pub lp_status: LpStatus,
    pub lp_exact: bool,
    pub max_violation: f64,
    pub allocation_mass: Option<AllocationMassReport>,
}

/// Builds the construction, solves the interim LP on its grid, and checks
/// `OPT / lp_welfare >= bound · (1 - tol)`. `n` is the grid size used for
/// continuous signals.
pub fn verify_impossibility(spec: &HardInstanceSpec, n: usize, tol: f64) -> Result<ImpossibilityReport> {
    let bound = match spec.family {
        Family::BuyerSignal => bound_buyer_signal(spec.k, spec.m, spec.alpha, spec.beta)?,
        Family::SellerSignal => bound_seller_signal(spec.k, spec.m, spec.alpha, spec.beta)?,
        Family::PolynomialLB => spec.k as f64,
        _ => {
            return Err(Error::Precondition(
                "impossibility bounds exist for buyer-signal, seller-signal and polynomial-lb".into(),
            ))
        }
    };
    let inst = build(spec)?;
    let opt = opt_welfare(&inst)?;
    let d = discretize(&inst, n, n)?;
    let sol = solve_optimal(&d, LpOptions::new(LpRegime::BayesianInterim))?;
    let allocation_mass = match spec.family {
        Family::BuyerSignal | Family::SellerSignal => Some(verify_allocation_mass(spec, &d, &sol.table)?),
        _ => None,
    };
    let ratio = opt / sol.welfare;
    let mass_ok = allocation_mass.as_ref().is_none_or(|a| a.slack >= -1e-9);
    Ok(ImpossibilityReport {
        spec: spec.clone(),
        opt,
        lp_welfare: sol.welfare,
        no_trade_welfare: inst.seller_side()?.mean(Part::Own) + inst.buyer_side()?.mean(Part::Cross),
        ratio,
        bound,
        tol,
        pass: sol.status == LpStatus::Optimal && ratio >= bound * (1.0 - tol) && mass_ok,
        lp_status: sol.status,
        lp_exact: sol.exact,
        max_violation: sol.max_violation,
        allocation_mass,
    })
}
