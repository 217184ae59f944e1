//! Hard-instance builders and the closed-form ratio bounds they certify.
//!
//! Two conventions for the seller's informedness ratio appear below: the
//! buyer-signal construction uses `γ = α/(1-α)`, the seller-signal one uses
//! `γ̄ = (1-α)/α`. Each builder and bound carries its own.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::valuations::{ComponentFn, InfoStructure, SignalDist};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    BuyerSignal,
    SellerSignal,
    #[serde(rename = "polynomial-lb")]
    PolynomialLB,
    NoEquilibrium,
    #[serde(alias = "expost")]
    ExPost,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Family> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Validation(format!("unknown family `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceSpec {
    pub family: Family,
    #[serde(default)]
    pub k: u32,
    #[serde(default)]
    pub m: u32,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub eps: f64,
}

impl HardInstanceSpec {
    pub fn buyer_signal(k: u32, m: u32, alpha: f64, beta: f64) -> Self {
        HardInstanceSpec {
            family: Family::BuyerSignal,
            k,
            m,
            alpha,
            beta,
            c: 0.0,
            eps: 0.0,
        }
    }

    pub fn seller_signal(k: u32, m: u32, alpha: f64, beta: f64) -> Self {
        HardInstanceSpec {
            family: Family::SellerSignal,
            ..HardInstanceSpec::buyer_signal(k, m, alpha, beta)
        }
    }

    pub fn polynomial_lb(k: u32) -> Self {
        HardInstanceSpec {
            family: Family::PolynomialLB,
            ..HardInstanceSpec::buyer_signal(k, 0, 0.0, 0.0)
        }
    }
}

pub fn build(spec: &HardInstanceSpec) -> Result<InfoStructure> {
    match spec.family {
        Family::BuyerSignal => build_buyer_signal(spec.k, spec.m, spec.alpha, spec.beta),
        Family::SellerSignal => build_seller_signal(spec.k, spec.m, spec.alpha, spec.beta),
        Family::PolynomialLB => build_polynomial_lb(spec.k),
        Family::NoEquilibrium => Ok(build_no_equilibrium()),
        Family::ExPost => build_expost(spec.c, spec.eps),
    }
}

/// Labels `0..=m` with mass `k^-x` on `x >= 1` and the rest on 0, plus the
/// tables `k^x` and `k^(x-1)` (both 0 at label 0).
fn geometric_signal(k: u32, m: u32) -> Result<(SignalDist, ComponentFn, ComponentFn)> {
    let kf = k as f64;
    if !kf.powi(m as i32).is_finite() {
        return Err(Error::Domain(format!("k^m = {k}^{m} is not representable")));
    }
    let labels: Vec<f64> = (0..=m).map(|x| x as f64).collect();
    let mut probs: Vec<f64> = (0..=m).map(|x| kf.powi(-(x as i32))).collect();
    probs[0] = 1.0 - probs[1..].iter().sum::<f64>();
    let pow: Vec<f64> = (0..=m).map(|x| if x == 0 { 0.0 } else { kf.powi(x as i32) }).collect();
    let pow1: Vec<f64> = (0..=m).map(|x| if x == 0 { 0.0 } else { kf.powi(x as i32 - 1) }).collect();
    Ok((
        SignalDist::discrete(&labels, &probs),
        ComponentFn::table(labels.clone(), pow),
        ComponentFn::table(labels, pow1),
    ))
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

/// Buyer holds the informative signal: `v_b = k^x_b + c_b`,
/// `v_s = k^(x_b-1) + γ m/k` with `γ = α/(1-α)` and `c_b = ((1-β)/β) m`.
pub fn build_buyer_signal(k: u32, m: u32, alpha: f64, beta: f64) -> Result<InfoStructure> {
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    if k < 2 || m < 3 {
        return Err(Error::Domain(format!("need k >= 2 and m >= 3, got k = {k}, m = {m}")));
    }
    if alpha >= 1.0 {
        return Err(Error::Domain("γ = α/(1-α) is undefined at α = 1".into()));
    }
    if beta <= 0.0 {
        return Err(Error::Domain("buyer-signal construction needs β > 0".into()));
    }
    let (sig, pow, pow1) = geometric_signal(k, m)?;
    let gamma = alpha / (1.0 - alpha);
    let mu = m as f64 / k as f64;
    Ok(InfoStructure {
        buyer_own: pow,
        buyer_cross: ComponentFn::constant((1.0 - beta) / beta * m as f64),
        seller_own: ComponentFn::constant(gamma * mu),
        seller_cross: pow1,
        buyer_sig: sig,
        seller_sig: SignalDist::UniformUnit,
        require_monotone: false,
    })
}

/// Seller holds the informative signal: `v_b = k^x_s + δ m`,
/// `v_s = k^(x_s-1) + γ̄ m/k` with `δ = β/(1-β)` and `γ̄ = (1-α)/α`.
///
/// The buyer's constant is `δ m`, the value that makes the buyer exactly
/// β-informed and gives `E[v_b] = m(δ + 1)`.
pub fn build_seller_signal(k: u32, m: u32, alpha: f64, beta: f64) -> Result<InfoStructure> {
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    if k < 4 || m < 5 {
        return Err(Error::Domain(format!("need k >= 4 and m >= 5, got k = {k}, m = {m}")));
    }
    if alpha <= 0.0 {
        return Err(Error::Domain("γ̄ = (1-α)/α is undefined at α = 0".into()));
    }
    if beta >= 1.0 {
        return Err(Error::Domain("δ = β/(1-β) is undefined at β = 1".into()));
    }
    let (sig, pow, pow1) = geometric_signal(k, m)?;
    let delta = beta / (1.0 - beta);
    let gbar = (1.0 - alpha) / alpha;
    Ok(InfoStructure {
        buyer_own: ComponentFn::constant(delta * m as f64),
        buyer_cross: pow,
        seller_own: pow1,
        seller_cross: ComponentFn::constant(gbar * m as f64 / k as f64),
        buyer_sig: SignalDist::UniformUnit,
        seller_sig: sig,
        require_monotone: false,
    })
}

/// `v_s = x_s^k`, `v_b = k x_s^k`.
pub fn build_polynomial_lb(k: u32) -> Result<InfoStructure> {
    if k < 1 {
        return Err(Error::Domain("polynomial lower bound needs k >= 1".into()));
    }
    let mut mono = vec![0.0; k as usize + 1];
    mono[k as usize] = 1.0;
    let mut scaled = mono.clone();
    scaled[k as usize] = k as f64;
    Ok(InfoStructure {
        buyer_own: ComponentFn::zero(),
        buyer_cross: ComponentFn::poly(&scaled),
        seller_own: ComponentFn::poly(&mono),
        seller_cross: ComponentFn::zero(),
        buyer_sig: SignalDist::UniformUnit,
        seller_sig: SignalDist::UniformUnit,
        require_monotone: false,
    })
}

/// `v_b = x_b + 2 x_s`, `v_s = x_s + 2 x_b`.
pub fn build_no_equilibrium() -> InfoStructure {
    InfoStructure {
        buyer_own: ComponentFn::poly(&[0.0, 1.0]),
        buyer_cross: ComponentFn::poly(&[0.0, 2.0]),
        seller_own: ComponentFn::poly(&[0.0, 1.0]),
        seller_cross: ComponentFn::poly(&[0.0, 2.0]),
        buyer_sig: SignalDist::UniformUnit,
        seller_sig: SignalDist::UniformUnit,
        require_monotone: false,
    }
}

/// `v_b = c x_s`, `v_s = x_s + ε`.
pub fn build_expost(c: f64, eps: f64) -> Result<InfoStructure> {
    if !(eps > 0.0) || !(c > 2.0 + 2.0 * eps) {
        return Err(Error::Domain(format!("need ε > 0 and c > 2 + 2ε, got c = {c}, ε = {eps}")));
    }
    Ok(InfoStructure {
        buyer_own: ComponentFn::zero(),
        buyer_cross: ComponentFn::poly(&[0.0, c]),
        seller_own: ComponentFn::poly(&[eps, 1.0]),
        seller_cross: ComponentFn::zero(),
        buyer_sig: SignalDist::UniformUnit,
        seller_sig: SignalDist::UniformUnit,
        require_monotone: false,
    })
}

/// `(δ+1) / ((1/k)(1+γ̄) + δ + 4/m + 2δ/k + 2γ̄/k²)` with `δ = β/(1-β)`,
/// `γ̄ = (1-α)/α`.
pub fn bound_seller_signal(k: u32, m: u32, alpha: f64, beta: f64) -> Result<f64> {
    if k < 4 || m < 5 || !(alpha > 0.0 && alpha <= 1.0) || !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain(format!(
            "seller-signal bound needs k >= 4, m >= 5, α ∈ (0, 1], β ∈ [0, 1); got k = {k}, m = {m}, α = {alpha}, β = {beta}"
        )));
    }
    let (k, m) = (k as f64, m as f64);
    let d = beta / (1.0 - beta);
    let g = (1.0 - alpha) / alpha;
    Ok((d + 1.0) / ((1.0 / k) * (1.0 + g) + d + 4.0 / m + d * 2.0 / k + 2.0 * g / (k * k)))
}

/// `(1/β) / ((1/k)(1/(1-α)) + (1-β)/β + 2k/m + 2k(1-β)/β)`.
pub fn bound_buyer_signal(k: u32, m: u32, alpha: f64, beta: f64) -> Result<f64> {
    if k < 2 || m < 3 || !(0.0..1.0).contains(&alpha) || !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!(
            "buyer-signal bound needs k >= 2, m >= 3, α ∈ [0, 1), β ∈ (0, 1]; got k = {k}, m = {m}, α = {alpha}, β = {beta}"
        )));
    }
    let (k, m) = (k as f64, m as f64);
    let l = (1.0 - beta) / beta;
    Ok((1.0 / beta) / ((1.0 / k) * (1.0 / (1.0 - alpha)) + l + 2.0 * k / m + 2.0 * k * l))
}

/// A corollary: parameters picked from a target, the bound at those
/// parameters, and the target it must reach.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Instantiation {
    pub name: String,
    pub spec: HardInstanceSpec,
    pub bound: f64,
    pub target: f64,
    /// The corollary claims `bound > target` rather than `>=`.
    pub strict: bool,
}

/// Relative slack for `>=` claims. Some instantiations are tight, e.g.
/// `2/(3β)` whenever `4/β` is an integer, and land an ulp below in f64.
pub const BOUND_TOL: f64 = 1e-12;

impl Instantiation {
    pub fn holds(&self) -> bool {
        if self.strict {
            self.bound > self.target
        } else {
            self.bound >= self.target - BOUND_TOL * self.target.abs().max(1.0)
        }
    }
}

fn ceil_u32(x: f64) -> Result<u32> {
    let c = x.ceil();
    if !(c.is_finite() && c >= 0.0 && c <= u32::MAX as f64) {
        return Err(Error::Domain(format!("parameter {x} out of range")));
    }
    Ok(c as u32)
}

/// Product of sizes, a Domain error when it leaves `u32`.
fn prod(xs: &[u32]) -> Result<u32> {
    xs.iter()
        .try_fold(1u32, |acc, &x| acc.checked_mul(x))
        .ok_or_else(|| Error::Domain(format!("size {xs:?} overflows u32")))
}

fn seller_inst(name: String, k: u32, m: u32, alpha: f64, beta: f64, target: f64, strict: bool) -> Result<Instantiation> {
    Ok(Instantiation {
        name,
        bound: bound_seller_signal(k, m, alpha, beta)?,
        spec: HardInstanceSpec::seller_signal(k, m, alpha, beta),
        target,
        strict,
    })
}

fn buyer_inst(name: String, k: u32, m: u32, alpha: f64, beta: f64, target: f64, strict: bool) -> Result<Instantiation> {
    Ok(Instantiation {
        name,
        bound: bound_buyer_signal(k, m, alpha, beta)?,
        spec: HardInstanceSpec::buyer_signal(k, m, alpha, beta),
        target,
        strict,
    })
}

/// Fully informed seller, `β ∈ (0, 1)`: `k = ⌈4/β⌉`, `m = 4k`, at least `2/(3β)`.
pub fn inst_two_over_three_beta(beta: f64) -> Result<Instantiation> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain("need β ∈ (0, 1)".into()));
    }
    let k = ceil_u32(4.0 / beta)?;
    seller_inst(format!("2/(3β)@beta={beta}"), k, prod(&[4, k])?, 1.0, beta, 2.0 / (3.0 * beta), false)
}

/// Fully informed seller, uninformed buyer: `k = ⌈2c⌉`, `m = 4k²`, at least `c`.
pub fn inst_seller_c(c: f64) -> Result<Instantiation> {
    if !(c >= 2.0) {
        return Err(Error::Domain("need c >= 2".into()));
    }
    let k = ceil_u32(2.0 * c)?;
    seller_inst(format!("seller-c@c={c}"), k, prod(&[4, k, k])?, 1.0, 0.0, c, false)
}

/// Fully informed buyer: `k = ⌈c(2-α)/(1-α)⌉`, `m = 2k²`, at least `c`.
pub fn inst_buyer_c(alpha: f64, c: f64) -> Result<Instantiation> {
    if !(0.0..1.0).contains(&alpha) || !(c > 1.0) {
        return Err(Error::Domain("need α ∈ [0, 1) and c > 1".into()));
    }
    let k = ceil_u32(c * (2.0 - alpha) / (1.0 - alpha))?.max(2);
    buyer_inst(format!("buyer-c@alpha={alpha},c={c}"), k, prod(&[2, k, k])?, alpha, 1.0, c, false)
}

/// Uninformed seller, `β >= 0.9`: `λ = (1-β)/β`, `k = ⌈1/√λ⌉`, `m = 2k²`,
/// at least `(√0.9/7)/√(1-β)`.
pub fn inst_sqrt_chain(beta: f64) -> Result<Instantiation> {
    if !(0.9..1.0).contains(&beta) {
        return Err(Error::Domain("need β ∈ [0.9, 1)".into()));
    }
    let lambda = (1.0 - beta) / beta;
    let k = ceil_u32(1.0 / lambda.sqrt())?;
    buyer_inst(
        format!("sqrt-chain@beta={beta}"),
        k,
        prod(&[2, k, k])?,
        0.0,
        beta,
        (0.9f64.sqrt() / 7.0) / (1.0 - beta).sqrt(),
        false,
    )
}

/// `α > 0`, `β ∈ (0, 1)`: `k = ⌈(3γ̄ + 4δ + 5)/δ⌉`, `m = k²`, at least `1/(2β)`.
pub fn inst_left_corner(alpha: f64, beta: f64) -> Result<Instantiation> {
    if !(alpha > 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain("need α ∈ (0, 1] and β ∈ (0, 1)".into()));
    }
    let d = beta / (1.0 - beta);
    let g = (1.0 - alpha) / alpha;
    let k = ceil_u32((3.0 * g + 4.0 * d + 5.0) / d)?;
    seller_inst(format!("left-corner@alpha={alpha},beta={beta}"), k, prod(&[k, k])?, alpha, beta, 1.0 / (2.0 * beta), false)
}

/// `α ∈ (0.9, 1)`, `β ∈ [1 - (1-α)³, 1)`: `k = ⌈(1/(1-α))²⌉`,
/// `m = 20k⌈1/(1-α)⌉`, above `0.15/(1-α)`.
pub fn inst_right_corner(alpha: f64, beta: f64) -> Result<Instantiation> {
    if !(alpha > 0.9 && alpha < 1.0) {
        return Err(Error::Domain("need α ∈ (0.9, 1)".into()));
    }
    let floor = 1.0 - (1.0 - alpha).powi(3);
    if !(beta >= floor && beta < 1.0) {
        return Err(Error::Domain(format!("need β ∈ [{floor}, 1)")));
    }
    let inv = 1.0 / (1.0 - alpha);
    let k = ceil_u32(inv * inv)?;
    let m = prod(&[20, k, ceil_u32(inv)?])?;
    buyer_inst(format!("right-corner@alpha={alpha},beta={beta}"), k, m, alpha, beta, 0.15 / (1.0 - alpha), true)
}

/// Uninformed buyer, any `α > 0`: `k = ⌈4c(3γ̄ + 2)⌉`, `m = 4k`, above `c`.
pub fn inst_uninformed_buyer_c(alpha: f64, c: f64) -> Result<Instantiation> {
    if !(alpha > 0.0 && alpha <= 1.0) || !(c > 1.0) {
        return Err(Error::Domain("need α ∈ (0, 1] and c > 1".into()));
    }
    let g = (1.0 - alpha) / alpha;
    let k = ceil_u32(4.0 * c * (3.0 * g + 2.0))?;
    seller_inst(format!("uninformed-buyer-c@alpha={alpha},c={c}"), k, prod(&[4, k])?, alpha, 0.0, c, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_names_parse() {
        assert_eq!("buyer-signal".parse::<Family>().unwrap(), Family::BuyerSignal);
        assert_eq!("polynomial-lb".parse::<Family>().unwrap(), Family::PolynomialLB);
        assert_eq!("ex-post".parse::<Family>().unwrap(), Family::ExPost);
        assert!("nope".parse::<Family>().is_err());
    }

    #[test]
    fn half_alpha_seller_constant() {
        let i = build_buyer_signal(4, 5, 0.5, 1.0).unwrap();
        assert_eq!(i.seller_own, ComponentFn::constant(1.25));
    }
}
