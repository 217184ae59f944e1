//! Seeded random instances for sweeps and property checks.
//!
//! Component polynomials have degree uniform in `0..=5` and coefficients
//! uniform on [0, 1]; constants are uniform on [0, 1].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instances::HardInstanceSpec;
use crate::valuations::{ComponentFn, InfoStructure, SignalDist};

pub const MAX_DEGREE: usize = 5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for item `index` of a run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn random_poly<R: Rng>(r: &mut R) -> ComponentFn {
    let d = r.gen_range(0..=MAX_DEGREE);
    ComponentFn::poly(&(0..=d).map(|_| r.gen::<f64>()).collect::<Vec<_>>())
}

/// Random polynomial with positive mean.
fn nonzero_poly<R: Rng>(r: &mut R) -> ComponentFn {
    loop {
        let f = random_poly(r);
        if !f.is_identically_zero() {
            return f;
        }
    }
}

fn uniform(bo: ComponentFn, bc: ComponentFn, so: ComponentFn, sc: ComponentFn) -> InfoStructure {
    InfoStructure {
        buyer_own: bo,
        buyer_cross: bc,
        seller_own: so,
        seller_cross: sc,
        buyer_sig: SignalDist::UniformUnit,
        seller_sig: SignalDist::UniformUnit,
        require_monotone: false,
    }
}

/// All four components random polynomials.
pub fn random_polynomial_instance<R: Rng>(r: &mut R) -> InfoStructure {
    uniform(random_poly(r), random_poly(r), random_poly(r), random_poly(r))
}

/// Uninformed seller (`seller_own ≡ 0`) with the buyer's own part rescaled
/// so the buyer is exactly `beta`-informed.
pub fn random_zero_beta<R: Rng>(r: &mut R, beta: f64) -> InfoStructure {
    let bo = nonzero_poly(r);
    let bc = nonzero_poly(r);
    let sc = random_poly(r);
    let mean = |f: &ComponentFn| crate::valuations::expect(f, &SignalDist::UniformUnit).expect("polynomial");
    let s = beta / (1.0 - beta) * mean(&bc) / mean(&bo);
    uniform(bo.scaled(s), bc, ComponentFn::zero(), sc)
}

/// Fully informed seller (`seller_cross ≡ 0`) with arbitrary polynomial parts.
pub fn random_informed_seller<R: Rng>(r: &mut R) -> InfoStructure {
    uniform(nonzero_poly(r), random_poly(r), random_poly(r), ComponentFn::zero())
}

/// Fully informed seller satisfying single-crossing: the seller's own part
/// is the buyer's cross part plus a non-decreasing polynomial.
pub fn random_single_crossing<R: Rng>(r: &mut R) -> InfoStructure {
    let bc = random_poly(r);
    let extra = random_poly(r);
    let so = match (bc.poly_coefficients(), extra.poly_coefficients()) {
        (Some(a), Some(b)) => {
            let n = a.len().max(b.len());
            let sum: Vec<f64> = (0..n)
                .map(|i| a.get(i).copied().unwrap_or(0.0) + b.get(i).copied().unwrap_or(0.0))
                .collect();
            ComponentFn::poly(&sum)
        }
        _ => unreachable!("random_poly returns polynomials"),
    };
    uniform(nonzero_poly(r), bc, so, ComponentFn::zero())
}

/// Discrete signals on `nb` and `ns` random labels with random pmfs and
/// random value tables.
pub fn random_discrete_instance<R: Rng>(r: &mut R, nb: usize, ns: usize) -> InfoStructure {
    let side = |r: &mut R, n: usize| {
        let mut labels: Vec<f64> = Vec::with_capacity(n);
        let mut x = 0.0;
        for _ in 0..n {
            x += 0.1 + r.gen::<f64>();
            labels.push(x);
        }
        let w: Vec<f64> = (0..n).map(|_| 0.05 + r.gen::<f64>()).collect();
        let t: f64 = w.iter().sum();
        let mut probs: Vec<f64> = w.iter().map(|v| v / t).collect();
        let head: f64 = probs[..n - 1].iter().sum();
        probs[n - 1] = 1.0 - head;
        let own: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * 3.0).collect();
        let cross: Vec<f64> = (0..n).map(|_| r.gen::<f64>() * 3.0).collect();
        (labels, probs, own, cross)
    };
    let (bl, bp, bo, sc) = side(r, nb);
    let (sl, sp, so, bc) = side(r, ns);
    InfoStructure {
        buyer_own: ComponentFn::table(bl.clone(), bo),
        seller_cross: ComponentFn::table(bl.clone(), sc),
        seller_own: ComponentFn::table(sl.clone(), so),
        buyer_cross: ComponentFn::table(sl.clone(), bc),
        buyer_sig: SignalDist::discrete(&bl, &bp),
        seller_sig: SignalDist::discrete(&sl, &sp),
        require_monotone: false,
    }
}

/// Buyer-signal construction parameters inside its domain.
pub fn random_buyer_signal_spec<R: Rng>(r: &mut R) -> HardInstanceSpec {
    HardInstanceSpec::buyer_signal(
        r.gen_range(2..=8),
        r.gen_range(3..=10),
        r.gen_range(0.0..0.99),
        r.gen_range(0.01..=1.0),
    )
}

/// Seller-signal construction parameters inside its domain.
pub fn random_seller_signal_spec<R: Rng>(r: &mut R) -> HardInstanceSpec {
    HardInstanceSpec::seller_signal(
        r.gen_range(4..=8),
        r.gen_range(5..=10),
        r.gen_range(0.01..=1.0),
        r.gen_range(0.0..0.99),
    )
}
