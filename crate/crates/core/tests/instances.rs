use interdep_core::error::Error;
use interdep_core::instances::*;
use interdep_core::sampling::{random_buyer_signal_spec, random_seller_signal_spec, stream};
use interdep_core::valuations::*;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn buyer_signal_moments() {
    for (k, m, alpha, beta) in [(4, 5, 0.5, 1.0), (2, 3, 0.0, 0.3), (8, 10, 0.9, 0.05)] {
        let i = build_buyer_signal(k, m, alpha, beta).unwrap();
        let (eb, es) = i.expected_values().unwrap();
        let (kf, mf) = (k as f64, m as f64);
        assert!(close(eb, mf / beta, 1e-12), "{eb}");
        assert!(close(es, mf / kf / (1.0 - alpha), 1e-12), "{es}");
        let p = i.informedness().unwrap();
        assert!(close(p.alpha.unwrap(), alpha, 1e-12));
        assert!(close(p.beta.unwrap(), beta, 1e-12));
    }
}

#[test]
fn seller_signal_moments() {
    for (k, m, alpha, beta) in [(4, 5, 1.0, 0.0), (5, 20, 0.3, 0.6), (8, 8, 0.01, 0.98)] {
        let i = build_seller_signal(k, m, alpha, beta).unwrap();
        let (eb, es) = i.expected_values().unwrap();
        let (kf, mf) = (k as f64, m as f64);
        let delta = beta / (1.0 - beta);
        let gbar = (1.0 - alpha) / alpha;
        assert!(close(eb, mf * (delta + 1.0), 1e-12), "{eb}");
        assert!(close(es, mf / kf * (1.0 + gbar), 1e-12), "{es}");
        let p = i.informedness().unwrap();
        assert!(close(p.alpha.unwrap(), alpha, 1e-12));
        assert!(close(p.beta.unwrap(), beta, 1e-12));
    }
}

#[test]
fn geometric_signal_law() {
    let i = build_seller_signal(4, 5, 1.0, 0.0).unwrap();
    let atoms = i.seller_sig.atoms().unwrap();
    assert_eq!(atoms.len(), 6);
    for (x, q) in &atoms[1..] {
        assert_eq!(*q, 4f64.powi(-(*x as i32)));
    }
    assert!(close(atoms.iter().map(|a| a.1).sum::<f64>(), 1.0, 1e-15));
    assert_eq!(i.buyer_cross.eval(3.0).unwrap(), 64.0);
    assert_eq!(i.seller_own.eval(3.0).unwrap(), 16.0);
    assert_eq!(i.seller_own.eval(0.0).unwrap(), 0.0);
}

#[test]
fn polynomial_lb_moments() {
    let i = build_polynomial_lb(3).unwrap();
    let (eb, es) = i.expected_values().unwrap();
    assert!(close(eb, 0.75, 1e-15));
    assert!(close(es, 0.25, 1e-15));
    let p = i.informedness().unwrap();
    assert_eq!(p.alpha, Some(1.0));
    assert_eq!(p.beta, Some(0.0));
    // buyer_cross rises faster than seller_own.
    assert!(!single_crossing(&i).unwrap());
}

#[test]
fn no_equilibrium_moments() {
    let i = build_no_equilibrium();
    let (eb, es) = i.expected_values().unwrap();
    assert!(close(eb, 1.5, 1e-15) && close(es, 1.5, 1e-15));
    let p = i.informedness().unwrap();
    assert!(close(p.alpha.unwrap(), 1.0 / 3.0, 1e-15));
    assert!(close(p.beta.unwrap(), 1.0 / 3.0, 1e-15));
}

#[test]
fn expost_moments() {
    let i = build_expost(6.0, 0.1).unwrap();
    let (eb, es) = i.expected_values().unwrap();
    assert!(close(eb, 3.0, 1e-15) && close(es, 0.6, 1e-15));
    let p = i.informedness().unwrap();
    assert_eq!(p.alpha, Some(1.0));
    assert_eq!(p.beta, Some(0.0));
}

#[test]
fn builders_reject_out_of_domain() {
    let dom = |r: interdep_core::error::Result<InfoStructure>| matches!(r, Err(Error::Domain(_)));
    assert!(dom(build_buyer_signal(4, 5, 1.0, 0.5)));
    assert!(dom(build_buyer_signal(4, 5, 0.5, 0.0)));
    assert!(dom(build_buyer_signal(1, 5, 0.5, 0.5)));
    assert!(dom(build_buyer_signal(4, 2, 0.5, 0.5)));
    assert!(dom(build_buyer_signal(4, 5, -0.1, 0.5)));
    assert!(dom(build_seller_signal(4, 5, 0.0, 0.5)));
    assert!(dom(build_seller_signal(4, 5, 0.5, 1.0)));
    assert!(dom(build_seller_signal(3, 5, 0.5, 0.5)));
    assert!(dom(build_seller_signal(4, 4, 0.5, 0.5)));
    assert!(dom(build_seller_signal(2, 2000, 0.5, 0.5)));
    assert!(dom(build_polynomial_lb(0)));
    assert!(dom(build_expost(2.2, 0.1)));
    assert!(dom(build_expost(6.0, 0.0)));
    assert!(bound_buyer_signal(4, 5, 1.0, 0.5).is_err());
    assert!(bound_seller_signal(4, 5, 0.0, 0.5).is_err());
}

#[test]
fn values_are_nonnegative() {
    for seed in 0..30 {
        for spec in [
            random_buyer_signal_spec(&mut stream(71, seed)),
            random_seller_signal_spec(&mut stream(72, seed)),
        ] {
            let i = build(&spec).unwrap();
            i.validate().unwrap();
            let b = i.buyer_side().unwrap();
            let s = i.seller_side().unwrap();
            for x in b.lattice(41) {
                assert!(b.value(Part::Own, x) >= 0.0 && b.value(Part::Cross, x) >= 0.0);
            }
            for x in s.lattice(41) {
                assert!(s.value(Part::Own, x) >= 0.0 && s.value(Part::Cross, x) >= 0.0);
            }
        }
    }
}

#[test]
fn spec_json_round_trip() {
    for spec in [
        HardInstanceSpec::buyer_signal(4, 5, 0.5, 1.0),
        HardInstanceSpec::seller_signal(5, 9, 0.25, 0.75),
        HardInstanceSpec::polynomial_lb(3),
    ] {
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<HardInstanceSpec>(&s).unwrap(), spec);
    }
    let s: HardInstanceSpec = serde_json::from_str(r#"{"family":"expost","c":6.0,"eps":0.1}"#).unwrap();
    assert_eq!(s.family, Family::ExPost);
    assert_eq!(build(&s).unwrap(), build_expost(6.0, 0.1).unwrap());
}

#[test]
fn informedness_round_trips_on_random_specs() {
    for seed in 0..50 {
        for spec in [
            random_buyer_signal_spec(&mut stream(73, seed)),
            random_seller_signal_spec(&mut stream(74, seed)),
        ] {
            let p = build(&spec).unwrap().informedness().unwrap();
            assert!(close(p.alpha.unwrap(), spec.alpha, 1e-12), "{spec:?}: {p:?}");
            assert!(close(p.beta.unwrap(), spec.beta, 1e-12), "{spec:?}: {p:?}");
        }
    }
}

// Corollary bounds rewritten in the original parameters, clearing the
// δ = β/(1-β), γ̄ = (1-α)/α and λ = (1-β)/β fractions.

fn seller_bound_oracle(k: f64, m: f64, alpha: f64, beta: f64) -> f64 {
    // Numerator and denominator multiplied by α(1-β).
    alpha / (alpha * (1.0 - beta) / k + (1.0 - beta) * (1.0 - alpha) / k
        + alpha * beta
        + 4.0 * alpha * (1.0 - beta) / m
        + 2.0 * alpha * beta / k
        + 2.0 * (1.0 - alpha) * (1.0 - beta) / (k * k))
}

fn buyer_bound_oracle(k: f64, m: f64, alpha: f64, beta: f64) -> f64 {
    // Numerator and denominator multiplied by β(1-α).
    (1.0 - alpha)
        / (beta / k + (1.0 - beta) * (1.0 - alpha) + 2.0 * k * beta * (1.0 - alpha) / m
            + 2.0 * k * (1.0 - beta) * (1.0 - alpha))
}

#[test]
fn bound_formulas_match_oracles() {
    for seed in 0..200 {
        let b = random_buyer_signal_spec(&mut stream(75, seed));
        let got = bound_buyer_signal(b.k, b.m, b.alpha, b.beta).unwrap();
        let want = buyer_bound_oracle(b.k as f64, b.m as f64, b.alpha, b.beta);
        assert!(close(got, want, 1e-12), "{b:?}: {got} vs {want}");
        let s = random_seller_signal_spec(&mut stream(76, seed));
        let got = bound_seller_signal(s.k, s.m, s.alpha, s.beta).unwrap();
        let want = seller_bound_oracle(s.k as f64, s.m as f64, s.alpha, s.beta);
        assert!(close(got, want, 1e-12), "{s:?}: {got} vs {want}");
    }
    assert!(close(bound_seller_signal(4, 5, 1.0, 0.0).unwrap(), 1.0 / (0.25 + 0.8), 1e-15));
    assert!(close(bound_buyer_signal(2, 3, 0.0, 1.0).unwrap(), 1.0 / (0.5 + 4.0 / 3.0), 1e-15));
}

#[test]
fn two_over_three_beta_parameters() {
    let inst = inst_two_over_three_beta(0.5).unwrap();
    assert_eq!((inst.spec.k, inst.spec.m), (8, 32));
    let want = 1.0 / (0.5 / 8.0 + 0.5 + 2.0 / 32.0 + 1.0 / 8.0);
    assert!(close(inst.bound, want, 1e-12));
    assert!(inst.holds());
    for beta in [0.01, 0.1, 0.3, 0.77, 0.99] {
        let inst = inst_two_over_three_beta(beta).unwrap();
        let (k, m) = (inst.spec.k as f64, inst.spec.m as f64);
        assert!(close(inst.bound, seller_bound_oracle(k, m, 1.0, beta), 1e-12));
        assert!(inst.holds(), "β = {beta}: {} < {}", inst.bound, inst.target);
    }
}

#[test]
fn two_over_three_beta_is_tight_on_integer_k() {
    // 4/β integral gives bound = 2/(3β) exactly.
    for beta in [0.01, 0.04, 0.25, 0.5] {
        let inst = inst_two_over_three_beta(beta).unwrap();
        assert!(close(inst.bound, inst.target, 1e-14), "β = {beta}");
        assert!(inst.holds());
    }
}

#[test]
fn seller_c_parameters() {
    for c in [2.0, 2.5, 7.0, 40.0] {
        let inst = inst_seller_c(c).unwrap();
        let k = (2.0 * c).ceil();
        assert_eq!(inst.spec.k as f64, k);
        assert_eq!(inst.spec.m as f64, 4.0 * k * k);
        assert!(close(inst.bound, 1.0 / (1.0 / k + 1.0 / (k * k)), 1e-12));
        assert!(inst.holds(), "c = {c}");
    }
}

#[test]
fn buyer_c_parameters() {
    for (alpha, c) in [(0.0, 1.5), (0.5, 3.0), (0.9, 2.0)] {
        let inst = inst_buyer_c(alpha, c).unwrap();
        let k = (c * (2.0 - alpha) / (1.0 - alpha)).ceil().max(2.0);
        assert_eq!(inst.spec.k as f64, k);
        let want = 1.0 / (1.0 / (k * (1.0 - alpha)) + 1.0 / k);
        assert!(close(inst.bound, want, 1e-12));
        assert!(inst.holds(), "α = {alpha}, c = {c}");
    }
}

#[test]
fn sqrt_chain_parameters() {
    for beta in [0.9, 0.95, 0.99, 0.999] {
        let inst = inst_sqrt_chain(beta).unwrap();
        let (k, m) = (inst.spec.k as f64, inst.spec.m as f64);
        assert_eq!(m, 2.0 * k * k);
        assert!(close(inst.bound, buyer_bound_oracle(k, m, 0.0, beta), 1e-12));
        assert!(inst.holds(), "β = {beta}: {} < {}", inst.bound, inst.target);
    }
}

#[test]
fn left_corner_parameters() {
    for (alpha, beta) in [(1.0, 0.5), (0.5, 0.5), (0.1, 0.9), (0.9, 0.05)] {
        let inst = inst_left_corner(alpha, beta).unwrap();
        let (k, m) = (inst.spec.k as f64, inst.spec.m as f64);
        assert_eq!(m, k * k);
        assert!(close(inst.bound, seller_bound_oracle(k, m, alpha, beta), 1e-12));
        assert!(inst.holds(), "α = {alpha}, β = {beta}");
    }
}

#[test]
fn right_corner_parameters() {
    for alpha in [0.91f64, 0.95, 0.99] {
        let beta = 1.0 - (1.0 - alpha).powi(3);
        let inst = inst_right_corner(alpha, beta).unwrap();
        let (k, m) = (inst.spec.k as f64, inst.spec.m as f64);
        assert!(close(inst.bound, buyer_bound_oracle(k, m, alpha, beta), 1e-12));
        assert!(inst.holds(), "α = {alpha}: {} <= {}", inst.bound, inst.target);
    }
    assert!(inst_right_corner(0.95, 0.5).is_err());
}

#[test]
fn uninformed_buyer_c_parameters() {
    for (alpha, c) in [(1.0, 1.5), (0.5, 2.0), (0.2, 4.0)] {
        let inst = inst_uninformed_buyer_c(alpha, c).unwrap();
        let (k, m) = (inst.spec.k as f64, inst.spec.m as f64);
        assert_eq!(m, 4.0 * k);
        assert!(close(inst.bound, seller_bound_oracle(k, m, alpha, 0.0), 1e-12));
        assert!(inst.holds(), "α = {alpha}, c = {c}");
    }
}

proptest! {
    #[test]
    fn two_over_three_beta_holds(beta in 0.001f64..0.999) {
        prop_assert!(inst_two_over_three_beta(beta).unwrap().holds());
    }

    #[test]
    fn left_corner_holds(alpha in 0.01f64..=1.0, beta in 0.01f64..0.99) {
        prop_assert!(inst_left_corner(alpha, beta).unwrap().holds());
    }

    #[test]
    fn uninformed_buyer_holds(alpha in 0.05f64..=1.0, c in 1.01f64..20.0) {
        prop_assert!(inst_uninformed_buyer_c(alpha, c).unwrap().holds());
    }

    #[test]
    fn bounds_increase_with_m(k in 4u32..10, m in 5u32..40, alpha in 0.01f64..0.99, beta in 0.01f64..0.99) {
        prop_assert!(bound_buyer_signal(k, m + 1, alpha, beta).unwrap() > bound_buyer_signal(k, m, alpha, beta).unwrap());
        prop_assert!(bound_seller_signal(k, m + 1, alpha, beta).unwrap() > bound_seller_signal(k, m, alpha, beta).unwrap());
    }
}

/// `|Σ v_j (w_j - p_j)|` with each embedded width off by at most a few ulps of 1.
fn width_error_bound(atoms: &[(f64, f64)], fs: [&ComponentFn; 2]) -> f64 {
    let n = atoms.len() as f64;
    let mass: f64 = atoms
        .iter()
        .map(|(l, _)| fs.iter().map(|f| f.eval(*l).unwrap().abs()).sum::<f64>())
        .sum();
    4.0 * n * f64::EPSILON * mass
}

#[test]
fn construction_embedding_error_within_breakpoint_resolution() {
    let mut g = stream(7, 0);
    for _ in 0..50 {
        let spec = random_seller_signal_spec(&mut g);
        let i = build(&spec).unwrap();
        let e = embed_discrete_as_uniform(&i).unwrap();
        let atoms = i.seller_sig.atoms().unwrap();
        let tol = width_error_bound(&atoms, [&i.seller_own, &i.buyer_cross]);
        let (b0, s0) = i.expected_values().unwrap();
        let (b1, s1) = e.expected_values().unwrap();
        assert!((b0 - b1).abs() <= tol, "{spec:?}: {b0} vs {b1}, tol {tol}");
        assert!((s0 - s1).abs() <= tol, "{spec:?}: {s0} vs {s1}, tol {tol}");
        let (o0, o1) = (opt_welfare(&i).unwrap(), opt_welfare(&e).unwrap());
        assert!((o0 - o1).abs() <= 2.0 * tol, "{spec:?}: {o0} vs {o1}, tol {tol}");
    }
}
