use interdep_core::instances::{build_expost, build_polynomial_lb};
use interdep_core::lp_oracle::{discretize, interim_monotone};
use interdep_core::mechanisms::*;
use interdep_core::sampling::*;
use interdep_core::valuations::*;

fn uniform(bo: &[f64], bc: &[f64], so: &[f64], sc: &[f64]) -> InfoStructure {
    InfoStructure {
        buyer_own: ComponentFn::poly(bo),
        buyer_cross: ComponentFn::poly(bc),
        seller_own: ComponentFn::poly(so),
        seller_cross: ComponentFn::poly(sc),
        buyer_sig: SignalDist::UniformUnit,
        seller_sig: SignalDist::UniformUnit,
        require_monotone: false,
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn assert_clean(r: &CheckReport) {
    assert!(r.all_pass(), "{r:?}");
    assert!(r.myerson_residual_buyer < 1e-6 && r.myerson_residual_seller < 1e-6, "{r:?}");
}

#[test]
fn no_trade_welfare_and_checks() {
    let i = random_polynomial_instance(&mut stream(1, 0));
    let (_, es) = i.expected_values().unwrap();
    assert!(close(welfare(&i, &mech_no_trade()).unwrap(), es, 1e-15));

    let d = discretize(&i, 9, 7).unwrap();
    let r = check_mechanism(&d, &tabulate(&d, &mech_no_trade()).unwrap());
    assert_clean(&r);
    assert_eq!(r.myerson_residual_buyer, 0.0);
    assert_eq!(r.myerson_residual_seller, 0.0);
}

#[test]
fn no_trade_ratio_on_polynomial_lower_bound_is_k() {
    for k in 1..=6 {
        let i = build_polynomial_lb(k).unwrap();
        let d = Designed {
            mechanism: mech_no_trade(),
            label: "no-trade".into(),
            bound: k as f64,
        };
        let r = ratio_report(&i, &d).unwrap();
        assert!(close(r.ratio, k as f64, 1e-12), "k = {k}: {}", r.ratio);
    }
}

#[test]
fn uninformed_pair_midpoint_price() {
    // v_b = 2 x_s (E_b = 1), v_s = 0.8 x_b (E_s = 0.4).
    let i = uniform(&[], &[0.0, 2.0], &[], &[0.0, 0.8]);
    let d = mech_uninformed_pair(&i).unwrap();
    match &d.mechanism {
        Mechanism::PostedPrice { price, thresholds } => {
            assert!(close(*price, 0.7, 1e-15));
            assert_eq!(*thresholds, ThresholdProfile::always());
        }
        m => panic!("expected a posted price, got {m:?}"),
    }
    let r = ratio_report(&i, &d).unwrap();
    assert!(r.ratio <= 2.0 && r.holds, "{r:?}");
}

#[test]
fn uninformed_pair_equal_means_and_no_trade_branch() {
    let i = uniform(&[], &[0.0, 1.0], &[], &[0.0, 1.0]);
    let d = mech_uninformed_pair(&i).unwrap();
    let r = ratio_report(&i, &d).unwrap();
    assert!(r.ratio <= 2.0 && close(r.alg, 0.5, 1e-12), "{r:?}");

    // v_b = x_s, v_s = 2 x_b
    let i = uniform(&[], &[0.0, 1.0], &[], &[0.0, 2.0]);
    let d = mech_uninformed_pair(&i).unwrap();
    assert_eq!(d.mechanism, Mechanism::NoTrade);
    let r = ratio_report(&i, &d).unwrap();
    assert!(close(r.alg, 1.0, 1e-15));
    assert!(r.ratio <= 1.5, "{r:?}");
}

#[test]
fn uninformed_pair_rejects_informed_agents() {
    let i = uniform(&[0.0, 1.0], &[0.0, 1.0], &[], &[0.0, 1.0]);
    assert!(mech_uninformed_pair(&i).is_err());
}

#[test]
fn zero_beta_examples() {
    // buyer_own = x, buyer_cross = x, v_s = x_b
    let i = uniform(&[0.0, 1.0], &[0.0, 1.0], &[], &[0.0, 1.0]);
    let d = mech_zero_beta(&i).unwrap();
    match &d.mechanism {
        Mechanism::PostedPrice { price, thresholds } => {
            assert!(close(*price, 0.5, 1e-15));
            assert_eq!(*thresholds, ThresholdProfile::always());
        }
        m => panic!("expected a posted price, got {m:?}"),
    }
    let r = ratio_report(&i, &d).unwrap();
    assert!(close(r.alg, 1.0, 1e-12));
    assert!(r.ratio <= 1.5, "{r:?}");

    let i = uniform(&[0.0, 1.0], &[0.0, 1.0], &[], &[0.0, 2.0]);
    let d = mech_zero_beta(&i).unwrap();
    assert_eq!(d.mechanism, Mechanism::NoTrade);
    assert!(close(d.bound, 3.0, 1e-15));
    assert!(ratio_report(&i, &d).unwrap().ratio <= 3.0);

    let i = uniform(&[0.0, 1.0], &[], &[], &[0.0, 1.0]);
    assert!(mech_zero_beta(&i).is_err());
    let i = uniform(&[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0]);
    assert!(mech_zero_beta(&i).is_err());
}

#[test]
fn pv_offer_is_half_the_value() {
    let pv = uniform(&[0.0, 1.0], &[], &[0.0, 1.0], &[]);
    let grid = OfferGrid::default();
    let o = mech_buyer_offer_pv(&pv, grid).unwrap();
    for (x, p) in o.points.iter().zip(&o.offers) {
        assert!((p - x / 2.0).abs() <= grid.price_step, "x = {x}: {p}");
    }

    // Value 1 and value 0 on a discrete buyer signal.
    let i = InfoStructure {
        buyer_own: ComponentFn::table(vec![0.0, 1.0], vec![0.0, 1.0]),
        buyer_cross: ComponentFn::zero(),
        seller_own: ComponentFn::poly(&[0.0, 1.0]),
        seller_cross: ComponentFn::table(vec![0.0, 1.0], vec![0.0, 0.0]),
        buyer_sig: SignalDist::discrete(&[0.0, 1.0], &[0.5, 0.5]),
        seller_sig: SignalDist::UniformUnit,
        require_monotone: false,
    };
    let o = mech_buyer_offer_pv(&i, grid).unwrap();
    assert_eq!(o.offer_at(0.0), 0.0);
    let p = o.offer_at(1.0);
    assert!((p - 0.5).abs() < 1e-12, "{p}");
    assert!((p * (1.0 - p) - 0.25).abs() < 1e-12);
}

#[test]
fn pv_offer_requires_private_values() {
    let i = uniform(&[0.0, 1.0], &[0.0, 0.5], &[0.0, 1.0], &[]);
    assert!(mech_buyer_offer_pv(&i, OfferGrid::default()).is_err());
}

#[test]
fn lifted_offer_is_two_thirds() {
    // v_s = x_s, buyer_own = x_b, buyer_cross = x_s / 2
    let i = uniform(&[0.0, 1.0], &[0.0, 0.5], &[0.0, 1.0], &[]);
    let grid = OfferGrid::default();
    let red = mech_reduction_informed_seller(&i, grid).unwrap();
    for (k, x) in red.lifted_offers.points.iter().enumerate() {
        let lifted = red.lifted_offers.offers[k];
        let pv = red.pv_offers.offers[k];
        assert!((lifted - 2.0 * x / 3.0).abs() <= grid.price_step, "x = {x}: {lifted}");
        assert!(lifted >= pv);
    }
}

#[test]
fn lifted_offer_collapses_without_cross_part() {
    let i = uniform(&[0.0, 0.5, 1.0], &[], &[0.1, 1.0], &[]);
    let red = mech_reduction_informed_seller(&i, OfferGrid::default()).unwrap();
    assert_eq!(red.pv_offers.offers, red.lifted_offers.offers);
}

#[test]
fn reduction_preconditions() {
    let i = uniform(&[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0], &[0.0, 1.0]);
    assert!(mech_reduction_informed_seller(&i, OfferGrid::default()).is_err());
}

#[test]
fn offer_dominance_on_random_instances() {
    let grid = OfferGrid {
        price_step: 1e-3,
        buyer_cells: 100,
    };
    for seed in 0..40 {
        let i = random_informed_seller(&mut stream(21, seed));
        let red = mech_reduction_informed_seller(&i, grid).unwrap();
        for (a, b) in red.lifted_offers.offers.iter().zip(&red.pv_offers.offers) {
            assert!(a >= b, "seed {seed}: {a} < {b}");
        }
    }
}

#[test]
fn reduction_ratio_within_four_over_beta() {
    for seed in 0..20 {
        let i = random_informed_seller(&mut stream(22, seed));
        let red = mech_reduction_informed_seller(&i, OfferGrid::default()).unwrap();
        let r = ratio_report(&i, &red.designed).unwrap();
        assert!(r.holds, "seed {seed}: {r:?}");
    }
}

#[test]
fn single_crossing_examples() {
    let grid = OfferGrid::default();
    let i = uniform(&[0.3, 1.0], &[], &[0.0, 1.0], &[]);
    let d = mech_single_crossing(&i, grid).unwrap();
    let r = ratio_report(&i, &d).unwrap();
    assert!(r.ratio <= 5.5, "{r:?}");

    let pv = uniform(&[0.0, 1.0], &[], &[0.0, 1.0], &[]);
    let d = mech_single_crossing(&pv, grid).unwrap();
    assert_eq!(d.bound, 4.0);
    let r = ratio_report(&pv, &d).unwrap();
    assert!(r.ratio <= 4.0, "{r:?}");

    // v_b = x_b + 2 x_s against v_s = x_s fails single-crossing.
    let bad = uniform(&[0.0, 1.0], &[0.0, 2.0], &[0.0, 1.0], &[]);
    assert!(mech_single_crossing(&bad, grid).is_err());
}

#[test]
fn single_crossing_ratio_on_random_instances() {
    for seed in 0..20 {
        let i = random_single_crossing(&mut stream(23, seed));
        let d = mech_single_crossing(&i, OfferGrid::default()).unwrap();
        let r = ratio_report(&i, &d).unwrap();
        assert!(r.ratio <= 5.5, "seed {seed}: {r:?}");
    }
}

#[test]
fn polynomial_case_two() {
    // a1 = 1, b1 = 1/2, c1 = 1/4 (seller own), rest zero.
    let i = uniform(&[0.0, 1.0], &[0.0, 0.5], &[0.0, 0.25], &[]);
    let p = mech_polynomial(&i).unwrap();
    assert_eq!(p.case, Some(2));
    assert_eq!(p.j, Some(1));
    assert!(close(p.price.unwrap(), 0.375, 1e-15));
    assert!(p.prediction_holds);
    match &p.designed.mechanism {
        Mechanism::PostedPrice { thresholds, .. } => assert_eq!(thresholds.seller, Threshold::Always),
        m => panic!("expected a posted price, got {m:?}"),
    }
    assert!(ratio_report(&i, &p.designed).unwrap().ratio <= 5.0);
}

#[test]
fn polynomial_no_trade_and_case_one() {
    let i = uniform(&[0.0, 1.0], &[], &[0.0, 1.0], &[]);
    let p = mech_polynomial(&i).unwrap();
    assert_eq!(p.case, None);
    assert_eq!(p.designed.mechanism, Mechanism::NoTrade);
    assert!(close(p.designed.bound, 5.0, 1e-15));
    assert!(ratio_report(&i, &p.designed).unwrap().ratio <= 5.0);

    let i = uniform(&[0.0, 0.1], &[0.0, 1.0], &[], &[]);
    let p = mech_polynomial(&i).unwrap();
    assert_eq!(p.case, Some(1));
    match &p.designed.mechanism {
        Mechanism::PostedPrice { thresholds, .. } => assert_eq!(*thresholds, ThresholdProfile::always()),
        m => panic!("expected a posted price, got {m:?}"),
    }
}

#[test]
fn polynomial_rejects_negative_coefficients() {
    let i = uniform(&[0.0, -1.0], &[0.0, 1.0], &[], &[]);
    assert!(mech_polynomial(&i).is_err());
}

#[test]
fn check_private_values_posted_price() {
    let pv = uniform(&[0.0, 1.0], &[], &[0.0, 1.0], &[]);
    let d = discretize(&pv, 21, 21).unwrap();
    let m = Mechanism::PostedPrice {
        price: 0.5,
        thresholds: ThresholdProfile {
            buyer: Threshold::At(0.5),
            seller: Threshold::At(0.5),
        },
    };
    let t = tabulate(&d, &m).unwrap();
    assert!(t.x.iter().any(|&x| x > 0.0));
    assert_clean(&check_mechanism(&d, &t));
}

#[test]
fn check_flags_unpaid_seller() {
    let i = build_expost(6.0, 0.1).unwrap();
    let d = discretize(&i, 5, 11).unwrap();
    let mut t = MechanismTable::zeros(&d);
    t.x.iter_mut().for_each(|x| *x = 1.0);
    let r = check_mechanism(&d, &t);
    assert!(!r.ir_seller);
    assert!(r.min_ir_seller < 0.0);
}

#[test]
fn check_flags_misreport_gain() {
    let pv = uniform(&[0.0, 1.0], &[], &[0.0, 1.0], &[]);
    let d = discretize(&pv, 5, 5).unwrap();
    let mut t = MechanismTable::zeros(&d);
    // Trade only for the lowest buyer type, at a price of zero.
    for j in 0..5 {
        t.x[j] = 1.0;
    }
    let r = check_mechanism(&d, &t);
    assert!(!r.bic_buyer);
    assert!(r.max_bic_violation_buyer > 0.0);
}

#[test]
fn tabulated_mechanisms_pass_checks() {
    for seed in 0..15 {
        let i = random_polynomial_instance(&mut stream(31, seed));
        let d = discretize(&i, 13, 11).unwrap();
        let p = mech_polynomial(&i).unwrap();
        let t = tabulate(&d, &p.designed.mechanism).unwrap();
        let r = check_mechanism(&d, &t);
        assert_clean(&r);
        assert!(interim_monotone(&d, &t, 1e-9) || !i.require_monotone);

        let z = random_zero_beta(&mut stream(32, seed), 0.1 + 0.05 * seed as f64);
        let dz = discretize(&z, 11, 9).unwrap();
        let m = mech_zero_beta(&z).unwrap();
        assert_clean(&check_mechanism(&dz, &tabulate(&dz, &m.mechanism).unwrap()));
    }
    let u = uniform(&[], &[0.0, 2.0], &[], &[0.0, 0.8]);
    let du = discretize(&u, 7, 7).unwrap();
    let m = mech_uninformed_pair(&u).unwrap();
    assert_clean(&check_mechanism(&du, &tabulate(&du, &m.mechanism).unwrap()));
}

#[test]
fn realized_ratio_bounds() {
    for seed in 0..30 {
        let i = random_polynomial_instance(&mut stream(41, seed));
        let p = mech_polynomial(&i).unwrap();
        let r = ratio_report(&i, &p.designed).unwrap();
        assert!(r.holds, "polynomial seed {seed}: {r:?}");
        assert!(p.prediction_holds, "polynomial seed {seed}");

        let beta = 0.1 + 0.8 * (seed as f64 / 30.0);
        let z = random_zero_beta(&mut stream(42, seed), beta);
        let m = mech_zero_beta(&z).unwrap();
        let r = ratio_report(&z, &m).unwrap();
        assert!(r.ratio <= (2.0 - beta).max(1.0 + 1.0 / (1.0 - beta)) + 1e-9, "zero-beta seed {seed}: {r:?}");
    }
}

#[test]
fn myerson_identity_for_equilibrium_prices() {
    use interdep_core::equilibrium::{solve_equilibrium, EqOptions, EquilibriumStatus};
    for seed in 0..10 {
        let i = random_polynomial_instance(&mut stream(51, seed));
        let (eb, _) = i.expected_values().unwrap();
        let price = 0.5 * eb;
        let eq = solve_equilibrium(&i, price, &EqOptions::default()).unwrap();
        if let EquilibriumStatus::TradingEquilibrium { .. } = eq.status {
            let r = myerson_residual_posted_price(&i, price, &eq.profile, 101).unwrap();
            assert!(r.buyer < 1e-6 && r.seller < 1e-6, "seed {seed}: {r:?}");
        }
    }
}

#[test]
fn myerson_identity_fails_off_equilibrium() {
    let pv = uniform(&[0.0, 1.0], &[], &[0.0, 1.0], &[]);
    let th = ThresholdProfile {
        buyer: Threshold::At(0.2),
        seller: Threshold::At(0.5),
    };
    let r = myerson_residual_posted_price(&pv, 0.5, &th, 101).unwrap();
    assert!(r.buyer > 0.1, "{r:?}");
}

#[test]
fn mechanism_json_kinds() {
    let m = Mechanism::PostedPrice {
        price: 0.5,
        thresholds: ThresholdProfile::always(),
    };
    let v = serde_json::to_value(&m).unwrap();
    assert_eq!(v["kind"], "posted_price");
    assert_eq!(serde_json::to_value(Mechanism::NoTrade).unwrap()["kind"], "no_trade");
    let back: Mechanism = serde_json::from_value(v).unwrap();
    assert_eq!(back, m);
}
