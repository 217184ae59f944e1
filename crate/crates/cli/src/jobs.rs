//! Registry jobs. Each job expands to checks named `job` or `job:detail`.

use rayon::prelude::*;

use interdep_core::equilibrium::{solve_equilibrium, EqOptions, EquilibriumStatus};
use interdep_core::error::{Error, Result};
use interdep_core::instances::*;
use interdep_core::lp_oracle::*;
use interdep_core::mechanisms::*;
use interdep_core::sampling::*;
use interdep_core::valuations::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{Check, Outcome, Relation};

/// Random stream for item `t` of the job salted with `salt`.
fn rng(seed: u64, salt: u64, t: u64) -> ChaCha8Rng {
    stream(seed.wrapping_add(salt << 32), t)
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, f64::max)
}

/// Parallel map over `0..n` that keeps the first error.
fn par<T: Send>(n: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub const LP_TOL: f64 = 0.05;
pub const LP_GRID: usize = 41;
const BUYER_SIGNAL_CASES: [(f64, f64); 4] = [(1.0, 1.0), (1.0, 0.8), (0.5, 1.0), (0.5, 0.8)];
const SELLER_SIGNAL_CASES: [(f64, f64); 2] = [(1.0, 0.0), (1.0, 0.2)];

pub fn checks(name: &str) -> Option<Vec<Check>> {
    Some(match name {
        "thm-3.1-reduction" => vec![Check::new(name, reduction)],
        "cor-3.2-single-crossing" => vec![Check::new(name, single_crossing_ratio)],
        "cor-3.3-offer-dominance" => vec![Check::new(name, offer_dominance)],
        "thm-4.2-seller-signal-lp" => {
            let mut v: Vec<Check> = SELLER_SIGNAL_CASES
                .iter()
                .map(|&(a, b)| {
                    let spec = HardInstanceSpec::seller_signal(4, 5, a, b);
                    Check::new(format!("{name}:alpha={a},beta={b}"), move |_| lp_ratio(&spec))
                })
                .collect();
            v.push(Check::new(format!("{name}:informedness-round-trip"), |s| {
                round_trip(s, 41, random_seller_signal_spec)
            }));
            v.push(Check::new(format!("{name}:embed-law"), |s| {
                embed_law(s, 42)
            }));
            v
        }
        "thm-5.1-buyer-signal-lp" => {
            let mut v: Vec<Check> = BUYER_SIGNAL_CASES
                .iter()
                .map(|&(a, b)| {
                    let spec = HardInstanceSpec::buyer_signal(4, 5, a, b);
                    Check::new(format!("{name}:alpha={a},beta={b}"), move |_| lp_ratio(&spec))
                })
                .collect();
            v.push(Check::new(format!("{name}:informedness-round-trip"), |s| {
                round_trip(s, 51, random_buyer_signal_spec)
            }));
            v.push(Check::new(format!("{name}:embed-law"), |s| {
                embed_law(s, 52)
            }));
            v
        }
        "lemma-5.2-alloc-mass" => BUYER_SIGNAL_CASES
            .iter()
            .map(|&(a, b)| {
                let spec = HardInstanceSpec::buyer_signal(4, 5, a, b);
                Check::new(format!("{name}:alpha={a},beta={b}"), move |_| alloc_mass(&spec))
            })
            .collect(),
        "lemma-c1-alloc-mass" => SELLER_SIGNAL_CASES
            .iter()
            .map(|&(a, b)| {
                let spec = HardInstanceSpec::seller_signal(4, 5, a, b);
                Check::new(format!("{name}:alpha={a},beta={b}"), move |_| alloc_mass(&spec))
            })
            .collect(),
        "thm-6.1-zero-beta" => (1..=9)
            .map(|k| {
                let beta = k as f64 / 10.0;
                Check::new(format!("{name}:beta={beta}"), move |s| zero_beta(s, beta))
            })
            .collect(),
        "thm-6.2-bound-chain" => vec![
            Check::new(format!("{name}:sqrt-chain"), |_| {
                corollary(&grid(0.9, 0.999, 40), inst_sqrt_chain)
            }),
            Check::new(format!("{name}:two-over-three-beta"), |_| {
                corollary(&grid(0.01, 0.99, 99), inst_two_over_three_beta)
            }),
            Check::new(format!("{name}:seller-c"), |_| {
                corollary(&grid(2.0, 50.0, 97), inst_seller_c)
            }),
            Check::new(format!("{name}:buyer-c"), |_| {
                corollary2(&grid(0.0, 0.95, 20), &grid(1.5, 20.0, 38), inst_buyer_c)
            }),
            Check::new(format!("{name}:uninformed-buyer-c"), |_| {
                corollary2(&grid(0.05, 1.0, 20), &grid(1.5, 20.0, 38), |a, c| {
                    inst_uninformed_buyer_c(a, c)
                })
            }),
            Check::new(format!("{name}:formula-oracle"), formula_oracle),
        ],
        "prop-8.1-bound" => vec![Check::new(name, |_| {
            corollary2(&grid(0.05, 1.0, 20), &grid(0.05, 0.95, 19), inst_left_corner)
        })],
        "prop-8.2-bound" => vec![Check::new(name, |_| {
            // Past α ≈ 0.9983 the size m = 20k⌈1/(1-α)⌉ leaves u32.
            let alphas = grid(0.901, 0.998, 50);
            let mut insts = Vec::new();
            for a in alphas {
                let floor = 1.0 - (1.0f64 - a).powi(3);
                for t in [0.0, 0.5, 0.99] {
                    insts.push(inst_right_corner(a, floor + t * (1.0 - floor))?);
                }
            }
            Ok(corollary_outcome(&insts))
        })],
        "thm-7.1-polynomial-mech" => vec![
            Check::new(name, polynomial_ratio),
            Check::new(format!("{name}:checks-41x41"), polynomial_checks),
            Check::new(format!("{name}:scaling-invariance"), scaling_invariance),
            Check::new(format!("{name}:lp-dominance"), lp_dominance),
            Check::new(format!("{name}:lp-monotone"), lp_monotone),
        ],
        "thm-7.2-polynomial-lb" => (2..=5).flat_map(|k| polynomial_lb(&format!("{name}:k={k}"), k)).collect(),
        "claim-a1-expost" => vec![
            Check::new(format!("{name}:expost-lp"), |_| {
                Ok(Outcome::new(expost_welfare(LpRegime::ExPost)?, Relation::Eq, 0.6, 1e-8))
            }),
            Check::new(format!("{name}:bic-lp"), |_| {
                Ok(Outcome::new(
                    expost_welfare(LpRegime::BayesianInterim)?,
                    Relation::Ge,
                    3.0,
                    1e-8,
                ))
            }),
            Check::new(format!("{name}:regime-dominance"), regime_dominance),
        ],
        "example-no-equilibrium" => vec![Check::new(name, no_equilibrium)],
        "intro-0-0-mechanism" => vec![Check::new(name, uninformed_pair)],
        "myerson-identity" => vec![Check::new(name, myerson)],
        _ => return None,
    })
}

/// `thm-polynomial-lb-k<k>` and `bound-2-over-3beta@beta=<v>`.
pub fn alias(name: &str) -> Result<Option<Vec<Check>>> {
    if let Some(k) = name.strip_prefix("thm-polynomial-lb-k") {
        let k: u32 = k
            .parse()
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::Validation(format!("bad degree in `{name}`")))?;
        return Ok(Some(polynomial_lb(name, k)));
    }
    if let Some(b) = name.strip_prefix("bound-2-over-3beta@beta=") {
        let beta: f64 = b
            .parse()
            .map_err(|_| Error::Validation(format!("bad β in `{name}`")))?;
        return Ok(Some(vec![Check::new(name, move |_| {
            let inst = inst_two_over_three_beta(beta)?;
            Ok(Outcome::new(
                inst.bound,
                Relation::Ge,
                inst.target,
                BOUND_TOL * inst.target.abs().max(1.0),
            ))
        })]));
    }
    Ok(None)
}

/// `n` evenly spaced values on `[lo, hi]`.
fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Worst relative margin `(bound - target)/max(1, target)` over the
/// instantiations; `>=` claims allow `BOUND_TOL`, strict ones none.
fn corollary_outcome(insts: &[Instantiation]) -> Outcome {
    let margin = insts
        .iter()
        .map(|i| (i.bound - i.target) / i.target.abs().max(1.0))
        .fold(f64::INFINITY, f64::min);
    if insts.iter().any(|i| i.strict) {
        Outcome::new(margin, Relation::Gt, 0.0, 0.0)
    } else {
        Outcome::new(margin, Relation::Ge, 0.0, BOUND_TOL)
    }
}

fn corollary(xs: &[f64], f: impl Fn(f64) -> Result<Instantiation>) -> Result<Outcome> {
    let insts: Result<Vec<_>> = xs.iter().map(|&x| f(x)).collect();
    Ok(corollary_outcome(&insts?))
}

fn corollary2(xs: &[f64], ys: &[f64], f: impl Fn(f64, f64) -> Result<Instantiation>) -> Result<Outcome> {
    let mut insts = Vec::new();
    for &x in xs {
        for &y in ys {
            insts.push(f(x, y)?);
        }
    }
    Ok(corollary_outcome(&insts))
}

/// Both ratio formulas against rewrites with the fractions cleared.
fn formula_oracle(seed: u64) -> Result<Outcome> {
    let mut worst = 0.0f64;
    for t in 0..500 {
        let b = random_buyer_signal_spec(&mut rng(seed, 91, t));
        let (k, m, a, be) = (b.k as f64, b.m as f64, b.alpha, b.beta);
        let want = (1.0 - a)
            / (be / k + (1.0 - be) * (1.0 - a) + 2.0 * k * be * (1.0 - a) / m + 2.0 * k * (1.0 - be) * (1.0 - a));
        worst = worst.max(rel_err(bound_buyer_signal(b.k, b.m, a, be)?, want));
        let s = random_seller_signal_spec(&mut rng(seed, 92, t));
        let (k, m, a, be) = (s.k as f64, s.m as f64, s.alpha, s.beta);
        let want = a
            / (a * (1.0 - be) / k
                + (1.0 - be) * (1.0 - a) / k
                + a * be
                + 4.0 * a * (1.0 - be) / m
                + 2.0 * a * be / k
                + 2.0 * (1.0 - a) * (1.0 - be) / (k * k));
        worst = worst.max(rel_err(bound_seller_signal(s.k, s.m, a, be)?, want));
    }
    Ok(Outcome::new(worst, Relation::Le, 1e-12, 0.0))
}

fn lp_ratio(spec: &HardInstanceSpec) -> Result<Outcome> {
    let r = verify_impossibility(spec, LP_GRID, LP_TOL)?;
    if r.lp_status != LpStatus::Optimal {
        return Err(Error::Numerical(format!("LP status {:?}", r.lp_status)));
    }
    Ok(Outcome::new(r.ratio, Relation::Ge, r.bound, LP_TOL * r.bound))
}

fn alloc_mass(spec: &HardInstanceSpec) -> Result<Outcome> {
    let r = verify_impossibility(spec, LP_GRID, LP_TOL)?;
    let a = r
        .allocation_mass
        .ok_or_else(|| Error::Precondition("no allocation-mass cap for this family".into()))?;
    Ok(Outcome::new(a.lhs, Relation::Le, a.rhs, 1e-9))
}

fn round_trip(seed: u64, salt: u64, gen: fn(&mut ChaCha8Rng) -> HardInstanceSpec) -> Result<Outcome> {
    let errs = par(50, |t| {
        let spec = gen(&mut rng(seed, salt, t));
        let p = build(&spec)?.informedness()?;
        let (a, b) = (p.alpha.unwrap_or(f64::NAN), p.beta.unwrap_or(f64::NAN));
        Ok((a - spec.alpha).abs().max((b - spec.beta).abs()))
    })?;
    Ok(Outcome::new(max_of(errs.into_iter()), Relation::Le, 1e-12, 0.0))
}

/// Generic discrete laws; geometric tails near 1 sit below the breakpoint resolution.
fn embed_law(seed: u64, salt: u64) -> Result<Outcome> {
    let errs = par(50, |t| {
        let mut g = rng(seed, salt, t);
        let (nb, ns) = (g.gen_range(2..=12), g.gen_range(2..=12));
        let i = random_discrete_instance(&mut g, nb, ns);
        let e = embed_discrete_as_uniform(&i)?;
        let (b0, s0) = i.expected_values()?;
        let (b1, s1) = e.expected_values()?;
        let o = rel_err(opt_welfare(&i)?, opt_welfare(&e)?);
        Ok(rel_err(b0, b1).max(rel_err(s0, s1)).max(o))
    })?;
    Ok(Outcome::new(max_of(errs.into_iter()), Relation::Le, 1e-12, 0.0))
}

fn reduction(seed: u64) -> Result<Outcome> {
    let r = par(50, |t| {
        let i = random_informed_seller(&mut rng(seed, 1, t));
        let red = mech_reduction_informed_seller(&i, OfferGrid::default())?;
        let r = ratio_report(&i, &red.designed)?;
        Ok(r.ratio / r.bound)
    })?;
    Ok(Outcome::new(max_of(r.into_iter()), Relation::Le, 1.0, 1e-9))
}

fn single_crossing_ratio(seed: u64) -> Result<Outcome> {
    let r = par(100, |t| {
        let i = random_single_crossing(&mut rng(seed, 2, t));
        Ok(ratio_report(&i, &mech_single_crossing(&i, OfferGrid::default())?)?.ratio)
    })?;
    Ok(Outcome::new(max_of(r.into_iter()), Relation::Le, 5.5, 0.0))
}

fn offer_dominance(seed: u64) -> Result<Outcome> {
    let grid = OfferGrid {
        price_step: 1e-3,
        buyer_cells: 100,
    };
    let v = par(100, |t| {
        let i = random_informed_seller(&mut rng(seed, 3, t));
        let red = mech_reduction_informed_seller(&i, grid)?;
        Ok(red
            .lifted_offers
            .offers
            .iter()
            .zip(&red.pv_offers.offers)
            .filter(|(a, b)| a < b)
            .count())
    })?;
    Ok(Outcome::zero_count(v.into_iter().sum()))
}

fn zero_beta(seed: u64, beta: f64) -> Result<Outcome> {
    let r = par(100, |t| {
        let i = random_zero_beta(&mut rng(seed, 61 + (beta * 10.0).round() as u64, t), beta);
        Ok(ratio_report(&i, &mech_zero_beta(&i)?)?.ratio)
    })?;
    let bound = (2.0 - beta).max(1.0 + 1.0 / (1.0 - beta));
    Ok(Outcome::new(max_of(r.into_iter()), Relation::Le, bound, 1e-9))
}

fn polynomial_ratio(seed: u64) -> Result<Outcome> {
    let r = par(200, |t| {
        let i = random_polynomial_instance(&mut rng(seed, 71, t));
        let p = mech_polynomial(&i)?;
        let r = ratio_report(&i, &p.designed)?;
        Ok(r.ratio / r.bound)
    })?;
    Ok(Outcome::new(max_of(r.into_iter()), Relation::Le, 1.0, 1e-9))
}

fn polynomial_checks(seed: u64) -> Result<Outcome> {
    let v = par(200, |t| {
        let i = random_polynomial_instance(&mut rng(seed, 71, t));
        let p = mech_polynomial(&i)?;
        let d = discretize(&i, 41, 41)?;
        Ok(!check_mechanism(&d, &tabulate(&d, &p.designed.mechanism)?).all_pass())
    })?;
    Ok(Outcome::zero_count(v.into_iter().filter(|&f| f).count()))
}

/// Ratios of the polynomial and zero-β mechanisms do not move when every
/// value is scaled.
fn scaling_invariance(seed: u64) -> Result<Outcome> {
    let v = par(50, |t| {
        let i = random_polynomial_instance(&mut rng(seed, 72, t));
        let z = random_zero_beta(&mut rng(seed, 73, t), 0.5);
        let mut worst = 0.0f64;
        for s in [0.25, 7.0] {
            let a = ratio_report(&i, &mech_polynomial(&i)?.designed)?.ratio;
            let is = i.scaled(s);
            let b = ratio_report(&is, &mech_polynomial(&is)?.designed)?.ratio;
            let c = ratio_report(&z, &mech_zero_beta(&z)?)?.ratio;
            let zs = z.scaled(s);
            let d = ratio_report(&zs, &mech_zero_beta(&zs)?)?.ratio;
            worst = worst.max(rel_err(a, b)).max(rel_err(c, d));
        }
        Ok(worst)
    })?;
    Ok(Outcome::new(max_of(v.into_iter()), Relation::Le, 1e-9, 0.0))
}

/// Concrete mechanisms that pass the grid checks never beat the interim LP.
fn lp_dominance(seed: u64) -> Result<Outcome> {
    let v = par(20, |t| {
        let mut violations = 0;
        let mut cases: Vec<(InfoStructure, Vec<Mechanism>)> = Vec::new();
        let i = random_polynomial_instance(&mut rng(seed, 74, t));
        let (eb, es) = i.expected_values()?;
        cases.push((
            i.clone(),
            vec![
                mech_no_trade(),
                mech_polynomial(&i)?.designed.mechanism,
                Mechanism::PostedPrice {
                    price: 0.5 * (eb + es),
                    thresholds: interdep_core::mechanisms::ThresholdProfile::always(),
                },
            ],
        ));
        let z = random_zero_beta(&mut rng(seed, 75, t), 0.1 + 0.04 * t as f64);
        cases.push((z.clone(), vec![mech_zero_beta(&z)?.mechanism]));
        let f = random_informed_seller(&mut rng(seed, 76, t));
        cases.push((
            f.clone(),
            vec![mech_reduction_informed_seller(&f, OfferGrid::default())?.designed.mechanism],
        ));
        for (inst, mechs) in &cases {
            let d = discretize(inst, 9, 9)?;
            let lp = solve_optimal(&d, LpOptions::new(LpRegime::BayesianInterim))?;
            if lp.status != LpStatus::Optimal {
                return Err(Error::Numerical(format!("LP status {:?}", lp.status)));
            }
            for m in mechs {
                let tab = tabulate(&d, m)?;
                if check_mechanism(&d, &tab).all_pass() && d.welfare(&tab) > lp.welfare + 1e-9 {
                    violations += 1;
                }
            }
        }
        Ok(violations)
    })?;
    Ok(Outcome::zero_count(v.into_iter().sum()))
}

fn lp_monotone(seed: u64) -> Result<Outcome> {
    let v = par(20, |t| {
        let i = random_discrete_instance(&mut rng(seed, 77, t), 5, 5);
        let p = random_polynomial_instance(&mut rng(seed, 78, t));
        let mut bad = 0;
        for d in [discretize(&i, 0, 0)?, discretize(&p, 9, 9)?] {
            let lp = solve_optimal(&d, LpOptions::new(LpRegime::BayesianInterim))?;
            if !interim_monotone(&d, &lp.table, 1e-9) {
                bad += 1;
            }
        }
        Ok(bad)
    })?;
    Ok(Outcome::zero_count(v.into_iter().sum()))
}

fn polynomial_lb(name: &str, k: u32) -> Vec<Check> {
    let gap = move |_| -> Result<Outcome> {
        let (lp, no_trade, _) = polynomial_lb_solve(k)?;
        Ok(Outcome::new((lp - no_trade) / no_trade, Relation::Le, 0.02, 0.0))
    };
    let ratio = move |_| -> Result<Outcome> {
        let (lp, _, opt) = polynomial_lb_solve(k)?;
        Ok(Outcome::new(opt / lp, Relation::Ge, 0.95 * k as f64, 0.0))
    };
    vec![
        Check::new(name.to_string(), ratio),
        Check::new(format!("{name}:no-trade-gap"), gap),
    ]
}

/// `(LP welfare, no-trade welfare, OPT)` on the 41×41 grid.
fn polynomial_lb_solve(k: u32) -> Result<(f64, f64, f64)> {
    let i = build_polynomial_lb(k)?;
    let d = discretize(&i, LP_GRID, LP_GRID)?;
    let lp = solve_optimal(&d, LpOptions::new(LpRegime::BayesianInterim))?;
    if lp.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!("LP status {:?}", lp.status)));
    }
    Ok((lp.welfare, d.expected_values().1, opt_welfare(&i)?))
}

fn expost_welfare(regime: LpRegime) -> Result<f64> {
    let d = discretize(&build_expost(6.0, 0.1)?, LP_GRID, LP_GRID)?;
    let s = solve_optimal(&d, LpOptions::new(regime))?;
    if s.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!("LP status {:?}", s.status)));
    }
    Ok(s.welfare)
}

fn regime_dominance(seed: u64) -> Result<Outcome> {
    let v = par(20, |t| {
        let i = random_discrete_instance(&mut rng(seed, 81, t), 4, 4);
        let d = discretize(&i, 0, 0)?;
        let b = solve_optimal(&d, LpOptions::new(LpRegime::BayesianInterim))?;
        let e = solve_optimal(&d, LpOptions::new(LpRegime::ExPost))?;
        Ok(b.welfare < e.welfare - 1e-9)
    })?;
    Ok(Outcome::zero_count(v.into_iter().filter(|&b| b).count()))
}

/// Prices on `{0, 0.05, …, 3}` without a certified no-trade outcome.
fn no_equilibrium(_: u64) -> Result<Outcome> {
    let i = build_no_equilibrium();
    let v = par(61, |k| {
        let r = solve_equilibrium(&i, k as f64 * 0.05, &EqOptions::default())?;
        Ok(r.status != EquilibriumStatus::NoTradeOnly || !r.certification.is_some_and(|c| c.exhaustive))
    })?;
    Ok(Outcome::zero_count(v.into_iter().filter(|&b| b).count()))
}

/// Both agents uninformed: the midpoint price is within a factor 2.
fn uninformed_pair(seed: u64) -> Result<Outcome> {
    let r = par(100, |t| {
        let mut g = rng(seed, 11, t);
        let i = InfoStructure {
            buyer_own: ComponentFn::zero(),
            buyer_cross: random_poly(&mut g),
            seller_own: ComponentFn::zero(),
            seller_cross: random_poly(&mut g),
            buyer_sig: SignalDist::UniformUnit,
            seller_sig: SignalDist::UniformUnit,
            require_monotone: false,
        };
        Ok(ratio_report(&i, &mech_uninformed_pair(&i)?)?.ratio)
    })?;
    Ok(Outcome::new(max_of(r.into_iter()), Relation::Le, 2.0, 1e-9))
}

/// Threshold posted prices at `E[v_b]/2`: interim payments against the
/// payment formula.
fn myerson(seed: u64) -> Result<Outcome> {
    let r = par(50, |t| {
        let i = random_polynomial_instance(&mut rng(seed, 12, t));
        let (eb, _) = i.expected_values()?;
        let price = 0.5 * eb;
        let eq = solve_equilibrium(&i, price, &EqOptions::default())?;
        let res = myerson_residual_posted_price(&i, price, &eq.profile, 101)?;
        Ok(res.buyer.max(res.seller))
    })?;
    Ok(Outcome::new(max_of(r.into_iter()), Relation::Lt, 1e-6, 0.0))
}
