use num_rational::BigRational;
use proptest::prelude::*;
use simplex::{ratio, LinearProgram, Relation, Scalar, Status};

#[test]
fn textbook_maximum() {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  ->  36 at (2, 6)
    let mut lp = LinearProgram::<f64>::new(2);
    lp.set_objective(0, 3.0);
    lp.set_objective(1, 5.0);
    lp.add_constraint(vec![(0, 1.0)], Relation::Le, 4.0);
    lp.add_constraint(vec![(1, 2.0)], Relation::Le, 12.0);
    lp.add_constraint(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
    let sol = lp.solve();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 36.0).abs() < 1e-12);
    assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] - 6.0).abs() < 1e-12);
}

#[test]
fn phase_one_with_ge_and_eq_rows() {
    // max -x - y, x + y >= 2, x - y = 1  ->  x = 1.5, y = 0.5
    let mut lp = LinearProgram::<f64>::new(2);
    lp.set_objective(0, -1.0);
    lp.set_objective(1, -1.0);
    lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 2.0);
    lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Eq, 1.0);
    let sol = lp.solve();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.x[0] - 1.5).abs() < 1e-12);
    assert!((sol.x[1] - 0.5).abs() < 1e-12);
}

#[test]
fn free_variable_goes_negative() {
    // max -y with y free and y >= -3  ->  y = -3
    let mut lp = LinearProgram::<f64>::new(1);
    lp.set_free(0);
    lp.set_objective(0, -1.0);
    lp.add_constraint(vec![(0, 1.0)], Relation::Ge, -3.0);
    let sol = lp.solve();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.x[0] + 3.0).abs() < 1e-12);
}

#[test]
fn infeasible_and_unbounded() {
    let mut lp = LinearProgram::<f64>::new(1);
    lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0);
    lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
    assert_eq!(lp.solve().status, Status::Infeasible);

    let mut lp = LinearProgram::<f64>::new(2);
    lp.set_objective(0, 1.0);
    lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
    assert_eq!(lp.solve().status, Status::Unbounded);
}

fn beale<T: Scalar>(q: impl Fn(i64, i64) -> T) -> LinearProgram<T> {
    let mut lp = LinearProgram::<T>::new(4);
    lp.set_objective(0, q(3, 4));
    lp.set_objective(1, q(-20, 1));
    lp.set_objective(2, q(1, 2));
    lp.set_objective(3, q(-6, 1));
    lp.add_constraint(
        vec![(0, q(1, 4)), (1, q(-8, 1)), (2, q(-1, 1)), (3, q(9, 1))],
        Relation::Le,
        q(0, 1),
    );
    lp.add_constraint(
        vec![(0, q(1, 2)), (1, q(-12, 1)), (2, q(-1, 2)), (3, q(3, 1))],
        Relation::Le,
        q(0, 1),
    );
    lp.add_constraint(vec![(2, q(1, 1))], Relation::Le, q(1, 1));
    lp
}

#[test]
fn beale_cycling_example_terminates() {
    let sol = beale(|n, d| n as f64 / d as f64).solve();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 1.25).abs() < 1e-12);

    let sol = beale(ratio).solve();
    assert_eq!(sol.status, Status::Optimal);
    assert_eq!(sol.objective, ratio(5, 4));
}

/// Brute-force oracle for two-variable problems: best feasible vertex among
/// all pairwise intersections of the constraint lines and the axes.
fn vertex_oracle(c: [f64; 2], rows: &[([f64; 2], f64)]) -> Option<f64> {
    let mut lines: Vec<([f64; 2], f64)> = rows.to_vec();
    lines.push(([1.0, 0.0], 0.0));
    lines.push(([0.0, 1.0], 0.0));
    let feasible = |x: f64, y: f64| {
        x >= -1e-9 && y >= -1e-9 && rows.iter().all(|(a, b)| a[0] * x + a[1] * y <= b + 1e-9)
    };
    let mut best: Option<f64> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (a, b) = lines[i];
            let (c2, d) = lines[j];
            let det = a[0] * c2[1] - a[1] * c2[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = (b * c2[1] - a[1] * d) / det;
            let y = (a[0] * d - b * c2[0]) / det;
            if feasible(x, y) {
                let v = c[0] * x + c[1] * y;
                best = Some(best.map_or(v, |bv: f64| bv.max(v)));
            }
        }
    }
    best
}

proptest! {
    #[test]
    fn matches_vertex_enumeration(
        c in prop::array::uniform2(0.1f64..5.0),
        rows in prop::collection::vec((prop::array::uniform2(0.1f64..4.0), 0.5f64..10.0), 1..6),
    ) {
        // Positive coefficients keep the region bounded.
        let mut lp = LinearProgram::<f64>::new(2);
        lp.set_objective(0, c[0]);
        lp.set_objective(1, c[1]);
        for (a, b) in &rows {
            lp.add_constraint(vec![(0, a[0]), (1, a[1])], Relation::Le, *b);
        }
        let sol = lp.solve();
        prop_assert_eq!(sol.status, Status::Optimal);
        let oracle = vertex_oracle(c, &rows).unwrap();
        prop_assert!((sol.objective - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()));
    }

    #[test]
    fn rational_and_float_agree(
        c in prop::collection::vec(-5i64..6, 3),
        rows in prop::collection::vec((prop::collection::vec(-3i64..5, 3), -4i64..10), 1..6),
    ) {
        let mut lf = LinearProgram::<f64>::new(3);
        let mut lq = LinearProgram::<BigRational>::new(3);
        for (j, cj) in c.iter().enumerate() {
            lf.set_objective(j, *cj as f64);
            lq.set_objective(j, ratio(*cj, 1));
        }
        for (a, b) in &rows {
            lf.add_constraint(a.iter().enumerate().map(|(j, v)| (j, *v as f64)).collect(), Relation::Le, *b as f64);
            lq.add_constraint(a.iter().enumerate().map(|(j, v)| (j, ratio(*v, 1))).collect(), Relation::Le, ratio(*b, 1));
        }
        // Box the variables so that the problem is bounded whenever feasible.
        for j in 0..3 {
            lf.add_constraint(vec![(j, 1.0)], Relation::Le, 7.0);
            lq.add_constraint(vec![(j, ratio(1, 1))], Relation::Le, ratio(7, 1));
        }
        let sf = lf.solve();
        let sq = lq.solve();
        prop_assert_eq!(sf.status, sq.status);
        if sq.status == Status::Optimal {
            prop_assert!((sf.objective - sq.objective.to_f64()).abs() < 1e-8);
        }
    }
}

#[test]
fn rational_conversion_picks_simplest_preimage() {
    use simplex::simplest_rounding_to;
    assert_eq!(simplest_rounding_to(0.1), simplex::ratio(1, 10));
    assert_eq!(simplest_rounding_to(1.0 / 41.0), simplex::ratio(1, 41));
    assert_eq!(simplest_rounding_to(-2.5), simplex::ratio(-5, 2));
    assert_eq!(simplest_rounding_to(0.0), simplex::ratio(0, 1));
    for x in [1e-300, 3.7e12, 0.333, 5e-324, 1.0 / 3.0, 123.456] {
        let r = simplest_rounding_to(x);
        assert_eq!(num_traits::ToPrimitive::to_f64(&r), Some(x), "{x}");
    }
}
