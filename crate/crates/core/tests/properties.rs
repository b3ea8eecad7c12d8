//! Property-based tests for the invariants of measures, the LP layer, the
//! martingale transport solver, the adapted distance and the expression
//! language.

mod common;

use common::{convex_order_by_quantiles, w1_by_quantiles};
use motlab::adapted::{aw_distance, w1_joint};
use motlab::costexpr::{BinOp, Expr, Func, PayoffExpr, Var};
use motlab::lp::{solve_lp, solve_ot, LpStatus, Sense, StandardLp};
use motlab::measures::{check_convex_order, potential, quantize, w1, DiscreteMeasure, MeasurePair, ORDER_TOL};
use motlab::mot::{is_martingale_coupling, martingale_residual, solve_mot, Coupling, MotProblem};
use proptest::prelude::*;

fn measure(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure<f64>> {
    prop::collection::vec((-3.0..3.0f64, 0.05..1.0f64), 1..=max_atoms).prop_map(|v| {
        let (a, w): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        DiscreteMeasure::from_f64(&a, &w).unwrap()
    })
}

/// `(quantize(P, k), P)`: in convex order by construction.
fn ordered_pair(max_atoms: usize) -> impl Strategy<Value = MeasurePair<f64>> {
    (measure(max_atoms), 1..=max_atoms).prop_map(|(p, k)| {
        let k = k.min(p.len());
        MeasurePair::new(quantize(&p, k).unwrap(), p)
    })
}

fn coupling(max_side: usize) -> impl Strategy<Value = Coupling<f64>> {
    prop::collection::vec(
        (-2.0..2.0f64, prop::collection::vec((-2.0..2.0f64, 0.05..1.0f64), 1..=max_side)),
        1..=max_side,
    )
    .prop_map(|rows| {
        let cells: Vec<(f64, f64, f64)> = rows
            .into_iter()
            .flat_map(|(x, ys)| ys.into_iter().map(move |(y, m)| (x, y, m)))
            .collect();
        Coupling::from_cells(&cells).unwrap()
    })
}

fn l1_cost(a: &DiscreteMeasure<f64>, b: &DiscreteMeasure<f64>) -> Vec<Vec<f64>> {
    a.atoms()
        .iter()
        .map(|x| b.atoms().iter().map(|y| (x - y).abs()).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn w1_is_a_metric(a in measure(10), b in measure(10), c in measure(10)) {
        prop_assert_eq!(w1(&a, &a), 0.0);
        prop_assert!((w1(&a, &b) - w1(&b, &a)).abs() <= 1e-12);
        prop_assert!(w1(&a, &c) <= w1(&a, &b) + w1(&b, &c) + 1e-12);
        prop_assert!(w1(&a, &b) >= (a.mean() - b.mean()).abs() - 1e-12);
    }

    #[test]
    fn w1_matches_quantile_integral(a in measure(15), b in measure(15)) {
        prop_assert!((w1(&a, &b) - w1_by_quantiles(&a, &b)).abs() <= 1e-12);
    }

    #[test]
    fn w1_matches_transport_lp(a in measure(12), b in measure(12)) {
        let lp = solve_ot(&a, &b, &l1_cost(&a, &b), Sense::Min).unwrap().value;
        prop_assert!((w1(&a, &b) - lp).abs() <= 1e-8);
    }

    #[test]
    fn quantize_invariants(mu in measure(20), n in 1usize..12) {
        let q = quantize(&mu, n).unwrap();
        prop_assert!(q.len() <= n);
        prop_assert!(q.is_canonical());
        prop_assert!((q.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!((q.mean() - mu.mean()).abs() <= 1e-12);
        prop_assert!(convex_order_by_quantiles(&q, &mu, 1e-9));
        prop_assert!(check_convex_order(&q, &mu, &ORDER_TOL).holds());
    }

    #[test]
    fn quantize_refines_monotonically(mu in measure(20)) {
        let levels: Vec<_> = [2usize, 4, 8].iter().map(|&n| quantize(&mu, n).unwrap()).collect();
        for w in levels.windows(2) {
            prop_assert!(check_convex_order(&w[0], &w[1], &ORDER_TOL).holds());
        }
        // each block deviates from its mean by at most half its range
        let range = mu.atoms()[mu.len() - 1] - mu.atoms()[0];
        for (q, n) in levels.iter().zip([2.0, 4.0, 8.0]) {
            prop_assert!(w1(q, &mu) <= range / (2.0 * n) + 1e-12);
        }
    }

    #[test]
    fn quantize_preserves_order(p in ordered_pair(10), n in 1usize..10) {
        let q1 = quantize(&p.mu1, n).unwrap();
        let q2 = quantize(&p.mu2, n).unwrap();
        prop_assert!(check_convex_order(&q1, &q2, &ORDER_TOL).holds());
    }

    #[test]
    fn order_check_matches_quantile_oracle(a in measure(8), b in measure(8), shift_means in any::<bool>()) {
        let b = if shift_means {
            let d = a.mean() - b.mean();
            let atoms: Vec<f64> = b.atoms().iter().map(|x| x + d).collect();
            DiscreteMeasure::from_f64(&atoms, b.weights()).unwrap()
        } else {
            b
        };
        let fast = check_convex_order(&a, &b, &ORDER_TOL).holds();
        // skip pairs that sit within rounding of the boundary
        let strict = convex_order_by_quantiles(&a, &b, 1e-7);
        let loose = convex_order_by_quantiles(&a, &b, 1e-11);
        prop_assume!(strict == loose);
        prop_assert_eq!(fast, strict);
    }

    #[test]
    fn potential_is_convex(mu in measure(10), x in -4.0..4.0f64, y in -4.0..4.0f64, t in 0.0..1.0f64) {
        let z = t * x + (1.0 - t) * y;
        prop_assert!(potential(&mu, &z) <= t * potential(&mu, &x) + (1.0 - t) * potential(&mu, &y) + 1e-12);
        prop_assert!(potential(&mu, &x) >= (x - mu.mean()).abs() - 1e-12);
    }

    #[test]
    fn aw_is_a_metric_dominating_w1(a in coupling(5), b in coupling(5), c in coupling(5)) {
        let ab = aw_distance(&a, &b).unwrap();
        prop_assert!(aw_distance(&a, &a).unwrap() <= 1e-10);
        prop_assert!((ab - aw_distance(&b, &a).unwrap()).abs() <= 1e-8);
        prop_assert!(aw_distance(&a, &c).unwrap() <= ab + aw_distance(&b, &c).unwrap() + 1e-8);
        prop_assert!(w1_joint(&a, &b).unwrap() <= ab + 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_column_order_does_not_change_value(
        rows in prop::collection::vec(prop::collection::vec(0.0..2.0f64, 6), 3),
        cost in prop::collection::vec(-1.0..1.0f64, 6),
        rotate in 0usize..6,
    ) {
        let rhs = vec![1.0; 3];
        let lp = StandardLp::from_dense(cost.clone(), &rows, rhs.clone(), Sense::Max).unwrap();
        let perm: Vec<usize> = (0..6).map(|j| (j + rotate) % 6).collect();
        let rows2: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let cost2: Vec<f64> = perm.iter().map(|&j| cost[j]).collect();
        let lp2 = StandardLp::from_dense(cost2, &rows2, rhs, Sense::Max).unwrap();
        let (s1, s2) = (solve_lp(&lp).unwrap(), solve_lp(&lp2).unwrap());
        prop_assert_eq!(s1.status, s2.status);
        if s1.status == LpStatus::Optimal {
            prop_assert!((s1.value - s2.value).abs() <= 1e-9);
            prop_assert!(s1.max_residual <= 1e-9);
        }
    }

    #[test]
    fn lp_max_is_minus_min_of_negated(
        rows in prop::collection::vec(prop::collection::vec(0.1..2.0f64, 5), 2),
        cost in prop::collection::vec(-1.0..1.0f64, 5),
    ) {
        let rhs = vec![1.0, 1.5];
        let max = solve_lp(&StandardLp::from_dense(cost.clone(), &rows, rhs.clone(), Sense::Max).unwrap()).unwrap();
        let neg: Vec<f64> = cost.iter().map(|c| -c).collect();
        let min = solve_lp(&StandardLp::from_dense(neg, &rows, rhs, Sense::Min).unwrap()).unwrap();
        prop_assert_eq!(max.status, min.status);
        if max.status == LpStatus::Optimal {
            prop_assert!((max.value + min.value).abs() <= 1e-9);
        }
    }

    #[test]
    fn lp_feasibility_matches_convex_order(a in measure(8), b in measure(8)) {
        let pair = MeasurePair::new(a, b);
        let order = check_convex_order(&pair.mu1, &pair.mu2, &ORDER_TOL).holds();
        prop_assert_eq!(motlab::mot::martingale_lp_feasible(&pair).unwrap(), order);
    }

    #[test]
    fn mot_values_and_optimizers(p in ordered_pair(8)) {
        let phi = PayoffExpr::parse("abs(x2 - x1) + 0.3*x1*x2").unwrap();
        let hi = solve_mot(&MotProblem::new(p.clone(), phi.clone(), Sense::Max)).unwrap();
        let lo = solve_mot(&MotProblem::new(p.clone(), phi.clone(), Sense::Min)).unwrap();
        prop_assert!(lo.value <= hi.value + 1e-9);
        let grid: Vec<f64> = p.mu1.atoms().iter()
            .flat_map(|x| p.mu2.atoms().iter().map(|y| phi.eval(x, y).unwrap()).collect::<Vec<_>>())
            .collect();
        let (gmin, gmax) = grid.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        prop_assert!(lo.value >= gmin - 1e-9 && hi.value <= gmax + 1e-9);
        for r in [&hi, &lo] {
            prop_assert!(is_martingale_coupling(&r.optimizer, &p, &1e-8));
            prop_assert!(r.martingale_residual <= 1e-8);
        }
        // the martingale coupling set is convex
        let mid = hi.optimizer.mix(&lo.optimizer, 0.5).unwrap();
        prop_assert!(martingale_residual(&mid) <= 1e-8);
        prop_assert!(mid.marginal_error(&p) <= 1e-8);
    }

    #[test]
    fn marginal_payoffs_are_constant_on_the_coupling_set(p in ordered_pair(8)) {
        let phi = PayoffExpr::parse("x1*x1 - 2*abs(x2) + call(x2, 0.3)").unwrap();
        let expected = p.mu1.integrate(|x| x * x)
            + p.mu2.integrate(|y| -2.0 * y.abs() + (y - 0.3).max(0.0));
        for sense in [Sense::Max, Sense::Min] {
            let v = solve_mot(&MotProblem::new(p.clone(), phi.clone(), sense)).unwrap().value;
            prop_assert!((v - expected).abs() <= 1e-9);
        }
    }
}

/// Refinement shrinks quantizations in convex order towards μ, but their W1
/// distance to μ need not decrease from one dyadic level to the next.
#[test]
fn w1_to_quantization_is_not_monotone_in_resolution() {
    let mu = DiscreteMeasure::from_f64(
        &[-1.4833990242426536, -0.8459532093787183, -0.7682660214876023, 0.0,
          1.8502002898195449, 1.9009334632258648, 2.619519663761396],
        &[0.10144664170597519, 0.2270246205485964, 0.11464868907863847, 0.12468540356374995,
          0.04001621753788325, 0.2234643842978832, 0.16871404326727366],
    )
    .unwrap();
    let (q2, q4) = (quantize(&mu, 2).unwrap(), quantize(&mu, 4).unwrap());
    assert!(check_convex_order(&q2, &q4, &ORDER_TOL).holds());
    assert!((w1(&q2, &mu) - 0.383899).abs() < 1e-5);
    assert!((w1(&q4, &mu) - 0.412744).abs() < 1e-5);
    assert!((w1_by_quantiles(&q4, &mu) - w1(&q4, &mu)).abs() < 1e-12);
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::Var(Var::X1)),
        Just(Expr::Var(Var::X2)),
        (0.0..10.0f64).prop_map(Expr::Num),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            inner.clone().prop_map(|e| Expr::Func(Func::Abs, vec![e])),
            (
                prop_oneof![Just(Func::Max), Just(Func::Min), Just(Func::Call), Just(Func::Put)],
                inner.clone(),
                inner
            )
                .prop_map(|(f, a, b)| Expr::Func(f, vec![a, b])),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_reparse_to_the_same_tree(e in expr()) {
        let printed = PayoffExpr::from_ast(e.clone()).to_string();
        let back = PayoffExpr::parse(&printed).unwrap();
        prop_assert_eq!(back.ast(), &e, "{}", printed);
        prop_assert_eq!(back.to_string(), printed);
    }

    #[test]
    fn evaluation_matches_tree_semantics(e in expr(), x1 in -3.0..3.0f64, x2 in -3.0..3.0f64) {
        /// `None` where the evaluator must refuse: a divisor within 1e-300 of 0.
        fn reference(e: &Expr, x1: f64, x2: f64) -> Option<f64> {
            Some(match e {
                Expr::Var(Var::X1) => x1,
                Expr::Var(Var::X2) => x2,
                Expr::Num(v) => *v,
                Expr::Neg(a) => -reference(a, x1, x2)?,
                Expr::Bin(op, a, b) => {
                    let (a, b) = (reference(a, x1, x2)?, reference(b, x1, x2)?);
                    match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        BinOp::Mul => a * b,
                        BinOp::Div if b.abs() <= 1e-300 => return None,
                        BinOp::Div => a / b,
                    }
                }
                Expr::Func(f, args) => {
                    let v = args.iter().map(|a| reference(a, x1, x2)).collect::<Option<Vec<f64>>>()?;
                    match f {
                        Func::Abs => v[0].abs(),
                        Func::Max => v[0].max(v[1]),
                        Func::Min => v[0].min(v[1]),
                        Func::Call => (v[0] - v[1]).max(0.0),
                        Func::Put => (v[1] - v[0]).max(0.0),
                    }
                }
            })
        }
        let got = PayoffExpr::from_ast(e.clone()).eval(&x1, &x2);
        match reference(&e, x1, x2) {
            Some(v) if v.is_finite() => prop_assert_eq!(got.unwrap(), v),
            _ => prop_assert!(got.is_err()),
        }
    }
}
