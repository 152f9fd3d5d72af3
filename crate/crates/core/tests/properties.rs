use nullfield_core::expr::diff_fd_oracle;
use nullfield_core::expr::gen::ExprGen;
use nullfield_core::{is_probably_zero, parse, Chart, EvalPoint, Expr, SampleBox, ZeroTest};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_expr(seed: u64, depth: u32) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ExprGen::new(&mut rng).with_params(&["c"]).expr(depth)
}

fn unit_box() -> SampleBox {
    SampleBox::cube(-1.0, 1.0).with_param("c", 0.7).with_points(40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_matches_finite_differences(seed in any::<u64>(), coord in 0usize..4, pt in prop::array::uniform4(-1.0f64..1.0)) {
        let e = random_expr(seed, 4);
        let point = EvalPoint::at(pt).with_param("c", 0.7);
        let symbolic = e.diff(coord).eval(&point).unwrap();
        let fd = diff_fd_oracle(&e, coord, &point, 1e-4).unwrap();
        prop_assert!((symbolic - fd).abs() <= 1e-5 * (1.0 + symbolic.abs()), "{e}: {symbolic} vs {fd}");
    }

    #[test]
    fn derivative_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -3i64..=3, b in -3i64..=3, coord in 0usize..4) {
        let (e1, e2) = (random_expr(s1, 3), random_expr(s2, 3));
        let combined = (Expr::int(a) * &e1 + Expr::int(b) * &e2).diff(coord);
        let separate = Expr::int(a) * e1.diff(coord) + Expr::int(b) * e2.diff(coord);
        let r = is_probably_zero(&(combined - separate), &unit_box(), 1e-12);
        prop_assert!(r.passed(), "{r}");
    }

    #[test]
    fn mixed_partials_commute(seed in any::<u64>(), i in 0usize..4, j in 0usize..4) {
        let e = random_expr(seed, 3);
        let r = is_probably_zero(&(e.diff(i).diff(j) - e.diff(j).diff(i)), &unit_box(), 1e-12);
        prop_assert!(r.passed(), "{r}");
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let chart = Chart::standard();
        let e = random_expr(seed, 4);
        let first = parse(&e.display(&chart).to_string(), &chart, &["c"]).unwrap();
        let second = parse(&first.display(&chart).to_string(), &chart, &["c"]).unwrap();
        prop_assert_eq!(&first, &second);
        // and the text denotes the same function
        let r = is_probably_zero(&(first - e), &unit_box(), 1e-12);
        prop_assert!(r.passed(), "{r}");
    }

    #[test]
    fn zero_test_is_deterministic(seed in any::<u64>(), box_seed in any::<u64>()) {
        let e = random_expr(seed, 3);
        let b = unit_box().with_seed(box_seed);
        let test = ZeroTest::new("det").with("e", e);
        prop_assert_eq!(test.run(&b, 1e-9), test.run(&b, 1e-9));
    }

    #[test]
    fn simplify_preserves_value(seed in any::<u64>()) {
        let e = random_expr(seed, 4);
        let r = is_probably_zero(&(e.simplify() - &e), &unit_box(), 1e-12);
        prop_assert!(r.passed(), "{r}");
    }
}
