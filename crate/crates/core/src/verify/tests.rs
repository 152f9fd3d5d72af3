use super::*;
use crate::catalog::{
    minkowski_null_chart, peres_chart, peres_metric, pp_wave_metric, robinson_trautman_box, robinson_trautman_chart,
    robinson_trautman_metric, harmonic_power, PpWaveParams, RtParams,
};
use crate::expr::{parse, Chart, EvalPoint, Expr, ZeroTest};
use crate::fd::gaussian_curvature_2d;
use crate::geometry::zeros4;
use crate::report::Status;

const TOL: f64 = 1e-9;

fn p(src: &str, chart: &Chart) -> Expr {
    parse::<&str>(src, chart, &[]).unwrap()
}

fn sbox(points: usize) -> SampleBox {
    SampleBox::cube(-1.0, 1.0).with_points(points).with_seed(7)
}

fn curved_pp() -> Geometry {
    let c = Chart::standard();
    let params = PpWaveParams::new(
        p("sin(x1)*x2*x3 + x2^2*x3", &c),
        p("1/2", &c),
        harmonic_power(3, p("cos(x1)", &c), false),
    );
    Geometry::new(pp_wave_metric(&params, SampleBox::cube(-1.0, 1.0), TOL).unwrap().metric)
}

fn peres(f: &str) -> Geometry {
    Geometry::new(peres_metric(&p(f, &peres_chart()), SampleBox::cube(-1.0, 1.0)).unwrap().metric)
}

fn rt(p_src: &str, m: Expr) -> RobinsonTrautman {
    let params = RtParams {
        p: p(p_src, &robinson_trautman_chart()),
        m,
    };
    robinson_trautman_metric(&params, robinson_trautman_box()).unwrap()
}

const SPHERE: &str = "1 + (xi^2 + eta^2)/4";

fn adapted(g11: &str) -> Geometry {
    let c = Chart::standard();
    let mut g = zeros4();
    g[1][0] = Expr::one();
    g[1][1] = p(g11, &c);
    g[2][2] = Expr::int(-1);
    g[3][3] = Expr::int(-1);
    Geometry::new(ChartMetric::from_lower(c, vec![], &g, SampleBox::cube(-1.0, 1.0)).unwrap())
}

#[test]
fn seeds_differ_per_check_and_are_stable() {
    assert_eq!(derive_seed(42, "ricci_flat"), derive_seed(42, "ricci_flat"));
    assert_ne!(derive_seed(42, "ricci_flat"), derive_seed(42, "reduced_vacuum"));
    assert_ne!(derive_seed(42, "ricci_flat"), derive_seed(43, "ricci_flat"));
}

#[test]
fn independent_components_count() {
    assert_eq!(independent_riemann_indices().len(), 21);
}

#[test]
fn reduced_vacuum_examples() {
    let b = sbox(60);
    let r = reduced_vacuum_check(&curved_pp(), &b, TOL);
    assert!(r.passed(), "{r}");
    assert!(reduced_vacuum_check(&Geometry::new(minkowski_null_chart()), &b, TOL).passed());

    let bad = adapted("x2^2");
    let r = reduced_vacuum_check(&bad, &b, TOL);
    assert_eq!(r.status, Status::Fail);
    assert!(r.diagnostics.contains("agree"), "{}", r.diagnostics);
    let pde = standard_pde_residuals(bad.metric());
    assert_eq!(pde[2].1.eval(&EvalPoint::at([0.1, 0.2, 0.3, 0.4])).unwrap(), 2.0);
    assert!(pde[0].1.is_zero() && pde[1].1.is_zero());

    // the original Peres form has g00 != 0
    let not_adapted = Geometry::new(crate::catalog::peres_original_metric(&p("y^2", &peres_chart()), b.clone()).unwrap());
    assert_eq!(reduced_vacuum_check(&not_adapted, &b, TOL).status, Status::Error);
}

#[test]
fn closed_forms_match_engine() {
    let b = sbox(60);
    for geo in [curved_pp(), peres("sin(x)*y^3 + y*z^2 + x*y*z"), Geometry::new(minkowski_null_chart())] {
        let r = closed_form_curvature_check(&geo, &b, TOL);
        assert!(r.passed(), "{r}");
    }
    // φ = c contributes -c²/4 to R_1212
    let c = Chart::standard();
    let params = PpWaveParams::new(Expr::zero(), p("3", &c), Expr::zero());
    let geo = Geometry::new(pp_wave_metric(&params, SampleBox::cube(-1.0, 1.0), TOL).unwrap().metric);
    let r1212 = geo.riemann()[1][2][1][2].eval(&EvalPoint::at([0.0, 0.3, 0.2, -0.1])).unwrap();
    let closed = closed_form_components(geo.metric())[3].1.eval(&EvalPoint::at([0.0, 0.3, 0.2, -0.1])).unwrap();
    assert!((r1212 - closed).abs() < 1e-12);
    assert!(
        ZeroTest::new("has twist term")
            .with("", closed_form_components(geo.metric())[3].1.clone())
            .run(&b, TOL)
            .status
            == Status::Fail
    );
}

#[test]
fn cauchy_riemann_examples() {
    let b = sbox(60);
    let params = PpWaveParams::new(Expr::zero(), Expr::zero(), harmonic_power(3, Expr::one(), false));
    let geo = Geometry::new(pp_wave_metric(&params, SampleBox::cube(-1.0, 1.0), TOL).unwrap().metric);
    let r = cauchy_riemann_check(&geo, &b, TOL);
    assert!(r.passed(), "{r}");
    // R_1213 and R_1212 are not constant here, so the relations are not vacuous
    assert!(geo.riemann()[1][2][1][3].depends_on(2) || geo.riemann()[1][2][1][3].depends_on(3));

    assert!(cauchy_riemann_check(&curved_pp(), &b, TOL).passed());
    assert!(cauchy_riemann_check(&peres("y^2 - z^2"), &b, TOL).passed());
    assert!(cauchy_riemann_check(&Geometry::new(minkowski_null_chart()), &b, TOL).passed());
    assert_eq!(cauchy_riemann_check(&peres("y^2"), &b, TOL).status, Status::Error);
}

#[test]
fn cauchy_riemann_closed_forms_agree_with_engine() {
    let geo = curved_pp();
    let engine = engine_cauchy_riemann_residuals(&geo);
    let closed = closed_form_cauchy_riemann_residuals(geo.metric());
    let mut test = ZeroTest::new("agreement");
    for ((label, a), (_, b)) in engine.into_iter().zip(closed) {
        test.push(label, a - b);
    }
    assert!(test.run(&sbox(60), TOL).passed());
}

#[test]
fn stress_energy_examples() {
    let b = sbox(60);
    let x = VectorField::coordinate(0);
    assert!(stress_energy_check(&curved_pp(), Some(&x), 1.0, &b, TOL).passed());
    assert!(stress_energy_check(&Geometry::new(minkowski_null_chart()), Some(&x), 1.0, &b, TOL).passed());

    let peres_y2 = peres("y^2");
    let t = stress_energy(&peres_y2, 2.0).unwrap();
    let t11 = t[1][1].eval(&EvalPoint::at([0.1, 0.2, 0.3, 0.4])).unwrap();
    assert!((t11 - (-1.0)).abs() < 1e-12, "T_11 = {t11}");
    let r = stress_energy_check(&peres_y2, Some(&x), 2.0, &b, TOL);
    assert_eq!(r.status, Status::Fail);
    assert_eq!(stress_energy_check(&peres_y2, Some(&x), 0.0, &b, TOL).status, Status::Error);
    // ∂/∂x is not parallel, so nothing is asserted
    assert_eq!(
        stress_energy_check(&peres_y2, Some(&VectorField::coordinate(1)), 1.0, &b, TOL).status,
        Status::Error
    );
}

#[test]
fn fluid_steps() {
    let b = sbox(40);
    let geo = Geometry::new(minkowski_null_chart());
    let h = Expr::float(std::f64::consts::FRAC_1_SQRT_2);
    let u = VectorField::new([h.clone(), h, Expr::zero(), Expr::zero()]);
    let x = VectorField::coordinate(0);
    let empty = FluidState {
        epsilon: Expr::zero(),
        pressure: Expr::zero(),
        velocity: u.clone(),
    };
    let r = fluid_check(&geo, &empty, &x, 1.0, &b, TOL);
    assert!(r.passed(), "{r}");
    let dust = FluidState {
        epsilon: Expr::one(),
        ..empty
    };
    let r = fluid_check(&geo, &dust, &x, 1.0, &b, TOL);
    assert_eq!(r.status, Status::Fail);
    assert!(r.diagnostics.contains("max |e + 3p| = 1e0"), "{}", r.diagnostics);
    let slow = FluidState {
        epsilon: Expr::zero(),
        pressure: Expr::zero(),
        velocity: VectorField::new([Expr::one(), Expr::one(), Expr::zero(), Expr::zero()]),
    };
    assert_eq!(fluid_check(&geo, &slow, &x, 1.0, &b, TOL).status, Status::Fail);
}

#[test]
fn null_space_examples() {
    let b = sbox(40);
    let ns = parallel_null_space(&curved_pp(), &b, TOL).unwrap();
    assert_eq!(ns.dimension, 1, "{ns:?}");
    assert!(ns.angle_to(&[1.0, 0.0, 0.0, 0.0]) < 1e-10);
    assert!(null_space_check(&curved_pp(), &VectorField::coordinate(0), &b, TOL).passed());
    assert_eq!(
        null_space_check(&curved_pp(), &VectorField::coordinate(2), &b, TOL).status,
        Status::Fail
    );

    let flat = parallel_null_space(&Geometry::new(minkowski_null_chart()), &b, TOL).unwrap();
    assert_eq!(flat.dimension, 4);

    let rt = rt(SPHERE, Expr::ratio(1, 2));
    let rb = robinson_trautman_box().with_points(40).with_seed(3);
    let geo = Geometry::new(rt.metric.clone());
    assert_eq!(parallel_null_space(&geo, &rb, TOL).unwrap().dimension, 0);
    assert!(rt_obstruction_check(&geo, &rb, TOL).passed());
}

#[test]
fn null_space_dimension_is_stable() {
    let geo = curved_pp();
    let dims: Vec<usize> = [(40, 1), (40, 2), (80, 1)]
        .iter()
        .map(|&(n, s)| parallel_null_space(&geo, &sbox(n).with_seed(s), TOL).unwrap().dimension)
        .collect();
    assert_eq!(dims, vec![1, 1, 1]);
}

#[test]
fn rt_field_equation_examples() {
    let rb = robinson_trautman_box().with_points(40);
    assert!(rt_field_equation_check(&rt(SPHERE, Expr::ratio(1, 2)), &rb, TOL).passed());
    assert!(rt_field_equation_check(&rt("1", Expr::zero()), &rb, TOL).passed());
    let sigma = rt("1", Expr::coord(1));
    let r = rt_field_equation_check(&sigma, &rb, TOL);
    assert_eq!(r.status, Status::Fail);
    let v = rt_field_equation_residual(&sigma).eval(&EvalPoint::at([1.0, 0.3, 0.1, 0.2])).unwrap();
    assert_eq!(v, -4.0);
}

#[test]
fn rt_flatness_examples() {
    let rb = robinson_trautman_box().with_points(40);
    for (src, m) in [(SPHERE, Expr::zero()), ("1", Expr::zero())] {
        let rt = rt(src, m);
        let r = rt_flatness_check(&rt, &Geometry::new(rt.metric.clone()), &rb, TOL);
        assert!(r.passed(), "{r}");
    }
    let heavy = rt(SPHERE, Expr::ratio(1, 2));
    let r = rt_flatness_check(&heavy, &Geometry::new(heavy.metric.clone()), &rb, TOL);
    assert_eq!(r.status, Status::Fail);
    assert!(r.diagnostics.contains("R_0101"), "{}", r.diagnostics);
    // K not constant
    let lumpy = rt("1 + xi^2", Expr::zero());
    let r = rt_flatness_check(&lumpy, &Geometry::new(lumpy.metric.clone()), &rb, TOL);
    assert_eq!(r.status, Status::Error);
}

#[test]
fn two_dim_flatness_examples() {
    let b = sbox(40);
    let c = Chart::standard();
    let identity = [[Expr::one(), Expr::zero()], [Expr::zero(), Expr::one()]];
    assert!(two_dim_flatness_check(&identity, &b, TOL).passed());
    assert!(spatial_flatness_check(&curved_pp(), &b, TOL).passed());

    let bumped = [[Expr::one(), Expr::zero()], [Expr::zero(), p("x2^2 + 1", &c)]];
    assert_eq!(two_dim_flatness_check(&bumped, &b, TOL).status, Status::Fail);
    let k = gaussian_curvature(&bumped);
    for (u, v) in [(0.3, -0.2), (-0.7, 0.5)] {
        let symbolic = k.eval(&EvalPoint::at([0.0, 0.0, u, v])).unwrap();
        let fd = gaussian_curvature_2d(|u, _| Ok([[1.0, 0.0], [0.0, u * u + 1.0]]), u, v, 1e-3).unwrap();
        assert!((symbolic - fd).abs() < 1e-6, "{symbolic} vs {fd}");
    }
    let indefinite = [[Expr::one(), Expr::zero()], [Expr::zero(), Expr::int(-1)]];
    assert_eq!(two_dim_flatness_check(&indefinite, &b, TOL).status, Status::Error);
}

#[test]
fn identities_hold_on_non_vacuum_metrics() {
    let b = sbox(40);
    for geo in [peres("y^2"), adapted("x2^2*sin(x1) + x3")] {
        for r in [
            contracted_bianchi_check(&geo, &b, 1e-7),
            riemann_symmetries_check(&geo, &b, TOL),
            metric_compatibility_check(&geo, &b, TOL),
            inverse_metric_check(&geo, &b, TOL),
            inverse_closed_form_check(&geo, &b, 1e-12),
        ] {
            assert!(r.passed(), "{r}");
        }
        assert_eq!(ricci_flat_check(&geo, &b, TOL).status, Status::Fail);
    }
}

#[test]
fn field_checks() {
    let b = sbox(40);
    let geo = curved_pp();
    let x = VectorField::coordinate(0);
    for r in [
        parallel_field_check(&geo, &x, &b, TOL),
        gradient_check(&geo, &x, &b, TOL),
        null_field_check(&geo, &x, &b, TOL),
        integrability_check(&geo, &x, &b, TOL),
    ] {
        assert!(r.passed(), "{r}");
    }
    let y = VectorField::coordinate(2);
    assert_eq!(parallel_field_check(&geo, &y, &b, TOL).status, Status::Fail);
    assert_eq!(null_field_check(&geo, &y, &b, TOL).status, Status::Fail);
    let zero = VectorField::constant([0.0; 4]);
    let r = null_field_check(&geo, &zero, &b, TOL);
    assert_eq!(r.status, Status::Fail);
    assert!(r.max_residual.is_infinite());
}

#[test]
fn suite_selection_and_dispatch() {
    let c = Chart::standard();
    let params = PpWaveParams::new(p("x2*x3*x1", &c), Expr::zero(), harmonic_power(2, Expr::one(), true));
    let st = pp_wave_metric(&params, SampleBox::cube(-1.0, 1.0), TOL).unwrap();
    let subject = Subject::new(st.metric.clone()).with_field("X", st.parallel_field.unwrap());
    let settings = Settings {
        points: 30,
        ..Settings::default()
    };
    let checks = applicable_checks(&subject, &settings);
    let names: Vec<&str> = checks.iter().map(|(n, _)| n.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    for expected in ["reduced_vacuum", "cauchy_riemann", "null_space", "stress_energy", "parallel_field"] {
        assert!(names.contains(&expected), "{names:?}");
    }
    assert!(!names.iter().any(|n| n.starts_with("rt_")));
    let geo = Geometry::new(subject.metric.clone());
    for r in run_checks(&geo, &subject, &settings, &checks) {
        assert!(r.passed(), "{r}");
        assert_eq!(r.seed, settings.seed);
    }
    assert!(resolve_suite(&subject, &settings, "nope").is_none());
    let two = subject.clone().with_field("Y", VectorField::coordinate(2));
    let resolved = resolve_suite(&two, &settings, "parallel_field").unwrap();
    assert_eq!(resolved.len(), 2);
    let reports = run_checks(&geo, &two, &settings, &resolved);
    assert_eq!(reports[0].check, "parallel_field.X");
    assert!(reports[0].passed());
    assert_eq!(reports[1].status, Status::Fail);
}

#[test]
fn rt_suite_includes_flatness_only_for_massless_flat_branch() {
    let settings = Settings {
        points: 20,
        ..Settings::default()
    };
    let subject = |m: Expr| {
        let rt = rt(SPHERE, m);
        Subject::new(rt.metric.clone()).with_family(Family::RobinsonTrautman(Box::new(rt)))
    };
    let names = |s: &Subject| applicable_checks(s, &settings).into_iter().map(|(n, _)| n).collect::<Vec<_>>();
    assert!(names(&subject(Expr::zero())).contains(&"rt_flatness".to_string()));
    let heavy = names(&subject(Expr::ratio(1, 2)));
    assert!(!heavy.contains(&"rt_flatness".to_string()));
    assert!(heavy.contains(&"rt_obstruction".to_string()));
}
