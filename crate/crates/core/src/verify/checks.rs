use std::array;

use crate::catalog::RobinsonTrautman;
use crate::expr::{Differentiator, Expr, SampleBox, Tape, ZeroTest};
use crate::fields::{causal_character, gradient_residual, integrability_residuals, parallel_residual, CausalCharacter, VectorField};
use crate::geometry::{ChartMetric, Geometry, Mat4, Tensor};
use crate::report::{CheckReport, Status};

use super::nullspace::parallel_null_space;

fn error(name: &str, sample_box: &SampleBox, tol: f64, msg: impl Into<String>) -> CheckReport {
    CheckReport::error(name, tol, sample_box.points, sample_box.seed, msg)
}

fn d() -> [Differentiator; 4] {
    array::from_fn(Differentiator::coord)
}

fn riemann_label(i: usize, j: usize, k: usize, l: usize) -> String {
    format!("R_{i}{j}{k}{l}")
}

/// Index quadruples `(i, j, k, l)` with `i < j`, `k < l` and `(i, j) <= (k, l)`:
/// one representative per component up to the pair symmetries.
pub fn independent_riemann_indices() -> Vec<[usize; 4]> {
    let pairs: Vec<(usize, usize)> = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for &(k, l) in &pairs[a..] {
            out.push([i, j, k, l]);
        }
    }
    out
}

/// Zero test of every independent Riemann component.
pub fn flatness_test(geo: &Geometry, name: &str) -> ZeroTest {
    let r = geo.riemann();
    let mut test = ZeroTest::new(name);
    for [i, j, k, l] in independent_riemann_indices() {
        test.push(riemann_label(i, j, k, l), r[i][j][k][l].clone());
    }
    test
}

fn ricci_test(geo: &Geometry, name: &str) -> ZeroTest {
    let ricci = geo.ricci();
    let mut test = ZeroTest::new(name);
    for j in 0..4 {
        for l in j..4 {
            test.push(format!("R_{j}{l}"), ricci[j][l].clone());
        }
    }
    test
}

/// All ten Ricci components vanish.
pub fn ricci_flat_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    ricci_test(geo, "ricci_flat").run(sample_box, tol)
}

/// Pair antisymmetry, pair exchange and the first Bianchi identity.
pub fn riemann_symmetries_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    let r = geo.riemann();
    let mut test = ZeroTest::new("riemann_symmetries");
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    if i < j {
                        test.push(format!("R_{i}{j}{k}{l} + R_{j}{i}{k}{l}"), &r[i][j][k][l] + &r[j][i][k][l]);
                    }
                    if (i, j) < (k, l) {
                        test.push(format!("R_{i}{j}{k}{l} - R_{k}{l}{i}{j}"), &r[i][j][k][l] - &r[k][l][i][j]);
                    }
                    if j < k && k < l {
                        test.push(
                            format!("R_{i}[{j}{k}{l}]"),
                            Expr::sum(vec![r[i][j][k][l].clone(), r[i][k][l][j].clone(), r[i][l][j][k].clone()]),
                        );
                    }
                }
            }
        }
    }
    test.run(sample_box, tol)
}

/// `g^ik g_kj = δ^i_j` for the engine's symbolic inverse.
pub fn inverse_metric_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    geo.metric().inverse_report(geo.inverse(), sample_box, tol)
}

/// Closed forms of the determinant and inverse in the adapted chart:
/// `det g = g23² - g22 g33`, `g^01 = 1`, `g^1α = 0`,
/// `g^22 = -g33/det`, `g^33 = -g22/det`, `g^23 = g23/det`.
pub fn inverse_closed_form_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    const NAME: &str = "inverse_closed_form";
    if let Err(e) = geo.metric().check_adapted_form() {
        return error(NAME, sample_box, tol, format!("precondition: {e}"));
    }
    let g = |i, j| geo.g(i, j).clone();
    let inv = geo.inverse();
    let det = geo.determinant().clone();
    let closed_det = g(2, 3).powi(2) - g(2, 2) * g(3, 3);
    let over_det = closed_det.powi(-1);
    ZeroTest::new(NAME)
        .with("det g - (g23^2 - g22 g33)", &det - &closed_det)
        .with("g^01 - 1", &inv[0][1] - Expr::one())
        .with("g^11", inv[1][1].clone())
        .with("g^12", inv[1][2].clone())
        .with("g^13", inv[1][3].clone())
        .with("g^22 + g33/det", &inv[2][2] + g(3, 3) * &over_det)
        .with("g^33 + g22/det", &inv[3][3] + g(2, 2) * &over_det)
        .with("g^23 - g23/det", &inv[2][3] - g(2, 3) * &over_det)
        .run(sample_box, tol)
}

/// `∇_k g_ij = 0`.
pub fn metric_compatibility_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    const NAME: &str = "metric_compatibility";
    let comps = (0..16).map(|n| geo.g(n / 4, n % 4).clone()).collect();
    let g = Tensor::new(0, 2, comps).expect("16 components");
    let nabla = match geo.covariant_derivative(&g) {
        Ok(t) => t,
        Err(e) => return error(NAME, sample_box, tol, e.to_string()),
    };
    let mut test = ZeroTest::new(NAME);
    for idx in nabla.indices() {
        if idx[0] <= idx[1] {
            test.push(format!("∇_{} g_{}{}", idx[2], idx[0], idx[1]), nabla.get(&idx).clone());
        }
    }
    test.run(sample_box, tol)
}

/// `D_i R^i_jkl = 0`, the covariant divergence of the curvature tensor.
pub fn bianchi_divergence_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    let div = geo.riemann_divergence();
    let mut test = ZeroTest::new("bianchi_divergence");
    for j in 0..4 {
        for k in 0..4 {
            for l in k + 1..4 {
                test.push(format!("D_i R^i_{j}{k}{l}"), div[j][k][l].clone());
            }
        }
    }
    test.run(sample_box, tol)
}

/// `D_i R^i_jkl = D_k R_jl - D_l R_jk`, which holds for every metric.
pub fn contracted_bianchi_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    let div = geo.riemann_divergence();
    let curl = geo.ricci_curl();
    let mut test = ZeroTest::new("contracted_bianchi");
    for j in 0..4 {
        for k in 0..4 {
            for l in k + 1..4 {
                test.push(
                    format!("D_i R^i_{j}{k}{l} - (D_{k} R_{j}{l} - D_{l} R_{j}{k})"),
                    &div[j][k][l] - &curl[j][k][l],
                );
            }
        }
    }
    test.run(sample_box, tol)
}

/// The four reduced vacuum conditions of the adapted chart, as labelled
/// expressions: `R_1223`, `R_1323`, `g33 R_1212 - 2 g23 R_1213 + g22 R_1313`,
/// `R_2323`.
pub fn reduced_vacuum_conditions(geo: &Geometry) -> Vec<(String, Expr)> {
    let r = geo.riemann();
    let g = |i, j| geo.g(i, j).clone();
    vec![
        ("R_1223".into(), r[1][2][2][3].clone()),
        ("R_1323".into(), r[1][3][2][3].clone()),
        (
            "g33 R_1212 - 2 g23 R_1213 + g22 R_1313".into(),
            Expr::sum(vec![
                g(3, 3) * &r[1][2][1][2],
                Expr::int(-2) * g(2, 3) * &r[1][2][1][3],
                g(2, 2) * &r[1][3][1][3],
            ]),
        ),
        ("R_2323".into(), r[2][3][2][3].clone()),
    ]
}

/// The three field equations of the standard chart as PDE residuals in the
/// metric components:
/// `∂2∂2 g13 - ∂2∂3 g12`, `∂2∂3 g13 - ∂3∂3 g12` and
/// `∂2∂2 g11 + ∂3∂3 g11 - 2(∂1∂2 g12 + ∂1∂3 g13) + (∂2 g13 - ∂3 g12)²`.
pub fn standard_pde_residuals(metric: &ChartMetric) -> Vec<(String, Expr)> {
    let mut d = d();
    let (g11, g12, g13) = (metric.g(1, 1), metric.g(1, 2), metric.g(1, 3));
    let d2g13 = d[2].diff(g13);
    let d3g12 = d[3].diff(g12);
    let d2g12 = d[2].diff(g12);
    let d3g13 = d[3].diff(g13);
    let d2g11 = d[2].diff(g11);
    let d3g11 = d[3].diff(g11);
    let twist = &d2g13 - &d3g12;
    vec![
        ("d22 g13 - d23 g12".into(), d[2].diff(&d2g13) - d[3].diff(&d2g12)),
        ("d23 g13 - d33 g12".into(), d[3].diff(&d2g13) - d[3].diff(&d3g12)),
        (
            "d22 g11 + d33 g11 - 2(d12 g12 + d13 g13) + (d2 g13 - d3 g12)^2".into(),
            Expr::sum(vec![
                d[2].diff(&d2g11),
                d[3].diff(&d3g11),
                Expr::int(-2) * d[1].diff(&d2g12),
                Expr::int(-2) * d[1].diff(&d3g13),
                twist.powi(2),
            ]),
        ),
    ]
}

/// The reduced vacuum equations in the adapted chart, cross-checked against
/// the full Ricci tensor: the report passes only when both agree and hold.
/// In standard coordinates the PDE residuals are tested as well.
pub fn reduced_vacuum_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    const NAME: &str = "reduced_vacuum";
    if let Err(e) = geo.metric().check_adapted_form() {
        return error(NAME, sample_box, tol, format!("precondition: {e}"));
    }
    let mut reduced = ZeroTest::new("reduced");
    for (label, e) in reduced_vacuum_conditions(geo) {
        reduced.push(label, e);
    }
    let reduced = reduced.run(sample_box, tol);
    let ricci = ricci_test(geo, "ricci").run(sample_box, tol);
    let equivalent = reduced.status == ricci.status;
    let mut parts = vec![reduced, ricci];
    if geo.metric().check_standard_form().is_ok() {
        let mut pde = ZeroTest::new("standard_pde");
        for (label, e) in standard_pde_residuals(geo.metric()) {
            pde.push(label, e);
        }
        parts.push(pde.run(sample_box, tol));
    }
    let mut report = CheckReport::combine(NAME, parts);
    let verdict = if equivalent {
        "reduced and full Ricci verdicts agree"
    } else {
        "reduced and full Ricci verdicts DISAGREE"
    };
    report.diagnostics = format!("{verdict}; {}", report.diagnostics);
    report
}

/// Closed forms of the curvature components in standard coordinates, as
/// `(indices, expression)` pairs.
pub fn closed_form_components(metric: &ChartMetric) -> Vec<([usize; 4], Expr)> {
    let mut d = d();
    let (g11, g12, g13) = (metric.g(1, 1), metric.g(1, 2), metric.g(1, 3));
    let half = Expr::ratio(1, 2);
    let d2g13 = d[2].diff(g13);
    let d2g12 = d[2].diff(g12);
    let d3g12 = d[3].diff(g12);
    let d1g12 = d[1].diff(g12);
    let d1g13 = d[1].diff(g13);
    let d2g11 = d[2].diff(g11);
    let d3g11 = d[3].diff(g11);
    let twist_sq = Expr::ratio(-1, 4) * (&d2g13 - &d3g12).powi(2);
    vec![
        ([2, 3, 2, 3], Expr::zero()),
        ([1, 2, 2, 3], &half * (d[2].diff(&d2g13) - d[3].diff(&d2g12))),
        ([1, 3, 2, 3], &half * (d[3].diff(&d2g13) - d[3].diff(&d3g12))),
        (
            [1, 2, 1, 2],
            Expr::sum(vec![&half * (Expr::int(2) * d[2].diff(&d1g12) - d[2].diff(&d2g11)), twist_sq.clone()]),
        ),
        (
            [1, 3, 1, 3],
            Expr::sum(vec![&half * (Expr::int(2) * d[3].diff(&d1g13) - d[3].diff(&d3g11)), twist_sq]),
        ),
        (
            [1, 2, 1, 3],
            &half * Expr::sum(vec![d[2].diff(&d1g13), d[3].diff(&d1g12), -d[3].diff(&d2g11)]),
        ),
    ]
}

/// Engine curvature against the closed forms of the standard chart.
pub fn closed_form_curvature_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    const NAME: &str = "closed_form_curvature";
    if let Err(e) = geo.metric().check_standard_form() {
        return error(NAME, sample_box, tol, format!("precondition: {e}"));
    }
    let r = geo.riemann();
    let mut test = ZeroTest::new(NAME);
    for ([i, j, k, l], closed) in closed_form_components(geo.metric()) {
        test.push(format!("{} - closed form", riemann_label(i, j, k, l)), &r[i][j][k][l] - closed);
    }
    test.run(sample_box, tol)
}

/// Trace, divergence and Cauchy–Riemann relations among `R_1212`, `R_1213`
/// and `R_1313`, as labelled residuals.
pub fn cauchy_riemann_residuals(r1212: &Expr, r1213: &Expr, r1313: &Expr) -> Vec<(String, Expr)> {
    let mut d = d();
    vec![
        ("R_1212 + R_1313".into(), r1212 + r1313),
        ("d2 R_1212 + d3 R_1312".into(), d[2].diff(r1212) + d[3].diff(r1213)),
        ("d2 R_1213 + d3 R_1313".into(), d[2].diff(r1213) + d[3].diff(r1313)),
        ("d2 R_1213 - d3 R_1212".into(), d[2].diff(r1213) - d[3].diff(r1212)),
        ("d3 R_1213 + d2 R_1212".into(), d[3].diff(r1213) + d[2].diff(r1212)),
    ]
}

/// Cauchy–Riemann residuals built from the engine's curvature.
pub fn engine_cauchy_riemann_residuals(geo: &Geometry) -> Vec<(String, Expr)> {
    let r = geo.riemann();
    cauchy_riemann_residuals(&r[1][2][1][2], &r[1][2][1][3], &r[1][3][1][3])
}

/// Cauchy–Riemann residuals built from the standard-chart closed forms.
pub fn closed_form_cauchy_riemann_residuals(metric: &ChartMetric) -> Vec<(String, Expr)> {
    let comps = closed_form_components(metric);
    let find = |idx: [usize; 4]| comps.iter().find(|(i, _)| *i == idx).expect("closed form").1.clone();
    cauchy_riemann_residuals(&find([1, 2, 1, 2]), &find([1, 2, 1, 3]), &find([1, 3, 1, 3]))
}

/// `R_1212 + R_1313 = 0` and `R_1213 + i R_1212` holomorphic in `x2 + i x3`,
/// for Ricci-flat metrics in standard coordinates.
pub fn cauchy_riemann_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    const NAME: &str = "cauchy_riemann";
    if let Err(e) = geo.metric().check_standard_form() {
        return error(NAME, sample_box, tol, format!("precondition: {e}"));
    }
    let vacuum = ricci_test(geo, "ricci").run(sample_box, tol);
    if !vacuum.passed() {
        return error(
            NAME,
            sample_box,
            tol,
            format!("precondition: metric is not Ricci-flat ({})", vacuum.diagnostics),
        );
    }
    let mut test = ZeroTest::new(NAME);
    for (label, e) in engine_cauchy_riemann_residuals(geo) {
        test.push(label, e);
    }
    test.run(sample_box, tol)
}

/// `T_ij = (R_ij - R g_ij / 2) / κ`.
pub fn stress_energy(geo: &Geometry, kappa: f64) -> Result<Mat4, String> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(format!("kappa must be finite and nonzero, got {kappa}"));
    }
    let inv_kappa = Expr::float(1.0 / kappa);
    Ok(geo.einstein().clone().map(|row| row.map(|e| (&inv_kappa * e).simplify())))
}

fn parallel_test(geo: &Geometry, x: &VectorField, name: &str) -> ZeroTest {
    let res = parallel_residual(geo, x);
    let mut test = ZeroTest::new(name);
    for (i, row) in res.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            test.push(format!("X^{i};{j}"), e.clone());
        }
    }
    test
}

/// Reconstructs `T_ij` and, when `field` is a verified nontrivial parallel
/// field, asserts that it vanishes. Without such a field the report only
/// records the size of `T_ij`.
pub fn stress_energy_check(
    geo: &Geometry,
    field: Option<&VectorField>,
    kappa: f64,
    sample_box: &SampleBox,
    tol: f64,
) -> CheckReport {
    const NAME: &str = "stress_energy";
    let t = match stress_energy(geo, kappa) {
        Ok(t) => t,
        Err(e) => return error(NAME, sample_box, tol, e),
    };
    let Some(x) = field else {
        return error(NAME, sample_box, tol, "precondition: no parallel field to instantiate against");
    };
    if x.is_zero() {
        return error(NAME, sample_box, tol, "precondition: the field is identically zero");
    }
    let parallel = parallel_test(geo, x, "parallel").run(sample_box, tol);
    if !parallel.passed() {
        return error(
            NAME,
            sample_box,
            tol,
            format!("precondition: field {x} is not parallel ({})", parallel.diagnostics),
        );
    }
    let mut test = ZeroTest::new(NAME);
    for i in 0..4 {
        for j in i..4 {
            test.push(format!("T_{i}{j}"), t[i][j].clone());
        }
    }
    let mut report = test.run(sample_box, tol);
    report.diagnostics = format!("kappa = {kappa}; parallel field {x}; {}", report.diagnostics);
    report
}

/// Perfect-fluid source: energy density, pressure and 4-velocity.
///
/// `ε - 3p >= 0` is a physical assumption and is not enforced.
#[derive(Clone, Debug)]
pub struct FluidState {
    pub epsilon: Expr,
    pub pressure: Expr,
    pub velocity: VectorField,
}

impl FluidState {
    /// `T_ij = (p + ε) u_i u_j - p g_ij`.
    pub fn stress_energy(&self, geo: &Geometry) -> Mat4 {
        let u = geo.lower(&self.velocity.components);
        let sum = &self.pressure + &self.epsilon;
        array::from_fn(|i| {
            array::from_fn(|j| Expr::sum(vec![&sum * &u[i] * &u[j], -(&self.pressure * geo.g(i, j))]))
        })
    }
}

/// The steps of the vanishing-source argument for a fluid: `g(u, u) = 1`,
/// the trace relation `R = -κ(ε - 3p)`, the field equations with the fluid
/// source, and `-κ(ε + 3p) u_i X^i / 2 = 0`. The two factors of the last
/// product are measured separately in the diagnostics.
pub fn fluid_check(
    geo: &Geometry,
    fluid: &FluidState,
    field: &VectorField,
    kappa: f64,
    sample_box: &SampleBox,
    tol: f64,
) -> CheckReport {
    const NAME: &str = "fluid_source";
    if kappa == 0.0 || !kappa.is_finite() {
        return error(NAME, sample_box, tol, format!("kappa must be finite and nonzero, got {kappa}"));
    }
    let k = Expr::float(kappa);
    let three = Expr::int(3);
    let u_norm = geo.norm_squared(&fluid.velocity.components) - Expr::one();
    let trace = geo.scalar() + &k * (&fluid.epsilon - &three * &fluid.pressure);
    let t = fluid.stress_energy(geo);
    let mut einstein = ZeroTest::new("field_equations");
    for i in 0..4 {
        for j in i..4 {
            einstein.push(format!("G_{i}{j} - kT_{i}{j}"), &geo.einstein()[i][j] - &k * &t[i][j]);
        }
    }
    let u_lower = geo.lower(&fluid.velocity.components);
    let u_dot_x = Expr::sum((0..4).map(|i| &u_lower[i] * &field.components[i]).collect());
    let source = &fluid.epsilon + &three * &fluid.pressure;
    let combination = Expr::float(-0.5 * kappa) * &source * &u_dot_x;
    let parts = vec![
        ZeroTest::new("normalization").with("g(u,u) - 1", u_norm).run(sample_box, tol),
        ZeroTest::new("trace").with("R + k(e - 3p)", trace).run(sample_box, tol),
        einstein.run(sample_box, tol),
        ZeroTest::new("contraction").with("-k(e + 3p) u.X / 2", combination).run(sample_box, tol),
    ];
    let mut report = CheckReport::combine(NAME, parts);
    let factors = [("e + 3p", source), ("u.X", u_dot_x)]
        .into_iter()
        .map(|(label, e)| match sampled_max_abs(&e, sample_box) {
            Ok(v) => format!("max |{label}| = {v:e}"),
            Err(msg) => format!("{label}: {msg}"),
        })
        .collect::<Vec<_>>()
        .join(", ");
    report.diagnostics = format!("{factors}; {}", report.diagnostics);
    report
}

fn sampled_max_abs(e: &Expr, sample_box: &SampleBox) -> Result<f64, String> {
    let tape = Tape::compile(std::slice::from_ref(e));
    let params = tape.bind_params(&sample_box.params).map_err(|e| e.to_string())?;
    let mut scratch = Vec::new();
    let mut best: f64 = 0.0;
    for pt in sample_box.sample().map_err(|e| e.to_string())? {
        tape.eval_into(&pt, &params, &mut scratch).map_err(|e| e.to_string())?;
        best = best.max(tape.root(&scratch, 0).abs());
    }
    Ok(best)
}

/// `∂_j X^i + Γ^i_jk X^k = 0`.
pub fn parallel_field_check(geo: &Geometry, x: &VectorField, sample_box: &SampleBox, tol: f64) -> CheckReport {
    parallel_test(geo, x, "parallel_field").run(sample_box, tol)
}

/// `∂_j X_i - ∂_i X_j = 0` for the lowered field.
pub fn gradient_check(geo: &Geometry, x: &VectorField, sample_box: &SampleBox, tol: f64) -> CheckReport {
    let curl = gradient_residual(geo, x);
    let mut test = ZeroTest::new("gradient");
    for i in 0..4 {
        for j in i + 1..4 {
            test.push(format!("d{j} X_{i} - d{i} X_{j}"), curl[i][j].clone());
        }
    }
    test.run(sample_box, tol)
}

/// `X` is light-like: `g(X, X) = 0` with `X` nonzero at every sampled point.
pub fn null_field_check(geo: &Geometry, x: &VectorField, sample_box: &SampleBox, tol: f64) -> CheckReport {
    let (character, report) = causal_character(geo, x, sample_box, tol);
    let mut report = report.renamed("null_field");
    match character {
        CausalCharacter::LightLike => report,
        CausalCharacter::Vanishing => {
            report.status = Status::Fail;
            report.max_residual = f64::INFINITY;
            report.diagnostics = format!("not a nontrivial field: {}", report.diagnostics);
            report
        }
        _ if report.status == Status::Error => report,
        _ => {
            // not light-like means g(X,X) failed its zero test
            debug_assert!(report.max_residual > tol || report.max_residual.is_nan());
            report
        }
    }
}

/// `R_ijkl X^l = 0` and `R_jl X^l = 0`.
pub fn integrability_check(geo: &Geometry, x: &VectorField, sample_box: &SampleBox, tol: f64) -> CheckReport {
    let (riemann, ricci) = integrability_residuals(geo, x);
    let mut test = ZeroTest::new("integrability");
    for i in 0..4 {
        for j in i + 1..4 {
            for (k, e) in riemann[i][j].iter().enumerate() {
                test.push(format!("R_{i}{j}{k}l X^l"), e.clone());
            }
        }
    }
    for (j, e) in ricci.iter().enumerate() {
        test.push(format!("R_{j}l X^l"), e.clone());
    }
    test.run(sample_box, tol)
}

/// A constant field lies in the common null space of `R_ijkl(x) v^l`.
/// The residual is the angle between the field and that null space.
pub fn null_space_check(geo: &Geometry, x: &VectorField, sample_box: &SampleBox, tol: f64) -> CheckReport {
    const NAME: &str = "null_space";
    let mut v = [0.0; 4];
    for (slot, c) in v.iter_mut().zip(&x.components) {
        match c.as_number() {
            Some(n) => *slot = n.to_f64(),
            None => return error(NAME, sample_box, tol, format!("precondition: field {x} is not constant")),
        }
    }
    if v.iter().all(|c| *c == 0.0) {
        return error(NAME, sample_box, tol, "precondition: the field is zero");
    }
    match parallel_null_space(geo, sample_box, tol) {
        Ok(ns) => {
            let angle = ns.angle_to(&v);
            CheckReport::measured(
                NAME,
                angle,
                None,
                tol,
                ns.points,
                sample_box.seed,
                format!(
                    "null space dimension {}; angle between {x} and it {angle:e}; {} numerically flat point(s)",
                    ns.dimension, ns.flat_points
                ),
            )
        }
        Err(e) => CheckReport::measured(
            NAME,
            f64::INFINITY,
            None,
            tol,
            sample_box.points,
            sample_box.seed,
            format!("domain error: {e}"),
        ),
    }
}

/// No nontrivial parallel field unless the metric is flat: passes when the
/// common null space of the curvature is trivial, and otherwise requires
/// every curvature component to vanish.
pub fn rt_obstruction_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    const NAME: &str = "rt_obstruction";
    let ns = match parallel_null_space(geo, sample_box, tol) {
        Ok(ns) => ns,
        Err(e) => {
            return CheckReport::measured(
                NAME,
                f64::INFINITY,
                None,
                tol,
                sample_box.points,
                sample_box.seed,
                format!("domain error: {e}"),
            )
        }
    };
    if ns.dimension == 0 {
        let smallest = ns.singular_values.last().copied().unwrap_or(0.0);
        return CheckReport::measured(
            NAME,
            0.0,
            None,
            tol,
            ns.points,
            sample_box.seed,
            format!("null space trivial (smallest normalized singular value {smallest:e}); no parallel field"),
        );
    }
    let mut report = flatness_test(geo, NAME).run(sample_box, tol);
    report.diagnostics = format!("null space dimension {}; flatness: {}", ns.dimension, report.diagnostics);
    report
}

/// `(∂²_ξ + ∂²_η) K = (4/p²)(∂_σ - 3H) m`.
pub fn rt_field_equation_residual(rt: &RobinsonTrautman) -> Expr {
    let mut d = d();
    let lhs = {
        let k2 = d[2].diff(&rt.k);
        let k3 = d[3].diff(&rt.k);
        d[2].diff(&k2) + d[3].diff(&k3)
    };
    let m = &rt.params.m;
    let rhs = Expr::int(4) * rt.params.p.powi(-2) * (d[1].diff(m) - Expr::int(3) * &rt.h * m);
    (lhs - rhs).simplify()
}

pub fn rt_field_equation_check(rt: &RobinsonTrautman, sample_box: &SampleBox, tol: f64) -> CheckReport {
    ZeroTest::new("rt_field_equation")
        .with("(d22 + d33) K - 4 (d1 - 3H) m / p^2", rt_field_equation_residual(rt))
        .run(sample_box, tol)
}

/// Whether the flat branch applies: `p` independent of σ and `K` constant.
pub fn rt_flatness_precondition(rt: &RobinsonTrautman, sample_box: &SampleBox, tol: f64) -> Result<(), String> {
    if rt.params.p.depends_on(1) {
        return Err(format!("p depends on {}", rt.metric.chart.name(1)));
    }
    let mut d = d();
    let mut test = ZeroTest::new("constant_k");
    for c in 1..4 {
        test.push(format!("d{c} K"), d[c].diff(&rt.k));
    }
    let report = test.run(sample_box, tol);
    if report.passed() {
        Ok(())
    } else {
        Err(format!("K is not constant ({})", report.diagnostics))
    }
}

/// With `∂_σ p = 0` and `K` constant, every curvature component vanishes
/// exactly when `m = 0`.
pub fn rt_flatness_check(rt: &RobinsonTrautman, geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    const NAME: &str = "rt_flatness";
    if let Err(e) = rt_flatness_precondition(rt, sample_box, tol) {
        return error(NAME, sample_box, tol, format!("precondition: {e}"));
    }
    flatness_test(geo, NAME).run(sample_box, tol)
}

/// Numerator of the Brioschi formula for `E du² + 2F du dv + G dv²` on
/// coordinates `(u, v)`; the Gaussian curvature is this over `(EG - F²)²`.
pub fn brioschi_numerator(gamma: &[[Expr; 2]; 2], u: usize, v: usize) -> Expr {
    let mut d = d();
    let (e, f, g) = (&gamma[0][0], &gamma[0][1], &gamma[1][1]);
    let half = Expr::ratio(1, 2);
    let (e_u, e_v) = (d[u].diff(e), d[v].diff(e));
    let (f_u, f_v) = (d[u].diff(f), d[v].diff(f));
    let (g_u, g_v) = (d[u].diff(g), d[v].diff(g));
    let e_vv = d[v].diff(&e_v);
    let g_uu = d[u].diff(&g_u);
    let f_uv = d[v].diff(&f_u);
    let det3 = |m: [[Expr; 3]; 3]| {
        Expr::sum(vec![
            &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1]),
            -(&m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])),
            &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0]),
        ])
    };
    let first = det3([
        [
            Expr::sum(vec![-(&half * &e_vv), f_uv, -(&half * &g_uu)]),
            &half * &e_u,
            &f_u - &half * &e_v,
        ],
        [&f_v - &half * &g_u, e.clone(), f.clone()],
        [&half * &g_v, f.clone(), g.clone()],
    ]);
    let second = det3([
        [Expr::zero(), &half * &e_v, &half * &g_u],
        [&half * &e_v, e.clone(), f.clone()],
        [&half * &g_u, f.clone(), g.clone()],
    ]);
    (first - second).simplify()
}

/// Gaussian curvature of a 2×2 block over `(x2, x3)`.
pub fn gaussian_curvature(gamma: &[[Expr; 2]; 2]) -> Expr {
    let det = &gamma[0][0] * &gamma[1][1] - gamma[0][1].powi(2);
    (brioschi_numerator(gamma, 2, 3) * det.powi(-2)).simplify()
}

/// The block `γ` over `(x2, x3)` is flat on every slice of the other
/// coordinates. `γ` must be positive-definite on the box.
pub fn two_dim_flatness_check(gamma: &[[Expr; 2]; 2], sample_box: &SampleBox, tol: f64) -> CheckReport {
    const NAME: &str = "two_dim_flatness";
    if gamma[0][1] != gamma[1][0] {
        return error(NAME, sample_box, tol, "precondition: block is not symmetric");
    }
    let det = &gamma[0][0] * &gamma[1][1] - gamma[0][1].powi(2);
    for (label, e) in [("gamma_22", &gamma[0][0]), ("det gamma", &det)] {
        match sampled_min(e, sample_box) {
            Ok((lowest, at)) if lowest <= 0.0 => {
                return error(
                    NAME,
                    sample_box,
                    tol,
                    format!("precondition: block not positive-definite ({label} = {lowest:e} at {at:?})"),
                )
            }
            Ok(_) => {}
            Err(e) => return error(NAME, sample_box, tol, format!("precondition: {e}")),
        }
    }
    ZeroTest::new(NAME)
        .with("Brioschi numerator of gamma", brioschi_numerator(gamma, 2, 3))
        .run(sample_box, tol)
}

/// Flatness of `γ_αβ = -g_αβ` (α, β in {2, 3}) for an adapted-chart metric.
pub fn spatial_flatness_check(geo: &Geometry, sample_box: &SampleBox, tol: f64) -> CheckReport {
    match geo.metric().spatial_subblock() {
        Ok(gamma) => two_dim_flatness_check(&gamma, sample_box, tol),
        Err(e) => error("two_dim_flatness", sample_box, tol, format!("precondition: {e}")),
    }
}

fn sampled_min(e: &Expr, sample_box: &SampleBox) -> Result<(f64, [f64; 4]), String> {
    let tape = Tape::compile(std::slice::from_ref(e));
    let params = tape.bind_params(&sample_box.params).map_err(|e| e.to_string())?;
    let mut scratch = Vec::new();
    let mut best = (f64::INFINITY, [0.0; 4]);
    for pt in sample_box.sample().map_err(|e| e.to_string())? {
        tape.eval_into(&pt, &params, &mut scratch).map_err(|e| e.to_string())?;
        let v = tape.root(&scratch, 0);
        if v < best.0 || v.is_nan() {
            best = (v, pt);
        }
    }
    if best.0.is_nan() {
        return Err(format!("value is NaN at {:?}", best.1));
    }
    Ok(best)
}
