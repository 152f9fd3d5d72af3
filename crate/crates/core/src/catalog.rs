//! Constructors for the metric families.

use std::array;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::expr::{Chart, Differentiator, Expr, HalfSpace, SampleBox, Tape, ZeroTest};
use crate::fields::VectorField;
use crate::geometry::{zeros4, ChartMetric, GeometryError};
use crate::report::CheckReport;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("h is not harmonic in (x2, x3): {0}")]
    NotHarmonic(Box<CheckReport>),
    #[error("{name} may depend only on {allowed}, but depends on {found}")]
    Dependence {
        name: &'static str,
        allowed: String,
        found: String,
    },
    #[error("{0} is not positive on the sample box{1}")]
    NotPositive(&'static str, String),
    #[error("2x2 block is not negative-definite on the sample box{0}")]
    Definiteness(String),
    #[error("cannot evaluate {0}: {1}")]
    Evaluation(&'static str, String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A metric together with its distinguished parallel field.
#[derive(Clone, Debug)]
pub struct Spacetime {
    pub family: &'static str,
    pub metric: ChartMetric,
    pub parallel_field: Option<VectorField>,
}

/// Parameter names used by a set of expressions, sorted.
fn params_of(exprs: &[&Expr]) -> Vec<String> {
    let mut names = BTreeSet::new();
    for e in exprs {
        names.extend(e.param_names());
    }
    names.into_iter().collect()
}

fn require_only(name: &'static str, e: &Expr, allowed: &[usize], chart: &Chart) -> Result<(), CatalogError> {
    let mask = e.coord_mask();
    let bad: Vec<&str> = (0..4).filter(|i| mask[*i] && !allowed.contains(i)).map(|i| chart.name(i)).collect();
    if bad.is_empty() {
        return Ok(());
    }
    let allowed = if allowed.is_empty() {
        "constants".to_string()
    } else {
        allowed.iter().map(|&i| chart.name(i)).collect::<Vec<_>>().join(", ")
    };
    Err(CatalogError::Dependence {
        name,
        allowed,
        found: bad.join(", "),
    })
}

/// Minimum of `e` over the sampled points, with the point where it occurs.
fn sampled_min(label: &'static str, e: &Expr, sample_box: &SampleBox) -> Result<(f64, [f64; 4]), CatalogError> {
    let tape = Tape::compile(std::slice::from_ref(e));
    let params = tape
        .bind_params(&sample_box.params)
        .map_err(|err| CatalogError::Evaluation(label, err.to_string()))?;
    let points = sample_box.sample().map_err(|err| CatalogError::Evaluation(label, err.to_string()))?;
    let mut scratch = Vec::new();
    let mut best = (f64::INFINITY, [0.0; 4]);
    for pt in points {
        tape.eval_into(&pt, &params, &mut scratch)
            .map_err(|err| CatalogError::Evaluation(label, err.to_string()))?;
        let v = tape.root(&scratch, 0);
        if v < best.0 {
            best = (v, pt);
        }
    }
    Ok(best)
}

pub fn standard_chart() -> Chart {
    Chart::standard()
}

pub fn default_box() -> SampleBox {
    SampleBox::cube(-1.0, 1.0)
}

/// `ds² = 2 dx0 dx1 - dx2² - dx3²`.
pub fn minkowski_null_chart() -> ChartMetric {
    let mut g = zeros4();
    g[0][1] = Expr::one();
    g[1][0] = Expr::one();
    g[2][2] = Expr::int(-1);
    g[3][3] = Expr::int(-1);
    ChartMetric::new(standard_chart(), vec![], g, default_box()).expect("symmetric")
}

/// The null coordinates `x0 = (t + x)/√2`, `x1 = (t - x)/√2`, `x2 = y`,
/// `x3 = z` as functions of `(t, x, y, z)`. Pulling the null chart back
/// along this map gives `diag(1, -1, -1, -1)`.
pub fn null_coordinates() -> [Expr; 4] {
    let s = Expr::int(2).sqrt().powi(-1);
    [
        &s * (Expr::coord(0) + Expr::coord(1)),
        &s * (Expr::coord(0) - Expr::coord(1)),
        Expr::coord(2),
        Expr::coord(3),
    ]
}

/// Inputs of the general pp-wave solution: `f(x1, x2, x3)`, `φ(x1)` and
/// `h(x1, x2, x3)` harmonic in `(x2, x3)`.
#[derive(Clone, Debug)]
pub struct PpWaveParams {
    pub f: Expr,
    pub phi: Expr,
    pub h: Expr,
}

impl PpWaveParams {
    pub fn new(f: Expr, phi: Expr, h: Expr) -> Self {
        PpWaveParams {
            f: f.simplify(),
            phi: phi.simplify(),
            h: h.simplify(),
        }
    }

    /// Dependence rules and the harmonicity of `h` (checked by zero test).
    pub fn validate(&self, chart: &Chart, sample_box: &SampleBox, tol: f64) -> Result<(), CatalogError> {
        require_only("f", &self.f, &[1, 2, 3], chart)?;
        require_only("h", &self.h, &[1, 2, 3], chart)?;
        require_only("phi", &self.phi, &[1], chart)?;
        let report = ZeroTest::new("harmonic_h")
            .with("Δh", self.h.diff(2).diff(2) + self.h.diff(3).diff(3))
            .run(sample_box, tol);
        if !report.passed() {
            return Err(CatalogError::NotHarmonic(Box::new(report)));
        }
        Ok(())
    }
}

/// `c · Re((x2 + i x3)^k)` or `c · Im(...)`, harmonic in `(x2, x3)` for any
/// coefficient `c` free of `x2, x3`.
pub fn harmonic_power(k: u32, coefficient: Expr, imaginary: bool) -> Expr {
    let mut terms = Vec::new();
    let mut binom: i64 = 1;
    for j in 0..=k {
        if j > 0 {
            binom = binom * i64::from(k - j + 1) / i64::from(j);
        }
        let keep = if imaginary { j % 2 == 1 } else { j % 2 == 0 };
        if keep {
            let quarter = if imaginary { (j - 1) / 2 } else { j / 2 };
            let sign = if quarter % 2 == 0 { 1 } else { -1 };
            terms.push(Expr::product(vec![
                Expr::int(sign * binom),
                Expr::coord(2).powi((k - j) as i32),
                Expr::coord(3).powi(j as i32),
            ]));
        }
    }
    coefficient * Expr::sum(terms)
}

/// The general vacuum metric with a null parallel field `∂/∂x0`:
/// `g01 = 1`, `g22 = g33 = -1`, `g12 = ∂2 f`, `g13 = ∂3 f + x2 φ`,
/// `g11 = 2 ∂1 f + h - ½ x2² φ²`.
pub fn pp_wave_metric(params: &PpWaveParams, domain: SampleBox, tol: f64) -> Result<Spacetime, CatalogError> {
    let chart = standard_chart();
    params.validate(&chart, &domain, tol)?;
    let PpWaveParams { f, phi, h } = params;
    let x2 = Expr::coord(2);
    let mut g = zeros4();
    g[1][0] = Expr::one();
    g[2][2] = Expr::int(-1);
    g[3][3] = Expr::int(-1);
    g[1][1] = Expr::sum(vec![
        Expr::int(2) * f.diff(1),
        h.clone(),
        Expr::ratio(-1, 2) * x2.powi(2) * phi.powi(2),
    ]);
    g[2][1] = f.diff(2);
    g[3][1] = f.diff(3) + &x2 * phi;
    let metric = ChartMetric::from_lower(chart, params_of(&[f, phi, h]), &g, domain)?;
    Ok(Spacetime {
        family: "pp_wave",
        metric,
        parallel_field: Some(VectorField::coordinate(0)),
    })
}

pub fn peres_chart() -> Chart {
    Chart::new(["t", "x", "y", "z"])
}

/// `ds² = 2 dt dx - (1 + 2f(x, y, z)) dx² - dy² - dz²` on the chart
/// `(t, x, y, z) = (x0, x1, x2, x3)`, with parallel field `∂/∂t`.
pub fn peres_metric(f: &Expr, domain: SampleBox) -> Result<Spacetime, CatalogError> {
    let chart = peres_chart();
    require_only("f", f, &[1, 2, 3], &chart)?;
    let mut g = zeros4();
    g[1][0] = Expr::one();
    g[1][1] = -(Expr::one() + Expr::int(2) * f);
    g[2][2] = Expr::int(-1);
    g[3][3] = Expr::int(-1);
    let metric = ChartMetric::from_lower(chart, params_of(&[f]), &g, domain)?;
    Ok(Spacetime {
        family: "peres",
        metric,
        parallel_field: Some(VectorField::coordinate(0)),
    })
}

/// The original form `ds² = dt² - dx² - dy² - dz² - 2 f(x + t, y, z)(dx + dt)²`.
pub fn peres_original_metric(f: &Expr, domain: SampleBox) -> Result<ChartMetric, CatalogError> {
    let chart = peres_chart();
    require_only("f", f, &[1, 2, 3], &chart)?;
    let shifted = f.substitute_coords(&[
        Expr::coord(0),
        Expr::coord(1) + Expr::coord(0),
        Expr::coord(2),
        Expr::coord(3),
    ]);
    let two_f = Expr::int(2) * shifted;
    let mut g = zeros4();
    g[0][0] = Expr::one() - &two_f;
    g[1][0] = -&two_f;
    g[1][1] = Expr::int(-1) - &two_f;
    g[2][2] = Expr::int(-1);
    g[3][3] = Expr::int(-1);
    Ok(ChartMetric::from_lower(chart, params_of(&[f]), &g, domain)?)
}

/// `t = t'`, `x = x' - t'`: old coordinates of the original form in terms of
/// the coordinates of [`peres_metric`].
pub fn peres_transform() -> [Expr; 4] {
    [Expr::coord(0), Expr::coord(1) - Expr::coord(0), Expr::coord(2), Expr::coord(3)]
}

pub fn plane_wave_chart() -> Chart {
    Chart::new(["eta", "x1", "x2", "x3"])
}

/// `ds² = 2 dη dx1 + g_ab(η) dx^a dx^b` (`a, b` in `{2, 3}`), `η = x0`, with
/// parallel field `∂/∂x1`.
pub fn plane_wave_metric(g22: &Expr, g23: &Expr, g33: &Expr, domain: SampleBox) -> Result<Spacetime, CatalogError> {
    let chart = plane_wave_chart();
    require_only("g22", g22, &[0], &chart)?;
    require_only("g23", g23, &[0], &chart)?;
    require_only("g33", g33, &[0], &chart)?;
    // negative-definite: g22 < 0 and g22 g33 - g23² > 0
    let (top, at) = sampled_min("g22", &(-g22), &domain)?;
    if top <= 0.0 {
        return Err(CatalogError::Definiteness(format!(" (g22 = {} at {at:?})", -top)));
    }
    let det = g22 * g33 - g23.powi(2);
    let (d, at) = sampled_min("det", &det, &domain)?;
    if d <= 0.0 {
        return Err(CatalogError::Definiteness(format!(" (det = {d} at {at:?})")));
    }
    let mut g = zeros4();
    g[1][0] = Expr::one();
    g[2][2] = g22.clone();
    g[3][2] = g23.clone();
    g[3][3] = g33.clone();
    let metric = ChartMetric::from_lower(chart, params_of(&[g22, g23, g33]), &g, domain)?;
    Ok(Spacetime {
        family: "plane_wave",
        metric,
        parallel_field: Some(VectorField::coordinate(1)),
    })
}

pub fn robinson_trautman_chart() -> Chart {
    Chart::new(["rho", "sigma", "xi", "eta"])
}

/// Sample box for the Robinson–Trautman family: `ρ ∈ [0.5, 2]`, the other
/// coordinates in `[-1, 1]`, and `ρ ≥ 0.01` as the excluded region around
/// the singularity at `ρ = 0`.
pub fn robinson_trautman_box() -> SampleBox {
    SampleBox::new([0.5, -1.0, -1.0, -1.0], [2.0, 1.0, 1.0, 1.0])
        .expect("valid box")
        .with_domain(HalfSpace::at_least(0, 0.01))
}

/// `p(ξ, η, σ) > 0` and `m(σ)`.
#[derive(Clone, Debug)]
pub struct RtParams {
    pub p: Expr,
    pub m: Expr,
}

#[derive(Clone, Debug)]
pub struct RobinsonTrautman {
    pub params: RtParams,
    pub metric: ChartMetric,
    /// `H = ∂_σ p / p`.
    pub h: Expr,
    /// `K = p² (∂²_ξ + ∂²_η) ln p`.
    pub k: Expr,
}

/// `ds² = 2 dρ dσ + (K - 2Hρ - 2m/ρ) dσ² - (ρ²/p²)(dξ² + dη²)` on the chart
/// `(ρ, σ, ξ, η) = (x0, x1, x2, x3)`.
///
/// `p` is taken as a function of `(ξ, η, σ)`, the dependence that `H` and
/// the field equation differentiate.
pub fn robinson_trautman_metric(params: &RtParams, domain: SampleBox) -> Result<RobinsonTrautman, CatalogError> {
    let chart = robinson_trautman_chart();
    let p = params.p.simplify();
    let m = params.m.simplify();
    require_only("p", &p, &[1, 2, 3], &chart)?;
    require_only("m", &m, &[1], &chart)?;
    let (lowest, at) = sampled_min("p", &p, &domain)?;
    if lowest <= 0.0 {
        return Err(CatalogError::NotPositive("p", format!(" (p = {lowest} at {at:?})")));
    }
    let mut d: [Differentiator; 4] = array::from_fn(Differentiator::coord);
    let h = d[1].diff(&p) * p.powi(-1);
    let ln_p = p.clone().ln();
    let d2 = d[2].diff(&ln_p);
    let d3 = d[3].diff(&ln_p);
    let k = p.powi(2) * (d[2].diff(&d2) + d[3].diff(&d3));
    let rho = Expr::coord(0);
    let mut g = zeros4();
    g[1][0] = Expr::one();
    g[1][1] = Expr::sum(vec![
        k.clone(),
        Expr::int(-2) * &h * &rho,
        Expr::int(-2) * &m * rho.powi(-1),
    ]);
    let transverse = -(rho.powi(2) * p.powi(-2));
    g[2][2] = transverse.clone();
    g[3][3] = transverse;
    let metric = ChartMetric::from_lower(chart, params_of(&[&p, &m]), &g, domain)?;
    Ok(RobinsonTrautman {
        params: RtParams { p, m },
        metric,
        h,
        k,
    })
}

/// Parameter schema of a named family, for listings.
#[derive(Clone, Debug)]
pub struct FamilyInfo {
    pub name: &'static str,
    pub chart: [&'static str; 4],
    /// Expression inputs with a short description each.
    pub inputs: &'static [(&'static str, &'static str)],
    pub parallel_field: Option<&'static str>,
    pub summary: &'static str,
}

pub fn families() -> Vec<FamilyInfo> {
    vec![
        FamilyInfo {
            name: "minkowski_null",
            chart: ["x0", "x1", "x2", "x3"],
            inputs: &[],
            parallel_field: Some("d/dx0"),
            summary: "flat space, ds^2 = 2 dx0 dx1 - dx2^2 - dx3^2",
        },
        FamilyInfo {
            name: "pp_wave",
            chart: ["x0", "x1", "x2", "x3"],
            inputs: &[
                ("f", "any function of x1, x2, x3"),
                ("phi", "function of x1 only"),
                ("h", "function of x1, x2, x3, harmonic in x2, x3"),
            ],
            parallel_field: Some("d/dx0"),
            summary: "general vacuum solution with a null parallel field",
        },
        FamilyInfo {
            name: "peres",
            chart: ["t", "x", "y", "z"],
            inputs: &[("f", "function of x, y, z; vacuum iff harmonic in y, z")],
            parallel_field: Some("d/dt"),
            summary: "ds^2 = 2 dt dx - (1 + 2f) dx^2 - dy^2 - dz^2",
        },
        FamilyInfo {
            name: "plane_wave",
            chart: ["eta", "x1", "x2", "x3"],
            inputs: &[
                ("g22", "function of eta"),
                ("g23", "function of eta"),
                ("g33", "function of eta; the 2x2 block must be negative-definite"),
            ],
            parallel_field: Some("d/dx1"),
            summary: "ds^2 = 2 deta dx1 + g_ab(eta) dx^a dx^b",
        },
        FamilyInfo {
            name: "robinson_trautman",
            chart: ["rho", "sigma", "xi", "eta"],
            inputs: &[("p", "positive function of xi, eta, sigma"), ("m", "function of sigma only")],
            parallel_field: None,
            summary: "spherical waves, ds^2 = 2 drho dsigma + (K - 2H rho - 2m/rho) dsigma^2 - (rho^2/p^2)(dxi^2 + deta^2)",
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, EvalPoint};
    use crate::geometry::Geometry;

    fn p(src: &str, chart: &Chart) -> Expr {
        parse(src, chart, &["c", "m0"]).unwrap()
    }

    #[test]
    fn harmonic_powers_match_complex_arithmetic() {
        let (a, b) = (0.7f64, -0.4f64);
        let pt = EvalPoint::at([0.0, 0.0, a, b]);
        let z = nalgebra::Complex::new(a, b);
        for k in 0..=4 {
            let w = z.powi(k as i32);
            let re = harmonic_power(k, Expr::one(), false).eval(&pt).unwrap();
            let im = harmonic_power(k, Expr::one(), true).eval(&pt).unwrap();
            assert!((re - w.re).abs() < 1e-12 && (im - w.im).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn pp_wave_components() {
        let chart = standard_chart();
        let params = PpWaveParams::new(Expr::zero(), p("c", &chart), Expr::zero());
        let st = pp_wave_metric(&params, default_box().with_param("c", 0.7), 1e-9).unwrap();
        assert_eq!(*st.metric.g(1, 3), p("c*x2", &chart).simplify());
        assert_eq!(*st.metric.g(1, 1), p("-0.5*c^2*x2^2", &chart).simplify());

        let params = PpWaveParams::new(p("x1*x2", &chart), Expr::zero(), p("x2^2 - x3^2", &chart));
        let st = pp_wave_metric(&params, default_box(), 1e-9).unwrap();
        assert_eq!(*st.metric.g(1, 2), Expr::coord(1));
        assert_eq!(*st.metric.g(1, 1), p("2*x2 + x2^2 - x3^2", &chart).simplify());

        let flat = pp_wave_metric(&PpWaveParams::new(Expr::zero(), Expr::zero(), Expr::zero()), default_box(), 1e-9)
            .unwrap();
        assert_eq!(flat.metric.components(), minkowski_null_chart().components());
    }

    #[test]
    fn pp_wave_rejects_bad_inputs() {
        let chart = standard_chart();
        let bad_h = PpWaveParams::new(Expr::zero(), Expr::zero(), p("x2^2", &chart));
        assert!(matches!(pp_wave_metric(&bad_h, default_box(), 1e-9), Err(CatalogError::NotHarmonic(_))));
        let bad_phi = PpWaveParams::new(Expr::zero(), p("x2", &chart), Expr::zero());
        assert!(matches!(pp_wave_metric(&bad_phi, default_box(), 1e-9), Err(CatalogError::Dependence { .. })));
        let bad_f = PpWaveParams::new(p("x0", &chart), Expr::zero(), Expr::zero());
        assert!(pp_wave_metric(&bad_f, default_box(), 1e-9).is_err());
    }

    #[test]
    fn peres_forms_are_equivalent() {
        let chart = peres_chart();
        let f = p("x^2*y - y^2 + z^2 + sin(x)*y*z", &chart);
        let original = peres_original_metric(&f, default_box()).unwrap();
        let pulled = original.pullback(&peres_transform(), chart, default_box()).unwrap();
        let target = peres_metric(&f, default_box()).unwrap().metric;
        let mut test = ZeroTest::new("peres transform");
        for i in 0..4 {
            for j in 0..4 {
                test.push(format!("{i}{j}"), pulled.g(i, j) - target.g(i, j));
            }
        }
        assert!(test.run(&default_box(), 1e-12).passed());
    }

    #[test]
    fn null_chart_is_minkowski() {
        let pulled = minkowski_null_chart()
            .pullback(&null_coordinates(), Chart::new(["t", "x", "y", "z"]), default_box())
            .unwrap();
        let pt = EvalPoint::at([0.1, 0.2, 0.3, 0.4]);
        let diag = [1.0, -1.0, -1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                let v = pulled.g(i, j).eval(&pt).unwrap();
                let want = if i == j { diag[i] } else { 0.0 };
                assert!((v - want).abs() < 1e-14, "g{i}{j} = {v}");
            }
        }
    }

    #[test]
    fn robinson_trautman_sphere() {
        let chart = robinson_trautman_chart();
        let params = RtParams {
            p: p("1 + (xi^2 + eta^2)/4", &chart),
            m: p("m0", &chart),
        };
        let rt = robinson_trautman_metric(&params, robinson_trautman_box().with_param("m0", 0.5)).unwrap();
        let b = rt.metric.domain.clone();
        assert!(ZeroTest::new("K = 1").with("K - 1", &rt.k - Expr::one()).run(&b, 1e-12).passed());
        assert!(rt.h.is_zero());
        let geo = Geometry::new(rt.metric.clone());
        let gamma = &geo.christoffel()[2][2][0];
        let rho = Expr::coord(0);
        assert!(ZeroTest::new("Γ^2_20").with("", gamma - rho.powi(-1)).run(&b, 1e-12).passed());
        let bad = RtParams {
            p: p("xi", &chart),
            m: Expr::zero(),
        };
        assert!(matches!(
            robinson_trautman_metric(&bad, robinson_trautman_box()),
            Err(CatalogError::NotPositive(..))
        ));
    }

    #[test]
    fn plane_wave_definiteness() {
        let chart = plane_wave_chart();
        let ok = plane_wave_metric(
            &p("-(1 + 0.1*sin(eta))^2", &chart),
            &Expr::zero(),
            &p("-(1 - 0.1*sin(eta))^2", &chart),
            default_box(),
        );
        assert!(ok.is_ok());
        let bad = plane_wave_metric(&Expr::int(1), &Expr::zero(), &Expr::int(-1), default_box());
        assert!(matches!(bad, Err(CatalogError::Definiteness(_))));
    }
}
