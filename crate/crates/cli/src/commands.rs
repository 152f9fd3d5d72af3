use std::fmt::Write as _;
use std::path::Path;

use nullfield_core::catalog;
use nullfield_core::geometry::Geometry;
use nullfield_core::transport::{CurveSpec, TransportError, Transporter};
use nullfield_core::verify::{self, derive_seed, independent_riemann_indices, Settings};
use nullfield_core::{is_probably_zero, CheckReport, Expr, SampleBox, Status};
use rayon::prelude::*;
use serde::Serialize;

use crate::exit;
use crate::manifest::{Loaded, Manifest};
use crate::{CatalogArgs, CheckArgs, CurvatureArgs, Outcome, SamplingArgs, TransportArgs};

fn load(path: &Path, overrides: &SamplingArgs) -> Result<Loaded, Outcome> {
    let mut loaded = Manifest::read(path)
        .and_then(|m| m.load())
        .map_err(|e| Outcome::error(exit::USAGE, format!("{}: {e}", path.display())))?;
    let s = &mut loaded.settings;
    if let Some(points) = overrides.points {
        if points == 0 {
            return Err(Outcome::error(exit::USAGE, "--points must be positive"));
        }
        s.points = points;
    }
    if let Some(tol) = overrides.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Outcome::error(exit::USAGE, format!("--tol must be positive, got {tol}")));
        }
        s.tol = tol;
    }
    if let Some(seed) = overrides.seed {
        s.seed = seed;
    }
    Ok(loaded)
}

fn nonsingular(geo: &Geometry, settings: &Settings) -> Result<(), Outcome> {
    let b = sampling_box(geo, settings, "nonsingular");
    geo.metric()
        .check_nonsingular(&b, settings.tol)
        .map_err(|e| Outcome::error(exit::DOMAIN, e))
}

fn sampling_box(geo: &Geometry, settings: &Settings, name: &str) -> SampleBox {
    geo.metric()
        .domain
        .clone()
        .with_points(settings.points)
        .with_seed(derive_seed(settings.seed, name))
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

fn fmt_point(p: &Option<[f64; 4]>) -> String {
    match p {
        Some(p) => format!("({}, {}, {}, {})", p[0], p[1], p[2], p[3]),
        None => "-".into(),
    }
}

#[derive(Serialize)]
struct Component {
    component: String,
    expr: String,
    /// `nonzero`: the zero test fails, so the component is nonzero on the box.
    verdict: &'static str,
    max_residual: f64,
    argmax_point: Option<[f64; 4]>,
}

#[derive(Serialize)]
struct CurvatureListing {
    christoffel: Vec<Component>,
    riemann: Vec<Component>,
    ricci: Vec<Component>,
    scalar: Vec<Component>,
    tolerance: f64,
    points: usize,
    seed: u64,
}

impl CurvatureListing {
    fn is_empty(&self) -> bool {
        self.christoffel.is_empty() && self.riemann.is_empty() && self.ricci.is_empty() && self.scalar.is_empty()
    }
}

pub fn curvature(args: &CurvatureArgs) -> Outcome {
    let loaded = match load(&args.manifest, &args.sampling) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let settings = loaded.settings;
    let geo = Geometry::new(loaded.subject.metric);
    if let Err(o) = nonsingular(&geo, &settings) {
        return o;
    }
    let b = sampling_box(&geo, &settings, "curvature");
    let chart = &geo.metric().chart;
    let entry = |component: String, e: &Expr| -> Option<Component> {
        if e.is_zero() {
            return None;
        }
        let report = is_probably_zero(e, &b, settings.tol);
        let verdict = match report.status {
            Status::Pass => "zero",
            Status::Fail => "nonzero",
            Status::Error => "error",
        };
        Some(Component {
            component,
            expr: e.display(chart).to_string(),
            verdict,
            max_residual: report.max_residual,
            argmax_point: report.argmax_point,
        })
    };
    let gamma = geo.christoffel();
    let mut christoffel = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            for k in j..4 {
                christoffel.extend(entry(format!("Gamma^{i}_{j}{k}"), &gamma[i][j][k]));
            }
        }
    }
    let r = geo.riemann();
    let riemann = independent_riemann_indices()
        .into_iter()
        .filter_map(|[i, j, k, l]| entry(format!("R_{i}{j}{k}{l}"), &r[i][j][k][l]))
        .collect();
    let ric = geo.ricci();
    let mut ricci = Vec::new();
    for j in 0..4 {
        for l in j..4 {
            ricci.extend(entry(format!("R_{j}{l}"), &ric[j][l]));
        }
    }
    let scalar = entry("R".into(), geo.scalar()).into_iter().collect();
    let listing = CurvatureListing {
        christoffel,
        riemann,
        ricci,
        scalar,
        tolerance: settings.tol,
        points: b.points,
        seed: settings.seed,
    };
    if args.json {
        return Outcome::ok(json_line(&listing) + "\n", exit::PASS);
    }
    let mut out = String::new();
    if listing.is_empty() {
        out.push_str("all components zero\n");
    }
    for c in [&listing.christoffel, &listing.riemann, &listing.ricci, &listing.scalar]
        .into_iter()
        .flatten()
    {
        let _ = writeln!(
            out,
            "{} = {}    [{}: max residual {:e} at {}]",
            c.component,
            c.expr,
            c.verdict,
            c.max_residual,
            fmt_point(&c.argmax_point)
        );
    }
    let _ = writeln!(out, "tol {:e}, {} points, seed {}", settings.tol, b.points, settings.seed);
    Outcome::ok(out, exit::PASS)
}

/// Exit code for a set of reports: any failure wins over any error.
pub fn verdict_code(reports: &[CheckReport]) -> u8 {
    if reports.iter().any(|r| r.status == Status::Fail) {
        exit::FAIL
    } else if reports.iter().any(|r| r.status == Status::Error) {
        exit::PRECONDITION
    } else {
        exit::PASS
    }
}

pub fn check(args: &CheckArgs) -> Outcome {
    let loaded = match load(&args.manifest, &args.sampling) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let Loaded { subject, settings } = loaded;
    let Some(checks) = verify::resolve_suite(&subject, &settings, &args.suite) else {
        return Outcome::error(
            exit::USAGE,
            format!("unknown suite `{}`; known: all, {}", args.suite, verify::check_names().join(", ")),
        );
    };
    let geo = Geometry::new(subject.metric.clone());
    if let Err(o) = nonsingular(&geo, &settings) {
        return o;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(p) => p,
        Err(e) => return Outcome::error(exit::USAGE, format!("cannot start {} threads: {e}", args.threads)),
    };
    let mut reports: Vec<CheckReport> = pool.install(|| {
        checks
            .par_iter()
            .map(|(name, check)| verify::run_check(&geo, &subject, &settings, name, check))
            .collect()
    });
    reports.sort_by(|a, b| a.check.cmp(&b.check));
    let mut out = String::new();
    for r in &reports {
        if args.json {
            out.push_str(&json_line(r));
            out.push('\n');
        } else {
            let _ = writeln!(out, "{r}");
        }
    }
    Outcome::ok(out, verdict_code(&reports))
}

#[derive(Serialize)]
struct CurveJson {
    segments: Vec<[String; 4]>,
    closed: bool,
}

#[derive(Serialize)]
struct TransportJson {
    initial: [f64; 4],
    #[serde(rename = "final")]
    final_vector: [f64; 4],
    deviation: [f64; 4],
    curve: CurveJson,
    steps: usize,
    error_estimate: f64,
    norm_initial: f64,
    norm_final: f64,
}

fn transport_error_code(e: &TransportError) -> u8 {
    match e {
        TransportError::LeftDomain { .. } | TransportError::NonFinite { .. } | TransportError::Curve { .. } => {
            exit::DOMAIN
        }
        _ => exit::USAGE,
    }
}

fn rectangle(spec: [f64; 4], corner: [f64; 4]) -> Result<CurveSpec, String> {
    let index = |v: f64| -> Result<usize, String> {
        if v.fract() == 0.0 && (0.0..4.0).contains(&v) {
            Ok(v as usize)
        } else {
            Err(format!("--rectangle coordinate index must be 0..3, got {v}"))
        }
    };
    let (a, b) = (index(spec[0])?, index(spec[1])?);
    if a == b {
        return Err("--rectangle needs two different coordinates".into());
    }
    Ok(CurveSpec::rectangle(corner, a, b, spec[2], spec[3]))
}

fn four(flag: &str, values: &[f64]) -> Result<[f64; 4], Outcome> {
    <[f64; 4]>::try_from(values)
        .map_err(|_| Outcome::error(exit::USAGE, format!("{flag} needs 4 comma-separated values, got {}", values.len())))
}

pub fn transport(args: &TransportArgs) -> Outcome {
    let v0 = match four("--vector", &args.vector) {
        Ok(v) => v,
        Err(o) => return o,
    };
    let corner = match args.corner.as_deref().map(|c| four("--corner", c)).transpose() {
        Ok(c) => c.unwrap_or([0.0; 4]),
        Err(o) => return o,
    };
    let rect = match args.rectangle.as_deref().map(|r| four("--rectangle", r)).transpose() {
        Ok(r) => r,
        Err(o) => return o,
    };
    let loaded = match load(&args.manifest, &SamplingArgs::default()) {
        Ok(l) => l,
        Err(o) => return o,
    };
    let geo = Geometry::new(loaded.subject.metric);
    if let Err(o) = nonsingular(&geo, &loaded.settings) {
        return o;
    }
    let chart = geo.metric().chart.clone();
    let curve = match (&args.curve, rect) {
        (Some(c), _) => {
            let srcs = [c[0].as_str(), c[1].as_str(), c[2].as_str(), c[3].as_str()];
            CurveSpec::parse(&srcs, &chart, args.closed).map_err(|e| Outcome::error(transport_error_code(&e), e))
        }
        (None, Some(r)) => rectangle(r, corner).map_err(|e| Outcome::error(exit::USAGE, e)),
        (None, None) => Err(Outcome::error(exit::USAGE, "give --curve or --rectangle")),
    };
    let curve = match curve {
        Ok(c) => c,
        Err(o) => return o,
    };
    let result = Transporter::new(&geo).and_then(|t| t.transport(&curve, v0, args.steps));
    let result = match result {
        Ok(r) => r,
        Err(e) => return Outcome::error(transport_error_code(&e), e),
    };
    let json = TransportJson {
        initial: result.initial,
        final_vector: result.final_vector,
        deviation: result.deviation(),
        curve: CurveJson {
            segments: curve
                .segments
                .iter()
                .map(|seg| std::array::from_fn(|i| seg[i].display(&chart).to_string()))
                .collect(),
            closed: curve.closed,
        },
        steps: result.steps,
        error_estimate: result.error_estimate,
        norm_initial: result.norm_initial,
        norm_final: result.norm_final,
    };
    Outcome::ok(json_line(&json) + "\n", exit::PASS)
}

#[derive(Serialize)]
struct InputJson {
    name: &'static str,
    description: &'static str,
}

#[derive(Serialize)]
struct FamilyJson {
    name: &'static str,
    chart: [&'static str; 4],
    inputs: Vec<InputJson>,
    parallel_field: Option<&'static str>,
    summary: &'static str,
}

pub fn catalog(args: &CatalogArgs) -> Outcome {
    let families = catalog::families();
    if args.json {
        let list: Vec<FamilyJson> = families
            .iter()
            .map(|f| FamilyJson {
                name: f.name,
                chart: f.chart,
                inputs: f
                    .inputs
                    .iter()
                    .map(|(name, description)| InputJson { name, description })
                    .collect(),
                parallel_field: f.parallel_field,
                summary: f.summary,
            })
            .collect();
        return Outcome::ok(json_line(&list) + "\n", exit::PASS);
    }
    let mut out = String::new();
    for f in &families {
        let _ = writeln!(out, "{}  ({})", f.name, f.chart.join(", "));
        let _ = writeln!(out, "  {}", f.summary);
        let _ = writeln!(out, "  parallel field: {}", f.parallel_field.unwrap_or("none"));
        if f.inputs.is_empty() {
            let _ = writeln!(out, "  inputs: none");
        }
        for (name, description) in f.inputs {
            let _ = writeln!(out, "  input {name}: {description}");
        }
    }
    Outcome::ok(out, exit::PASS)
}
