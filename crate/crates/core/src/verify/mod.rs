//! Named verification checks. Each produces a [`CheckReport`].

mod checks;
mod nullspace;

pub use checks::*;
pub use nullspace::{parallel_null_space, NullSpace, RELATIVE_THRESHOLD};

use crate::catalog::RobinsonTrautman;
use crate::expr::{SampleBox, DEFAULT_POINTS, DEFAULT_SEED, DEFAULT_TOL};
use crate::fields::VectorField;
use crate::geometry::{ChartMetric, Geometry};
use crate::report::CheckReport;

pub const DEFAULT_KAPPA: f64 = 1.0;

/// Sampling and tolerance shared by every check of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub tol: f64,
    pub points: usize,
    /// Master seed; each check samples with [`derive_seed`] of it.
    pub seed: u64,
    pub kappa: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: DEFAULT_TOL,
            points: DEFAULT_POINTS,
            seed: DEFAULT_SEED,
            kappa: DEFAULT_KAPPA,
        }
    }
}

/// Per-check seed: the master seed mixed with an FNV-1a hash of the name, so
/// every check has its own stream regardless of execution order.
pub fn derive_seed(master: u64, check: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in check.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    master.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ h
}

/// Which construction produced the metric; some checks need the extra data.
#[derive(Clone, Debug)]
pub enum Family {
    Raw,
    Catalog(&'static str),
    RobinsonTrautman(Box<RobinsonTrautman>),
}

/// A metric under test together with the fields and source it comes with.
#[derive(Clone, Debug)]
pub struct Subject {
    pub family: Family,
    pub metric: ChartMetric,
    /// Named fields to test; the first is the claimed parallel field.
    pub fields: Vec<(String, VectorField)>,
    pub fluid: Option<FluidState>,
}

impl Subject {
    pub fn new(metric: ChartMetric) -> Self {
        Subject {
            family: Family::Raw,
            metric,
            fields: Vec::new(),
            fluid: None,
        }
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }

    pub fn with_field(mut self, name: impl Into<String>, field: VectorField) -> Self {
        self.fields.push((name.into(), field));
        self
    }

    pub fn with_fluid(mut self, fluid: FluidState) -> Self {
        self.fluid = Some(fluid);
        self
    }

    fn parallel_field(&self) -> Option<&VectorField> {
        self.fields.first().map(|(_, f)| f)
    }

    fn rt(&self) -> Option<&RobinsonTrautman> {
        match &self.family {
            Family::RobinsonTrautman(rt) => Some(rt),
            _ => None,
        }
    }

    /// Check name for a per-field check: the bare name with a single field,
    /// `name.field` otherwise.
    fn field_check_name(&self, check: &str, field: &str) -> String {
        if self.fields.len() > 1 {
            format!("{check}.{field}")
        } else {
            check.to_string()
        }
    }
}

/// Checks that apply to every metric.
const METRIC_CHECKS: &[&str] = &[
    "bianchi_divergence",
    "contracted_bianchi",
    "inverse_metric",
    "metric_compatibility",
    "ricci_flat",
    "riemann_symmetries",
];

/// Checks that run once per field.
const FIELD_CHECKS: &[&str] = &["gradient", "integrability", "null_field", "parallel_field"];

/// Every check name the suite knows, sorted.
pub fn check_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = METRIC_CHECKS
        .iter()
        .chain(FIELD_CHECKS)
        .chain(&[
            "cauchy_riemann",
            "closed_form_curvature",
            "fluid_source",
            "inverse_closed_form",
            "null_space",
            "reduced_vacuum",
            "rt_field_equation",
            "rt_flatness",
            "rt_obstruction",
            "stress_energy",
            "two_dim_flatness",
        ])
        .copied()
        .collect();
    names.sort_unstable();
    names
}

/// The checks run by `--suite all`: every check whose structural
/// preconditions hold for the subject, as `(report name, check name)`.
pub fn applicable_checks(subject: &Subject, settings: &Settings) -> Vec<(String, &'static str)> {
    let mut out: Vec<(String, &'static str)> = METRIC_CHECKS.iter().map(|c| (c.to_string(), *c)).collect();
    let metric = &subject.metric;
    if metric.check_adapted_form().is_ok() {
        out.extend(["inverse_closed_form", "reduced_vacuum", "two_dim_flatness"].map(|c| (c.to_string(), c)));
    }
    if metric.check_standard_form().is_ok() {
        out.extend(["closed_form_curvature", "cauchy_riemann"].map(|c| (c.to_string(), c)));
    }
    for (name, _) in &subject.fields {
        for check in FIELD_CHECKS {
            out.push((subject.field_check_name(check, name), check));
        }
    }
    if let Some(x) = subject.parallel_field() {
        out.push(("stress_energy".into(), "stress_energy"));
        if x.components.iter().all(|c| c.as_number().is_some()) {
            out.push(("null_space".into(), "null_space"));
        }
        if subject.fluid.is_some() {
            out.push(("fluid_source".into(), "fluid_source"));
        }
    }
    if let Some(rt) = subject.rt() {
        out.push(("rt_field_equation".into(), "rt_field_equation"));
        out.push(("rt_obstruction".into(), "rt_obstruction"));
        // the flat branch is a claim only for m = 0
        let b = sample_box(subject, settings, "rt_flatness");
        if rt.params.m.is_zero() && rt_flatness_precondition(rt, &b, settings.tol).is_ok() {
            out.push(("rt_flatness".into(), "rt_flatness"));
        }
    }
    out.sort();
    out
}

/// Expands a suite name into `(report name, check name)` pairs. `None` for an
/// unknown suite.
pub fn resolve_suite(subject: &Subject, settings: &Settings, suite: &str) -> Option<Vec<(String, &'static str)>> {
    if suite == "all" {
        return Some(applicable_checks(subject, settings));
    }
    let check = check_names().into_iter().find(|c| *c == suite)?;
    if FIELD_CHECKS.contains(&check) && subject.fields.len() > 1 {
        return Some(
            subject
                .fields
                .iter()
                .map(|(name, _)| (subject.field_check_name(check, name), check))
                .collect(),
        );
    }
    Some(vec![(check.to_string(), check)])
}

fn sample_box(subject: &Subject, settings: &Settings, report_name: &str) -> SampleBox {
    subject
        .metric
        .domain
        .clone()
        .with_points(settings.points)
        .with_seed(derive_seed(settings.seed, report_name))
}

/// Runs one check. `report_name` selects the field for per-field checks and
/// names the report; `check` is the check to run.
pub fn run_check(geo: &Geometry, subject: &Subject, settings: &Settings, report_name: &str, check: &str) -> CheckReport {
    let b = sample_box(subject, settings, report_name);
    let tol = settings.tol;
    let field_for = || -> Option<&VectorField> {
        if subject.fields.len() <= 1 {
            return subject.parallel_field();
        }
        let suffix = report_name.strip_prefix(check)?.strip_prefix('.')?;
        subject.fields.iter().find(|(n, _)| n == suffix).map(|(_, f)| f)
    };
    let missing = |what: &str| CheckReport::error(check, tol, b.points, b.seed, format!("precondition: {what}"));
    let report = match check {
        "bianchi_divergence" => bianchi_divergence_check(geo, &b, tol),
        "contracted_bianchi" => contracted_bianchi_check(geo, &b, tol),
        "inverse_metric" => inverse_metric_check(geo, &b, tol),
        "metric_compatibility" => metric_compatibility_check(geo, &b, tol),
        "ricci_flat" => ricci_flat_check(geo, &b, tol),
        "riemann_symmetries" => riemann_symmetries_check(geo, &b, tol),
        "inverse_closed_form" => inverse_closed_form_check(geo, &b, tol),
        "reduced_vacuum" => reduced_vacuum_check(geo, &b, tol),
        "two_dim_flatness" => spatial_flatness_check(geo, &b, tol),
        "closed_form_curvature" => closed_form_curvature_check(geo, &b, tol),
        "cauchy_riemann" => cauchy_riemann_check(geo, &b, tol),
        "stress_energy" => stress_energy_check(geo, subject.parallel_field(), settings.kappa, &b, tol),
        "gradient" | "integrability" | "null_field" | "parallel_field" => match field_for() {
            None => missing("no vector field given"),
            Some(x) => match check {
                "gradient" => gradient_check(geo, x, &b, tol),
                "integrability" => integrability_check(geo, x, &b, tol),
                "null_field" => null_field_check(geo, x, &b, tol),
                _ => parallel_field_check(geo, x, &b, tol),
            },
        },
        "null_space" => match subject.parallel_field() {
            None => missing("no vector field given"),
            Some(x) => null_space_check(geo, x, &b, tol),
        },
        "fluid_source" => match (&subject.fluid, subject.parallel_field()) {
            (Some(fluid), Some(x)) => fluid_check(geo, fluid, x, settings.kappa, &b, tol),
            _ => missing("needs a fluid state and a vector field"),
        },
        "rt_obstruction" => rt_obstruction_check(geo, &b, tol),
        "rt_field_equation" | "rt_flatness" => match subject.rt() {
            None => missing("needs a Robinson-Trautman family metric"),
            Some(rt) if check == "rt_field_equation" => rt_field_equation_check(rt, &b, tol),
            Some(rt) => rt_flatness_check(rt, geo, &b, tol),
        },
        other => CheckReport::error(other, tol, b.points, b.seed, format!("unknown check `{other}`")),
    };
    let mut report = report.renamed(report_name);
    report.seed = settings.seed;
    report
}

/// Runs `checks` in order and returns the reports in the same order.
pub fn run_checks(geo: &Geometry, subject: &Subject, settings: &Settings, checks: &[(String, &'static str)]) -> Vec<CheckReport> {
    checks
        .iter()
        .map(|(name, check)| run_check(geo, subject, settings, name, check))
        .collect()
}

#[cfg(test)]
mod tests;
