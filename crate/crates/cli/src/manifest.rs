//! JSON manifests describing a metric, its fields and the sampling setup.
//!
//! ```json
//! {
//!   "version": 1,
//!   "family": "pp_wave",
//!   "inputs": { "f": "x1*x2*x3", "phi": "0", "h": "x2^2 - x3^2" },
//!   "box": { "lo": [-1, -1, -1, -1], "hi": [1, 1, 1, 1] },
//!   "seed": 42
//! }
//! ```
//!
//! A raw metric replaces `family`/`inputs` with `"metric"`, the lower
//! triangle as rows of expression strings, and optionally `"chart"`.

use std::collections::BTreeMap;
use std::path::Path;

use nullfield_core::catalog::{self, CatalogError, PpWaveParams, RtParams};
use nullfield_core::fields::VectorField;
use nullfield_core::geometry::ChartMetric;
use nullfield_core::verify::{Family, FluidState, Settings, Subject};
use nullfield_core::{parse, Chart, Expr, HalfSpace, SampleBox};
use serde::{Deserialize, Serialize};

pub const VERSION: u32 = 1;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Expression inputs of the family, by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, String>,
    /// Lower triangle of a raw metric: `metric[i][j]` for `j <= i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<[String; 4]>,
    /// Numeric values of the free parameters.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Vector fields in order; the first is the claimed parallel field.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid: Option<FluidSpec>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<BoxSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub name: String,
    pub components: [String; 4],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSpec {
    pub epsilon: String,
    pub pressure: String,
    pub velocity: [String; 4],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
    /// Half-spaces the samples must satisfy, e.g. away from a singularity.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub domain: Vec<HalfSpace>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid manifest JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported manifest version {0} (expected {VERSION})")]
    Version(u32),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

fn invalid(msg: impl Into<String>) -> ManifestError {
    ManifestError::Invalid(msg.into())
}

/// A manifest turned into something the checks can run on.
pub struct Loaded {
    pub subject: Subject,
    pub settings: Settings,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let text = std::fs::read_to_string(path)?;
        Manifest::from_json(&text)
    }

    fn settings(&self) -> Result<Settings, ManifestError> {
        let mut s = Settings::default();
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(invalid(format!("tol must be positive, got {tol}")));
            }
            s.tol = tol;
        }
        if let Some(points) = self.points {
            if points == 0 {
                return Err(invalid("points must be positive"));
            }
            s.points = points;
        }
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(kappa) = self.kappa {
            s.kappa = kappa;
        }
        Ok(s)
    }

    fn param_names(&self) -> Vec<&str> {
        self.params.keys().map(String::as_str).collect()
    }

    fn parse_expr(&self, what: &str, src: &str, chart: &Chart) -> Result<Expr, ManifestError> {
        parse(src, chart, &self.param_names()).map_err(|e| invalid(format!("{what}: {e}")))
    }

    fn input(&self, name: &str, chart: &Chart, default: Option<&str>) -> Result<Expr, ManifestError> {
        match (self.inputs.get(name), default) {
            (Some(src), _) => self.parse_expr(&format!("input `{name}`"), src, chart),
            (None, Some(d)) => self.parse_expr(name, d, chart),
            (None, None) => Err(invalid(format!("missing input `{name}`"))),
        }
    }

    fn sample_box(&self, default: SampleBox) -> Result<SampleBox, ManifestError> {
        let mut b = match &self.sample_box {
            Some(spec) => {
                let mut b = SampleBox::new(spec.lo, spec.hi).map_err(|e| invalid(format!("box: {e}")))?;
                // the default's half-spaces mark singular loci and always apply
                b.domain = default.domain.clone();
                b.domain.extend(spec.domain.iter().cloned());
                b
            }
            None => default,
        };
        for (name, value) in &self.params {
            if !value.is_finite() {
                return Err(invalid(format!("parameter `{name}` is not finite")));
            }
            b.params.insert(name.clone(), *value);
        }
        Ok(b)
    }

    fn check_inputs(&self, allowed: &[&str]) -> Result<(), ManifestError> {
        for name in self.inputs.keys() {
            if !allowed.contains(&name.as_str()) {
                return Err(invalid(format!("unknown input `{name}`; expected one of {allowed:?}")));
            }
        }
        Ok(())
    }

    fn check_chart(&self, chart: &Chart) -> Result<(), ManifestError> {
        match &self.chart {
            Some(names) if names != chart.names() => Err(invalid(format!(
                "chart {names:?} does not match the family chart {:?}",
                chart.names()
            ))),
            _ => Ok(()),
        }
    }

    /// Builds the metric, fields and settings.
    pub fn load(&self) -> Result<Loaded, ManifestError> {
        if self.version != VERSION {
            return Err(ManifestError::Version(self.version));
        }
        let settings = self.settings()?;
        let (family, metric, default_field) = match (&self.family, &self.metric) {
            (Some(_), Some(_)) => return Err(invalid("give either `family` or `metric`, not both")),
            (None, None) => return Err(invalid("missing `family` or `metric`")),
            (None, Some(rows)) => {
                if !self.inputs.is_empty() {
                    return Err(invalid("`inputs` needs a `family`"));
                }
                let chart = match &self.chart {
                    Some(names) => Chart::new(names.clone()),
                    None => Chart::standard(),
                };
                let b = self.sample_box(catalog::default_box())?;
                let params = self.params.keys().cloned().collect();
                let metric = ChartMetric::parse_lower(chart, params, rows, b).map_err(|e| invalid(e.to_string()))?;
                (Family::Raw, metric, None)
            }
            (Some(name), None) => self.load_family(name, &settings)?,
        };
        for name in &metric.params {
            if !metric.domain.params.contains_key(name) {
                return Err(invalid(format!("parameter `{name}` has no value in `params`")));
            }
        }
        let mut subject = Subject::new(metric).with_family(family);
        let chart = subject.metric.chart.clone();
        if self.fields.is_empty() {
            if let Some(x) = default_field {
                subject = subject.with_field("X", x);
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for spec in &self.fields {
            if !seen.insert(spec.name.as_str()) {
                return Err(invalid(format!("duplicate field `{}`", spec.name)));
            }
            let comps = self.parse_four(&format!("field `{}`", spec.name), &spec.components, &chart)?;
            subject = subject.with_field(spec.name.clone(), VectorField::new(comps));
        }
        if let Some(fluid) = &self.fluid {
            subject = subject.with_fluid(FluidState {
                epsilon: self.parse_expr("fluid epsilon", &fluid.epsilon, &chart)?,
                pressure: self.parse_expr("fluid pressure", &fluid.pressure, &chart)?,
                velocity: VectorField::new(self.parse_four("fluid velocity", &fluid.velocity, &chart)?),
            });
        }
        Ok(Loaded { subject, settings })
    }

    fn parse_four(&self, what: &str, srcs: &[String; 4], chart: &Chart) -> Result<[Expr; 4], ManifestError> {
        let mut out = Vec::with_capacity(4);
        for (i, src) in srcs.iter().enumerate() {
            out.push(self.parse_expr(&format!("{what}[{i}]"), src, chart)?);
        }
        Ok(out.try_into().expect("four components"))
    }

    fn load_family(
        &self,
        name: &str,
        settings: &Settings,
    ) -> Result<(Family, ChartMetric, Option<VectorField>), ManifestError> {
        let spacetime = |st: catalog::Spacetime| (Family::Catalog(st.family), st.metric, st.parallel_field);
        match name {
            "minkowski_null" => {
                self.check_inputs(&[])?;
                self.check_chart(&catalog::standard_chart())?;
                let b = self.sample_box(catalog::default_box())?;
                Ok((
                    Family::Catalog("minkowski_null"),
                    catalog::minkowski_null_chart().with_domain(b),
                    Some(VectorField::coordinate(0)),
                ))
            }
            "pp_wave" => {
                self.check_inputs(&["f", "phi", "h"])?;
                let chart = catalog::standard_chart();
                self.check_chart(&chart)?;
                let params = PpWaveParams::new(
                    self.input("f", &chart, Some("0"))?,
                    self.input("phi", &chart, Some("0"))?,
                    self.input("h", &chart, Some("0"))?,
                );
                let b = self.sample_box(catalog::default_box())?;
                Ok(spacetime(catalog::pp_wave_metric(&params, b, settings.tol)?))
            }
            "peres" => {
                self.check_inputs(&["f"])?;
                let chart = catalog::peres_chart();
                self.check_chart(&chart)?;
                let f = self.input("f", &chart, None)?;
                let b = self.sample_box(catalog::default_box())?;
                Ok(spacetime(catalog::peres_metric(&f, b)?))
            }
            "plane_wave" => {
                self.check_inputs(&["g22", "g23", "g33"])?;
                let chart = catalog::plane_wave_chart();
                self.check_chart(&chart)?;
                let g22 = self.input("g22", &chart, None)?;
                let g23 = self.input("g23", &chart, Some("0"))?;
                let g33 = self.input("g33", &chart, None)?;
                let b = self.sample_box(catalog::default_box())?;
                Ok(spacetime(catalog::plane_wave_metric(&g22, &g23, &g33, b)?))
            }
            "robinson_trautman" => {
                self.check_inputs(&["p", "m"])?;
                let chart = catalog::robinson_trautman_chart();
                self.check_chart(&chart)?;
                let params = RtParams {
                    p: self.input("p", &chart, None)?,
                    m: self.input("m", &chart, None)?,
                };
                let b = self.sample_box(catalog::robinson_trautman_box())?;
                let rt = catalog::robinson_trautman_metric(&params, b)?;
                let metric = rt.metric.clone();
                Ok((Family::RobinsonTrautman(Box::new(rt)), metric, None))
            }
            other => {
                let known: Vec<&str> = catalog::families().iter().map(|f| f.name).collect();
                Err(invalid(format!("unknown family `{other}`; known: {}", known.join(", "))))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_metric_round_trip() {
        let text = r#"{
            "version": 1,
            "metric": [["0"], ["1", "x2^2"], ["0", "0", "-1"], ["0", "0", "0", "-1"]],
            "fields": [{"name": "X", "components": ["1", "0", "0", "0"]}],
            "seed": 7
        }"#;
        let m = Manifest::from_json(text).unwrap();
        let loaded = m.load().unwrap();
        assert_eq!(loaded.settings.seed, 7);
        assert_eq!(loaded.subject.fields.len(), 1);
        let again = Manifest::from_json(&serde_json::to_string(&m).unwrap()).unwrap();
        assert!(again.load().is_ok());
    }

    #[test]
    fn rejects_bad_manifests() {
        let cases = [
            r#"{"version": 2, "family": "minkowski_null"}"#,
            r#"{"version": 1}"#,
            r#"{"version": 1, "family": "nope"}"#,
            r#"{"version": 1, "family": "peres", "inputs": {"g": "y"}}"#,
            r#"{"version": 1, "family": "peres", "inputs": {"f": "y +"}}"#,
            r#"{"version": 1, "family": "pp_wave", "inputs": {"h": "x2^2"}}"#,
            r#"{"version": 1, "family": "minkowski_null", "colour": 3}"#,
            r#"{"version": 1, "family": "minkowski_null", "box": {"lo": [1,0,0,0], "hi": [0,1,1,1]}}"#,
        ];
        for text in cases {
            let r = Manifest::from_json(text).and_then(|m| m.load().map(|_| ()));
            assert!(r.is_err(), "{text}");
        }
    }

    #[test]
    fn rt_keeps_its_excluded_region() {
        let text = r#"{"version": 1, "family": "robinson_trautman", "inputs": {"p": "1", "m": "m0"},
            "params": {"m0": 0.5}, "box": {"lo": [0.5, -1, -1, -1], "hi": [2, 1, 1, 1]}}"#;
        let loaded = Manifest::from_json(text).unwrap().load().unwrap();
        assert_eq!(loaded.subject.metric.domain.domain.len(), 1);
        assert_eq!(loaded.subject.metric.domain.params["m0"], 0.5);
    }
}
