//! Seeded sampling boxes and the probabilistic zero-equivalence test.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EvalPoint, Expr, Tape};
use crate::report::CheckReport;

/// Restricts sampling to one side of a coordinate hyperplane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub coord: usize,
    pub bound: f64,
    /// Keep points with `x[coord] >= bound` (true) or `<= bound` (false).
    pub above: bool,
}

impl HalfSpace {
    pub fn at_least(coord: usize, bound: f64) -> Self {
        HalfSpace {
            coord,
            bound,
            above: true,
        }
    }

    pub fn at_most(coord: usize, bound: f64) -> Self {
        HalfSpace {
            coord,
            bound,
            above: false,
        }
    }

    pub fn contains(&self, coords: &[f64; 4]) -> bool {
        let x = coords[self.coord];
        if self.above {
            x >= self.bound
        } else {
            x <= self.bound
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SampleBoxError {
    #[error("empty interval for coordinate {coord}: [{lo}, {hi}]")]
    EmptyInterval { coord: usize, lo: f64, hi: f64 },
    #[error("point count must be at least 1")]
    NoPoints,
    #[error("could not draw a point inside the domain after {0} attempts")]
    Rejection(usize),
}

/// Axis-aligned box of sample points with fixed parameter values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
    /// Points outside any of these half-spaces are never drawn.
    pub domain: Vec<HalfSpace>,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub points: usize,
}

pub const DEFAULT_POINTS: usize = 200;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-9;

impl SampleBox {
    pub fn new(lo: [f64; 4], hi: [f64; 4]) -> Result<Self, SampleBoxError> {
        for coord in 0..4 {
            if lo[coord].partial_cmp(&hi[coord]) != Some(std::cmp::Ordering::Less) {
                return Err(SampleBoxError::EmptyInterval {
                    coord,
                    lo: lo[coord],
                    hi: hi[coord],
                });
            }
        }
        Ok(SampleBox {
            lo,
            hi,
            domain: Vec::new(),
            params: BTreeMap::new(),
            seed: DEFAULT_SEED,
            points: DEFAULT_POINTS,
        })
    }

    /// The cube `[lo, hi]^4`.
    pub fn cube(lo: f64, hi: f64) -> Self {
        SampleBox::new([lo; 4], [hi; 4]).expect("lo < hi")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_domain(mut self, half: HalfSpace) -> Self {
        self.domain.push(half);
        self
    }

    pub fn validate(&self) -> Result<(), SampleBoxError> {
        if self.points == 0 {
            return Err(SampleBoxError::NoPoints);
        }
        for coord in 0..4 {
            if self.lo[coord].partial_cmp(&self.hi[coord]) != Some(std::cmp::Ordering::Less) {
                return Err(SampleBoxError::EmptyInterval {
                    coord,
                    lo: self.lo[coord],
                    hi: self.hi[coord],
                });
            }
        }
        Ok(())
    }

    pub fn in_domain(&self, coords: &[f64; 4]) -> bool {
        self.domain.iter().all(|h| h.contains(coords))
    }

    /// Draws `self.points` points from the seeded stream.
    pub fn sample(&self) -> Result<Vec<[f64; 4]>, SampleBoxError> {
        self.validate()?;
        const MAX_ATTEMPTS: usize = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.points);
        while out.len() < self.points {
            let mut attempts = 0;
            loop {
                let mut c = [0.0; 4];
                for (i, x) in c.iter_mut().enumerate() {
                    *x = rng.gen_range(self.lo[i]..=self.hi[i]);
                }
                if self.in_domain(&c) {
                    out.push(c);
                    break;
                }
                attempts += 1;
                if attempts >= MAX_ATTEMPTS {
                    return Err(SampleBoxError::Rejection(MAX_ATTEMPTS));
                }
            }
        }
        Ok(out)
    }

    pub fn point(&self, coords: [f64; 4]) -> EvalPoint {
        EvalPoint::new(coords, self.params.clone())
    }
}

/// How a residual is scaled before comparison with the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// `|e| / (1 + max |top-level additive term of e|)`.
    Relative,
    /// `|e|`.
    Absolute,
}

/// Zero test over a labelled batch of expressions, sharing one tape and
/// one set of sample points.
#[derive(Clone, Debug)]
pub struct ZeroTest {
    name: String,
    items: Vec<(String, Expr)>,
    normalization: Normalization,
}

impl ZeroTest {
    pub fn new(name: impl Into<String>) -> Self {
        ZeroTest {
            name: name.into(),
            items: Vec::new(),
            normalization: Normalization::Relative,
        }
    }

    pub fn absolute(mut self) -> Self {
        self.normalization = Normalization::Absolute;
        self
    }

    pub fn push(&mut self, label: impl Into<String>, e: Expr) -> &mut Self {
        self.items.push((label.into(), e));
        self
    }

    pub fn with(mut self, label: impl Into<String>, e: Expr) -> Self {
        self.push(label, e);
        self
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn run(&self, sample_box: &SampleBox, tol: f64) -> CheckReport {
        let points = match sample_box.sample() {
            Ok(p) => p,
            Err(e) => {
                return CheckReport::error(
                    &self.name,
                    tol,
                    sample_box.points,
                    sample_box.seed,
                    format!("sampling failed: {e}"),
                )
            }
        };
        self.run_at(&points, sample_box, tol)
    }

    /// Runs at explicit points (parameters still come from `sample_box`).
    pub fn run_at(&self, points: &[[f64; 4]], sample_box: &SampleBox, tol: f64) -> CheckReport {
        let live: Vec<&(String, Expr)> = self.items.iter().filter(|(_, e)| !e.is_zero()).collect();
        let structurally_zero = self.items.len() - live.len();
        if live.is_empty() {
            return CheckReport::measured(
                &self.name,
                0.0,
                None,
                tol,
                points.len(),
                sample_box.seed,
                format!("{} component(s), all structurally zero", self.items.len()),
            );
        }

        // Roots: each expression followed by its additive terms.
        let mut roots = Vec::new();
        let mut layout = Vec::with_capacity(live.len());
        for (_, e) in &live {
            let terms = match self.normalization {
                Normalization::Relative => e.additive_terms(),
                Normalization::Absolute => Vec::new(),
            };
            layout.push((roots.len(), terms.len()));
            roots.push(e.clone());
            roots.extend(terms);
        }
        let tape = Tape::compile(&roots);
        let params = match tape.bind_params(&sample_box.params) {
            Ok(p) => p,
            Err(e) => {
                return CheckReport::error(&self.name, tol, points.len(), sample_box.seed, e.to_string())
            }
        };

        let mut scratch = Vec::new();
        let mut worst = -1.0f64;
        let mut worst_point = None;
        let mut worst_label: &str = "";
        let mut worst_abs = 0.0f64;
        for pt in points {
            if let Err(err) = tape.eval_into(pt, &params, &mut scratch) {
                return CheckReport::measured(
                    &self.name,
                    f64::INFINITY,
                    Some(*pt),
                    tol,
                    points.len(),
                    sample_box.seed,
                    format!("domain error: {err}"),
                );
            }
            for ((label, _), &(start, nterms)) in live.iter().copied().zip(&layout) {
                let value = tape.root(&scratch, start).abs();
                let scale = (1..=nterms)
                    .map(|k| tape.root(&scratch, start + k).abs())
                    .fold(0.0f64, f64::max);
                let residual = match self.normalization {
                    Normalization::Relative => value / (1.0 + scale),
                    Normalization::Absolute => value,
                };
                worst_abs = worst_abs.max(value);
                if residual > worst {
                    worst = residual;
                    worst_point = Some(*pt);
                    worst_label = label.as_str();
                }
            }
        }
        let worst_label = worst_label.to_string();
        CheckReport::measured(
            &self.name,
            worst.max(0.0),
            worst_point,
            tol,
            points.len(),
            sample_box.seed,
            format!(
                "{} component(s) ({} structurally zero); worst `{}`; max |value| {:.3e}",
                self.items.len(),
                structurally_zero,
                worst_label,
                worst_abs
            ),
        )
    }
}

/// Probabilistic zero test of a single expression: pass iff at every
/// sampled point `|e| <= tol * (1 + max |top-level term of e|)`.
pub fn is_probably_zero(e: &Expr, sample_box: &SampleBox, tol: f64) -> CheckReport {
    ZeroTest::new("is_probably_zero").with("e", e.clone()).run(sample_box, tol)
}

#[cfg(test)]
mod tests {
    use super::super::{parse, Chart};
    use super::*;
    use crate::report::Status;

    fn p(src: &str) -> Expr {
        parse(src, &Chart::standard(), &["c"]).unwrap().simplify()
    }

    #[test]
    fn exact_identity_passes_with_zero_residual() {
        let e = p("x2*x3").diff(2) - p("x3");
        let r = is_probably_zero(&e, &SampleBox::cube(-1.0, 1.0), 1e-9);
        assert!(r.passed());
        assert_eq!(r.max_residual, 0.0);
    }

    #[test]
    fn nonzero_function_fails() {
        let r = is_probably_zero(&p("x2"), &SampleBox::cube(1.0, 2.0), 1e-9);
        assert_eq!(r.status, Status::Fail);
        // relative residual |x2| / (1 + |x2|) >= 1/2 on [1, 2]
        assert!(r.max_residual >= 0.5);
        let abs = ZeroTest::new("abs").absolute().with("x2", p("x2")).run(&SampleBox::cube(1.0, 2.0), 1e-9);
        assert!(abs.max_residual >= 1.0);
    }

    #[test]
    fn cancellation_is_judged_relative_to_terms() {
        // sin^2 + cos^2 - 1 is not simplified symbolically; it vanishes numerically.
        let e = p("sin(x1)^2 + cos(x1)^2 - 1");
        assert!(!e.is_zero());
        assert!(is_probably_zero(&e, &SampleBox::cube(-3.0, 3.0), 1e-12).passed());
    }

    #[test]
    fn domain_errors_become_failures() {
        let r = is_probably_zero(&p("log(x1)"), &SampleBox::cube(-1.0, 1.0), 1e-9);
        assert_eq!(r.status, Status::Fail);
        assert!(r.diagnostics.contains("domain error"));
    }

    #[test]
    fn unbound_parameter_is_an_error() {
        let r = is_probably_zero(&p("c*x1"), &SampleBox::cube(-1.0, 1.0), 1e-9);
        assert_eq!(r.status, Status::Error);
        let r = is_probably_zero(&(p("c*x1") - p("x1*c")), &SampleBox::cube(-1.0, 1.0).with_param("c", 2.0), 1e-9);
        assert!(r.passed());
    }

    #[test]
    fn sampling_is_seeded_and_respects_domain() {
        let b = SampleBox::cube(-1.0, 1.0).with_domain(HalfSpace::at_least(0, 0.5)).with_points(50);
        let a = b.sample().unwrap();
        assert_eq!(a, b.sample().unwrap());
        assert!(a.iter().all(|c| c[0] >= 0.5));
        assert_ne!(a, b.clone().with_seed(7).sample().unwrap());
        assert!(SampleBox::new([0.0; 4], [1.0, 1.0, 0.0, 1.0]).is_err());
        assert!(SampleBox::cube(0.0, 1.0).with_points(0).sample().is_err());
    }
}
