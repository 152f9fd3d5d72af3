//! Parallel transport of vectors along prescribed curves and the holonomy of
//! closed loops.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use thiserror::Error;

use crate::expr::{parse, Chart, Differentiator, Expr, ParseError, SampleBox, Tape, Var};
use crate::geometry::Geometry;

/// Name of the curve parameter.
pub const PARAM: &str = "s";
pub const MIN_STEPS: usize = 16;
/// Allowed mismatch between the start and end of a closed curve.
pub const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("curve component {index}: {source}")]
    Parse { index: usize, source: ParseError },
    #[error("curve component {0} depends on a coordinate; curves are functions of `s` only")]
    CoordinateDependence(usize),
    #[error("curve evaluation failed at s = {s}: {msg}")]
    Curve { s: f64, msg: String },
    #[error("closed curve does not return to its start (gap {0:e})")]
    NotClosed(f64),
    #[error("curve is not closed")]
    Open,
    #[error("need at least {MIN_STEPS} steps, got {0}")]
    TooFewSteps(usize),
    #[error("curve has no segments")]
    Empty,
    #[error("curve leaves the domain at s = {s} (segment {segment}), point {point:?}")]
    LeftDomain { segment: usize, s: f64, point: [f64; 4] },
    #[error("non-finite connection at s = {s} (segment {segment}), point {point:?}: {msg}")]
    NonFinite {
        segment: usize,
        s: f64,
        point: [f64; 4],
        msg: String,
    },
}

/// A piecewise smooth curve: segments `x^i(s)`, `s ∈ [0, 1]`, traversed in
/// order. Consecutive segments should join; that is not enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSpec {
    pub segments: Vec<[Expr; 4]>,
    pub closed: bool,
}

fn eval_segment(seg: &[Expr; 4], s: f64) -> Result<[f64; 4], TransportError> {
    let tape = Tape::compile(seg);
    let mut params = BTreeMap::new();
    params.insert(PARAM.to_string(), s);
    let bound = tape.bind_params(&params).map_err(|e| TransportError::Curve { s, msg: e.to_string() })?;
    let mut scratch = Vec::new();
    tape.eval_into(&[0.0; 4], &bound, &mut scratch)
        .map_err(|e| TransportError::Curve { s, msg: e.to_string() })?;
    Ok(std::array::from_fn(|i| tape.root(&scratch, i)))
}

impl CurveSpec {
    pub fn new(segments: Vec<[Expr; 4]>, closed: bool) -> Result<Self, TransportError> {
        if segments.is_empty() {
            return Err(TransportError::Empty);
        }
        for seg in &segments {
            for (i, c) in seg.iter().enumerate() {
                if c.coord_mask().iter().any(|&b| b) {
                    return Err(TransportError::CoordinateDependence(i));
                }
            }
        }
        let curve = CurveSpec {
            segments: segments.into_iter().map(|s| s.map(|c| c.simplify())).collect(),
            closed,
        };
        if closed {
            let gap = curve.closure_gap()?;
            if gap > CLOSURE_TOL {
                return Err(TransportError::NotClosed(gap));
            }
        }
        Ok(curve)
    }

    /// One smooth segment from four expressions in `s`. Coordinate names of
    /// `chart` are rejected.
    pub fn parse<S: AsRef<str>>(sources: &[S; 4], chart: &Chart, closed: bool) -> Result<Self, TransportError> {
        let mut seg = Vec::with_capacity(4);
        for (index, src) in sources.iter().enumerate() {
            let e = parse(src.as_ref(), chart, &[PARAM]).map_err(|source| TransportError::Parse { index, source })?;
            seg.push(e);
        }
        CurveSpec::new(vec![seg.try_into().expect("four components")], closed)
    }

    /// Largest coordinate difference between the start and the end.
    pub fn closure_gap(&self) -> Result<f64, TransportError> {
        let start = eval_segment(&self.segments[0], 0.0)?;
        let end = eval_segment(self.segments.last().expect("nonempty"), 1.0)?;
        Ok(start.iter().zip(&end).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Counter-clockwise coordinate rectangle in the `(a, b)` plane with
    /// corner `corner` and sides `da`, `db`.
    pub fn rectangle(corner: [f64; 4], a: usize, b: usize, da: f64, db: f64) -> Self {
        let s = Expr::param(PARAM);
        let mut corners = [corner; 4];
        corners[1][a] += da;
        corners[2][a] += da;
        corners[2][b] += db;
        corners[3][b] += db;
        let segments = (0..4)
            .map(|n| {
                let (p, q) = (corners[n], corners[(n + 1) % 4]);
                std::array::from_fn(|i| {
                    if p[i] == q[i] {
                        Expr::float(p[i])
                    } else {
                        Expr::float(p[i]) + Expr::float(q[i] - p[i]) * &s
                    }
                })
            })
            .collect();
        CurveSpec { segments, closed: true }
    }

    /// Counter-clockwise ellipse in the `(a, b)` plane with semi-axes `ra`,
    /// `rb` around `center`.
    pub fn ellipse(center: [f64; 4], a: usize, b: usize, ra: f64, rb: f64) -> Self {
        let angle = Expr::float(TAU) * Expr::param(PARAM);
        let seg = std::array::from_fn(|i| {
            if i == a {
                Expr::float(center[i]) + Expr::float(ra) * angle.clone().cos()
            } else if i == b {
                Expr::float(center[i]) + Expr::float(rb) * angle.clone().sin()
            } else {
                Expr::float(center[i])
            }
        });
        CurveSpec {
            segments: vec![seg],
            closed: true,
        }
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let back = Expr::one() - Expr::param(PARAM);
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|seg| seg.clone().map(|c| c.substitute_param(PARAM, &back)))
            .collect();
        CurveSpec {
            segments,
            closed: self.closed,
        }
    }

    /// Coordinate area bivector `Σ^kl = ∮ x^k dx^l`, by the trapezoid rule
    /// on `samples` points per segment.
    pub fn area_bivector(&self, samples: usize) -> Result<[[f64; 4]; 4], TransportError> {
        let mut out = [[0.0; 4]; 4];
        for seg in &self.segments {
            let mut prev = eval_segment(seg, 0.0)?;
            for n in 1..=samples {
                let x = eval_segment(seg, n as f64 / samples as f64)?;
                for k in 0..4 {
                    for l in 0..4 {
                        out[k][l] += 0.5 * (x[k] + prev[k]) * (x[l] - prev[l]);
                    }
                }
                prev = x;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportResult {
    pub initial: [f64; 4],
    pub final_vector: [f64; 4],
    /// Total RK4 steps of the reported solution, over all segments.
    pub steps: usize,
    /// Max-norm difference to the half-step solution, scaled by 1/15.
    pub error_estimate: f64,
    /// `g(v, v)` at the start and at the end of the curve.
    pub norm_initial: f64,
    pub norm_final: f64,
}

impl TransportResult {
    pub fn deviation(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.final_vector[i] - self.initial[i])
    }
}

/// Parallel transport `dv^i/ds = -Γ^i_jk(x(s)) ẋ^j v^k` with classic RK4.
pub struct Transporter<'g> {
    geo: &'g Geometry,
    gamma: Tape,
    gamma_params: Vec<f64>,
    metric: Tape,
    domain: SampleBox,
}

struct CompiledSegment {
    tape: Tape,
    s_slot: Option<usize>,
    params: Vec<f64>,
}

impl CompiledSegment {
    fn new(seg: &[Expr; 4]) -> Self {
        let mut d = Differentiator::new(Var::Param(PARAM.into()));
        let mut roots: Vec<Expr> = seg.to_vec();
        roots.extend(seg.iter().map(|c| d.diff(c)));
        let tape = Tape::compile(&roots);
        let s_slot = tape.param_names().iter().position(|n| &**n == PARAM);
        let params = vec![0.0; tape.param_names().len()];
        CompiledSegment { tape, s_slot, params }
    }

    fn at(&mut self, s: f64, scratch: &mut Vec<f64>) -> Result<([f64; 4], [f64; 4]), TransportError> {
        if let Some(slot) = self.s_slot {
            self.params[slot] = s;
        }
        self.tape
            .eval_into(&[0.0; 4], &self.params, scratch)
            .map_err(|e| TransportError::Curve { s, msg: e.to_string() })?;
        let x = std::array::from_fn(|i| self.tape.root(scratch, i));
        let v = std::array::from_fn(|i| self.tape.root(scratch, i + 4));
        Ok((x, v))
    }
}

impl<'g> Transporter<'g> {
    pub fn new(geo: &'g Geometry) -> Result<Self, TransportError> {
        let gamma = geo.christoffel();
        let roots: Vec<Expr> = (0..64).map(|n| gamma[n / 16][(n / 4) % 4][n % 4].clone()).collect();
        let gamma_tape = Tape::compile(&roots);
        let domain = geo.metric().domain.clone();
        let bind = |t: &Tape| {
            t.bind_params(&domain.params).map_err(|e| TransportError::Curve {
                s: 0.0,
                msg: e.to_string(),
            })
        };
        let gamma_params = bind(&gamma_tape)?;
        let metric_roots: Vec<Expr> = (0..16).map(|n| geo.g(n / 4, n % 4).clone()).collect();
        let metric = Tape::compile(&metric_roots);
        bind(&metric)?;
        Ok(Transporter {
            geo,
            gamma: gamma_tape,
            gamma_params,
            metric,
            domain,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        self.geo
    }

    /// `g(v, v)` at `x`.
    pub fn norm_at(&self, x: &[f64; 4], v: &[f64; 4]) -> Result<f64, String> {
        let params = self.metric.bind_params(&self.domain.params).map_err(|e| e.to_string())?;
        let mut scratch = Vec::new();
        self.metric.eval_into(x, &params, &mut scratch).map_err(|e| e.to_string())?;
        let mut sum = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                sum += self.metric.root(&scratch, i * 4 + j) * v[i] * v[j];
            }
        }
        Ok(sum)
    }

    fn inside(&self, x: &[f64; 4]) -> bool {
        let slack = 1e-12;
        self.domain.in_domain(x)
            && (0..4).all(|i| x[i] >= self.domain.lo[i] - slack && x[i] <= self.domain.hi[i] + slack)
    }

    fn rhs(
        &self,
        seg: &mut CompiledSegment,
        segment: usize,
        s: f64,
        v: &[f64; 4],
        scratch: &mut Vec<f64>,
    ) -> Result<[f64; 4], TransportError> {
        let (x, xdot) = seg.at(s, scratch)?;
        if !self.inside(&x) {
            return Err(TransportError::LeftDomain { segment, s, point: x });
        }
        let non_finite = |msg: String| TransportError::NonFinite { segment, s, point: x, msg };
        self.gamma
            .eval_into(&x, &self.gamma_params, scratch)
            .map_err(|e| non_finite(e.to_string()))?;
        let mut out = [0.0; 4];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, xd) in xdot.iter().enumerate() {
                if *xd == 0.0 {
                    continue;
                }
                for (k, vk) in v.iter().enumerate() {
                    acc += self.gamma.root(scratch, i * 16 + j * 4 + k) * xd * vk;
                }
            }
            if !acc.is_finite() {
                return Err(non_finite(format!("dv^{i}/ds = {acc}")));
            }
            *slot = -acc;
        }
        Ok(out)
    }

    fn integrate(&self, curve: &CurveSpec, v0: [f64; 4], steps: usize) -> Result<[f64; 4], TransportError> {
        let mut v = v0;
        let mut scratch = Vec::new();
        let h = 1.0 / steps as f64;
        for (n, seg) in curve.segments.iter().enumerate() {
            let mut compiled = CompiledSegment::new(seg);
            for step in 0..steps {
                let s = step as f64 * h;
                let k1 = self.rhs(&mut compiled, n, s, &v, &mut scratch)?;
                let k2 = self.rhs(&mut compiled, n, s + 0.5 * h, &axpy(&v, 0.5 * h, &k1), &mut scratch)?;
                let k3 = self.rhs(&mut compiled, n, s + 0.5 * h, &axpy(&v, 0.5 * h, &k2), &mut scratch)?;
                let k4 = self.rhs(&mut compiled, n, s + h, &axpy(&v, h, &k3), &mut scratch)?;
                for i in 0..4 {
                    v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        Ok(v)
    }

    /// Transports `v0` along `curve` with `steps` RK4 steps per segment. The
    /// error estimate compares against a run with half as many steps.
    pub fn transport(&self, curve: &CurveSpec, v0: [f64; 4], steps: usize) -> Result<TransportResult, TransportError> {
        if steps < MIN_STEPS {
            return Err(TransportError::TooFewSteps(steps));
        }
        let fine = self.integrate(curve, v0, steps)?;
        let coarse = self.integrate(curve, v0, steps / 2)?;
        let error_estimate = fine.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / 15.0;
        let mut scratch = Vec::new();
        let start = CompiledSegment::new(&curve.segments[0]).at(0.0, &mut scratch)?.0;
        let end = CompiledSegment::new(curve.segments.last().expect("nonempty"))
            .at(1.0, &mut scratch)?
            .0;
        let norm = |x: &[f64; 4], v: &[f64; 4]| {
            self.norm_at(x, v)
                .map_err(|msg| TransportError::Curve { s: 0.0, msg })
        };
        Ok(TransportResult {
            initial: v0,
            final_vector: fine,
            steps: steps * curve.segments.len(),
            error_estimate,
            norm_initial: norm(&start, &v0)?,
            norm_final: norm(&end, &fine)?,
        })
    }

    /// Linearized holonomy minus identity: column `c` is the change of
    /// `basis[c]` after transport around the closed `curve`.
    pub fn holonomy_deviation(
        &self,
        curve: &CurveSpec,
        basis: &[[f64; 4]; 4],
        steps: usize,
    ) -> Result<[[f64; 4]; 4], TransportError> {
        if !curve.closed {
            return Err(TransportError::Open);
        }
        let mut out = [[0.0; 4]; 4];
        for (c, v) in basis.iter().enumerate() {
            let r = self.transport(curve, *v, steps)?;
            for i in 0..4 {
                out[i][c] = r.final_vector[i] - v[i];
            }
        }
        Ok(out)
    }
}

fn axpy(v: &[f64; 4], a: f64, k: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| v[i] + a * k[i])
}

pub fn transport(geo: &Geometry, curve: &CurveSpec, v0: [f64; 4], steps: usize) -> Result<TransportResult, TransportError> {
    Transporter::new(geo)?.transport(curve, v0, steps)
}

pub fn holonomy_deviation(
    geo: &Geometry,
    curve: &CurveSpec,
    basis: &[[f64; 4]; 4],
    steps: usize,
) -> Result<[[f64; 4]; 4], TransportError> {
    Transporter::new(geo)?.holonomy_deviation(curve, basis, steps)
}

/// Leading-order holonomy of a small loop: `-R^i_jkl v^j Σ^kl / 2` with the
/// mixed curvature evaluated at `x`.
pub fn predicted_deviation(
    geo: &Geometry,
    x: [f64; 4],
    v: &[f64; 4],
    area: &[[f64; 4]; 4],
) -> Result<[f64; 4], String> {
    let r = geo.riemann_mixed();
    let pt = geo.metric().domain.point(x);
    let mut out = [0.0; 4];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    if r[i][j][k][l].is_zero() || area[k][l] == 0.0 {
                        continue;
                    }
                    acc += r[i][j][k][l].eval(&pt).map_err(|e| e.to_string())? * v[j] * area[k][l];
                }
            }
        }
        *slot = -0.5 * acc;
    }
    Ok(out)
}
