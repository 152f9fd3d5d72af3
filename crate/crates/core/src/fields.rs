//! Vector fields: parallelism, gradient property, causal character and the
//! curvature integrability conditions.

use std::array;
use std::fmt;

use crate::expr::{parse, Chart, Expr, ParseError, SampleBox, Tape, ZeroTest};
use crate::geometry::{Geometry, Mat4, Rank3};
use crate::report::{CheckReport, Status};

/// Contravariant components `X^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub components: [Expr; 4],
}

impl VectorField {
    pub fn new(components: [Expr; 4]) -> Self {
        VectorField {
            components: components.map(|c| c.simplify()),
        }
    }

    /// The coordinate field `∂/∂x^i`.
    pub fn coordinate(index: usize) -> Self {
        VectorField::new(array::from_fn(|j| if j == index { Expr::one() } else { Expr::zero() }))
    }

    pub fn constant(values: [f64; 4]) -> Self {
        VectorField::new(values.map(Expr::float))
    }

    pub fn parse<S: AsRef<str>>(sources: &[S; 4], chart: &Chart, params: &[S]) -> Result<Self, ParseError> {
        let mut comps = Vec::with_capacity(4);
        for s in sources {
            comps.push(parse(s.as_ref(), chart, params)?);
        }
        Ok(VectorField::new(comps.try_into().expect("four components")))
    }

    /// Structurally the zero field.
    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.components;
        write!(f, "({}, {}, {}, {})", c[0], c[1], c[2], c[3])
    }
}

/// `X^i_;j = ∂_j X^i + Γ^i_jk X^k`, indexed `[i][j]`.
pub fn parallel_residual(geo: &Geometry, x: &VectorField) -> Mat4 {
    let gamma = geo.christoffel();
    let mut d: [_; 4] = array::from_fn(crate::expr::Differentiator::coord);
    array::from_fn(|i| {
        array::from_fn(|j| {
            let mut terms = vec![d[j].diff(&x.components[i])];
            for k in 0..4 {
                if !x.components[k].is_zero() {
                    terms.push(&gamma[i][j][k] * &x.components[k]);
                }
            }
            Expr::sum(terms)
        })
    })
}

/// `∂_j X_i - ∂_i X_j` for the lowered field, indexed `[i][j]`.
pub fn gradient_residual(geo: &Geometry, x: &VectorField) -> Mat4 {
    let lowered = geo.lower(&x.components);
    let mut d: [_; 4] = array::from_fn(crate::expr::Differentiator::coord);
    let mut out: Mat4 = crate::geometry::zeros4();
    for i in 0..4 {
        for j in i + 1..4 {
            let v = d[j].diff(&lowered[i]) - d[i].diff(&lowered[j]);
            out[j][i] = -&v;
            out[i][j] = v;
        }
    }
    out
}

/// `(R_ijkl X^l, R_jl X^l)`, indexed `[i][j][k]` and `[j]`.
pub fn integrability_residuals(geo: &Geometry, x: &VectorField) -> (Rank3, [Expr; 4]) {
    let r = geo.riemann();
    let ricci = geo.ricci();
    let contract = |row: &[Expr; 4]| {
        Expr::sum(
            (0..4)
                .filter(|&l| !x.components[l].is_zero())
                .map(|l| &row[l] * &x.components[l])
                .collect(),
        )
    };
    let riemann = array::from_fn(|i| array::from_fn(|j| array::from_fn(|k| contract(&r[i][j][k]))));
    let ricci = array::from_fn(|j| contract(&ricci[j]));
    (riemann, ricci)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalCharacter {
    TimeLike,
    SpaceLike,
    LightLike,
    /// `g(X, X)` takes both signs on the box.
    Indefinite,
    /// `X` vanishes at a sampled point, so it has no causal character there.
    Vanishing,
}

impl fmt::Display for CausalCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CausalCharacter::TimeLike => "time-like",
            CausalCharacter::SpaceLike => "space-like",
            CausalCharacter::LightLike => "light-like",
            CausalCharacter::Indefinite => "indefinite",
            CausalCharacter::Vanishing => "vanishing",
        })
    }
}

/// Classifies the sign of `g(X, X)` over the box.
///
/// Light-like needs the zero test of `g(X, X)` to pass and `X` to be nonzero
/// at every sampled point (checked explicitly, not assumed). The report has
/// the zero-test residual; for other characters it records sign witnesses.
pub fn causal_character(
    geo: &Geometry,
    x: &VectorField,
    sample_box: &SampleBox,
    tol: f64,
) -> (CausalCharacter, CheckReport) {
    let norm = geo.norm_squared(&x.components);
    let report = ZeroTest::new("causal_character")
        .with("g(X,X)", norm.clone())
        .run(sample_box, tol);
    if report.status == Status::Error {
        return (CausalCharacter::Indefinite, report);
    }
    let points = match sample_box.sample() {
        Ok(p) => p,
        Err(e) => {
            let r = CheckReport::error("causal_character", tol, sample_box.points, sample_box.seed, e.to_string());
            return (CausalCharacter::Indefinite, r);
        }
    };
    let mut roots = vec![norm];
    roots.extend(x.components.iter().cloned());
    let tape = Tape::compile(&roots);
    let params = match tape.bind_params(&sample_box.params) {
        Ok(p) => p,
        Err(e) => {
            let r = CheckReport::error("causal_character", tol, points.len(), sample_box.seed, e.to_string());
            return (CausalCharacter::Indefinite, r);
        }
    };
    let mut scratch = Vec::new();
    let (mut pos, mut neg) = (None, None);
    let mut vanishing = None;
    for pt in &points {
        if let Err(e) = tape.eval_into(pt, &params, &mut scratch) {
            let r = CheckReport::measured(
                "causal_character",
                f64::INFINITY,
                Some(*pt),
                tol,
                points.len(),
                sample_box.seed,
                format!("domain error: {e}"),
            );
            return (CausalCharacter::Indefinite, r);
        }
        let n = tape.root(&scratch, 0);
        let size = (1..5).map(|i| tape.root(&scratch, i).abs()).fold(0.0, f64::max);
        if size <= tol && vanishing.is_none() {
            vanishing = Some(*pt);
        }
        if n > tol * (1.0 + size * size) && pos.is_none() {
            pos = Some(*pt);
        }
        if n < -tol * (1.0 + size * size) && neg.is_none() {
            neg = Some(*pt);
        }
    }
    let fmt_pt = |p: Option<[f64; 4]>| p.map(|p| format!("{p:?}")).unwrap_or_else(|| "none".into());
    let witnesses = format!("positive witness {}; negative witness {}", fmt_pt(pos), fmt_pt(neg));
    let character = if let Some(p) = vanishing {
        let mut r = report;
        r.diagnostics = format!("X vanishes at {p:?}; {witnesses}");
        return (CausalCharacter::Vanishing, r);
    } else if report.passed() {
        CausalCharacter::LightLike
    } else {
        match (pos, neg) {
            (Some(_), Some(_)) => CausalCharacter::Indefinite,
            (Some(_), None) => CausalCharacter::TimeLike,
            (None, Some(_)) => CausalCharacter::SpaceLike,
            // below tolerance but not relatively zero: treat as mixed
            (None, None) => CausalCharacter::Indefinite,
        }
    };
    let mut r = report;
    r.diagnostics = format!("{character}; {witnesses}; {}", r.diagnostics);
    (character, r)
}
