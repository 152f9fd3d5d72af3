use std::array;

use thiserror::Error;

use crate::expr::{parse, Chart, Expr, ParseError, SampleBox, ZeroTest};
use crate::report::CheckReport;

pub type Mat4 = [[Expr; 4]; 4];
pub type Rank3 = [[[Expr; 4]; 4]; 4];
pub type Rank4 = [[[[Expr; 4]; 4]; 4]; 4];

pub fn zeros4() -> Mat4 {
    array::from_fn(|_| array::from_fn(|_| Expr::zero()))
}

pub fn zeros3() -> Rank3 {
    array::from_fn(|_| zeros4())
}

pub fn zeros_rank4() -> Rank4 {
    array::from_fn(|_| zeros3())
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("metric is not symmetric: g[{0}][{1}] differs from g[{1}][{0}]")]
    Asymmetric(usize, usize),
    #[error("metric component g[{i}][{j}]: {source}")]
    Parse {
        i: usize,
        j: usize,
        source: ParseError,
    },
    #[error("metric determinant vanishes on the sample box ({0})")]
    Singular(String),
    #[error("unsupported tensor valence ({0}, {1}); at most (1, 4)")]
    UnsupportedValence(usize, usize),
    #[error("wrong chart form: {0}")]
    WrongChart(String),
    #[error("index count mismatch: expected {expected} components, got {got}")]
    Shape { expected: usize, got: usize },
}

/// Numbers of positive and negative eigenvalues the metric should have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub plus: u8,
    pub minus: u8,
}

impl Signature {
    /// `(+, -, -, -)`.
    pub const LORENTZIAN: Signature = Signature { plus: 1, minus: 3 };
}

/// A metric `g_ij` on a four-dimensional chart.
#[derive(Clone, Debug)]
pub struct ChartMetric {
    pub chart: Chart,
    pub params: Vec<String>,
    g: Mat4,
    pub signature: Signature,
    /// Where the metric is regular; checks sample here unless told otherwise.
    pub domain: SampleBox,
}

impl ChartMetric {
    /// Builds a metric from a full component array, which must be
    /// structurally symmetric. Components are simplified.
    pub fn new(
        chart: Chart,
        params: Vec<String>,
        components: Mat4,
        domain: SampleBox,
    ) -> Result<Self, GeometryError> {
        let g: Mat4 = array::from_fn(|i| array::from_fn(|j| components[i][j].simplify()));
        for i in 0..4 {
            for j in i + 1..4 {
                if g[i][j] != g[j][i] {
                    return Err(GeometryError::Asymmetric(i, j));
                }
            }
        }
        Ok(ChartMetric {
            chart,
            params,
            g,
            signature: Signature::LORENTZIAN,
            domain,
        })
    }

    /// Builds a metric from its lower triangle `g[i][j]`, `j <= i`; entries
    /// above the diagonal are ignored.
    pub fn from_lower(
        chart: Chart,
        params: Vec<String>,
        lower: &Mat4,
        domain: SampleBox,
    ) -> Result<Self, GeometryError> {
        let full = array::from_fn(|i| {
            array::from_fn(|j| if j <= i { lower[i][j].clone() } else { lower[j][i].clone() })
        });
        ChartMetric::new(chart, params, full, domain)
    }

    /// Parses lower-triangle component strings (`rows[i][j]`, `j <= i`).
    pub fn parse_lower(
        chart: Chart,
        params: Vec<String>,
        rows: &[Vec<String>],
        domain: SampleBox,
    ) -> Result<Self, GeometryError> {
        let mut lower = zeros4();
        for i in 0..4 {
            let row = rows.get(i).ok_or(GeometryError::Shape {
                expected: 4,
                got: rows.len(),
            })?;
            if row.len() != i + 1 {
                return Err(GeometryError::Shape {
                    expected: i + 1,
                    got: row.len(),
                });
            }
            for (j, src) in row.iter().enumerate() {
                lower[i][j] = parse(src, &chart, &params)
                    .map_err(|source| GeometryError::Parse { i, j, source })?;
            }
        }
        ChartMetric::from_lower(chart, params, &lower, domain)
    }

    pub fn g(&self, i: usize, j: usize) -> &Expr {
        &self.g[i][j]
    }

    pub fn components(&self) -> &Mat4 {
        &self.g
    }

    pub fn with_domain(mut self, domain: SampleBox) -> Self {
        self.domain = domain;
        self
    }

    /// `det(g)` by cofactor expansion.
    pub fn determinant(&self) -> Expr {
        det4(&self.g)
    }

    /// Fails unless `det(g)` is numerically nonzero on the box: a passing
    /// zero test of the determinant means the metric is singular.
    pub fn check_nonsingular(&self, sample_box: &SampleBox, tol: f64) -> Result<(), GeometryError> {
        let det = self.determinant();
        if det.is_zero() {
            return Err(GeometryError::Singular("determinant is identically 0".into()));
        }
        let report = ZeroTest::new("det")
            .absolute()
            .with("det(g)", det.clone())
            .run(sample_box, tol);
        if report.passed() {
            return Err(GeometryError::Singular(format!(
                "|det(g)| <= {tol:e} at every sampled point"
            )));
        }
        if report.max_residual.is_infinite() {
            // evaluation failed somewhere in the box
            return Err(GeometryError::Singular(report.diagnostics));
        }
        Ok(())
    }

    /// `(γ_αβ) = -(g_ab)` for `a, b` in `{2, 3}`.
    ///
    /// Requires the adapted null form: `g_00 = g_02 = g_03 = 0`.
    pub fn spatial_subblock(&self) -> Result<[[Expr; 2]; 2], GeometryError> {
        for (i, j) in [(0, 0), (0, 2), (0, 3)] {
            if !self.g[i][j].is_zero() {
                return Err(GeometryError::WrongChart(format!(
                    "g{i}{j} must vanish in the adapted chart, got {}",
                    self.g[i][j].display(&self.chart)
                )));
            }
        }
        if self.g[0][1].is_zero() {
            return Err(GeometryError::WrongChart("g01 must be nonzero".into()));
        }
        Ok(array::from_fn(|a| array::from_fn(|b| -&self.g[a + 2][b + 2])))
    }

    /// Checks the structural form of an adapted (pp-wave) chart:
    /// `g_00 = g_02 = g_03 = 0`, `g_01 = 1`, no `x0` dependence.
    pub fn check_adapted_form(&self) -> Result<(), GeometryError> {
        self.spatial_subblock()?;
        if !self.g[0][1].is_one() {
            return Err(GeometryError::WrongChart(format!(
                "g01 must be 1, got {}",
                self.g[0][1].display(&self.chart)
            )));
        }
        for i in 0..4 {
            for j in i..4 {
                if self.g[i][j].depends_on(0) {
                    return Err(GeometryError::WrongChart(format!(
                        "g{i}{j} depends on {}",
                        self.chart.name(0)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Adapted form with `g22 = g33 = -1`, `g23 = 0`.
    pub fn check_standard_form(&self) -> Result<(), GeometryError> {
        self.check_adapted_form()?;
        let minus_one = Expr::int(-1);
        if self.g[2][2] != minus_one || self.g[3][3] != minus_one || !self.g[2][3].is_zero() {
            return Err(GeometryError::WrongChart(
                "standard coordinates need g22 = g33 = -1 and g23 = 0".into(),
            ));
        }
        Ok(())
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.domain.params.insert(name.to_string(), value);
        self
    }

    /// Components in new coordinates `x'`, where `images[i]` gives the old
    /// coordinate `x^i` as a function of the new ones:
    /// `g'_ab = (∂x^i/∂x'^a)(∂x^j/∂x'^b) g_ij(x(x'))`.
    pub fn pullback(&self, images: &[Expr; 4], chart: Chart, domain: SampleBox) -> Result<ChartMetric, GeometryError> {
        let jac: Mat4 = array::from_fn(|i| array::from_fn(|a| images[i].diff(a)));
        let moved: Mat4 = array::from_fn(|i| array::from_fn(|j| self.g[i][j].substitute_coords(images)));
        let mut out = zeros4();
        for a in 0..4 {
            for b in a..4 {
                let mut terms = Vec::new();
                for i in 0..4 {
                    for j in 0..4 {
                        if jac[i][a].is_zero() || jac[j][b].is_zero() || moved[i][j].is_zero() {
                            continue;
                        }
                        terms.push(Expr::product(vec![jac[i][a].clone(), jac[j][b].clone(), moved[i][j].clone()]));
                    }
                }
                let v = Expr::sum(terms);
                out[b][a] = v.clone();
                out[a][b] = v;
            }
        }
        ChartMetric::new(chart, self.params.clone(), out, domain)
    }

    /// Zero test of `g^ik g_kj - δ^i_j` for a candidate inverse.
    pub fn inverse_report(&self, inverse: &Mat4, sample_box: &SampleBox, tol: f64) -> CheckReport {
        let mut test = ZeroTest::new("inverse_metric");
        for i in 0..4 {
            for j in 0..4 {
                let mut terms: Vec<Expr> = (0..4).map(|k| &inverse[i][k] * &self.g[k][j]).collect();
                if i == j {
                    terms.push(Expr::int(-1));
                }
                test.push(format!("(g^-1 g)[{i}][{j}] - δ"), Expr::sum(terms));
            }
        }
        test.run(sample_box, tol)
    }
}

fn det3(m: [[&Expr; 3]; 3]) -> Expr {
    let minor = |a: &Expr, b: &Expr, c: &Expr, d: &Expr| a * b - c * d;
    Expr::sum(vec![
        m[0][0] * minor(m[1][1], m[2][2], m[1][2], m[2][1]),
        -(m[0][1] * minor(m[1][0], m[2][2], m[1][2], m[2][0])),
        m[0][2] * minor(m[1][0], m[2][1], m[1][1], m[2][0]),
    ])
}

/// Minor of a 4×4 matrix with `row` and `col` removed.
pub(crate) fn minor3(m: &Mat4, row: usize, col: usize) -> Expr {
    let rows: Vec<usize> = (0..4).filter(|&r| r != row).collect();
    let cols: Vec<usize> = (0..4).filter(|&c| c != col).collect();
    det3(array::from_fn(|a| array::from_fn(|b| &m[rows[a]][cols[b]])))
}

pub fn det4(m: &Mat4) -> Expr {
    let mut terms = Vec::new();
    for col in 0..4 {
        if m[0][col].is_zero() {
            continue;
        }
        let t = &m[0][col] * minor3(m, 0, col);
        terms.push(if col % 2 == 0 { t } else { -t });
    }
    Expr::sum(terms)
}
