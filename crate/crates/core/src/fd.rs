//! Finite-difference curvature oracle.
//!
//! Evaluates only the metric components. First derivatives of `g` come from
//! 4th-order central differences; Christoffel symbols are assembled
//! numerically at each stencil point and differentiated again the same way.
//! Nothing here touches symbolic differentiation, so agreement with
//! [`crate::geometry::Geometry`] is an independent confirmation.

use std::collections::BTreeMap;

use nalgebra::Matrix4;

use crate::expr::{EvalError, Tape};
use crate::geometry::ChartMetric;

pub const DEFAULT_STEP: f64 = 1e-3;

/// Numeric curvature at one point, same conventions as the symbolic engine.
#[derive(Clone, Debug)]
pub struct FdCurvature {
    pub g: [[f64; 4]; 4],
    pub inverse: [[f64; 4]; 4],
    pub christoffel: [[[f64; 4]; 4]; 4],
    pub riemann_mixed: [[[[f64; 4]; 4]; 4]; 4],
    pub riemann: [[[[f64; 4]; 4]; 4]; 4],
    pub ricci: [[f64; 4]; 4],
    pub scalar: f64,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FdError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("metric is numerically singular at {0:?}")]
    Singular([f64; 4]),
}

pub struct FdOracle {
    tape: Tape,
    params: Vec<f64>,
    step: f64,
}

fn stencil(f: impl Fn(f64) -> Result<f64, FdError>, h: f64) -> Result<f64, FdError> {
    Ok((-f(2.0 * h)? + 8.0 * f(h)? - 8.0 * f(-h)? + f(-2.0 * h)?) / (12.0 * h))
}

impl FdOracle {
    pub fn new(metric: &ChartMetric, params: &BTreeMap<String, f64>, step: f64) -> Result<Self, FdError> {
        let comps: Vec<_> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| metric.g(i, j).clone())
            .collect();
        let tape = Tape::compile(&comps);
        let params = tape.bind_params(params)?;
        Ok(FdOracle { tape, params, step })
    }

    pub fn metric_at(&self, x: &[f64; 4]) -> Result<[[f64; 4]; 4], FdError> {
        let mut scratch = Vec::new();
        self.tape.eval_into(x, &self.params, &mut scratch)?;
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| self.tape.root(&scratch, 4 * i + j))))
    }

    fn shifted(x: &[f64; 4], coord: usize, by: f64) -> [f64; 4] {
        let mut y = *x;
        y[coord] += by;
        y
    }

    /// `∂_k g_ij`, indexed `[k][i][j]`.
    pub fn metric_derivatives(&self, x: &[f64; 4]) -> Result<[[[f64; 4]; 4]; 4], FdError> {
        let mut out = [[[0.0; 4]; 4]; 4];
        for (k, dk) in out.iter_mut().enumerate() {
            let h = self.step;
            let (p2, p1, m1, m2) = (
                self.metric_at(&Self::shifted(x, k, 2.0 * h))?,
                self.metric_at(&Self::shifted(x, k, h))?,
                self.metric_at(&Self::shifted(x, k, -h))?,
                self.metric_at(&Self::shifted(x, k, -2.0 * h))?,
            );
            for i in 0..4 {
                for j in 0..4 {
                    dk[i][j] = (-p2[i][j] + 8.0 * p1[i][j] - 8.0 * m1[i][j] + m2[i][j]) / (12.0 * h);
                }
            }
        }
        Ok(out)
    }

    fn inverse_at(&self, g: &[[f64; 4]; 4], x: &[f64; 4]) -> Result<[[f64; 4]; 4], FdError> {
        let m = Matrix4::from_fn(|i, j| g[i][j]);
        let inv = m.try_inverse().ok_or(FdError::Singular(*x))?;
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| inv[(i, j)])))
    }

    pub fn christoffel_at(&self, x: &[f64; 4]) -> Result<[[[f64; 4]; 4]; 4], FdError> {
        let g = self.metric_at(x)?;
        let inv = self.inverse_at(&g, x)?;
        let dg = self.metric_derivatives(x)?;
        let mut gamma = [[[0.0; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    gamma[i][j][k] = (0..4)
                        .map(|l| 0.5 * inv[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]))
                        .sum();
                }
            }
        }
        Ok(gamma)
    }

    pub fn curvature_at(&self, x: &[f64; 4]) -> Result<FdCurvature, FdError> {
        let g = self.metric_at(x)?;
        let inverse = self.inverse_at(&g, x)?;
        let christoffel = self.christoffel_at(x)?;
        // ∂_m Γ^i_jk, indexed [m][i][j][k]
        let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
        for (m, dm) in dgamma.iter_mut().enumerate() {
            let h = self.step;
            let at = |by: f64| self.christoffel_at(&Self::shifted(x, m, by));
            let (p2, p1, m1, m2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        dm[i][j][k] = (-p2[i][j][k] + 8.0 * p1[i][j][k] - 8.0 * m1[i][j][k]
                            + m2[i][j][k])
                            / (12.0 * h);
                    }
                }
            }
        }
        let gam = &christoffel;
        let mut riemann_mixed = [[[[0.0; 4]; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        let mut v = dgamma[k][i][j][l] - dgamma[l][i][j][k];
                        for m in 0..4 {
                            v += gam[i][k][m] * gam[m][j][l] - gam[i][l][m] * gam[m][j][k];
                        }
                        riemann_mixed[i][j][k][l] = v;
                    }
                }
            }
        }
        let mut riemann = [[[[0.0; 4]; 4]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        riemann[i][j][k][l] = (0..4).map(|m| g[i][m] * riemann_mixed[m][j][k][l]).sum();
                    }
                }
            }
        }
        let ricci: [[f64; 4]; 4] =
            std::array::from_fn(|j| std::array::from_fn(|l| (0..4).map(|k| riemann_mixed[k][j][k][l]).sum()));
        let scalar = (0..16).map(|n| inverse[n / 4][n % 4] * ricci[n / 4][n % 4]).sum();
        Ok(FdCurvature {
            g,
            inverse,
            christoffel,
            riemann_mixed,
            riemann,
            ricci,
            scalar,
        })
    }
}

/// Gaussian curvature of a 2D metric `γ(u, v)` at a point by finite
/// differences of the metric alone (Brioschi formula).
pub fn gaussian_curvature_2d(
    gamma: impl Fn(f64, f64) -> Result<[[f64; 2]; 2], FdError>,
    u: f64,
    v: f64,
    h: f64,
) -> Result<f64, FdError> {
    let e = |a: f64, b: f64| gamma(a, b).map(|m| m[0][0]);
    let f = |a: f64, b: f64| gamma(a, b).map(|m| m[0][1]);
    let g = |a: f64, b: f64| gamma(a, b).map(|m| m[1][1]);
    let du = |q: &dyn Fn(f64, f64) -> Result<f64, FdError>, a: f64, b: f64| stencil(|s| q(a + s, b), h);
    let dv = |q: &dyn Fn(f64, f64) -> Result<f64, FdError>, a: f64, b: f64| stencil(|s| q(a, b + s), h);
    let duu = |q: &dyn Fn(f64, f64) -> Result<f64, FdError>| stencil(|s| du(q, u + s, v), h);
    let dvv = |q: &dyn Fn(f64, f64) -> Result<f64, FdError>| stencil(|s| dv(q, u, v + s), h);
    let duv = |q: &dyn Fn(f64, f64) -> Result<f64, FdError>| stencil(|s| dv(q, u + s, v), h);

    let (e0, f0, g0) = (e(u, v)?, f(u, v)?, g(u, v)?);
    let (eu, ev) = (du(&e, u, v)?, dv(&e, u, v)?);
    let (fu, fv) = (du(&f, u, v)?, dv(&f, u, v)?);
    let (gu, gv) = (du(&g, u, v)?, dv(&g, u, v)?);
    let (evv, fuv, guu) = (dvv(&e)?, duv(&f)?, duu(&g)?);

    let a = nalgebra::Matrix3::new(
        -0.5 * evv + fuv - 0.5 * guu,
        0.5 * eu,
        fu - 0.5 * ev,
        fv - 0.5 * gu,
        e0,
        f0,
        0.5 * gv,
        f0,
        g0,
    );
    let b = nalgebra::Matrix3::new(0.0, 0.5 * ev, 0.5 * gu, 0.5 * ev, e0, f0, 0.5 * gu, f0, g0);
    let det = e0 * g0 - f0 * f0;
    Ok((a.determinant() - b.determinant()) / (det * det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Chart, SampleBox};

    fn metric(rows: [&[&str]; 4]) -> ChartMetric {
        let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
        ChartMetric::parse_lower(Chart::standard(), vec![], &rows, SampleBox::cube(-1.0, 1.0)).unwrap()
    }

    #[test]
    fn peres_components_by_hand() {
        // f = y^2 - z^2 + x*y*z: R_1212 = 2, R_1313 = -2, R_1213 = x
        let g = metric([&["0"], &["1", "-1 - 2*(x2^2 - x3^2 + x1*x2*x3)"], &["0", "0", "-1"], &["0", "0", "0", "-1"]]);
        let oracle = FdOracle::new(&g, &BTreeMap::new(), DEFAULT_STEP).unwrap();
        let c = oracle.curvature_at(&[0.2, 0.7, -0.3, 0.4]).unwrap();
        assert!((c.riemann[1][2][1][2] - 2.0).abs() < 1e-7);
        assert!((c.riemann[1][3][1][3] + 2.0).abs() < 1e-7);
        assert!((c.riemann[1][2][1][3] - 0.7).abs() < 1e-7);
        assert!(c.ricci[1][1].abs() < 1e-7);
    }

    #[test]
    fn peres_non_vacuum_ricci() {
        let g = metric([&["0"], &["1", "-1 - 2*x2^2"], &["0", "0", "-1"], &["0", "0", "0", "-1"]]);
        let oracle = FdOracle::new(&g, &BTreeMap::new(), DEFAULT_STEP).unwrap();
        let c = oracle.curvature_at(&[0.0, 0.1, 0.2, 0.3]).unwrap();
        assert!((c.ricci[1][1] + 2.0).abs() < 1e-7, "{}", c.ricci[1][1]);
        assert!(c.scalar.abs() < 1e-7);
    }

    #[test]
    fn round_sphere_has_unit_curvature() {
        // stereographic: (du^2 + dv^2) / p^2 with p = 1 + (u^2 + v^2)/4
        let k = gaussian_curvature_2d(
            |u, v| {
                let p = 1.0 + (u * u + v * v) / 4.0;
                Ok([[1.0 / (p * p), 0.0], [0.0, 1.0 / (p * p)]])
            },
            0.3,
            -0.4,
            1e-3,
        )
        .unwrap();
        assert!((k - 1.0).abs() < 1e-7, "{k}");
    }
}
