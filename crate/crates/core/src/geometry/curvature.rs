use std::array;
use std::sync::OnceLock;

use crate::expr::{Differentiator, Expr};

use super::metric::{minor3, zeros3, zeros4, zeros_rank4, ChartMetric, Mat4, Rank3, Rank4};
use super::tensor::Tensor;
use super::GeometryError;

/// Christoffel symbols and curvature of a metric, as component arrays.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    /// `Γ^i_jk`, indexed `[i][j][k]`.
    pub christoffel: Rank3,
    /// Covariant `R_ijkl`.
    pub riemann: Rank4,
    /// `R_jl`.
    pub ricci: Mat4,
    pub scalar: Expr,
}

fn differentiators() -> [Differentiator; 4] {
    array::from_fn(Differentiator::coord)
}

/// Lazily computed differential geometry of one metric.
///
/// Every quantity is computed at most once and then shared; the struct is
/// `Sync`, so one instance can serve several checks in parallel.
///
/// Conventions:
/// `R^i_jkl = ∂_k Γ^i_jl - ∂_l Γ^i_jk + Γ^i_km Γ^m_jl - Γ^i_lm Γ^m_jk`,
/// `R_ijkl = g_im R^m_jkl`, `R_jl = g^ik R_ijkl = R^k_jkl`, `R = g^jl R_jl`.
pub struct Geometry {
    metric: ChartMetric,
    det: OnceLock<Expr>,
    inverse: OnceLock<Mat4>,
    dg: OnceLock<Rank3>,
    christoffel: OnceLock<Rank3>,
    riemann_mixed: OnceLock<Rank4>,
    riemann: OnceLock<Rank4>,
    ricci: OnceLock<Mat4>,
    scalar: OnceLock<Expr>,
    einstein: OnceLock<Mat4>,
}

impl Geometry {
    pub fn new(metric: ChartMetric) -> Self {
        Geometry {
            metric,
            det: OnceLock::new(),
            inverse: OnceLock::new(),
            dg: OnceLock::new(),
            christoffel: OnceLock::new(),
            riemann_mixed: OnceLock::new(),
            riemann: OnceLock::new(),
            ricci: OnceLock::new(),
            scalar: OnceLock::new(),
            einstein: OnceLock::new(),
        }
    }

    pub fn metric(&self) -> &ChartMetric {
        &self.metric
    }

    pub fn g(&self, i: usize, j: usize) -> &Expr {
        self.metric.g(i, j)
    }

    pub fn determinant(&self) -> &Expr {
        self.det.get_or_init(|| self.metric.determinant())
    }

    /// `g^ij` as adjugate over determinant.
    pub fn inverse(&self) -> &Mat4 {
        self.inverse.get_or_init(|| {
            let g = self.metric.components();
            let inv_det = self.determinant().powi(-1);
            let mut inv = zeros4();
            for i in 0..4 {
                for j in i..4 {
                    // cofactor C_ji; g is symmetric so C_ji = C_ij
                    let cof = minor3(g, j, i);
                    let cof = if (i + j) % 2 == 0 { cof } else { -cof };
                    let v = cof * &inv_det;
                    inv[i][j] = v.clone();
                    inv[j][i] = v;
                }
            }
            inv
        })
    }

    /// `∂_k g_ij`, indexed `[k][i][j]`.
    pub fn metric_derivatives(&self) -> &Rank3 {
        self.dg.get_or_init(|| {
            let mut d = differentiators();
            let mut out = zeros3();
            for (k, dk) in d.iter_mut().enumerate() {
                for i in 0..4 {
                    for j in i..4 {
                        let v = dk.diff(self.g(i, j));
                        out[k][i][j] = v.clone();
                        out[k][j][i] = v;
                    }
                }
            }
            out
        })
    }

    /// `Γ^i_jk`, symmetric in `j, k` by construction.
    pub fn christoffel(&self) -> &Rank3 {
        self.christoffel.get_or_init(|| {
            let dg = self.metric_derivatives();
            let inv = self.inverse();
            // first kind Γ_ljk = ½(∂_j g_lk + ∂_k g_lj - ∂_l g_jk)
            let mut first = zeros3();
            for l in 0..4 {
                for j in 0..4 {
                    for k in j..4 {
                        let v = Expr::sum(vec![
                            dg[j][l][k].clone(),
                            dg[k][l][j].clone(),
                            -&dg[l][j][k],
                        ]);
                        let v = Expr::ratio(1, 2) * v;
                        first[l][j][k] = v.clone();
                        first[l][k][j] = v;
                    }
                }
            }
            let mut gamma = zeros3();
            for i in 0..4 {
                for j in 0..4 {
                    for k in j..4 {
                        let v = Expr::sum((0..4).map(|l| &inv[i][l] * &first[l][j][k]).collect());
                        gamma[i][j][k] = v.clone();
                        gamma[i][k][j] = v;
                    }
                }
            }
            gamma
        })
    }

    /// `R^i_jkl`.
    pub fn riemann_mixed(&self) -> &Rank4 {
        self.riemann_mixed.get_or_init(|| {
            let gamma = self.christoffel();
            let mut d = differentiators();
            let mut r = zeros_rank4();
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        for l in k + 1..4 {
                            let mut terms = vec![d[k].diff(&gamma[i][j][l]), -d[l].diff(&gamma[i][j][k])];
                            for m in 0..4 {
                                terms.push(&gamma[i][k][m] * &gamma[m][j][l]);
                                terms.push(-(&gamma[i][l][m] * &gamma[m][j][k]));
                            }
                            let v = Expr::sum(terms);
                            r[i][j][l][k] = -&v;
                            r[i][j][k][l] = v;
                        }
                    }
                }
            }
            r
        })
    }

    /// Covariant `R_ijkl`.
    pub fn riemann(&self) -> &Rank4 {
        self.riemann.get_or_init(|| {
            let mixed = self.riemann_mixed();
            let mut r = zeros_rank4();
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        for l in k + 1..4 {
                            let v = Expr::sum((0..4).map(|m| self.g(i, m) * &mixed[m][j][k][l]).collect());
                            r[i][j][l][k] = -&v;
                            r[i][j][k][l] = v;
                        }
                    }
                }
            }
            r
        })
    }

    /// `R_jl`.
    pub fn ricci(&self) -> &Mat4 {
        self.ricci.get_or_init(|| {
            let mixed = self.riemann_mixed();
            array::from_fn(|j| array::from_fn(|l| Expr::sum((0..4).map(|k| mixed[k][j][k][l].clone()).collect())))
        })
    }

    pub fn scalar(&self) -> &Expr {
        self.scalar.get_or_init(|| {
            let inv = self.inverse();
            let ricci = self.ricci();
            let mut terms = Vec::new();
            for j in 0..4 {
                for l in 0..4 {
                    terms.push(&inv[j][l] * &ricci[j][l]);
                }
            }
            Expr::sum(terms)
        })
    }

    /// `G_ij = R_ij - ½ R g_ij`.
    pub fn einstein(&self) -> &Mat4 {
        self.einstein.get_or_init(|| {
            let ricci = self.ricci();
            let half_r = Expr::ratio(1, 2) * self.scalar();
            array::from_fn(|i| array::from_fn(|j| &ricci[i][j] - &half_r * self.g(i, j)))
        })
    }

    pub fn bundle(&self) -> CurvatureBundle {
        CurvatureBundle {
            christoffel: self.christoffel().clone(),
            riemann: self.riemann().clone(),
            ricci: self.ricci().clone(),
            scalar: self.scalar().clone(),
        }
    }

    /// `X_i = g_ij X^j`.
    pub fn lower(&self, x: &[Expr; 4]) -> [Expr; 4] {
        array::from_fn(|i| Expr::sum((0..4).map(|j| self.g(i, j) * &x[j]).collect()))
    }

    /// `g_ij X^i X^j`.
    pub fn norm_squared(&self, x: &[Expr; 4]) -> Expr {
        let lowered = self.lower(x);
        Expr::sum((0..4).map(|i| &lowered[i] * &x[i]).collect())
    }

    /// One component of `∇T`: `(∇_m T)^{a..}_{b..}` where `idx` lists the
    /// tensor's own indices and `m` is the derivative index.
    fn nabla_component(&self, t: &Tensor, idx: &[usize], m: usize, d: &mut [Differentiator; 4]) -> Expr {
        let gamma = self.christoffel();
        let (upper, _) = t.valence();
        let mut terms = vec![d[m].diff(t.get(idx))];
        let mut shifted = idx.to_vec();
        for (pos, &orig) in idx.iter().enumerate() {
            for c in 0..4 {
                shifted[pos] = c;
                let comp = t.get(&shifted);
                if comp.is_zero() {
                    continue;
                }
                if pos < upper {
                    terms.push(&gamma[orig][m][c] * comp);
                } else {
                    terms.push(-(&gamma[c][m][orig] * comp));
                }
            }
            shifted[pos] = orig;
        }
        Expr::sum(terms)
    }

    /// `∇T` of valence `(r, s+1)`, derivative index last.
    pub fn covariant_derivative(&self, t: &Tensor) -> Result<Tensor, GeometryError> {
        let (r, s) = t.valence();
        if r > 1 || s > 4 {
            return Err(GeometryError::UnsupportedValence(r, s));
        }
        let mut d = differentiators();
        let mut out = Tensor::zeros(r, s + 1);
        for idx in t.indices() {
            for m in 0..4 {
                let v = self.nabla_component(t, &idx, m, &mut d);
                let mut full = idx.clone();
                full.push(m);
                out.set(&full, v);
            }
        }
        Ok(out)
    }

    /// `D_i R^i_jkl`, indexed `[j][k][l]`.
    pub fn riemann_divergence(&self) -> Rank3 {
        let mixed = self.riemann_mixed();
        let mut comps = Vec::with_capacity(256);
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        comps.push(mixed[i][j][k][l].clone());
                    }
                }
            }
        }
        let t = Tensor::new(1, 3, comps).expect("256 components");
        let mut d = differentiators();
        let mut out = zeros3();
        for j in 0..4 {
            for k in 0..4 {
                for l in k + 1..4 {
                    let v = Expr::sum((0..4).map(|i| self.nabla_component(&t, &[i, j, k, l], i, &mut d)).collect());
                    out[j][l][k] = -&v;
                    out[j][k][l] = v;
                }
            }
        }
        out
    }

    /// `D_k R_jl - D_l R_jk`, indexed `[j][k][l]`: the right-hand side of the
    /// contracted second Bianchi identity.
    pub fn ricci_curl(&self) -> Rank3 {
        let ricci = self.ricci();
        let comps = (0..16).map(|n| ricci[n / 4][n % 4].clone()).collect();
        let t = Tensor::new(0, 2, comps).expect("16 components");
        let mut d = differentiators();
        let mut out = zeros3();
        for j in 0..4 {
            for k in 0..4 {
                for l in k + 1..4 {
                    let v = self.nabla_component(&t, &[j, l], k, &mut d) - self.nabla_component(&t, &[j, k], l, &mut d);
                    out[j][l][k] = -&v;
                    out[j][k][l] = v;
                }
            }
        }
        out
    }

    /// `g^ik ∇_k G_ij`, which vanishes identically.
    pub fn einstein_divergence(&self) -> [Expr; 4] {
        let einstein = self.einstein();
        let inv = self.inverse();
        let comps = (0..16).map(|n| einstein[n / 4][n % 4].clone()).collect();
        let t = Tensor::new(0, 2, comps).expect("16 components");
        let mut d = differentiators();
        array::from_fn(|j| {
            let mut terms = Vec::new();
            for i in 0..4 {
                for k in 0..4 {
                    if inv[i][k].is_zero() {
                        continue;
                    }
                    terms.push(&inv[i][k] * self.nabla_component(&t, &[i, j], k, &mut d));
                }
            }
            Expr::sum(terms)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Chart, EvalPoint, SampleBox, ZeroTest};

    fn metric(lower: [&[&str]; 4], params: &[&str]) -> ChartMetric {
        let rows: Vec<Vec<String>> = lower.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
        ChartMetric::parse_lower(
            Chart::standard(),
            params.iter().map(|s| s.to_string()).collect(),
            &rows,
            SampleBox::cube(-1.0, 1.0),
        )
        .unwrap()
    }

    fn peres(f: &str) -> Geometry {
        let g11 = format!("-(1 + 2*({f}))");
        Geometry::new(metric([&["0"], &["1", &g11], &["0", "0", "-1"], &["0", "0", "0", "-1"]], &[]))
    }

    fn expr(s: &str) -> Expr {
        parse(s, &Chart::standard(), &[] as &[&str]).unwrap()
    }

    #[test]
    fn minkowski_is_flat() {
        let g = Geometry::new(metric([&["1"], &["0", "-1"], &["0", "0", "-1"], &["0", "0", "0", "-1"]], &[]));
        assert!(g.christoffel().iter().flatten().flatten().all(Expr::is_zero));
        assert!(g.riemann().iter().flatten().flatten().flatten().all(Expr::is_zero));
        assert!(g.scalar().is_zero());
        assert_eq!(g.inverse()[1][1], Expr::int(-1));
    }

    #[test]
    fn peres_calibration() {
        // Fixes the sign convention: R_1212 = ∂²f/∂y² for the Peres metric.
        let f = "sin(x1)*x2^3 + x2*x3^2 + x1*x2*x3";
        let g = peres(f);
        let r = g.riemann();
        let fe = expr(f);
        let report = ZeroTest::new("calibration")
            .with("R1212", &r[1][2][1][2] - fe.diff(2).diff(2))
            .with("R1313", &r[1][3][1][3] - fe.diff(3).diff(3))
            .with("R1213", &r[1][2][1][3] - fe.diff(2).diff(3))
            .run(&SampleBox::cube(-1.0, 1.0), 1e-9);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn peres_non_vacuum_ricci_sign() {
        // f = y^2: R_11 = g^kl R_k1l1 = -(f_yy + f_zz) = -2.
        let g = peres("x2^2");
        let v = g.ricci()[1][1].eval(&EvalPoint::at([0.1, 0.2, 0.3, 0.4])).unwrap();
        assert!((v + 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn riemann_symmetries_and_bianchi() {
        let g = Geometry::new(metric(
            [&["0"], &["1", "x2^2*x1 + sin(x3)"], &["0", "x3*x1", "-1 - x2^2/4"], &["0", "x2", "0.1*x1", "-1"]],
            &[],
        ));
        let r = g.riemann();
        let mut test = ZeroTest::new("symmetries");
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        test.push(format!("{i}{j}{k}{l} pair"), &r[i][j][k][l] - &r[k][l][i][j]);
                        test.push(format!("{i}{j}{k}{l} anti"), &r[i][j][k][l] + &r[j][i][k][l]);
                        test.push(
                            format!("{i}{j}{k}{l} cyclic"),
                            Expr::sum(vec![r[i][j][k][l].clone(), r[i][k][l][j].clone(), r[i][l][j][k].clone()]),
                        );
                    }
                }
            }
        }
        let b = SampleBox::cube(-0.5, 0.5).with_points(40);
        let report = test.run(&b, 1e-9);
        assert!(report.passed(), "{report}");

        let div = g.riemann_divergence();
        let curl = g.ricci_curl();
        let mut bianchi = ZeroTest::new("bianchi");
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    bianchi.push(format!("{j}{k}{l}"), &div[j][k][l] - &curl[j][k][l]);
                }
            }
        }
        for (j, e) in g.einstein_divergence().into_iter().enumerate() {
            bianchi.push(format!("divG {j}"), e);
        }
        let report = bianchi.run(&b.clone().with_points(20), 1e-8);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn inverse_and_compatibility() {
        let g = Geometry::new(metric(
            [&["0"], &["1", "x2*x3"], &["0", "x1", "-1 - x3^2"], &["0", "0", "0.5*sin(x1)", "-1 - x2^2"]],
            &[],
        ));
        let report = g.metric().inverse_report(g.inverse(), &SampleBox::cube(-1.0, 1.0), 1e-12);
        assert!(report.passed(), "{report}");
        let comps = (0..16).map(|n| g.g(n / 4, n % 4).clone()).collect();
        let dg = g.covariant_derivative(&Tensor::new(0, 2, comps).unwrap()).unwrap();
        let mut test = ZeroTest::new("nabla g");
        for (n, c) in dg.components().iter().enumerate() {
            test.push(n.to_string(), c.clone());
        }
        assert!(test.run(&SampleBox::cube(-1.0, 1.0).with_points(30), 1e-9).passed());
        assert!(matches!(
            g.covariant_derivative(&Tensor::zeros(2, 0)),
            Err(GeometryError::UnsupportedValence(2, 0))
        ));
    }

    #[test]
    fn adapted_frame_has_no_x0_christoffels() {
        let g = Geometry::new(metric(
            [&["0"], &["1", "x2*x3*x1"], &["0", "x1*x3", "-1"], &["0", "x1*x2", "0", "-1"]],
            &[],
        ));
        let gamma = g.christoffel();
        for i in 0..4 {
            for j in 0..4 {
                assert!(gamma[i][j][0].is_zero(), "Γ^{i}_{j}0 = {}", gamma[i][j][0]);
            }
        }
    }
}
