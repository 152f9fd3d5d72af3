use nalgebra::DMatrix;

use crate::expr::{SampleBox, Tape};
use crate::geometry::Geometry;

/// Singular values below this fraction of the largest count as zero.
pub const RELATIVE_THRESHOLD: f64 = 1e-8;

/// Common solutions `v` of `R_ijkl(x) v^l = 0` over the sampled points.
#[derive(Clone, Debug)]
pub struct NullSpace {
    pub dimension: usize,
    /// Orthonormal basis of the common null space.
    pub basis: Vec<[f64; 4]>,
    /// Singular values of the stacked, per-point normalized system.
    pub singular_values: Vec<f64>,
    /// Points whose curvature was below the absolute floor and so imposed
    /// no condition.
    pub flat_points: usize,
    pub points: usize,
}

impl NullSpace {
    /// Angle between `v` and the null space (0 when `v` lies in it).
    pub fn angle_to(&self, v: &[f64; 4]) -> f64 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let mut projection = [0.0; 4];
        for b in &self.basis {
            let dot: f64 = b.iter().zip(v).map(|(x, y)| x * y).sum();
            for (p, bi) in projection.iter_mut().zip(b) {
                *p += dot * bi;
            }
        }
        let along = projection.iter().map(|x| x * x).sum::<f64>().sqrt();
        let across = v
            .iter()
            .zip(&projection)
            .map(|(x, p)| (x - p) * (x - p))
            .sum::<f64>()
            .sqrt();
        // atan2 stays accurate for tiny angles, unlike acos near 1
        across.atan2(along)
    }
}

/// Numeric null space of the 64×4 curvature system, intersected across the
/// sampled points.
///
/// Each point's matrix is scaled by its largest singular value so that
/// regions of strong and weak curvature weigh the same. A point whose
/// largest singular value is at most `floor` is numerically flat and is
/// skipped: normalizing it would blow rounding noise up to order one.
pub fn parallel_null_space(geo: &Geometry, sample_box: &SampleBox, floor: f64) -> Result<NullSpace, String> {
    let r = geo.riemann();
    let mut roots = Vec::with_capacity(256);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    roots.push(r[i][j][k][l].clone());
                }
            }
        }
    }
    let tape = Tape::compile(&roots);
    let params = tape.bind_params(&sample_box.params).map_err(|e| e.to_string())?;
    let points = sample_box.sample().map_err(|e| e.to_string())?;
    let mut scratch = Vec::new();
    let mut rows: Vec<[f64; 4]> = Vec::new();
    let mut flat_points = 0;
    for pt in &points {
        tape.eval_into(pt, &params, &mut scratch)
            .map_err(|e| format!("at {pt:?}: {e}"))?;
        let m = DMatrix::from_fn(64, 4, |row, l| tape.root(&scratch, row * 4 + l));
        let top = m.singular_values().max();
        if top <= floor {
            flat_points += 1;
            continue;
        }
        for row in 0..64 {
            let v = [m[(row, 0)], m[(row, 1)], m[(row, 2)], m[(row, 3)]];
            if v.iter().any(|x| *x != 0.0) {
                rows.push(v.map(|x| x / top));
            }
        }
    }
    if rows.is_empty() {
        return Ok(NullSpace {
            dimension: 4,
            basis: (0..4).map(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 })).collect(),
            singular_values: vec![0.0; 4],
            flat_points,
            points: points.len(),
        });
    }
    // zero rows keep V^T square without changing the null space
    while rows.len() < 4 {
        rows.push([0.0; 4]);
    }
    let stacked = DMatrix::from_fn(rows.len(), 4, |r, c| rows[r][c]);
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let top = sigma.iter().copied().fold(0.0, f64::max);
    let cutoff = RELATIVE_THRESHOLD * (top + 1e-300);
    let mut basis = Vec::new();
    for (idx, s) in sigma.iter().enumerate() {
        if *s < cutoff {
            let row = v_t.row(idx);
            basis.push([row[0], row[1], row[2], row[3]]);
        }
    }
    let mut singular_values = sigma;
    singular_values.sort_by(|a, b| b.total_cmp(a));
    Ok(NullSpace {
        dimension: basis.len(),
        basis,
        singular_values,
        flat_points,
        points: points.len(),
    })
}
