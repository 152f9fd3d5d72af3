//! Metrics, connection and curvature.

mod curvature;
mod metric;
mod tensor;

pub use curvature::{CurvatureBundle, Geometry};
pub use metric::{det4, zeros3, zeros4, zeros_rank4, ChartMetric, GeometryError, Mat4, Rank3, Rank4, Signature};
pub use tensor::{multi_indices, Tensor};
