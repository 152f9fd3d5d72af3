use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A precondition of the check did not hold; no verdict.
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        })
    }
}

/// Outcome of one verification. Field order is the serialized order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub status: Status,
    pub max_residual: f64,
    pub argmax_point: Option<[f64; 4]>,
    pub tolerance: f64,
    pub points: usize,
    pub seed: u64,
    pub diagnostics: String,
}

impl CheckReport {
    /// Report whose status follows from `max_residual <= tolerance`.
    pub fn measured(
        check: impl Into<String>,
        max_residual: f64,
        argmax_point: Option<[f64; 4]>,
        tolerance: f64,
        points: usize,
        seed: u64,
        diagnostics: impl Into<String>,
    ) -> Self {
        let status = if max_residual <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckReport {
            check: check.into(),
            status,
            max_residual,
            argmax_point,
            tolerance,
            points,
            seed,
            diagnostics: diagnostics.into(),
        }
    }

    pub fn error(
        check: impl Into<String>,
        tolerance: f64,
        points: usize,
        seed: u64,
        diagnostics: impl Into<String>,
    ) -> Self {
        CheckReport {
            check: check.into(),
            status: Status::Error,
            max_residual: f64::NAN,
            argmax_point: None,
            tolerance,
            points,
            seed,
            diagnostics: diagnostics.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn renamed(mut self, check: impl Into<String>) -> Self {
        self.check = check.into();
        self
    }

    /// Folds several sub-reports into one: the worst residual wins, any
    /// error makes the whole an error, and diagnostics are concatenated.
    pub fn combine(check: impl Into<String>, parts: Vec<CheckReport>) -> Self {
        let check = check.into();
        let Some(first) = parts.first() else {
            return CheckReport::measured(check, 0.0, None, 0.0, 0, 0, "nothing to check");
        };
        let (points, seed) = (first.points, first.seed);
        // Worst part by residual relative to its own tolerance, so the
        // combined report still satisfies `pass iff residual <= tolerance`.
        let severity = |p: &CheckReport| {
            if p.max_residual.is_nan() {
                f64::INFINITY
            } else if p.tolerance > 0.0 {
                p.max_residual / p.tolerance
            } else if p.max_residual <= 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        let worst = parts
            .iter()
            .fold(first, |w, p| if severity(p) > severity(w) { p } else { w });
        let diagnostics = parts
            .iter()
            .map(|p| format!("[{} {}] {}", p.check, p.status, p.diagnostics))
            .collect::<Vec<_>>()
            .join("; ");
        let status = if parts.iter().any(|p| p.status == Status::Error) {
            Status::Error
        } else if parts.iter().all(CheckReport::passed) {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckReport {
            check,
            status,
            max_residual: worst.max_residual,
            argmax_point: worst.argmax_point,
            tolerance: worst.tolerance,
            points: parts.iter().map(|p| p.points).max().unwrap_or(points),
            seed,
            diagnostics,
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<24} {:<5} max_residual={:.3e} tol={:.1e} points={} seed={}",
            self.check, self.status, self.max_residual, self.tolerance, self.points, self.seed
        )?;
        if let Some(p) = self.argmax_point {
            write!(f, " at [{:.4}, {:.4}, {:.4}, {:.4}]", p[0], p[1], p[2], p[3])?;
        }
        if !self.diagnostics.is_empty() {
            write!(f, "\n    {}", self.diagnostics)?;
        }
        Ok(())
    }
}
