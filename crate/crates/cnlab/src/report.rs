//! Verdict and report types shared by the experiment runners, the CLI and
//! the acceptance suite. Every pass/fail verdict carries its residual and
//! tolerance; bare booleans are never reported.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Warn,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub id: String,
    pub description: String,
    pub residual: f64,
    pub tolerance: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Verdict {
    pub fn check(id: &str, description: &str, residual: f64, tolerance: f64) -> Self {
        Verdict {
            id: id.to_string(),
            description: description.to_string(),
            residual,
            tolerance,
            status: if residual.is_finite() && residual <= tolerance {
                Status::Pass
            } else {
                Status::Fail
            },
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn warn_if_failed(mut self) -> Self {
        if self.status == Status::Fail {
            self.status = Status::Warn;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Warn => "WARN",
        };
        format!(
            "{tag} {}: residual {:.3e} vs tolerance {:.3e} ({})",
            self.id, self.residual, self.tolerance, self.description
        )
    }
}

/// Aggregate over a group of verdicts.
pub fn all_pass(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(|v| v.passed())
}

pub fn worst_ratio(verdicts: &[Verdict]) -> f64 {
    verdicts
        .iter()
        .map(|v| {
            if v.tolerance > 0.0 {
                v.residual / v.tolerance
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}
