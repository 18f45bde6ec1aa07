//! Estimators, exact oracles and comparison reports.

mod epr2;
mod estimate;
mod flips;
mod kernel;
pub mod oracle;
mod report;

pub use epr2::{epr2_suite, protocol1_flip_residual, reflected_hat_b, CaseResidual, Epr2Report};
pub use estimate::{
    compensated_sum, estimate_joint, outcome_index, EstimateWithError, JointCounts, JointEstimate,
    MIN_TRANSCRIPTS,
};
pub use flips::{flip_algebra_residual, flip_moments};
pub use kernel::quadrature_kernel;
pub use oracle::{
    exact_mu_average, predicted_case, predicted_correlation, residual_row, ResidualRow, SliceCase,
};
pub use report::{
    compare, BranchRow, ComparisonReport, ComparisonRow, Moments, ReportMetadata, ReportSummary,
    SettingRow, REPORT_SCHEMA,
};

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    AtMost,
    AtLeast,
    Positive,
    /// Reported only.
    Info,
}

/// One named check with its measured value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: Bound::AtMost,
            limit,
            pass: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: Bound::AtLeast,
            limit,
            pass: value >= limit,
        }
    }

    pub fn positive(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: Bound::Positive,
            limit: 0.0,
            pass: value > 0.0,
        }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: Bound::Info,
            limit: f64::NAN,
            pass: true,
        }
    }

    /// A yes/no condition, reported as 1 or 0.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match (self.bound, self.pass) {
            (Bound::Info, _) => "INFO",
            (_, true) => "PASS",
            (_, false) => "FAIL",
        };
        write!(f, "{status} {}: {:.6e}", self.name, self.value)?;
        match self.bound {
            Bound::AtMost => write!(f, " (≤ {:.1e})", self.limit),
            Bound::AtLeast => write!(f, " (≥ {:.1e})", self.limit),
            Bound::Positive => write!(f, " (> 0)"),
            Bound::Info => Ok(()),
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
