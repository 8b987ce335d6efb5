//! Problem data, decision variables, cost evaluation and feasibility checks.

mod eval;
pub(crate) use eval::check_dims;
mod feasibility;
mod instance;
mod pairs;
mod plan;

pub use eval::{evaluate_objective, net_charging_demand, net_demand_matrix, required_capacity};
pub use feasibility::{check_feasibility, FeasibilityReport, Residual};
pub use instance::{AssignCost, PlanningInstance, INSTANCE_VERSION};
pub use pairs::PairIndex;
pub use plan::{AssignmentPlan, CostBreakdown, InvestmentPlan};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid {what}: {detail}")]
    Invalid { what: String, detail: String },
    #[error("nonzero assignment {value} on {kind} cell (i={i}, j={j}, t={t})")]
    StructuralZero {
        kind: &'static str,
        i: usize,
        j: usize,
        t: usize,
        value: f64,
    },
    #[error("unsupported instance version {0:?}")]
    Version(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ModelError {
    pub(crate) fn invalid(what: impl Into<String>, detail: impl Into<String>) -> Self {
        ModelError::Invalid {
            what: what.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn dim(what: impl Into<String>, expected: usize, found: usize) -> Self {
        ModelError::Dimension {
            what: what.into(),
            expected,
            found,
        }
    }
}

#[cfg(test)]
mod tests;
