//! Solved plans with their costs, feasibility and run statistics, and the
//! solution file format.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{
    check_feasibility, evaluate_objective, AssignmentPlan, CostBreakdown, FeasibilityReport, InvestmentPlan, ModelError,
    PlanningInstance,
};
use crate::Scalar;

pub const SOLUTION_VERSION: &str = "charge-plan-solution/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Centralized,
    Admm,
    Base,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Centralized => "centralized",
            Method::Admm => "admm",
            Method::Base => "base",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Optimal,
    Converged,
    NotConverged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub method: Method,
    pub status: RunStatus,
    pub iterations: usize,
    /// Wall time of the solve. Not written to solution files.
    #[serde(skip)]
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution<S> {
    pub investment: InvestmentPlan<S>,
    pub assignment: AssignmentPlan<S>,
    pub cost: CostBreakdown<S>,
    pub feasibility: FeasibilityReport<S>,
    pub stats: SolverStats,
}

impl<S: Scalar> Solution<S> {
    /// Evaluates and checks a plan pair against `inst`.
    pub fn assemble(
        inst: &PlanningInstance<S>,
        investment: InvestmentPlan<S>,
        assignment: AssignmentPlan<S>,
        tol: S,
        stats: SolverStats,
    ) -> Result<Self, ModelError> {
        let cost = evaluate_objective(inst, &investment, &assignment)?;
        let feasibility = check_feasibility(inst, &investment, &assignment, tol)?;
        Ok(Solution {
            investment,
            assignment,
            cost,
            feasibility,
            stats,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AssignmentEntry<S> {
    pub t: usize,
    pub i: usize,
    pub j: usize,
    pub value: S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", deny_unknown_fields)]
pub struct SolutionFile<S> {
    pub version: String,
    /// SHA-256 of the instance file the solution was computed from.
    pub instance_sha256: String,
    pub method: Method,
    pub status: RunStatus,
    pub iterations: usize,
    pub n_locations: usize,
    pub n_slots: usize,
    pub capacity: Vec<S>,
    pub assignments: Vec<AssignmentEntry<S>>,
    pub cost: CostBreakdown<S>,
    pub feasibility: FeasibilityReport<S>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl<S: Scalar> SolutionFile<S> {
    pub fn from_solution(sol: &Solution<S>, instance_bytes: &[u8]) -> Self {
        SolutionFile {
            version: SOLUTION_VERSION.into(),
            instance_sha256: sha256_hex(instance_bytes),
            method: sol.stats.method,
            status: sol.stats.status,
            iterations: sol.stats.iterations,
            n_locations: sol.assignment.n_locations,
            n_slots: sol.assignment.n_slots,
            capacity: sol.investment.capacity.clone(),
            assignments: sol
                .assignment
                .triplets()
                .into_iter()
                .map(|(t, i, j, value)| AssignmentEntry { t, i, j, value })
                .collect(),
            cost: sol.cost,
            feasibility: sol.feasibility.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let f: Self = serde_json::from_str(text)?;
        if f.version != SOLUTION_VERSION {
            return Err(ModelError::Version(f.version));
        }
        Ok(f)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks the recorded checksum against the bytes of an instance file.
    pub fn matches_instance(&self, instance_bytes: &[u8]) -> bool {
        self.instance_sha256 == sha256_hex(instance_bytes)
    }

    pub fn plans(&self) -> Result<(InvestmentPlan<S>, AssignmentPlan<S>), ModelError> {
        let trip: Vec<_> = self.assignments.iter().map(|e| (e.t, e.i, e.j, e.value)).collect();
        Ok((
            InvestmentPlan {
                capacity: self.capacity.clone(),
            },
            AssignmentPlan::from_triplets(self.n_locations, self.n_slots, &trip)?,
        ))
    }
}
