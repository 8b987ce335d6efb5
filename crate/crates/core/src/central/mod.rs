//! The joint problem as one sparse LP, solved by the embedded simplex or
//! exported for external solvers, plus the no-reassignment baseline.

mod base;
mod lp;
pub mod mps;
pub mod simplex;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use base::solve_base_model;
pub use lp::{assign_col, build_lp, capacity_col, IndexOverflow, RowKey, RowSense, StandardFormLP, VarKey};
pub use mps::{export_model, parse_mps, read_mps, to_mps_string, MpsError};
pub use simplex::{LpSolution, SimplexError, SimplexOptions};

use crate::model::{required_capacity, AssignmentPlan, InvestmentPlan, ModelError, PairIndex, PlanningInstance};
use crate::solution::{Method, RunStatus, Solution, SolverStats};
use crate::Scalar;

/// Tolerances and limits for the centralized solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub primal_tolerance: f64,
    /// Reduced-cost tolerance relative to the largest cost.
    pub optimality_tolerance: f64,
    pub max_iterations: usize,
    pub refactor_interval: usize,
    /// Tolerance of the feasibility report attached to the solution.
    pub feasibility_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            primal_tolerance: 1e-8,
            optimality_tolerance: 1e-7,
            max_iterations: 1_000_000,
            refactor_interval: 100,
            feasibility_tolerance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn simplex_options<S: Scalar>(&self) -> SimplexOptions<S> {
        SimplexOptions {
            primal_tol: S::lit(self.primal_tolerance),
            dual_tol: S::lit(self.optimality_tolerance),
            max_iterations: self.max_iterations,
            refactor_interval: self.refactor_interval.max(1),
            ..SimplexOptions::default()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CentralError {
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unbounded LP (internal error: all costs are non-negative): {0}")]
    Unbounded(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Index(#[from] IndexOverflow),
}

impl CentralError {
    fn from_simplex<S: Scalar>(e: SimplexError, lp: &StandardFormLP<S>) -> Self {
        match e {
            SimplexError::Infeasible { row } => {
                let what = lp.rows.get(row).map_or_else(|| "bounds".to_string(), |r| format!("{r:?}"));
                CentralError::Infeasible(format!("no plan satisfies {what}"))
            }
            SimplexError::Unbounded { col } => CentralError::Unbounded(format!("{:?}", lp.vars.get(col))),
            SimplexError::IterationLimit(k) => CentralError::IterationLimit(k),
            SimplexError::Numerical(m) | SimplexError::Unsupported(m) => CentralError::Numerical(m),
        }
    }
}

/// Maps an LP point back to plans. Assignments below `drop` are zeroed and
/// capacities are lifted to cover the resulting net demand.
pub fn plans_from_lp<S: Scalar>(
    inst: &PlanningInstance<S>,
    lp: &StandardFormLP<S>,
    x: &[S],
    drop: S,
) -> (InvestmentPlan<S>, AssignmentPlan<S>) {
    let index = PairIndex::new(inst);
    let mut asg = AssignmentPlan::zeros_for(&index);
    let mut capacity = vec![S::zero(); inst.n_locations];
    let np = index.len();
    for (col, key) in lp.vars.iter().enumerate() {
        match *key {
            VarKey::Capacity { i } => capacity[i] = x[col],
            VarKey::Assign { i, j, t } => {
                let p = index.find(i, j).expect("LP column on a free pair");
                asg.values[t * np + p] = if x[col] > drop { x[col] } else { S::zero() };
            }
        }
    }
    let need = required_capacity(inst, &asg);
    for i in 0..inst.n_locations {
        capacity[i] = capacity[i].max(need[i]).max(S::zero()).min(inst.capacity_max[i]);
    }
    (InvestmentPlan { capacity }, asg)
}

/// Solves the joint LP with the embedded simplex.
pub fn solve_centralized<S: Scalar>(inst: &PlanningInstance<S>, config: &SolverConfig) -> Result<Solution<S>, CentralError> {
    let start = Instant::now();
    inst.validate()?;
    let lp = build_lp(inst)?;
    let res = simplex::solve(&lp, &config.simplex_options()).map_err(|e| CentralError::from_simplex(e, &lp))?;
    let (inv, asg) = plans_from_lp(inst, &lp, &res.x, S::lit(1e-9));
    let stats = SolverStats {
        method: Method::Centralized,
        status: RunStatus::Optimal,
        iterations: res.iterations + res.primal_iterations,
        wall_ms: 0.0,
    };
    let mut sol = Solution::assemble(inst, inv, asg, S::lit(config.feasibility_tolerance), stats)?;
    sol.stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(sol)
}
