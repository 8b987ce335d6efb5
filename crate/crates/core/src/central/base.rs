use std::time::Instant;

use super::CentralError;
use crate::model::{AssignmentPlan, InvestmentPlan, PairIndex, PlanningInstance};
use crate::solution::{Method, RunStatus, Solution, SolverStats};
use crate::Scalar;

/// Sizes every location for its own peak charging demand with no
/// reassignment.
pub fn solve_base_model<S: Scalar>(inst: &PlanningInstance<S>) -> Result<Solution<S>, CentralError> {
    let start = Instant::now();
    inst.validate()?;
    let capacity: Vec<S> = (0..inst.n_locations)
        .map(|i| (0..inst.n_slots).fold(S::zero(), |m, t| m.max(inst.beta * inst.demand(t, i))))
        .collect();
    for (i, (&c, &cmax)) in capacity.iter().zip(&inst.capacity_max).enumerate() {
        if c > cmax {
            return Err(CentralError::Infeasible(format!(
                "location {i} needs {c} kW without reassignment, above its limit {cmax}"
            )));
        }
    }
    let spend: S = capacity.iter().enumerate().map(|(i, &c)| c * inst.unit_capacity_cost(i)).sum();
    if spend > inst.budget {
        return Err(CentralError::Infeasible(format!("peak sizing costs {spend}, above the budget {}", inst.budget)));
    }
    let assignment = AssignmentPlan::zeros_for(&PairIndex::new(inst));
    let stats = SolverStats {
        method: Method::Base,
        status: RunStatus::Optimal,
        iterations: 0,
        wall_ms: 0.0,
    };
    let mut sol = Solution::assemble(inst, InvestmentPlan { capacity }, assignment, S::lit(1e-6), stats)?;
    sol.stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(sol)
}
