use serde::{Deserialize, Serialize};

use super::eval::{check_dims, net_demand_matrix};
use super::{AssignmentPlan, InvestmentPlan, ModelError, PlanningInstance};
use crate::Scalar;

/// Worst violation of one constraint family and where it occurs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Residual<S> {
    pub violation: S,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub t: Option<usize>,
}

impl<S: Scalar> Residual<S> {
    fn none() -> Self {
        Residual {
            violation: S::zero(),
            i: None,
            j: None,
            t: None,
        }
    }

    fn offer(&mut self, v: S, i: Option<usize>, j: Option<usize>, t: Option<usize>) {
        if v > self.violation {
            *self = Residual { violation: v, i, j, t };
        }
    }
}

/// Worst residual per constraint family in raw units: currency for the
/// budget, kW for capacities, vehicles for flows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct FeasibilityReport<S> {
    pub tolerance: S,
    pub feasible: bool,
    pub budget: Residual<S>,
    pub capacity_bounds: Residual<S>,
    pub flow_conservation: Residual<S>,
    pub capacity_satisfaction: Residual<S>,
    pub non_negativity: Residual<S>,
    pub diagonal: Residual<S>,
    pub range: Residual<S>,
}

impl<S: Scalar> FeasibilityReport<S> {
    pub fn families(&self) -> [(&'static str, &Residual<S>); 7] {
        [
            ("budget", &self.budget),
            ("capacity_bounds", &self.capacity_bounds),
            ("flow_conservation", &self.flow_conservation),
            ("capacity_satisfaction", &self.capacity_satisfaction),
            ("non_negativity", &self.non_negativity),
            ("diagonal", &self.diagonal),
            ("range", &self.range),
        ]
    }

    pub fn worst(&self) -> S {
        self.families().iter().fold(S::zero(), |m, (_, r)| m.max(r.violation))
    }
}

pub fn check_feasibility<S: Scalar>(
    inst: &PlanningInstance<S>,
    inv: &InvestmentPlan<S>,
    asg: &AssignmentPlan<S>,
    tol: S,
) -> Result<FeasibilityReport<S>, ModelError> {
    check_dims(inst, inv, asg)?;
    let (n, nt) = (inst.n_locations, inst.n_slots);
    let np = asg.pairs.len();

    let mut budget = Residual::none();
    let spend: S = (0..n).map(|i| inv.capacity[i] * inst.unit_capacity_cost(i)).sum();
    budget.offer(spend - inst.budget, None, None, None);

    let mut bounds = Residual::none();
    for (i, &c) in inv.capacity.iter().enumerate() {
        bounds.offer(c - inst.capacity_max[i], Some(i), None, None);
        bounds.offer(-c, Some(i), None, None);
        if c.is_nan() {
            bounds.offer(S::infinity(), Some(i), None, None);
        }
    }

    let mut flow = Residual::none();
    let mut nonneg = Residual::none();
    let mut diag = Residual::none();
    let mut range = Residual::none();
    let mut out = vec![S::zero(); n];
    for t in 0..nt {
        out.iter_mut().for_each(|o| *o = S::zero());
        for (p, &(i, j)) in asg.pairs.iter().enumerate() {
            let v = asg.values[t * np + p];
            out[i] = out[i] + v;
            nonneg.offer(-v, Some(i), Some(j), Some(t));
            if i == j {
                diag.offer(v.abs(), Some(i), Some(j), Some(t));
            } else if inst.assign_cost[i][j].is_forbidden() {
                range.offer(v.abs(), Some(i), Some(j), Some(t));
            }
        }
        for i in 0..n {
            flow.offer(out[i] - inst.demand(t, i), Some(i), None, Some(t));
        }
    }

    let mut cap = Residual::none();
    let net = net_demand_matrix(inst, asg);
    for (t, row) in net.iter().enumerate() {
        for i in 0..n {
            let load = inst.beta * row[i];
            cap.offer(load - inv.capacity[i], Some(i), None, Some(t));
            cap.offer(-load, Some(i), None, Some(t));
        }
    }

    let mut report = FeasibilityReport {
        tolerance: tol,
        feasible: false,
        budget,
        capacity_bounds: bounds,
        flow_conservation: flow,
        capacity_satisfaction: cap,
        non_negativity: nonneg,
        diagonal: diag,
        range,
    };
    report.feasible = report.families().iter().all(|(_, r)| r.violation <= tol);
    Ok(report)
}
