use super::{AssignCost, AssignmentPlan, CostBreakdown, InvestmentPlan, ModelError, PlanningInstance};
use crate::Scalar;

pub(crate) fn check_dims<S: Scalar>(
    inst: &PlanningInstance<S>,
    inv: &InvestmentPlan<S>,
    asg: &AssignmentPlan<S>,
) -> Result<(), ModelError> {
    if inv.capacity.len() != inst.n_locations {
        return Err(ModelError::dim("capacity vector", inst.n_locations, inv.capacity.len()));
    }
    if asg.n_locations != inst.n_locations {
        return Err(ModelError::dim("assignment locations", inst.n_locations, asg.n_locations));
    }
    if asg.n_slots != inst.n_slots {
        return Err(ModelError::dim("assignment slots", inst.n_slots, asg.n_slots));
    }
    if asg.values.len() != asg.n_slots * asg.pairs.len() {
        return Err(ModelError::dim("assignment values", asg.n_slots * asg.pairs.len(), asg.values.len()));
    }
    if let Some(&(i, j)) = asg.pairs.iter().find(|&&(i, j)| i >= inst.n_locations || j >= inst.n_locations) {
        return Err(ModelError::invalid("assignment pair", format!("({i}, {j}) out of range")));
    }
    Ok(())
}

/// Investment `sum_i c_i (pi_0 + pi_i)` and assignment
/// `sum_t sum_ij E_t z[t][i][j] L_ij` of a plan.
pub fn evaluate_objective<S: Scalar>(
    inst: &PlanningInstance<S>,
    inv: &InvestmentPlan<S>,
    asg: &AssignmentPlan<S>,
) -> Result<CostBreakdown<S>, ModelError> {
    check_dims(inst, inv, asg)?;
    let investment: S = inv
        .capacity
        .iter()
        .enumerate()
        .map(|(i, &c)| c * inst.unit_capacity_cost(i))
        .sum();
    let np = asg.pairs.len();
    let mut assignment = S::zero();
    for t in 0..asg.n_slots {
        let e = inst.recurrence[t];
        for (p, &(i, j)) in asg.pairs.iter().enumerate() {
            let v = asg.values[t * np + p];
            if v == S::zero() {
                continue;
            }
            let kind = if i == j {
                "diagonal"
            } else {
                match inst.assign_cost[i][j] {
                    AssignCost::Allowed(l) => {
                        assignment = assignment + e * v * l;
                        continue;
                    }
                    AssignCost::Forbidden => "forbidden",
                }
            };
            return Err(ModelError::StructuralZero {
                kind,
                i,
                j,
                t,
                value: v.as_f64(),
            });
        }
    }
    Ok(CostBreakdown {
        investment,
        assignment,
        total: investment + assignment,
    })
}

/// Delay-aware net charging demand `alpha F - outflow + delayed inflow` for
/// every slot and location, `[t][i]`. Inflow departure slots wrap cyclically.
pub fn net_demand_matrix<S: Scalar>(inst: &PlanningInstance<S>, asg: &AssignmentPlan<S>) -> Vec<Vec<S>> {
    let (n, nt) = (inst.n_locations, inst.n_slots);
    let mut net: Vec<Vec<S>> = (0..nt).map(|t| (0..n).map(|i| inst.demand(t, i)).collect()).collect();
    let np = asg.pairs.len();
    for t in 0..nt {
        for (p, &(i, j)) in asg.pairs.iter().enumerate() {
            let v = asg.values[t * np + p];
            if v == S::zero() {
                continue;
            }
            net[t][i] = net[t][i] - v;
            let arrive = (t + inst.delay[i][j]) % nt;
            net[arrive][j] = net[arrive][j] + v;
        }
    }
    net
}

/// Net charging demand at location `i` in slot `t`.
///
/// # Panics
/// If `i` or `t` is out of range.
pub fn net_charging_demand<S: Scalar>(inst: &PlanningInstance<S>, asg: &AssignmentPlan<S>, i: usize, t: usize) -> S {
    assert!(i < inst.n_locations && t < inst.n_slots, "index (i={i}, t={t}) out of range");
    let nt = inst.n_slots;
    let mut v = inst.demand(t, i);
    for (p, &(a, b)) in asg.pairs.iter().enumerate() {
        if a == i {
            v = v - asg.at(t, p);
        }
        if b == i {
            let depart = (t + nt - inst.delay[a][b] % nt) % nt;
            v = v + asg.at(depart, p);
        }
    }
    v
}

/// Smallest capacity per location that covers `beta * net demand` in every
/// slot, i.e. `max(0, max_t beta * net[t][i])`.
pub fn required_capacity<S: Scalar>(inst: &PlanningInstance<S>, asg: &AssignmentPlan<S>) -> Vec<S> {
    let net = net_demand_matrix(inst, asg);
    (0..inst.n_locations)
        .map(|i| net.iter().fold(S::zero(), |m, row| m.max(inst.beta * row[i])))
        .collect()
}
