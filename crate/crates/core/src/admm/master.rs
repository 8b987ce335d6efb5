use super::AdmmError;
use crate::model::{required_capacity, AssignmentPlan, PlanningInstance};
use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct MasterSolution<S> {
    pub c_tilde: Vec<S>,
    /// Set when the budget forced a projection.
    pub budget_binding: bool,
}

/// Coordination step with assignments fixed: each copy `c_tilde_i` minimizes
/// `lambda_i (x - c_i) + rho/2 (x - c_i)^2` over `D_i <= x <= cap_i`, where
/// `D_i` is the capacity the fixed assignments require. The minimizer is
/// `min(max(c_i - lambda_i / rho, D_i), cap_i)`. When the copies then exceed
/// the budget they are projected onto it.
pub fn solve_master<S: Scalar>(
    inst: &PlanningInstance<S>,
    c: &[S],
    lambda: &[S],
    z: &AssignmentPlan<S>,
    rho: S,
    capacity_cap: S,
) -> Result<MasterSolution<S>, AdmmError> {
    let need = required_capacity(inst, z);
    let cap: Vec<S> = inst.capacity_max.iter().map(|&m| m.min(capacity_cap)).collect();
    master_closed_form(c, lambda, &need, &cap, rho).and_then(|ct| {
        let w: Vec<S> = (0..inst.n_locations).map(|i| inst.unit_capacity_cost(i)).collect();
        Ok(apply_budget(ct, &w, inst.budget, &need, &cap))
    })
}

/// `min(max(c_i - lambda_i / rho, need_i), cap_i)` for every location.
pub fn master_closed_form<S: Scalar>(c: &[S], lambda: &[S], need: &[S], cap: &[S], rho: S) -> Result<Vec<S>, AdmmError> {
    (0..c.len())
        .map(|i| {
            if need[i] > cap[i] {
                return Err(AdmmError::MasterInfeasible {
                    location: i,
                    required: need[i].as_f64(),
                    limit: cap[i].as_f64(),
                });
            }
            Ok((c[i] - lambda[i] / rho).max(need[i]).min(cap[i]))
        })
        .collect()
}

/// Leaves `x` alone when it fits the budget; otherwise returns its Euclidean
/// projection onto `{sum w_i y_i <= budget, lo_i <= y_i <= hi_i}`. If even the
/// lower bounds exceed the budget they are relaxed to zero.
pub(crate) fn apply_budget<S: Scalar>(x: Vec<S>, w: &[S], budget: S, lo: &[S], hi: &[S]) -> MasterSolution<S> {
    let spend: S = x.iter().zip(w).map(|(&a, &b)| a * b).sum();
    if spend <= budget {
        return MasterSolution {
            c_tilde: x,
            budget_binding: false,
        };
    }
    let floor_spend: S = lo.iter().zip(w).map(|(&a, &b)| a * b).sum();
    let zeros = vec![S::zero(); x.len()];
    let lo = if floor_spend > budget { &zeros[..] } else { lo };
    let at = |mu: S| -> Vec<S> { (0..x.len()).map(|i| (x[i] - mu * w[i]).max(lo[i]).min(hi[i].max(lo[i]))).collect() };
    let cost = |y: &[S]| -> S { y.iter().zip(w).map(|(&a, &b)| a * b).sum() };
    let (mut a, mut b) = (S::zero(), S::one());
    while cost(&at(b)) > budget && b < S::max_value() / S::lit(4.0) {
        b = b * S::lit(2.0);
    }
    for _ in 0..200 {
        let m = (a + b) * S::lit(0.5);
        if cost(&at(m)) > budget {
            a = m;
        } else {
            b = m;
        }
    }
    MasterSolution {
        c_tilde: at(b),
        budget_binding: true,
    }
}
