//! Exact solution of one location's subproblem with inflows held fixed.
//!
//! For a fixed capacity `c`, slot `t` must send away
//! `r_t = max(0, own_t + in_t - c / beta)` vehicles, filled neighbor by
//! neighbor in order of unit cost. That makes the objective a convex
//! piecewise quadratic in `c` whose kinks are known, so the minimizer is found
//! by a search over the kinks followed by one linear solve.

use super::AdmmError;
use crate::model::{PairIndex, PlanningInstance};
use crate::Scalar;

/// Result of [`solve_subproblem`].
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSolution<S> {
    pub capacity: S,
    /// `outflow[t][k]` is the flow on the `k`-th pair leaving the location,
    /// in the order of `PairIndex::outgoing`.
    pub outflow: Vec<Vec<S>>,
    /// Investment plus assignment cost of the location's own decisions.
    pub local_cost: S,
}

/// Inputs of one subproblem that do not change between iterations.
pub(crate) struct LocalData<S> {
    pub own: Vec<S>,
    /// Positions in `PairIndex::outgoing` sorted by `(cost, destination)`.
    pub order: Vec<usize>,
    pub unit_cost: Vec<S>,
    pub weight: S,
    pub cap: S,
}

impl<S: Scalar> LocalData<S> {
    pub fn new(inst: &PlanningInstance<S>, index: &PairIndex<S>, i: usize, capacity_cap: S) -> Self {
        let outs = &index.outgoing[i];
        let mut order: Vec<usize> = (0..outs.len()).collect();
        order.sort_by(|&a, &b| {
            let (a, b) = (outs[a], outs[b]);
            index.cost[a]
                .partial_cmp(&index.cost[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(index.pairs[a].1.cmp(&index.pairs[b].1))
        });
        LocalData {
            own: (0..inst.n_slots).map(|t| inst.demand(t, i)).collect(),
            unit_cost: order.iter().map(|&k| index.cost[outs[k]]).collect(),
            order,
            weight: inst.unit_capacity_cost(i),
            cap: inst.capacity_max[i].min(capacity_cap),
        }
    }
}

/// Minimizes `f_i(c, z) - lambda c + rho/2 (c_tilde - c)^2` over the
/// location's capacity and outgoing assignments, with `inflow[t]` vehicles
/// arriving from elsewhere in slot `t`.
#[allow(clippy::too_many_arguments)]
pub fn solve_subproblem<S: Scalar>(
    i: usize,
    inst: &PlanningInstance<S>,
    index: &PairIndex<S>,
    c_tilde: S,
    lambda: S,
    inflow: &[S],
    rho: S,
    capacity_cap: S,
    assignment_cap: S,
) -> Result<LocalSolution<S>, AdmmError> {
    let data = LocalData::new(inst, index, i, capacity_cap);
    solve_local(i, inst, &data, c_tilde, lambda, inflow, rho, assignment_cap)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn solve_local<S: Scalar>(
    i: usize,
    inst: &PlanningInstance<S>,
    data: &LocalData<S>,
    c_tilde: S,
    lambda: S,
    inflow: &[S],
    rho: S,
    zcap: S,
) -> Result<LocalSolution<S>, AdmmError> {
    let nt = inst.n_slots;
    let beta = inst.beta;
    let deg = data.order.len();
    let zcap = if deg == 0 { S::zero() } else { zcap };
    let load: Vec<S> = (0..nt).map(|t| data.own[t] + inflow[t]).collect();
    let max_out = |t: usize| data.own[t].min(zcap * S::of_usize(deg));

    if beta == S::zero() {
        // capacity is decoupled from demand; nothing is worth sending
        let c = (c_tilde - (data.weight - lambda) / rho).max(S::zero()).min(data.cap);
        return Ok(LocalSolution {
            capacity: c,
            outflow: vec![vec![S::zero(); deg]; nt],
            local_cost: data.weight * c,
        });
    }

    let mut c_lo = S::zero();
    for t in 0..nt {
        c_lo = c_lo.max(beta * (load[t] - max_out(t)));
    }
    let c_hi = data.cap;
    if c_lo > c_hi {
        return Err(AdmmError::LocalInfeasible {
            location: i,
            required: c_lo.as_f64(),
            limit: c_hi.as_f64(),
        });
    }

    // kinks of the assignment term
    let tiers = if zcap.is_finite() { deg } else { deg.min(1) };
    let mut kinks: Vec<S> = Vec::with_capacity(nt * (tiers + 1));
    for &l in &load {
        for k in 0..=tiers {
            let b = beta * (l - S::of_usize(k) * zcap);
            if b > c_lo && b < c_hi {
                kinks.push(b);
            }
        }
    }
    kinks.sort_by(|a, b| a.partial_cmp(b).expect("finite kinks"));
    kinks.dedup();
    let mut pts = Vec::with_capacity(kinks.len() + 2);
    pts.push(c_lo);
    pts.extend(kinks);
    pts.push(c_hi);

    // marginal assignment saving per kW of capacity at c (constant between
    // kinks)
    let slope = |c: S| -> S {
        let mut s = S::zero();
        for t in 0..nt {
            let r = load[t] - c / beta;
            if r > S::zero() && deg > 0 {
                let tier = if zcap.is_finite() {
                    ((r / zcap).floor().to_usize().unwrap_or(usize::MAX)).min(deg - 1)
                } else {
                    0
                };
                s = s + inst.recurrence[t] * data.unit_cost[tier];
            }
        }
        s / beta
    };
    let a = data.weight - lambda - rho * c_tilde;
    // first interval whose right end has a non-negative derivative
    let n_int = pts.len() - 1;
    let (mut lo, mut hi) = (0usize, n_int);
    let mut cache: Vec<Option<S>> = vec![None; n_int];
    let mut slope_of = |k: usize| -> S {
        if let Some(v) = cache[k] {
            return v;
        }
        let mid = if pts[k + 1] > pts[k] { (pts[k] + pts[k + 1]) * S::lit(0.5) } else { pts[k] };
        let v = slope(mid);
        cache[k] = Some(v);
        v
    };
    while lo < hi {
        let mid = (lo + hi) / 2;
        if a + rho * pts[mid + 1] - slope_of(mid) >= S::zero() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let c = if lo == n_int {
        c_hi
    } else {
        let s = slope_of(lo);
        ((s - a) / rho).max(pts[lo]).min(pts[lo + 1])
    };

    let mut outflow = vec![vec![S::zero(); deg]; nt];
    let mut assign_cost = S::zero();
    for t in 0..nt {
        let mut r = (load[t] - c / beta).max(S::zero()).min(max_out(t));
        for k in 0..deg {
            if r <= S::zero() {
                break;
            }
            let v = r.min(zcap);
            outflow[t][data.order[k]] = v;
            assign_cost = assign_cost + inst.recurrence[t] * data.unit_cost[k] * v;
            r = r - v;
        }
    }
    Ok(LocalSolution {
        capacity: c,
        outflow,
        local_cost: data.weight * c + assign_cost,
    })
}
