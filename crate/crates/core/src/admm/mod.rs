//! Distributed solution by the alternating direction method of multipliers.
//!
//! Each location owns its capacity `c_i` and its outgoing assignments; a
//! master step keeps a copy `c_tilde_i` of every capacity that must cover the
//! net demand the assignments produce, and the multipliers `lambda_i` price
//! the disagreement `c_tilde_i - c_i`.
//!
//! Two coordination modes are provided. [`Coordination::Lagged`] solves every
//! location against the inflows of the previous iteration and lets the master
//! lift `c_tilde` to the demand those assignments create. The default
//! [`Coordination::Consensus`] also keeps copies of every assignment at both
//! of its endpoints, so that a location's capacity constraint is enforced on
//! copies that are priced back to the sender.

mod consensus;
pub mod master;
pub mod subproblem;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{required_capacity, AssignmentPlan, InvestmentPlan, ModelError, PairIndex, PlanningInstance};
use crate::solution::{Method, RunStatus, Solution, SolverStats};
use crate::Scalar;

pub use master::{master_closed_form, solve_master, MasterSolution};
pub use subproblem::{solve_subproblem, LocalSolution};

use consensus::{project_capped_simplex, solve_block};
use master::apply_budget;
use subproblem::{solve_local, LocalData};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordination {
    /// Locations see the inflows of the previous iteration as fixed data.
    Lagged,
    /// Assignments are shared through penalized copies at both endpoints.
    #[default]
    Consensus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmConfig {
    pub rho: f64,
    pub max_iterations: usize,
    pub threshold: f64,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    pub coordination: Coordination,
    /// Upper bound on every capacity, on top of the instance's own bound.
    pub capacity_cap: f64,
    /// Upper bound on every assignment cell.
    pub assignment_cap: f64,
    /// Weight of the assignment copies relative to `rho * beta^2`.
    pub assignment_penalty: f64,
    /// Tolerance of the feasibility report attached to the solution.
    pub feasibility_tolerance: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rho: 0.1,
            max_iterations: 3000,
            threshold: 1e-4,
            threads: 0,
            coordination: Coordination::Consensus,
            capacity_cap: 1e7,
            assignment_cap: 1e4,
            assignment_penalty: 1.0,
            feasibility_tolerance: 1e-4,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<(), AdmmError> {
        let bad = |what: &str, v: f64| Err(AdmmError::Config(format!("{what} must be positive, got {v}")));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho", self.rho);
        }
        if !(self.threshold > 0.0) {
            return bad("threshold", self.threshold);
        }
        if self.max_iterations == 0 {
            return Err(AdmmError::Config("max_iterations must be at least 1".into()));
        }
        if !(self.capacity_cap >= 0.0) || !(self.assignment_cap > 0.0) {
            return Err(AdmmError::Config("capacity_cap and assignment_cap must be non-negative".into()));
        }
        if !(self.assignment_penalty > 0.0 && self.assignment_penalty.is_finite()) {
            return bad("assignment_penalty", self.assignment_penalty);
        }
        if !(self.feasibility_tolerance >= 0.0) {
            return bad("feasibility_tolerance", self.feasibility_tolerance);
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AdmmError {
    #[error("invalid ADMM configuration: {0}")]
    Config(String),
    #[error("location {location} is infeasible on its own: needs {required} kW, limit {limit} kW")]
    LocalInfeasible { location: usize, required: f64, limit: f64 },
    #[error("master step infeasible at location {location}: assignments need {required} kW, limit {limit} kW")]
    MasterInfeasible { location: usize, required: f64, limit: f64 },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One row of the residual trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub q_primal: f64,
    pub q_dual: f64,
    /// Disagreement between assignments and their copies, in vehicles.
    /// Always 0 for lagged coordination.
    pub q_assignment: f64,
    /// Cost of the plan extracted from this iterate.
    pub objective: f64,
    pub wall_ms: f64,
    pub budget_binding: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    pub iterations: usize,
    pub q_primal: f64,
    pub q_dual: f64,
    pub q_assignment: f64,
    /// Iteration whose plan was returned.
    pub returned_iteration: usize,
    /// Set if the budget projection was active in any iteration.
    pub budget_binding: bool,
    pub history: Vec<IterationRecord>,
    pub wall_ms: f64,
}

/// Assignment copies of the consensus mode. All vectors are indexed like
/// `AssignmentPlan::values`; inbound copies by departure slot.
#[derive(Clone, Debug, PartialEq)]
pub struct CopyState<S> {
    pub outbound: Vec<S>,
    pub inbound: Vec<S>,
    pub mu_out: Vec<S>,
    pub mu_in: Vec<S>,
}

/// Iterate after `k` completed iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState<S> {
    pub k: usize,
    pub c: Vec<S>,
    pub c_tilde: Vec<S>,
    /// Multipliers for the next iteration, `lambda[k+1]`.
    pub lambda: Vec<S>,
    /// Multipliers used in iteration `k`.
    pub lambda_used: Vec<S>,
    /// Multipliers used in iteration `k - 1`.
    pub lambda_before: Vec<S>,
    pub z: AssignmentPlan<S>,
    /// `z_in[i][t]`: vehicles arriving at `i` in slot `t` under `z`.
    pub z_in: Vec<Vec<S>>,
    pub copies: Option<CopyState<S>>,
    pub history: Vec<IterationRecord>,
}

/// `Q_primal = sum_i |c_tilde_i - c_i|` and
/// `Q_dual = sum_i |lambda_i[k] - lambda_i[k-1]|` of the last iteration.
pub fn residuals<S: Scalar>(state: &AdmmState<S>) -> (S, S) {
    let qp = state.c_tilde.iter().zip(&state.c).map(|(&a, &b)| (a - b).abs()).sum();
    let qd = state
        .lambda_used
        .iter()
        .zip(&state.lambda_before)
        .map(|(&a, &b)| (a - b).abs())
        .sum();
    (qp, qd)
}

/// `lambda + rho (c_tilde - c)`.
pub fn update_multipliers<S: Scalar>(lambda: &[S], c_tilde: &[S], c: &[S], rho: S) -> Vec<S> {
    assert!(lambda.len() == c_tilde.len() && c.len() == c_tilde.len(), "length mismatch");
    (0..lambda.len()).map(|i| lambda[i] + rho * (c_tilde[i] - c[i])).collect()
}

/// Vehicles arriving at every location in every slot:
/// `out[i][t] = sum_j z[(t - delay[j][i]) mod T][j][i]`.
pub fn transform_inflows<S: Scalar>(z: &AssignmentPlan<S>, delay: &[Vec<usize>]) -> Vec<Vec<S>> {
    let nt = z.n_slots;
    let np = z.pairs.len();
    let mut out = vec![vec![S::zero(); nt]; z.n_locations];
    for (p, &(j, i)) in z.pairs.iter().enumerate() {
        let tau = delay[j][i] % nt.max(1);
        for t in 0..nt {
            let dep = (t + nt - tau) % nt;
            out[i][t] = out[i][t] + z.values[dep * np + p];
        }
    }
    out
}

/// Extracted plan of an iterate: assignments as they are, capacities read from
/// `c_tilde` and lifted to the demand of the assignments.
fn extract<S: Scalar>(
    inst: &PlanningInstance<S>,
    index: &PairIndex<S>,
    c_tilde: &[S],
    z: &AssignmentPlan<S>,
) -> (InvestmentPlan<S>, S) {
    let need = required_capacity(inst, z);
    let capacity: Vec<S> = (0..inst.n_locations)
        .map(|i| c_tilde[i].max(need[i]).max(S::zero()).min(inst.capacity_max[i]))
        .collect();
    let np = index.len();
    let mut cost: S = capacity.iter().enumerate().map(|(i, &c)| c * inst.unit_capacity_cost(i)).sum();
    for t in 0..inst.n_slots {
        let e = inst.recurrence[t];
        for p in 0..np {
            cost = cost + e * index.cost[p] * z.values[t * np + p];
        }
    }
    (InvestmentPlan { capacity }, cost)
}

/// Step-by-step driver. [`run_admm`] is the usual entry point.
pub struct Admm<'a, S: Scalar> {
    inst: &'a PlanningInstance<S>,
    config: AdmmConfig,
    index: PairIndex<S>,
    local: Vec<LocalData<S>>,
    cap: Vec<S>,
    weight: Vec<S>,
    pool: Option<rayon::ThreadPool>,
    state: AdmmState<S>,
    start: Instant,
}

impl<'a, S: Scalar> Admm<'a, S> {
    pub fn new(inst: &'a PlanningInstance<S>, config: &AdmmConfig) -> Result<Self, AdmmError> {
        config.validate()?;
        inst.validate()?;
        let n = inst.n_locations;
        let index = PairIndex::new(inst);
        let ccap = S::lit(config.capacity_cap);
        let local = (0..n).map(|i| LocalData::new(inst, &index, i, ccap)).collect();
        let pool = if config.threads > 0 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.threads)
                    .build()
                    .map_err(|e| AdmmError::ThreadPool(e.to_string()))?,
            )
        } else {
            None
        };
        let z = AssignmentPlan::zeros_for(&index);
        let size = z.values.len();
        let copies = match config.coordination {
            Coordination::Lagged => None,
            Coordination::Consensus => Some(CopyState {
                outbound: vec![S::zero(); size],
                inbound: vec![S::zero(); size],
                mu_out: vec![S::zero(); size],
                mu_in: vec![S::zero(); size],
            }),
        };
        let state = AdmmState {
            k: 0,
            c: vec![S::zero(); n],
            c_tilde: vec![S::zero(); n],
            lambda: vec![S::zero(); n],
            lambda_used: vec![S::zero(); n],
            lambda_before: vec![S::zero(); n],
            z_in: vec![vec![S::zero(); inst.n_slots]; n],
            z,
            copies,
            history: Vec::new(),
        };
        Ok(Admm {
            inst,
            config: config.clone(),
            cap: inst.capacity_max.iter().map(|&m| m.min(ccap)).collect(),
            weight: (0..n).map(|i| inst.unit_capacity_cost(i)).collect(),
            index,
            local,
            pool,
            state,
            start: Instant::now(),
        })
    }

    pub fn state(&self) -> &AdmmState<S> {
        &self.state
    }

    pub fn pair_index(&self) -> &PairIndex<S> {
        &self.index
    }

    fn par_map<R: Send>(&self, n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
        match &self.pool {
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
            None => (0..n).into_par_iter().map(&f).collect(),
        }
    }

    /// Runs one iteration and returns its trajectory record.
    pub fn step(&mut self) -> Result<IterationRecord, AdmmError> {
        let rho = S::lit(self.config.rho);
        let (q_assignment, budget_binding) = match self.config.coordination {
            Coordination::Lagged => self.lagged_step(rho)?,
            Coordination::Consensus => self.consensus_step(rho)?,
        };
        let st = &mut self.state;
        st.k += 1;
        st.lambda_before = std::mem::replace(&mut st.lambda_used, st.lambda.clone());
        if st.k == 1 {
            st.lambda_before = st.lambda_used.clone();
        }
        st.lambda = update_multipliers(&st.lambda_used, &st.c_tilde, &st.c, rho);
        let (qp, qd) = residuals(st);
        let (_, objective) = extract(self.inst, &self.index, &st.c_tilde, &st.z);
        let rec = IterationRecord {
            k: st.k,
            q_primal: qp.as_f64(),
            q_dual: qd.as_f64(),
            q_assignment,
            objective: objective.as_f64(),
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
            budget_binding,
        };
        st.history.push(rec.clone());
        Ok(rec)
    }

    fn lagged_step(&mut self, rho: S) -> Result<(f64, bool), AdmmError> {
        let inst = self.inst;
        let zcap = S::lit(self.config.assignment_cap);
        let st = &self.state;
        let locals = self.par_map(inst.n_locations, |i| {
            solve_local(i, inst, &self.local[i], st.c_tilde[i], st.lambda[i], &st.z_in[i], rho, zcap)
        });
        let np = self.index.len();
        let mut z = AssignmentPlan::zeros_for(&self.index);
        let mut c = Vec::with_capacity(inst.n_locations);
        for (i, sol) in locals.into_iter().enumerate() {
            let sol = sol?;
            for (t, row) in sol.outflow.iter().enumerate() {
                for (k, &v) in row.iter().enumerate() {
                    z.values[t * np + self.index.outgoing[i][k]] = v;
                }
            }
            c.push(sol.capacity);
        }
        let need = required_capacity(inst, &z);
        let ct = master_closed_form(&c, &self.state.lambda, &need, &self.cap, rho)?;
        let ms = apply_budget(ct, &self.weight, inst.budget, &need, &self.cap);
        let st = &mut self.state;
        st.z_in = transform_inflows(&z, &inst.delay);
        st.z = z;
        st.c = c;
        st.c_tilde = ms.c_tilde;
        Ok((0.0, ms.budget_binding))
    }

    fn consensus_step(&mut self, rho: S) -> Result<(f64, bool), AdmmError> {
        let inst = self.inst;
        let nt = inst.n_slots;
        let np = self.index.len();
        let beta = inst.beta;
        let zcap = S::lit(self.config.assignment_cap);
        let zpen = rho * beta.max(S::one()).powi(2) * S::lit(self.config.assignment_penalty);
        let two = S::lit(2.0);
        let st = &self.state;
        let cp = st.copies.as_ref().expect("consensus state");

        // owners: capacity against its copy, assignments against both copies
        let owned = self.par_map(inst.n_locations, |i| {
            let c = (st.c_tilde[i] - (self.weight[i] - st.lambda[i]) / rho).max(S::zero()).min(self.cap[i]);
            let order = &self.index.outgoing[i];
            let mut rows = vec![S::zero(); nt * order.len()];
            let mut m = vec![S::zero(); order.len()];
            for t in 0..nt {
                for (k, &p) in order.iter().enumerate() {
                    let x = t * np + p;
                    m[k] = (zpen * (cp.outbound[x] + cp.inbound[x]) + cp.mu_out[x] + cp.mu_in[x]
                        - inst.recurrence[t] * self.index.cost[p])
                        / (two * zpen);
                }
                project_capped_simplex(&mut m, zcap, inst.demand(t, i));
                rows[t * order.len()..(t + 1) * order.len()].copy_from_slice(&m);
            }
            (c, rows)
        });
        let mut z = AssignmentPlan::zeros_for(&self.index);
        let mut c = Vec::with_capacity(inst.n_locations);
        for (i, (ci, rows)) in owned.into_iter().enumerate() {
            let order = &self.index.outgoing[i];
            for t in 0..nt {
                for (k, &p) in order.iter().enumerate() {
                    z.values[t * np + p] = rows[t * order.len() + k];
                }
            }
            c.push(ci);
        }

        // master blocks: capacity copy with the copies of incident cells
        let lambda = &st.lambda;
        let index = &self.index;
        let zr = &z;
        let blocks = self.par_map(inst.n_locations, |i| -> Result<_, AdmmError> {
            let outs = &index.outgoing[i];
            let ins = &index.incoming[i];
            let copies = outs.len() + ins.len();
            let mut s: Vec<S> = (0..nt).map(|t| inst.demand(t, i)).collect();
            for &p in outs {
                for t in 0..nt {
                    let x = t * np + p;
                    s[t] = s[t] - (zr.values[x] - cp.mu_out[x] / zpen);
                }
            }
            for &p in ins {
                for dep in 0..nt {
                    let x = dep * np + p;
                    let t = index.arrival(p, dep);
                    s[t] = s[t] + (zr.values[x] - cp.mu_in[x] / zpen);
                }
            }
            let a = c[i] - lambda[i] / rho;
            let (x, shift) = if beta == S::zero() {
                (a.max(S::zero()).min(self.cap[i]), vec![S::zero(); nt])
            } else if copies == 0 {
                let need = s.iter().fold(S::zero(), |m, &v| m.max(beta * v));
                if need > self.cap[i] {
                    return Err(AdmmError::MasterInfeasible {
                        location: i,
                        required: need.as_f64(),
                        limit: self.cap[i].as_f64(),
                    });
                }
                (a.max(need).min(self.cap[i]), vec![S::zero(); nt])
            } else {
                let kappa = zpen / (beta * S::of_usize(copies));
                let x = solve_block(rho, a, kappa, beta, &s, S::zero(), self.cap[i]);
                let per = S::one() / S::of_usize(copies);
                (x, s.iter().map(|&v| (v - x / beta).max(S::zero()) * per).collect())
            };
            let mut out_rows = Vec::with_capacity(outs.len() * nt);
            for &p in outs {
                for t in 0..nt {
                    let xi = t * np + p;
                    out_rows.push(zr.values[xi] - cp.mu_out[xi] / zpen + shift[t]);
                }
            }
            let mut in_rows = Vec::with_capacity(ins.len() * nt);
            for &p in ins {
                for dep in 0..nt {
                    let xi = dep * np + p;
                    in_rows.push(zr.values[xi] - cp.mu_in[xi] / zpen - shift[index.arrival(p, dep)]);
                }
            }
            Ok((x, out_rows, in_rows))
        });
        let mut ct = Vec::with_capacity(inst.n_locations);
        let mut outbound = vec![S::zero(); z.values.len()];
        let mut inbound = vec![S::zero(); z.values.len()];
        for (i, b) in blocks.into_iter().enumerate() {
            let (x, out_rows, in_rows) = b?;
            for (k, &p) in self.index.outgoing[i].iter().enumerate() {
                for t in 0..nt {
                    outbound[t * np + p] = out_rows[k * nt + t];
                }
            }
            for (k, &p) in self.index.incoming[i].iter().enumerate() {
                for t in 0..nt {
                    inbound[t * np + p] = in_rows[k * nt + t];
                }
            }
            ct.push(x);
        }
        let zeros = vec![S::zero(); ct.len()];
        let ms = apply_budget(ct, &self.weight, inst.budget, &zeros, &self.cap);

        let st = &mut self.state;
        let cp = st.copies.as_mut().expect("consensus state");
        let mut q_assignment = S::zero();
        for x in 0..z.values.len() {
            let (ro, ri) = (outbound[x] - z.values[x], inbound[x] - z.values[x]);
            cp.mu_out[x] = cp.mu_out[x] + zpen * ro;
            cp.mu_in[x] = cp.mu_in[x] + zpen * ri;
            q_assignment = q_assignment + ro.abs() + ri.abs();
        }
        cp.outbound = outbound;
        cp.inbound = inbound;
        st.z_in = transform_inflows(&z, &inst.delay);
        st.z = z;
        st.c = c;
        st.c_tilde = ms.c_tilde;
        Ok((q_assignment.as_f64(), ms.budget_binding))
    }

    /// Plan extracted from the current iterate.
    pub fn current_plan(&self) -> (InvestmentPlan<S>, AssignmentPlan<S>) {
        let (inv, _) = extract(self.inst, &self.index, &self.state.c_tilde, &self.state.z);
        (inv, self.state.z.clone())
    }
}

/// Iterates until `Q_primal` and `Q_dual` (and, for consensus coordination,
/// the assignment residual) are at most the threshold or the iteration limit
/// is reached. A converged run returns the last iterate;
/// otherwise the cheapest extracted iterate that fits the budget is returned
/// with `converged = false`.
pub fn run_admm<S: Scalar>(
    inst: &PlanningInstance<S>,
    config: &AdmmConfig,
) -> Result<(Solution<S>, ConvergenceReport), AdmmError> {
    let mut admm = Admm::new(inst, config)?;
    let mut best: Option<(S, usize, InvestmentPlan<S>, AssignmentPlan<S>)> = None;
    let mut converged = false;
    let mut budget_binding = false;
    let mut last = None;
    for _ in 0..config.max_iterations {
        let rec = admm.step()?;
        budget_binding |= rec.budget_binding;
        // the capacity residuals say nothing about the assignment copies, so
        // consensus runs also wait for those to agree
        let done = rec.q_primal <= config.threshold
            && rec.q_dual <= config.threshold
            && rec.q_assignment <= config.threshold;
        let (inv, asg) = admm.current_plan();
        let spend: S = inv.capacity.iter().zip(&admm.weight).map(|(&c, &w)| c * w).sum();
        let obj = S::lit(rec.objective);
        if spend <= inst.budget && best.as_ref().is_none_or(|b| obj < b.0) {
            best = Some((obj, rec.k, inv.clone(), asg.clone()));
        }
        if done {
            converged = true;
            last = Some((rec.k, inv, asg));
            break;
        }
    }
    let (returned_iteration, inv, asg) = match (last, best) {
        (Some(l), _) => l,
        (None, Some((_, k, inv, asg))) => (k, inv, asg),
        (None, None) => {
            let (inv, asg) = admm.current_plan();
            (admm.state.k, inv, asg)
        }
    };
    let st = admm.state();
    let (qp, qd) = residuals(st);
    let wall_ms = admm.start.elapsed().as_secs_f64() * 1e3;
    let stats = SolverStats {
        method: Method::Admm,
        status: if converged { RunStatus::Converged } else { RunStatus::NotConverged },
        iterations: st.k,
        wall_ms,
    };
    let report = ConvergenceReport {
        converged,
        iterations: st.k,
        q_primal: qp.as_f64(),
        q_dual: qd.as_f64(),
        q_assignment: st.history.last().map_or(0.0, |r| r.q_assignment),
        returned_iteration,
        budget_binding,
        history: st.history.clone(),
        wall_ms,
    };
    let sol = Solution::assemble(inst, inv, asg, S::lit(config.feasibility_tolerance), stats)?;
    Ok((sol, report))
}

/// Writes the trajectory as CSV with columns `k, Q_primal, Q_dual, objective,
/// wall_ms`.
pub fn write_convergence_csv<W: Write>(report: &ConvergenceReport, out: W) -> Result<(), AdmmError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "Q_primal", "Q_dual", "objective", "wall_ms"])
        .map_err(csv_err)?;
    for r in &report.history {
        w.write_record([
            r.k.to_string(),
            r.q_primal.to_string(),
            r.q_dual.to_string(),
            r.objective.to_string(),
            format!("{:.3}", r.wall_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_convergence_csv(report: &ConvergenceReport, path: impl AsRef<Path>) -> Result<(), AdmmError> {
    let f = std::fs::File::create(path)?;
    write_convergence_csv(report, std::io::BufWriter::new(f))
}

fn csv_err(e: csv::Error) -> AdmmError {
    AdmmError::Io(std::io::Error::other(e))
}
