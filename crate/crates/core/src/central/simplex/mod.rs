//! Bounded revised simplex: dual phase from the all-logical basis, then a
//! primal clean-up phase once perturbations are removed.
//!
//! Each row `i` gets a logical `s_i` with `A x + s = b`; the row sense fixes the
//! logical's bounds. The starting basis is the identity, which is dual
//! feasible whenever costs are non-negative on columns at their lower bound.

mod lu;

use std::time::Instant;

use lu::Factor;

use super::lp::{RowSense, StandardFormLP};
use crate::Scalar;

#[derive(Clone, Debug)]
pub struct SimplexOptions<S> {
    /// Primal feasibility tolerance on scaled values.
    pub primal_tol: S,
    /// Reduced-cost tolerance, relative to the largest scaled cost.
    pub dual_tol: S,
    pub max_iterations: usize,
    pub refactor_interval: usize,
    /// Relative size of the cost perturbation used against dual degeneracy;
    /// zero disables it.
    pub perturbation: S,
}

impl<S: Scalar> Default for SimplexOptions<S> {
    fn default() -> Self {
        SimplexOptions {
            primal_tol: S::lit(1e-8).max(S::epsilon() * S::lit(100.0)),
            dual_tol: S::lit(1e-7).max(S::epsilon() * S::lit(100.0)),
            max_iterations: 1_000_000,
            refactor_interval: 100,
            perturbation: S::lit(5e-7).max(S::epsilon() * S::lit(20.0)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    /// Row duals `y` with reduced costs `c - A^T y`.
    pub row_duals: Vec<S>,
    pub objective: S,
    pub iterations: usize,
    pub primal_iterations: usize,
    pub refactorizations: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum SimplexError {
    #[error("LP is infeasible (row {row} cannot be satisfied)")]
    Infeasible { row: usize },
    #[error("LP is unbounded along column {col}")]
    Unbounded { col: usize },
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("unsupported LP: {0}")]
    Unsupported(String),
}

const NIL: usize = usize::MAX;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Status {
    Basic,
    Lower,
    Upper,
    Free,
}

struct Work<S> {
    m: usize,
    n: usize,
    cstart: Vec<usize>,
    cidx: Vec<usize>,
    cval: Vec<S>,
    rstart: Vec<usize>,
    ridx: Vec<usize>,
    rval: Vec<S>,
    cost: Vec<S>,
    true_cost: Vec<S>,
    lo: Vec<S>,
    up: Vec<S>,
    b: Vec<S>,
    head: Vec<usize>,
    pos_of: Vec<usize>,
    status: Vec<Status>,
    x: Vec<S>,
    d: Vec<S>,
    w: Vec<S>,
    factor: Option<Factor<S>>,
    ptol: S,
    dtol: S,
    piv_tol: S,
    iters: usize,
    primal_iters: usize,
    refactors: usize,
    since_refactor: usize,
    opts: SimplexOptions<S>,
    // scratch
    alpha_row: Vec<S>,
    touched: Vec<usize>,
    mark: Vec<bool>,
}

fn pow2_round<S: Scalar>(x: S) -> S {
    if !(x > S::zero()) || !x.is_finite() {
        return S::one();
    }
    let e = x.log2().round();
    S::lit(2.0).powf(e)
}

impl<S: Scalar> Work<S> {
    fn new(lp: &StandardFormLP<S>, opts: &SimplexOptions<S>) -> Result<(Self, Vec<S>, Vec<S>), SimplexError> {
        let (m, n) = (lp.n_rows, lp.n_cols);
        let (cstart, cidx, mut cval) = lp.csc();
        // geometric scaling by powers of two
        let mut rs = vec![S::one(); m];
        let mut cs = vec![S::one(); n];
        for _pass in 0..6 {
            let mut rmin = vec![S::infinity(); m];
            let mut rmax = vec![S::zero(); m];
            for j in 0..n {
                for k in cstart[j]..cstart[j + 1] {
                    let a = (cval[k] * rs[cidx[k]] * cs[j]).abs();
                    if a > S::zero() {
                        let i = cidx[k];
                        rmin[i] = rmin[i].min(a);
                        rmax[i] = rmax[i].max(a);
                    }
                }
            }
            for i in 0..m {
                if rmax[i] > S::zero() {
                    rs[i] = rs[i] / pow2_round((rmin[i] * rmax[i]).sqrt());
                }
            }
            for j in 0..n {
                let (mut lo, mut hi) = (S::infinity(), S::zero());
                for k in cstart[j]..cstart[j + 1] {
                    let a = (cval[k] * rs[cidx[k]] * cs[j]).abs();
                    if a > S::zero() {
                        lo = lo.min(a);
                        hi = hi.max(a);
                    }
                }
                if hi > S::zero() {
                    cs[j] = cs[j] / pow2_round((lo * hi).sqrt());
                }
            }
        }
        for j in 0..n {
            for k in cstart[j]..cstart[j + 1] {
                cval[k] = cval[k] * rs[cidx[k]] * cs[j];
            }
        }
        // row-wise copy
        let mut rstart = vec![0usize; m + 1];
        for &i in &cidx {
            rstart[i + 1] += 1;
        }
        for i in 0..m {
            rstart[i + 1] += rstart[i];
        }
        let mut fill = rstart.clone();
        let mut ridx = vec![0usize; cidx.len()];
        let mut rval = vec![S::zero(); cidx.len()];
        for j in 0..n {
            for k in cstart[j]..cstart[j + 1] {
                let i = cidx[k];
                ridx[fill[i]] = j;
                rval[fill[i]] = cval[k];
                fill[i] += 1;
            }
        }
        let nt = n + m;
        let mut cost = vec![S::zero(); nt];
        let mut lo = vec![S::zero(); nt];
        let mut up = vec![S::zero(); nt];
        for j in 0..n {
            cost[j] = lp.objective[j] * cs[j];
            lo[j] = lp.lower[j] / cs[j];
            up[j] = lp.upper[j] / cs[j];
            if lo[j] > up[j] {
                return Err(SimplexError::Infeasible { row: NIL });
            }
        }
        for i in 0..m {
            let (l, u) = match lp.senses[i] {
                RowSense::Le => (S::zero(), S::infinity()),
                RowSense::Ge => (S::neg_infinity(), S::zero()),
                RowSense::Eq => (S::zero(), S::zero()),
            };
            lo[n + i] = l;
            up[n + i] = u;
        }
        let b: Vec<S> = (0..m).map(|i| lp.rhs[i] * rs[i]).collect();
        let cmax = cost.iter().fold(S::one(), |a, c| a.max(c.abs()));
        let w = Work {
            m,
            n,
            cstart,
            cidx,
            cval,
            rstart,
            ridx,
            rval,
            true_cost: cost.clone(),
            cost,
            lo,
            up,
            b,
            head: (n..nt).collect(),
            pos_of: (0..nt).map(|j| if j >= n { j - n } else { NIL }).collect(),
            status: vec![Status::Lower; nt],
            x: vec![S::zero(); nt],
            d: vec![S::zero(); nt],
            w: vec![S::one(); m],
            factor: None,
            ptol: opts.primal_tol,
            dtol: opts.dual_tol * cmax,
            piv_tol: S::lit(1e-9).max(S::epsilon() * S::lit(1e4)),
            iters: 0,
            primal_iters: 0,
            refactors: 0,
            since_refactor: 0,
            opts: opts.clone(),
            alpha_row: vec![S::zero(); nt],
            touched: Vec::new(),
            mark: vec![false; nt],
        };
        Ok((w, rs, cs))
    }

    fn nt(&self) -> usize {
        self.n + self.m
    }

    fn column(&self, j: usize) -> Vec<(usize, S)> {
        if j < self.n {
            (self.cstart[j]..self.cstart[j + 1]).map(|k| (self.cidx[k], self.cval[k])).collect()
        } else {
            vec![(j - self.n, S::one())]
        }
    }

    fn scatter_column(&self, j: usize, out: &mut [S]) {
        out.iter_mut().for_each(|v| *v = S::zero());
        if j < self.n {
            for k in self.cstart[j]..self.cstart[j + 1] {
                out[self.cidx[k]] = self.cval[k];
            }
        } else {
            out[j - self.n] = S::one();
        }
    }

    fn factor(&self) -> &Factor<S> {
        self.factor.as_ref().expect("factorized")
    }

    /// Places nonbasic variables at a bound consistent with their reduced
    /// cost sign.
    fn init_nonbasic(&mut self) -> Result<(), SimplexError> {
        for j in 0..self.n {
            let (l, u, c) = (self.lo[j], self.up[j], self.cost[j]);
            let st = if l.is_finite() && (c >= S::zero() || !u.is_finite()) {
                Status::Lower
            } else if u.is_finite() {
                Status::Upper
            } else {
                Status::Free
            };
            let ok = match st {
                Status::Lower => c >= S::zero(),
                Status::Upper => c <= S::zero(),
                Status::Free => c == S::zero(),
                Status::Basic => true,
            };
            if !ok {
                return Err(SimplexError::Unsupported(format!(
                    "column {j} has a cost that makes the starting basis dual infeasible"
                )));
            }
            self.status[j] = st;
            self.x[j] = match st {
                Status::Lower => l,
                Status::Upper => u,
                _ => S::zero(),
            };
        }
        for i in 0..self.m {
            self.status[self.n + i] = Status::Basic;
        }
        Ok(())
    }

    fn perturb(&mut self) {
        if self.opts.perturbation <= S::zero() {
            return;
        }
        let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
        for j in 0..self.n {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let u = S::lit(0.5 + 0.5 * ((state >> 11) as f64 / (1u64 << 53) as f64));
            let mag = self.opts.perturbation * (S::one() + self.cost[j].abs()) * u;
            match self.status[j] {
                Status::Lower => self.cost[j] = self.cost[j] + mag,
                Status::Upper => self.cost[j] = self.cost[j] - mag,
                _ => {}
            }
        }
    }

    fn refactor(&mut self) -> Result<(), SimplexError> {
        for _attempt in 0..3 {
            let cols: Vec<Vec<(usize, S)>> = self.head.iter().map(|&j| self.column(j)).collect();
            match Factor::new(self.m, &cols, S::lit(0.1), S::lit(1e-11)) {
                Ok(f) => {
                    self.factor = Some(f);
                    self.refactors += 1;
                    self.since_refactor = 0;
                    self.compute_primal();
                    self.compute_duals();
                    return Ok(());
                }
                Err(sing) => {
                    for (&pos, &row) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.head[pos];
                        let logical = self.n + row;
                        self.pos_of[out] = NIL;
                        let (l, u) = (self.lo[out], self.up[out]);
                        let (st, v) = if l.is_finite() && (!u.is_finite() || (self.x[out] - l).abs() <= (u - self.x[out]).abs()) {
                            (Status::Lower, l)
                        } else if u.is_finite() {
                            (Status::Upper, u)
                        } else {
                            (Status::Free, S::zero())
                        };
                        self.status[out] = st;
                        self.x[out] = v;
                        self.head[pos] = logical;
                        self.pos_of[logical] = pos;
                        self.status[logical] = Status::Basic;
                        self.w[pos] = S::one();
                    }
                }
            }
        }
        Err(SimplexError::Numerical("basis repair failed".into()))
    }

    fn compute_primal(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.nt() {
            if self.status[j] == Status::Basic || self.x[j] == S::zero() {
                continue;
            }
            let xj = self.x[j];
            if j < self.n {
                for k in self.cstart[j]..self.cstart[j + 1] {
                    rhs[self.cidx[k]] = rhs[self.cidx[k]] - self.cval[k] * xj;
                }
            } else {
                rhs[j - self.n] = rhs[j - self.n] - xj;
            }
        }
        let mut xb = vec![S::zero(); self.m];
        self.factor().ftran(&mut rhs, &mut xb);
        for (pos, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn duals(&self) -> Vec<S> {
        let mut e: Vec<S> = self.head.iter().map(|&j| self.cost[j]).collect();
        let mut y = vec![S::zero(); self.m];
        self.factor().btran(&mut e, &mut y);
        y
    }

    fn compute_duals(&mut self) {
        let y = self.duals();
        for j in 0..self.nt() {
            if self.status[j] == Status::Basic {
                self.d[j] = S::zero();
            } else if j < self.n {
                let mut v = self.cost[j];
                for k in self.cstart[j]..self.cstart[j + 1] {
                    v = v - self.cval[k] * y[self.cidx[k]];
                }
                self.d[j] = v;
            } else {
                self.d[j] = self.cost[j] - y[j - self.n];
            }
        }
    }

    /// `rho^T a_j` for every nonbasic `j`, left in `alpha_row`; the indices
    /// written are recorded in `touched`.
    fn compute_alpha_row(&mut self, rho: &[S]) {
        for &j in &self.touched {
            self.alpha_row[j] = S::zero();
            self.mark[j] = false;
        }
        self.touched.clear();
        for (i, &r) in rho.iter().enumerate() {
            if r == S::zero() {
                continue;
            }
            for k in self.rstart[i]..self.rstart[i + 1] {
                let j = self.ridx[k];
                if self.status[j] == Status::Basic {
                    continue;
                }
                if !self.mark[j] {
                    self.mark[j] = true;
                    self.touched.push(j);
                }
                self.alpha_row[j] = self.alpha_row[j] + r * self.rval[k];
            }
            let l = self.n + i;
            if self.status[l] != Status::Basic {
                if !self.mark[l] {
                    self.mark[l] = true;
                    self.touched.push(l);
                }
                self.alpha_row[l] = self.alpha_row[l] + r;
            }
        }
    }

    fn infeasibility(&self, j: usize) -> S {
        let v = self.x[j];
        if v < self.lo[j] - self.ptol {
            self.lo[j] - v
        } else if v > self.up[j] + self.ptol {
            v - self.up[j]
        } else {
            S::zero()
        }
    }

    fn objective(&self) -> S {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    fn pivot_into_basis(&mut self, r: usize, q: usize, alpha_q: &[S]) -> Result<(), SimplexError> {
        let leave = self.head[r];
        self.head[r] = q;
        self.pos_of[q] = r;
        self.pos_of[leave] = NIL;
        self.status[q] = Status::Basic;
        let f = self.factor.as_mut().expect("factorized");
        f.push_eta(r, alpha_q, S::epsilon() * S::lit(1e-3));
        self.since_refactor += 1;
        let eta_heavy = f.eta_nnz() > 4 * (self.cidx.len() + self.m);
        if self.since_refactor >= self.opts.refactor_interval || eta_heavy {
            self.refactor()?;
        }
        Ok(())
    }

    fn set_nonbasic_at(&mut self, j: usize, to_upper: bool) {
        if self.lo[j] == self.up[j] || !to_upper && self.lo[j].is_finite() {
            self.status[j] = Status::Lower;
            self.x[j] = self.lo[j];
        } else if to_upper && self.up[j].is_finite() {
            self.status[j] = Status::Upper;
            self.x[j] = self.up[j];
        } else if self.lo[j].is_finite() {
            self.status[j] = Status::Lower;
            self.x[j] = self.lo[j];
        } else {
            self.status[j] = Status::Free;
            self.x[j] = S::zero();
        }
    }

    fn dual_phase(&mut self) -> Result<(), SimplexError> {
        let mut best_obj = S::neg_infinity();
        let mut stall = 0usize;
        let mut bland = false;
        let mut verify_failures = 0usize;
        loop {
            if self.iters + self.primal_iters >= self.opts.max_iterations {
                return Err(SimplexError::IterationLimit(self.opts.max_iterations));
            }
            // leaving row
            let mut r = NIL;
            let mut best = S::zero();
            for pos in 0..self.m {
                let j = self.head[pos];
                let inf = self.infeasibility(j);
                if inf > S::zero() {
                    if bland {
                        if r == NIL || j < self.head[r] {
                            r = pos;
                        }
                    } else {
                        let score = inf * inf / self.w[pos];
                        if score > best {
                            best = score;
                            r = pos;
                        }
                    }
                }
            }
            if r == NIL {
                return Ok(());
            }
            let jr = self.head[r];
            let to_upper = self.x[jr] > self.up[jr];
            let sgn = if to_upper { S::one() } else { -S::one() };

            let mut e = vec![S::zero(); self.m];
            e[r] = S::one();
            let mut rho = vec![S::zero(); self.m];
            self.factor().btran(&mut e, &mut rho);
            self.compute_alpha_row(&rho);

            // Harris two-pass ratio test
            let mut theta_max = S::infinity();
            for &j in &self.touched {
                let a = sgn * self.alpha_row[j];
                if self.lo[j] == self.up[j] {
                    continue;
                }
                match self.status[j] {
                    Status::Lower if a > self.piv_tol => theta_max = theta_max.min((self.d[j] + self.dtol) / a),
                    Status::Upper if a < -self.piv_tol => theta_max = theta_max.min((self.d[j] - self.dtol) / a),
                    Status::Free if a.abs() > self.piv_tol => theta_max = theta_max.min(self.dtol / a.abs()),
                    _ => {}
                }
            }
            let mut q = NIL;
            let mut qa = S::zero();
            let mut qratio = S::infinity();
            for &j in &self.touched {
                let a = sgn * self.alpha_row[j];
                if self.lo[j] == self.up[j] {
                    continue;
                }
                let ratio = match self.status[j] {
                    Status::Lower if a > self.piv_tol => self.d[j] / a,
                    Status::Upper if a < -self.piv_tol => self.d[j] / a,
                    Status::Free if a.abs() > self.piv_tol => S::zero(),
                    _ => continue,
                };
                if bland {
                    if ratio < qratio || ratio == qratio && j < q {
                        q = j;
                        qratio = ratio;
                        qa = a.abs();
                    }
                } else if ratio <= theta_max && a.abs() > qa {
                    q = j;
                    qa = a.abs();
                    qratio = ratio;
                }
            }
            if q == NIL {
                if verify_failures == 0 {
                    verify_failures += 1;
                    self.refactor()?;
                    continue;
                }
                return Err(SimplexError::Infeasible {
                    row: if jr >= self.n { jr - self.n } else { NIL },
                });
            }
            verify_failures = 0;

            let mut col = vec![S::zero(); self.m];
            self.scatter_column(q, &mut e);
            self.factor().ftran(&mut e, &mut col);
            let arq = col[r];
            let arq_row = self.alpha_row[q];
            if (arq - arq_row).abs() > S::lit(1e-7) * (S::one() + arq.abs()) || arq.abs() < self.piv_tol {
                if self.since_refactor == 0 {
                    return Err(SimplexError::Numerical(format!("unstable pivot {arq} vs {arq_row}")));
                }
                self.refactor()?;
                continue;
            }

            // dual step
            if self.d[q] * sgn * arq.signum() < S::zero() || self.status[q] == Status::Free {
                self.cost[q] = self.cost[q] - self.d[q];
                self.d[q] = S::zero();
            }
            let theta_d = self.d[q] / arq;
            if theta_d != S::zero() {
                for &j in &self.touched {
                    self.d[j] = self.d[j] - theta_d * self.alpha_row[j];
                }
            }
            self.d[q] = S::zero();
            self.d[jr] = -theta_d;

            // primal step
            let bound = if to_upper { self.up[jr] } else { self.lo[jr] };
            let theta_p = (self.x[jr] - bound) / arq;
            for pos in 0..self.m {
                let a = col[pos];
                if a != S::zero() {
                    let j = self.head[pos];
                    self.x[j] = self.x[j] - theta_p * a;
                }
            }
            self.x[q] = self.x[q] + theta_p;
            self.x[jr] = bound;
            self.status[jr] = if to_upper { Status::Upper } else { Status::Lower };
            if self.lo[jr] == self.up[jr] {
                self.status[jr] = Status::Lower;
            }

            // steepest-edge weights
            let wr = rho.iter().fold(S::zero(), |s, &v| s + v * v);
            let mut tau = vec![S::zero(); self.m];
            let mut rho_rhs = rho.clone();
            self.factor().ftran(&mut rho_rhs, &mut tau);
            for pos in 0..self.m {
                if pos == r || col[pos] == S::zero() {
                    continue;
                }
                let ratio = col[pos] / arq;
                let nw = self.w[pos] - S::lit(2.0) * ratio * tau[pos] + ratio * ratio * wr;
                self.w[pos] = nw.max(ratio * ratio * wr).max(S::lit(1e-8));
            }
            self.w[r] = (wr / (arq * arq)).max(S::lit(1e-8));

            self.pivot_into_basis(r, q, &col)?;
            self.iters += 1;

            let obj = self.objective();
            if obj > best_obj + S::epsilon() * (S::one() + obj.abs()) * S::lit(10.0) {
                best_obj = obj;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > 50 + self.m / 10 {
                    bland = true;
                }
            }
        }
    }

    fn primal_phase(&mut self) -> Result<(), SimplexError> {
        let mut stall = 0usize;
        let mut best_obj = S::infinity();
        let mut bland = false;
        loop {
            if self.iters + self.primal_iters >= self.opts.max_iterations {
                return Err(SimplexError::IterationLimit(self.opts.max_iterations));
            }
            let mut q = NIL;
            let mut best = S::zero();
            for j in 0..self.nt() {
                let dj = self.d[j];
                let viol = match self.status[j] {
                    Status::Basic => continue,
                    _ if self.lo[j] == self.up[j] => continue,
                    Status::Lower => -dj,
                    Status::Upper => dj,
                    Status::Free => dj.abs(),
                };
                if viol > self.dtol {
                    if bland {
                        q = j;
                        break;
                    }
                    if viol > best {
                        best = viol;
                        q = j;
                    }
                }
            }
            if q == NIL {
                return Ok(());
            }
            let dir = if self.d[q] < S::zero() { S::one() } else { -S::one() };
            let mut rhs = vec![S::zero(); self.m];
            let mut col = vec![S::zero(); self.m];
            self.scatter_column(q, &mut rhs);
            self.factor().ftran(&mut rhs, &mut col);

            let mut theta_max = S::infinity();
            for pos in 0..self.m {
                let a = dir * col[pos];
                let j = self.head[pos];
                if a > self.piv_tol && self.lo[j].is_finite() {
                    theta_max = theta_max.min((self.x[j] - self.lo[j] + self.ptol) / a);
                } else if a < -self.piv_tol && self.up[j].is_finite() {
                    theta_max = theta_max.min((self.up[j] - self.x[j] + self.ptol) / -a);
                }
            }
            let mut r = NIL;
            let mut ra = S::zero();
            let mut rtheta = S::infinity();
            for pos in 0..self.m {
                let a = dir * col[pos];
                let j = self.head[pos];
                let ratio = if a > self.piv_tol && self.lo[j].is_finite() {
                    (self.x[j] - self.lo[j]) / a
                } else if a < -self.piv_tol && self.up[j].is_finite() {
                    (self.up[j] - self.x[j]) / -a
                } else {
                    continue;
                };
                if bland {
                    if ratio < rtheta || ratio == rtheta && j < self.head[r] {
                        r = pos;
                        rtheta = ratio;
                    }
                } else if ratio <= theta_max && a.abs() > ra {
                    r = pos;
                    ra = a.abs();
                    rtheta = ratio;
                }
            }
            let span = self.up[q] - self.lo[q];
            if span.is_finite() && (r == NIL || span <= rtheta) {
                // bound flip without a basis change
                for pos in 0..self.m {
                    if col[pos] != S::zero() {
                        let j = self.head[pos];
                        self.x[j] = self.x[j] - dir * span * col[pos];
                    }
                }
                let to_upper = self.status[q] == Status::Lower;
                self.set_nonbasic_at(q, to_upper);
                self.primal_iters += 1;
                continue;
            }
            if r == NIL {
                return Err(SimplexError::Unbounded { col: q });
            }
            let theta = rtheta.max(S::zero());
            let jr = self.head[r];
            let leave_upper = dir * col[r] < S::zero();
            for pos in 0..self.m {
                if col[pos] != S::zero() {
                    let j = self.head[pos];
                    self.x[j] = self.x[j] - dir * theta * col[pos];
                }
            }
            self.x[q] = self.x[q] + dir * theta;

            let mut e = vec![S::zero(); self.m];
            e[r] = S::one();
            let mut rho = vec![S::zero(); self.m];
            self.factor().btran(&mut e, &mut rho);
            self.compute_alpha_row(&rho);
            let arq = col[r];
            let theta_d = self.d[q] / arq;
            for &j in &self.touched {
                self.d[j] = self.d[j] - theta_d * self.alpha_row[j];
            }
            self.d[q] = S::zero();
            self.d[jr] = -theta_d;
            self.set_nonbasic_at(jr, leave_upper);
            self.pivot_into_basis(r, q, &col)?;
            self.primal_iters += 1;

            let obj = self.objective();
            if obj < best_obj - S::epsilon() * (S::one() + obj.abs()) * S::lit(10.0) {
                best_obj = obj;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > 50 + self.m / 10 {
                    bland = true;
                }
            }
        }
    }

    fn primal_infeasible(&self) -> bool {
        self.head.iter().any(|&j| self.infeasibility(j) > S::zero())
    }

    fn dual_infeasible(&self) -> bool {
        (0..self.nt()).any(|j| {
            let dj = self.d[j];
            match self.status[j] {
                Status::Basic => false,
                _ if self.lo[j] == self.up[j] => false,
                Status::Lower => dj < -self.dtol,
                Status::Upper => dj > self.dtol,
                Status::Free => dj.abs() > self.dtol,
            }
        })
    }
}

/// Solves `lp` to optimality.
pub fn solve<S: Scalar>(lp: &StandardFormLP<S>, opts: &SimplexOptions<S>) -> Result<LpSolution<S>, SimplexError> {
    let start = Instant::now();
    let (mut w, rs, cs) = Work::new(lp, opts)?;
    w.init_nonbasic()?;
    w.perturb();
    w.refactor()?;
    for _round in 0..20 {
        w.dual_phase()?;
        // drop perturbations and cost shifts
        w.cost.clone_from(&w.true_cost);
        w.refactor()?;
        if w.primal_infeasible() {
            if w.dual_infeasible() {
                w.shift_to_dual_feasible();
            }
            continue;
        }
        w.primal_phase()?;
        w.refactor()?;
        if !w.primal_infeasible() && !w.dual_infeasible() {
            break;
        }
        if w.dual_infeasible() {
            w.shift_to_dual_feasible();
        }
    }
    if w.primal_infeasible() || w.dual_infeasible() {
        return Err(SimplexError::Numerical("could not reach a primal and dual feasible basis".into()));
    }
    let ys = w.duals();
    let x: Vec<S> = (0..w.n).map(|j| w.x[j] * cs[j]).collect();
    let row_duals: Vec<S> = (0..w.m).map(|i| ys[i] * rs[i]).collect();
    let objective = lp.objective_value(&x);
    Ok(LpSolution {
        x,
        row_duals,
        objective,
        iterations: w.iters,
        primal_iterations: w.primal_iters,
        refactorizations: w.refactors,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

impl<S: Scalar> Work<S> {
    /// Shifts costs so every nonbasic reduced cost has the right sign; the
    /// shifts are removed again after the next dual phase.
    fn shift_to_dual_feasible(&mut self) {
        for j in 0..self.nt() {
            let dj = self.d[j];
            let shift = match self.status[j] {
                Status::Basic => continue,
                _ if self.lo[j] == self.up[j] => continue,
                Status::Lower if dj < S::zero() => -dj,
                Status::Upper if dj > S::zero() => -dj,
                Status::Free => -dj,
                _ => continue,
            };
            self.cost[j] = self.cost[j] + shift;
            self.d[j] = self.d[j] + shift;
        }
    }
}

#[cfg(test)]
mod tests;
