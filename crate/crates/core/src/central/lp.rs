use serde::{Deserialize, Serialize};

use crate::model::{PairIndex, PlanningInstance};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

/// What a column stands for. Indices are zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKey {
    Capacity { i: usize },
    Assign { i: usize, j: usize, t: usize },
}

/// Which constraint instance a row encodes. Indices are zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowKey {
    Budget,
    Flow { i: usize, t: usize },
    CapacityUpper { i: usize, t: usize },
    CapacityLower { i: usize, t: usize },
    /// A row from an external file that does not follow the naming scheme.
    Other(usize),
}

/// `min c^T x  s.t.  A x (sense) b,  lower <= x <= upper`, with the matrix as
/// `(row, col, value)` triplets sorted by `(col, row)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardFormLP<S> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub triplets: Vec<(usize, usize, S)>,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<S>,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
    pub objective: Vec<S>,
    pub vars: Vec<VarKey>,
    pub rows: Vec<RowKey>,
}

#[derive(Debug, thiserror::Error)]
#[error("LP index space overflow: {0}")]
pub struct IndexOverflow(pub String);

impl<S: Scalar> StandardFormLP<S> {
    /// Columns in compressed form: `(start offsets, row indices, values)`.
    pub fn csc(&self) -> (Vec<usize>, Vec<usize>, Vec<S>) {
        let mut start = vec![0usize; self.n_cols + 1];
        for &(_, c, _) in &self.triplets {
            start[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut idx = vec![0usize; self.triplets.len()];
        let mut val = vec![S::zero(); self.triplets.len()];
        for &(r, c, v) in &self.triplets {
            idx[fill[c]] = r;
            val[fill[c]] = v;
            fill[c] += 1;
        }
        (start, idx, val)
    }

    pub fn objective_value(&self, x: &[S]) -> S {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }
}

/// Column of `c_i`.
pub fn capacity_col(i: usize) -> usize {
    i
}

/// Column of free pair `p` in slot `t`.
pub fn assign_col(n_locations: usize, n_pairs: usize, t: usize, p: usize) -> usize {
    n_locations + t * n_pairs + p
}

/// Builds the joint LP.
///
/// Columns: `c_i` for every location, then one column per free assignment
/// cell, slot-major. Rows: the budget, `n*T` flow rows, then `n*T` rows for
/// each side of the capacity constraint. Capacity bounds and non-negativity
/// are variable bounds; diagonal and out-of-range cells have no column.
pub fn build_lp<S: Scalar>(inst: &PlanningInstance<S>) -> Result<StandardFormLP<S>, IndexOverflow> {
    let (n, nt) = (inst.n_locations, inst.n_slots);
    let index = PairIndex::new(inst);
    let np = index.len();
    let n_cols = np
        .checked_mul(nt)
        .and_then(|z| z.checked_add(n))
        .ok_or_else(|| IndexOverflow(format!("{np} pairs x {nt} slots")))?;
    let n_rows = n
        .checked_mul(nt)
        .and_then(|r| r.checked_mul(3))
        .and_then(|r| r.checked_add(1))
        .ok_or_else(|| IndexOverflow(format!("{n} locations x {nt} slots")))?;
    let flow_row = |i: usize, t: usize| 1 + t * n + i;
    let upper_row = |i: usize, t: usize| 1 + n * nt + t * n + i;
    let lower_row = |i: usize, t: usize| 1 + 2 * n * nt + t * n + i;

    let mut rows = vec![RowKey::Budget; n_rows];
    let mut senses = vec![RowSense::Le; n_rows];
    let mut rhs = vec![S::zero(); n_rows];
    rhs[0] = inst.budget;
    for t in 0..nt {
        for i in 0..n {
            let d = inst.demand(t, i);
            rows[flow_row(i, t)] = RowKey::Flow { i, t };
            rhs[flow_row(i, t)] = d;
            rows[upper_row(i, t)] = RowKey::CapacityUpper { i, t };
            rhs[upper_row(i, t)] = -(inst.beta * d);
            rows[lower_row(i, t)] = RowKey::CapacityLower { i, t };
            senses[lower_row(i, t)] = RowSense::Ge;
            rhs[lower_row(i, t)] = -(inst.beta * d);
        }
    }

    let mut vars = Vec::with_capacity(n_cols);
    let mut objective = Vec::with_capacity(n_cols);
    let lower = vec![S::zero(); n_cols];
    let mut upper = vec![S::infinity(); n_cols];
    let mut triplets = Vec::with_capacity(n * (nt + 1) + np * nt * 5);

    for i in 0..n {
        vars.push(VarKey::Capacity { i });
        objective.push(inst.unit_capacity_cost(i));
        upper[capacity_col(i)] = inst.capacity_max[i];
        let col = capacity_col(i);
        triplets.push((0, col, inst.unit_capacity_cost(i)));
        for t in 0..nt {
            triplets.push((upper_row(i, t), col, -S::one()));
        }
    }
    let beta = inst.beta;
    for t in 0..nt {
        for (p, &(i, j)) in index.pairs.iter().enumerate() {
            let col = assign_col(n, np, t, p);
            debug_assert_eq!(col, vars.len());
            vars.push(VarKey::Assign { i, j, t });
            objective.push(inst.recurrence[t] * index.cost[p]);
            let arrive = index.arrival(p, t);
            let mut entries = [
                (flow_row(i, t), S::one()),
                (upper_row(i, t), -beta),
                (upper_row(j, arrive), beta),
                (lower_row(i, t), -beta),
                (lower_row(j, arrive), beta),
            ];
            entries.sort_by_key(|e| e.0);
            for (r, v) in entries {
                triplets.push((r, col, v));
            }
        }
    }
    Ok(StandardFormLP {
        n_rows,
        n_cols,
        triplets,
        senses,
        rhs,
        lower,
        upper,
        objective,
        vars,
        rows,
    })
}
