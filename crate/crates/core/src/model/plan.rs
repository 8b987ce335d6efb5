use serde::{Deserialize, Serialize};

use super::{ModelError, PairIndex};
use crate::Scalar;

/// Installed charging capacity per location, kW.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct InvestmentPlan<S> {
    pub capacity: Vec<S>,
}

impl<S: Scalar> InvestmentPlan<S> {
    pub fn zeros(n: usize) -> Self {
        InvestmentPlan {
            capacity: vec![S::zero(); n],
        }
    }
}

/// Reassigned vehicles `z[t][i][j]`, stored over a list of ordered pairs.
///
/// Cells outside `pairs` are zero. `values[t * pairs.len() + p]` holds slot `t`
/// of pair `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentPlan<S> {
    pub n_locations: usize,
    pub n_slots: usize,
    pub pairs: Vec<(usize, usize)>,
    pub values: Vec<S>,
}

impl<S: Scalar> AssignmentPlan<S> {
    pub fn zeros(n_locations: usize, n_slots: usize, pairs: Vec<(usize, usize)>) -> Self {
        let values = vec![S::zero(); n_slots * pairs.len()];
        AssignmentPlan {
            n_locations,
            n_slots,
            pairs,
            values,
        }
    }

    /// An all-zero plan over the free cells of `index`.
    pub fn zeros_for(index: &PairIndex<S>) -> Self {
        Self::zeros(index.n_locations, index.n_slots, index.pairs.clone())
    }

    /// Builds a plan from `(t, i, j, value)` entries. Repeated cells are summed.
    pub fn from_triplets(
        n_locations: usize,
        n_slots: usize,
        triplets: &[(usize, usize, usize, S)],
    ) -> Result<Self, ModelError> {
        for &(t, i, j, v) in triplets {
            if t >= n_slots || i >= n_locations || j >= n_locations {
                return Err(ModelError::invalid(
                    "assignment triplet",
                    format!("index (t={t}, i={i}, j={j}) outside {n_slots} slots x {n_locations} locations"),
                ));
            }
            if !v.is_finite() {
                return Err(ModelError::invalid("assignment triplet", format!("value {v}")));
            }
        }
        let mut pairs: Vec<(usize, usize)> = triplets.iter().map(|&(_, i, j, _)| (i, j)).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut plan = Self::zeros(n_locations, n_slots, pairs);
        for &(t, i, j, v) in triplets {
            let p = plan.pair_id(i, j).expect("pair registered above");
            let k = t * plan.pairs.len() + p;
            plan.values[k] = plan.values[k] + v;
        }
        Ok(plan)
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn pair_id(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.binary_search(&(i, j)).ok()
    }

    #[inline]
    pub fn at(&self, t: usize, p: usize) -> S {
        self.values[t * self.pairs.len() + p]
    }

    /// `z[t][i][j]`, zero for cells outside the stored pairs.
    pub fn get(&self, t: usize, i: usize, j: usize) -> S {
        self.pair_id(i, j).map_or(S::zero(), |p| self.at(t, p))
    }

    /// Nonzero entries as `(t, i, j, value)`, ordered by `(t, i, j)`.
    pub fn triplets(&self) -> Vec<(usize, usize, usize, S)> {
        let np = self.pairs.len();
        let mut out = Vec::new();
        for t in 0..self.n_slots {
            for (p, &(i, j)) in self.pairs.iter().enumerate() {
                let v = self.values[t * np + p];
                if v != S::zero() {
                    out.push((t, i, j, v));
                }
            }
        }
        out
    }

    pub fn total(&self) -> S {
        self.values.iter().copied().sum()
    }

    /// True when the plan's pairs are exactly the free cells of `index`.
    pub fn matches(&self, index: &PairIndex<S>) -> bool {
        self.n_locations == index.n_locations && self.n_slots == index.n_slots && self.pairs == index.pairs
    }

    /// Re-expresses the plan over the pairs of `index`, or `None` if some
    /// nonzero cell is not free there.
    pub fn aligned_to(&self, index: &PairIndex<S>) -> Option<Self> {
        if self.matches(index) {
            return Some(self.clone());
        }
        let mut out = Self::zeros_for(index);
        let np = index.len();
        for (t, i, j, v) in self.triplets() {
            let p = index.find(i, j)?;
            out.values[t * np + p] = v;
        }
        Some(out)
    }
}

/// Objective split into one-time investment and recurrence-weighted
/// assignment cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CostBreakdown<S> {
    pub investment: S,
    pub assignment: S,
    pub total: S,
}
