use super::{AssignCost, PlanningInstance};
use crate::Scalar;

/// The structurally free assignment cells of an instance: ordered pairs
/// `i != j` whose cost is not forbidden, sorted by `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairIndex<S> {
    pub n_locations: usize,
    pub n_slots: usize,
    pub pairs: Vec<(usize, usize)>,
    /// Per-EV cost of each pair.
    pub cost: Vec<S>,
    /// Travel slots of each pair.
    pub delay: Vec<usize>,
    /// Pair ids leaving each location.
    pub outgoing: Vec<Vec<usize>>,
    /// Pair ids arriving at each location.
    pub incoming: Vec<Vec<usize>>,
}

impl<S: Scalar> PairIndex<S> {
    pub fn new(inst: &PlanningInstance<S>) -> Self {
        let n = inst.n_locations;
        let mut pairs = Vec::new();
        let mut cost = Vec::new();
        let mut delay = Vec::new();
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                if let AssignCost::Allowed(l) = inst.assign_cost[i][j] {
                    let p = pairs.len();
                    pairs.push((i, j));
                    cost.push(l);
                    delay.push(inst.delay[i][j]);
                    outgoing[i].push(p);
                    incoming[j].push(p);
                }
            }
        }
        PairIndex {
            n_locations: n,
            n_slots: inst.n_slots,
            pairs,
            cost,
            delay,
            outgoing,
            incoming,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        self.pairs.binary_search(&(i, j)).ok()
    }

    /// Slot in which a vehicle departing in `t` along pair `p` arrives.
    #[inline]
    pub fn arrival(&self, p: usize, t: usize) -> usize {
        (t + self.delay[p]) % self.n_slots
    }

    /// Departure slot of vehicles arriving in `t` along pair `p`.
    #[inline]
    pub fn departure(&self, p: usize, t: usize) -> usize {
        (t + self.n_slots - self.delay[p]) % self.n_slots
    }
}
