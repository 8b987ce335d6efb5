use std::path::Path;

use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::Scalar;

pub const INSTANCE_VERSION: &str = "charge-plan-instance/1";

/// Per-EV reassignment cost between two locations, or a pair outside the
/// assignment range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AssignCost<S> {
    Allowed(S),
    Forbidden,
}

impl<S: Scalar> AssignCost<S> {
    pub fn value(self) -> Option<S> {
        match self {
            AssignCost::Allowed(v) => Some(v),
            AssignCost::Forbidden => None,
        }
    }

    pub fn is_forbidden(self) -> bool {
        matches!(self, AssignCost::Forbidden)
    }

    /// The piecewise cost rule: `price * d` inside the range, forbidden at or
    /// beyond it, zero on the diagonal.
    pub fn from_distance(d: S, price: S, range: S, diagonal: bool) -> Self {
        if diagonal {
            AssignCost::Allowed(S::zero())
        } else if d < range {
            AssignCost::Allowed(price * d)
        } else {
            AssignCost::Forbidden
        }
    }
}

impl<S: Scalar> Serialize for AssignCost<S> {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        match self {
            AssignCost::Allowed(v) => v.serialize(s),
            AssignCost::Forbidden => s.serialize_str("forbidden"),
        }
    }
}

impl<'de, S: Scalar> Deserialize<'de> for AssignCost<S> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Cell<S> {
            Num(S),
            Text(String),
        }
        match Cell::<S>::deserialize(d)? {
            Cell::Num(v) => Ok(AssignCost::Allowed(v)),
            Cell::Text(t) if t == "forbidden" => Ok(AssignCost::Forbidden),
            Cell::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"forbidden\", found {t:?}"
            ))),
        }
    }
}

/// Immutable problem data for one planning horizon.
///
/// Matrices indexed by slot are `[t][i]`; pairwise matrices are `[i][j]` with
/// `delay[i][j]` the number of slots a vehicle sent from `i` needs to reach `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PlanningInstance<S> {
    pub n_locations: usize,
    pub n_slots: usize,
    /// Vehicle counts per slot and location.
    pub flow: Vec<Vec<S>>,
    /// Share of the flow that needs charging.
    pub alpha: Vec<Vec<S>>,
    /// Power per charging vehicle, kW.
    pub beta: S,
    pub assign_cost: Vec<Vec<AssignCost<S>>>,
    pub delay: Vec<Vec<usize>>,
    /// Currency per kW common to all locations.
    pub base_cost: S,
    /// Currency per kW on top of `base_cost`.
    pub location_cost: Vec<S>,
    pub budget: S,
    pub capacity_max: Vec<S>,
    /// Expected recurrences of each slot over the investment horizon.
    pub recurrence: Vec<S>,
    /// Range used when `assign_cost` was derived, km.
    pub range_limit: S,
    /// Raw pairwise distances in km, kept so the range can be re-applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<Vec<Vec<S>>>,
    /// Reassignment price per km that produced `assign_cost`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assign_price: Option<S>,
    /// `[lon, lat]` per location, for spatial reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Serialize)]
#[serde(bound = "S: Scalar")]
struct FileOut<'a, S> {
    version: &'a str,
    #[serde(flatten)]
    instance: &'a PlanningInstance<S>,
}

#[derive(Deserialize)]
#[serde(bound = "S: Scalar")]
struct FileIn<S> {
    version: String,
    #[serde(flatten)]
    instance: PlanningInstance<S>,
}

fn check_matrix<S: Scalar>(
    what: &str,
    m: &[Vec<S>],
    rows: usize,
    cols: usize,
    ok: impl Fn(S) -> bool,
) -> Result<(), ModelError> {
    if m.len() != rows {
        return Err(ModelError::dim(format!("{what} rows"), rows, m.len()));
    }
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(ModelError::dim(format!("{what} row {r}"), cols, row.len()));
        }
        if let Some((c, v)) = row.iter().enumerate().find(|(_, v)| !ok(**v)) {
            return Err(ModelError::invalid(what, format!("entry [{r}][{c}] = {v}")));
        }
    }
    Ok(())
}

fn check_vector<S: Scalar>(
    what: &str,
    v: &[S],
    len: usize,
    ok: impl Fn(S) -> bool,
) -> Result<(), ModelError> {
    if v.len() != len {
        return Err(ModelError::dim(what, len, v.len()));
    }
    if let Some((k, x)) = v.iter().enumerate().find(|(_, x)| !ok(**x)) {
        return Err(ModelError::invalid(what, format!("entry [{k}] = {x}")));
    }
    Ok(())
}

fn nonneg<S: Scalar>(x: S) -> bool {
    x.is_finite() && x >= S::zero()
}

impl<S: Scalar> PlanningInstance<S> {
    /// An instance with no flow, no allowed reassignment, unit recurrences and
    /// zero delays. Starting point for hand-built instances.
    pub fn blank(n_locations: usize, n_slots: usize) -> Self {
        let n = n_locations;
        PlanningInstance {
            n_locations: n,
            n_slots,
            flow: vec![vec![S::zero(); n]; n_slots],
            alpha: vec![vec![S::one(); n]; n_slots],
            beta: S::lit(250.0),
            assign_cost: (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if i == j { AssignCost::Allowed(S::zero()) } else { AssignCost::Forbidden })
                        .collect()
                })
                .collect(),
            delay: vec![vec![0; n]; n],
            base_cost: S::lit(500.0),
            location_cost: vec![S::zero(); n],
            budget: S::lit(2e10),
            capacity_max: vec![S::lit(1e7); n],
            recurrence: vec![S::one(); n_slots],
            range_limit: S::zero(),
            distance: None,
            assign_price: None,
            coordinates: None,
            labels: None,
        }
    }

    /// Checks dimensions and value domains.
    pub fn validate(&self) -> Result<(), ModelError> {
        let (n, t) = (self.n_locations, self.n_slots);
        if n == 0 {
            return Err(ModelError::invalid("n_locations", "must be positive"));
        }
        if t == 0 {
            return Err(ModelError::invalid("n_slots", "must be positive"));
        }
        check_matrix("flow", &self.flow, t, n, nonneg)?;
        check_matrix("alpha", &self.alpha, t, n, |a| {
            a.is_finite() && a >= S::zero() && a <= S::one()
        })?;
        if !nonneg(self.beta) {
            return Err(ModelError::invalid("beta", self.beta.to_string()));
        }
        if self.assign_cost.len() != n {
            return Err(ModelError::dim("assign_cost rows", n, self.assign_cost.len()));
        }
        for (i, row) in self.assign_cost.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::dim(format!("assign_cost row {i}"), n, row.len()));
            }
            for (j, cell) in row.iter().enumerate() {
                match (i == j, cell) {
                    (true, AssignCost::Allowed(v)) if *v == S::zero() => {}
                    (true, _) => {
                        return Err(ModelError::invalid(
                            "assign_cost",
                            format!("diagonal entry [{i}][{i}] must be 0"),
                        ))
                    }
                    (false, AssignCost::Allowed(v)) if !nonneg(*v) => {
                        return Err(ModelError::invalid("assign_cost", format!("entry [{i}][{j}] = {v}")))
                    }
                    _ => {}
                }
            }
        }
        if self.delay.len() != n {
            return Err(ModelError::dim("delay rows", n, self.delay.len()));
        }
        for (i, row) in self.delay.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::dim(format!("delay row {i}"), n, row.len()));
            }
            if row[i] != 0 {
                return Err(ModelError::invalid("delay", format!("diagonal entry [{i}][{i}] must be 0")));
            }
            if let Some(j) = row.iter().position(|&d| d >= t) {
                return Err(ModelError::invalid(
                    "delay",
                    format!("entry [{i}][{j}] = {} is not below n_slots = {t}", row[j]),
                ));
            }
        }
        if !nonneg(self.base_cost) {
            return Err(ModelError::invalid("base_cost", self.base_cost.to_string()));
        }
        check_vector("location_cost", &self.location_cost, n, nonneg)?;
        if !nonneg(self.budget) {
            return Err(ModelError::invalid("budget", self.budget.to_string()));
        }
        check_vector("capacity_max", &self.capacity_max, n, |c| c >= S::zero() && !c.is_nan())?;
        check_vector("recurrence", &self.recurrence, t, nonneg)?;
        if !(self.range_limit >= S::zero()) {
            return Err(ModelError::invalid("range_limit", self.range_limit.to_string()));
        }
        if let Some(d) = &self.distance {
            check_matrix("distance", d, n, n, nonneg)?;
        }
        if let Some(p) = self.assign_price {
            if !nonneg(p) {
                return Err(ModelError::invalid("assign_price", p.to_string()));
            }
        }
        if let Some(c) = &self.coordinates {
            if c.len() != n {
                return Err(ModelError::dim("coordinates", n, c.len()));
            }
        }
        if let Some(l) = &self.labels {
            if l.len() != n {
                return Err(ModelError::dim("labels", n, l.len()));
            }
        }
        Ok(())
    }

    /// Charging-demanding vehicles `alpha * flow` at location `i`, slot `t`.
    #[inline]
    pub fn demand(&self, t: usize, i: usize) -> S {
        self.alpha[t][i] * self.flow[t][i]
    }

    /// Investment cost per kW at location `i`.
    #[inline]
    pub fn unit_capacity_cost(&self, i: usize) -> S {
        self.base_cost + self.location_cost[i]
    }

    /// Re-derives `assign_cost` for another range from the stored distances.
    pub fn with_range(&self, range: S) -> Result<Self, ModelError> {
        let dist = self
            .distance
            .as_ref()
            .ok_or_else(|| ModelError::invalid("distance", "instance carries no raw distance matrix"))?;
        let price = self
            .assign_price
            .ok_or_else(|| ModelError::invalid("assign_price", "instance carries no per-km price"))?;
        if !(range >= S::zero()) {
            return Err(ModelError::invalid("range", range.to_string()));
        }
        let mut out = self.clone();
        out.range_limit = range;
        out.assign_cost = (0..self.n_locations)
            .map(|i| {
                (0..self.n_locations)
                    .map(|j| AssignCost::from_distance(dist[i][j], price, range, i == j))
                    .collect()
            })
            .collect();
        Ok(out)
    }

    /// Converts every numeric field to another scalar type.
    pub fn cast<T: Scalar>(&self) -> PlanningInstance<T> {
        let c = |x: S| T::lit(x.as_f64());
        let m = |v: &Vec<Vec<S>>| -> Vec<Vec<T>> { v.iter().map(|r| r.iter().map(|&x| c(x)).collect()).collect() };
        PlanningInstance {
            n_locations: self.n_locations,
            n_slots: self.n_slots,
            flow: m(&self.flow),
            alpha: m(&self.alpha),
            beta: c(self.beta),
            assign_cost: self
                .assign_cost
                .iter()
                .map(|r| {
                    r.iter()
                        .map(|a| match a {
                            AssignCost::Allowed(v) => AssignCost::Allowed(c(*v)),
                            AssignCost::Forbidden => AssignCost::Forbidden,
                        })
                        .collect()
                })
                .collect(),
            delay: self.delay.clone(),
            base_cost: c(self.base_cost),
            location_cost: self.location_cost.iter().map(|&x| c(x)).collect(),
            budget: c(self.budget),
            capacity_max: self.capacity_max.iter().map(|&x| c(x)).collect(),
            recurrence: self.recurrence.iter().map(|&x| c(x)).collect(),
            range_limit: c(self.range_limit),
            distance: self.distance.as_ref().map(m),
            assign_price: self.assign_price.map(c),
            coordinates: self.coordinates.clone(),
            labels: self.labels.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        let mut s = serde_json::to_string_pretty(&FileOut {
            version: INSTANCE_VERSION,
            instance: self,
        })?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and validates an instance document.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: FileIn<S> = serde_json::from_str(text)?;
        if file.version != INSTANCE_VERSION {
            return Err(ModelError::Version(file.version));
        }
        file.instance.validate()?;
        Ok(file.instance)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
