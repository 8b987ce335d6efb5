//! Spatial and tabular views of a solved plan, and an integer rounding of the
//! assignments with a feasibility recheck.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::{
    check_feasibility, net_demand_matrix, AssignmentPlan, FeasibilityReport, InvestmentPlan, ModelError, PlanningInstance,
};
use crate::Scalar;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportOptions {
    /// Half-open slot range `[start, end)` the assignment totals cover; the
    /// whole horizon when absent.
    pub slots: Option<(usize, usize)>,
    /// Aggregated flows at or below this many vehicles are left out.
    pub min_flow: f64,
}

/// Per-location row of the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocationRow {
    pub index: usize,
    pub label: String,
    pub lon: Option<f64>,
    pub lat: Option<f64>,
    pub capacity: f64,
    pub location_cost: f64,
    pub unit_cost: f64,
    pub peak_demand_kw: f64,
    pub outflow: f64,
    pub inflow: f64,
    /// Vehicles received minus vehicles sent within the slot window.
    pub net_assignments: f64,
}

/// Vehicles sent from one location to another, summed over the slot window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub from: usize,
    pub to: usize,
    pub vehicles: f64,
    /// Recurrence-weighted cost of these vehicles.
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub locations: Vec<LocationRow>,
    pub flows: Vec<FlowRow>,
}

fn window(opts: &ReportOptions, nt: usize) -> Result<std::ops::Range<usize>, ModelError> {
    match opts.slots {
        None => Ok(0..nt),
        Some((a, b)) if a < b && b <= nt => Ok(a..b),
        Some((a, b)) => Err(ModelError::invalid("slot window", format!("[{a}, {b}) within {nt} slots"))),
    }
}

pub fn build_report<S: Scalar>(
    inst: &PlanningInstance<S>,
    inv: &InvestmentPlan<S>,
    asg: &AssignmentPlan<S>,
    opts: &ReportOptions,
) -> Result<PlanReport, ModelError> {
    crate::model::check_dims(inst, inv, asg)?;
    let n = inst.n_locations;
    let slots = window(opts, inst.n_slots)?;
    let np = asg.pairs.len();
    let mut outflow = vec![0.0; n];
    let mut inflow = vec![0.0; n];
    let mut flows: Vec<FlowRow> = Vec::new();
    for (p, &(i, j)) in asg.pairs.iter().enumerate() {
        let (mut v, mut cost) = (0.0, 0.0);
        let l = inst.assign_cost[i][j].value().map_or(0.0, |x| x.as_f64());
        for t in slots.clone() {
            let z = asg.values[t * np + p].as_f64();
            v += z;
            cost += inst.recurrence[t].as_f64() * l * z;
        }
        outflow[i] += v;
        inflow[j] += v;
        if v > opts.min_flow && v > 0.0 {
            flows.push(FlowRow {
                from: i,
                to: j,
                vehicles: v,
                cost,
            });
        }
    }
    let net = net_demand_matrix(inst, asg);
    let locations = (0..n)
        .map(|i| {
            let peak = (0..inst.n_slots).fold(0.0_f64, |m, t| m.max(inst.beta.as_f64() * net[t][i].as_f64()));
            let coord = inst.coordinates.as_ref().map(|c| c[i]);
            LocationRow {
                index: i,
                label: inst.labels.as_ref().map_or_else(|| format!("L{}", i + 1), |l| l[i].clone()),
                lon: coord.map(|c| c[0]),
                lat: coord.map(|c| c[1]),
                capacity: inv.capacity[i].as_f64(),
                location_cost: inst.location_cost[i].as_f64(),
                unit_cost: inst.unit_capacity_cost(i).as_f64(),
                peak_demand_kw: peak,
                outflow: outflow[i],
                inflow: inflow[i],
                net_assignments: inflow[i] - outflow[i],
            }
        })
        .collect();
    Ok(PlanReport { locations, flows })
}

impl PlanReport {
    /// RFC 7946 feature collection: a point per location and a line per
    /// aggregated flow. Without coordinates, geometries are null.
    pub fn to_geojson(&self) -> Value {
        let point = |r: &LocationRow| match (r.lon, r.lat) {
            (Some(x), Some(y)) => json!({"type": "Point", "coordinates": [x, y]}),
            _ => Value::Null,
        };
        let mut features: Vec<Value> = self
            .locations
            .iter()
            .map(|r| {
                json!({
                    "type": "Feature",
                    "geometry": point(r),
                    "properties": {
                        "kind": "location",
                        "index": r.index,
                        "label": r.label,
                        "capacity": r.capacity,
                        "location_cost": r.location_cost,
                        "unit_cost": r.unit_cost,
                        "peak_demand_kw": r.peak_demand_kw,
                        "outflow": r.outflow,
                        "inflow": r.inflow,
                        "net_assignments": r.net_assignments,
                    }
                })
            })
            .collect();
        for f in &self.flows {
            let (a, b) = (&self.locations[f.from], &self.locations[f.to]);
            let geometry = match (a.lon, a.lat, b.lon, b.lat) {
                (Some(x1), Some(y1), Some(x2), Some(y2)) => {
                    json!({"type": "LineString", "coordinates": [[x1, y1], [x2, y2]]})
                }
                _ => Value::Null,
            };
            features.push(json!({
                "type": "Feature",
                "geometry": geometry,
                "properties": {
                    "kind": "assignment",
                    "from": f.from,
                    "to": f.to,
                    "from_label": a.label,
                    "to_label": b.label,
                    "vehicles": f.vehicles,
                    "cost": f.cost,
                }
            }));
        }
        json!({"type": "FeatureCollection", "features": features})
    }

    pub fn write_locations_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.locations {
            w.serialize(r)?;
        }
        if self.locations.is_empty() {
            w.write_record([
                "index",
                "label",
                "lon",
                "lat",
                "capacity",
                "location_cost",
                "unit_cost",
                "peak_demand_kw",
                "outflow",
                "inflow",
                "net_assignments",
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_flows_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["from", "to", "vehicles", "cost"])?;
        for f in &self.flows {
            w.write_record([f.from.to_string(), f.to.to_string(), f.vehicles.to_string(), f.cost.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A rounded assignment plan checked against the unchanged capacities.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundingCheck<S> {
    pub rounded: AssignmentPlan<S>,
    pub feasibility: FeasibilityReport<S>,
    /// Largest `beta * net - capacity` after rounding, kW.
    pub worst_capacity_excess: S,
    /// Whether every capacity row stays within `beta / 2` per rounded cell
    /// touching it of its value before rounding.
    pub within_bound: bool,
}

/// Rounds every assignment to the nearest integer and rechecks the plan.
pub fn round_assignments<S: Scalar>(
    inst: &PlanningInstance<S>,
    inv: &InvestmentPlan<S>,
    asg: &AssignmentPlan<S>,
    tol: S,
) -> Result<RoundingCheck<S>, ModelError> {
    crate::model::check_dims(inst, inv, asg)?;
    let mut rounded = asg.clone();
    rounded.values.iter_mut().for_each(|v| *v = v.round().max(S::zero()));
    let (n, nt, np) = (inst.n_locations, inst.n_slots, asg.pairs.len());
    let before = net_demand_matrix(inst, asg);
    let after = net_demand_matrix(inst, &rounded);
    // cells whose value changed, per (t, i) capacity row
    let mut touched = vec![vec![0usize; n]; nt];
    for (p, &(i, j)) in asg.pairs.iter().enumerate() {
        let tau = inst.delay[i][j];
        for t in 0..nt {
            if rounded.values[t * np + p] != asg.values[t * np + p] {
                touched[t][i] += 1;
                touched[(t + tau) % nt][j] += 1;
            }
        }
    }
    let half = S::lit(0.5);
    let mut worst = S::zero();
    let mut within_bound = true;
    for t in 0..nt {
        for i in 0..n {
            let excess = inst.beta * after[t][i] - inv.capacity[i];
            worst = worst.max(excess);
            let shift = (inst.beta * (after[t][i] - before[t][i])).abs();
            let bound = inst.beta * half * S::of_usize(touched[t][i]);
            if shift > bound + S::lit(1e-9) * (S::one() + bound) {
                within_bound = false;
            }
        }
    }
    let feasibility = check_feasibility(inst, inv, &rounded, tol)?;
    Ok(RoundingCheck {
        rounded,
        feasibility,
        worst_capacity_excess: worst,
        within_bound,
    })
}
