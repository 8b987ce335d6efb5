//! Synthetic planning instances on a square city with a costly center.
//!
//! Locations are scattered uniformly over an `extent_km` square. Each one
//! follows a daily demand profile archetype, land cost decays exponentially
//! with distance from the center, and reassignment is priced per km within
//! the range limit.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::model::{AssignCost, PlanningInstance};

#[derive(Debug, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator parameter: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Archetype {
    /// Morning and stronger evening peaks, slightly busier at weekends.
    Residential,
    /// Daytime peak on weekdays, nearly idle at weekends.
    Office,
    /// Afternoon peak, much busier at weekends.
    Recreational,
}

/// Circular Gaussian bump over the 24 h clock.
fn bump(hour: f64, mu: f64, sigma: f64) -> f64 {
    let d = (hour - mu).abs();
    let d = d.min(24.0 - d);
    (-0.5 * (d / sigma).powi(2)).exp()
}

impl Archetype {
    pub const ALL: [Archetype; 3] = [Archetype::Residential, Archetype::Office, Archetype::Recreational];

    /// Relative flow intensity at `hour` of a day; days 5 and 6 are the
    /// weekend.
    pub fn profile(self, day: usize, hour: f64) -> f64 {
        let weekend = day % 7 >= 5;
        match self {
            Archetype::Residential => {
                let v = 0.2 + 0.5 * bump(hour, 8.0, 1.5) + bump(hour, 19.0, 2.0);
                if weekend {
                    1.1 * v
                } else {
                    v
                }
            }
            Archetype::Office => {
                if weekend {
                    0.1 + 0.15 * bump(hour, 12.5, 3.0)
                } else {
                    0.1 + bump(hour, 12.5, 3.0)
                }
            }
            Archetype::Recreational => {
                let v = 0.15 + 0.8 * bump(hour, 16.0, 2.5);
                if weekend {
                    3.0 * v
                } else {
                    v
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenParams {
    pub n_locations: usize,
    pub n_slots: usize,
    pub slot_minutes: u32,
    pub seed: u64,
    /// Side of the square city, km.
    pub extent_km: f64,
    /// Center in unit-square coordinates.
    pub center: [f64; 2],
    /// Relative frequency of residential, office and recreational locations.
    pub archetype_weights: [f64; 3],
    /// Range of per-location peak vehicle counts.
    pub flow_peak_min: f64,
    pub flow_peak_max: f64,
    /// Relative multiplicative noise on each flow cell.
    pub flow_noise: f64,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub beta_kw: f64,
    pub pi0: f64,
    pub location_cost_scale: f64,
    /// Decay of location cost per km from the center.
    pub location_cost_decay: f64,
    pub assign_price_per_km: f64,
    pub range_km: f64,
    pub recurrence: f64,
    pub budget: f64,
    pub capacity_max: f64,
    pub speed_kmh: f64,
    /// `[lon, lat]` of the square's south-west corner, for reports.
    pub origin_lonlat: [f64; 2],
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_locations: 20,
            n_slots: 672,
            slot_minutes: 15,
            seed: 0,
            extent_km: 8.0,
            center: [0.5, 0.5],
            archetype_weights: [0.4, 0.35, 0.25],
            flow_peak_min: 50.0,
            flow_peak_max: 200.0,
            flow_noise: 0.2,
            alpha_a: 10.0,
            alpha_b: 90.0,
            beta_kw: 250.0,
            pi0: 500.0,
            location_cost_scale: 1500.0,
            location_cost_decay: 0.3,
            assign_price_per_km: 0.2,
            range_km: 3.0,
            recurrence: 520.0,
            budget: 2e10,
            capacity_max: 1e7,
            speed_kmh: 30.0,
            origin_lonlat: [104.02, 30.62],
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Invalid(m.to_string()));
        if self.n_locations == 0 {
            return bad("n_locations must be positive");
        }
        if self.n_slots == 0 {
            return bad("n_slots must be positive");
        }
        if self.slot_minutes == 0 || 1440 % self.slot_minutes != 0 {
            return bad("slot_minutes must divide 24 h");
        }
        if !(self.alpha_a > 0.0 && self.alpha_b > 0.0) {
            return bad("alpha shape parameters must be positive");
        }
        if !(self.location_cost_decay > 0.0) {
            return bad("location_cost_decay must be positive");
        }
        if !(self.speed_kmh > 0.0) {
            return bad("speed_kmh must be positive");
        }
        if !(self.extent_km >= 0.0) || !(self.flow_peak_min >= 0.0) || !(self.flow_peak_max >= self.flow_peak_min) {
            return bad("extent and flow peak range must be non-negative and ordered");
        }
        if !(0.0..1.0).contains(&self.flow_noise) {
            return bad("flow_noise must be in [0, 1)");
        }
        if self.archetype_weights.iter().any(|w| !(*w >= 0.0)) || self.archetype_weights.iter().sum::<f64>() <= 0.0 {
            return bad("archetype_weights must be non-negative with a positive sum");
        }
        for (name, v) in [
            ("beta_kw", self.beta_kw),
            ("pi0", self.pi0),
            ("location_cost_scale", self.location_cost_scale),
            ("assign_price_per_km", self.assign_price_per_km),
            ("range_km", self.range_km),
            ("recurrence", self.recurrence),
            ("budget", self.budget),
            ("capacity_max", self.capacity_max),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(GenError::Invalid(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// `rows x cols` i.i.d. draws from `Beta(a, b)`.
pub fn sample_alpha(a: f64, b: f64, seed: u64, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>, GenError> {
    let dist = Beta::new(a, b).map_err(|e| GenError::Invalid(format!("Beta({a}, {b}): {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..rows).map(|_| (0..cols).map(|_| dist.sample(&mut rng)).collect()).collect())
}

/// Slots needed to travel `d` km.
pub fn travel_slots(d: f64, speed_kmh: f64, slot_minutes: u32, n_slots: usize) -> usize {
    let slots = (d / speed_kmh / (slot_minutes as f64 / 60.0)).round();
    (slots.max(0.0) as usize).min(n_slots.saturating_sub(1))
}

/// Converts km offsets from a south-west corner to `[lon, lat]`.
pub fn km_to_lonlat(origin: [f64; 2], x_km: f64, y_km: f64) -> [f64; 2] {
    let lat0 = origin[1].to_radians();
    [origin[0] + x_km / (111.320 * lat0.cos()), origin[1] + y_km / 110.574]
}

/// Range at which roughly `fraction` of the ordered off-diagonal pairs fall
/// strictly inside: the midpoint between the two distances straddling the
/// cut.
pub fn range_for_assignable_fraction(distance: &[Vec<f64>], fraction: f64) -> f64 {
    let mut d: Vec<f64> = distance
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, v)| *v))
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let k = ((fraction.clamp(0.0, 1.0) * d.len() as f64).round() as usize).min(d.len());
    match k {
        0 => d[0] * 0.5,
        k if k == d.len() => d[k - 1] + 1.0,
        k => 0.5 * (d[k - 1] + d[k]),
    }
}

/// Per-location data the generator draws before building an instance.
#[derive(Clone, Debug)]
pub struct Layout {
    pub positions_km: Vec<[f64; 2]>,
    pub archetypes: Vec<Archetype>,
}

pub fn generate_instance(params: &GenParams) -> Result<PlanningInstance<f64>, GenError> {
    Ok(generate_with_layout(params)?.0)
}

/// Generates an instance and also returns the drawn layout.
pub fn generate_with_layout(params: &GenParams) -> Result<(PlanningInstance<f64>, Layout), GenError> {
    params.validate()?;
    let (n, nt) = (params.n_locations, params.n_slots);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let ext = params.extent_km;
    let positions_km: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(0.0..=1.0) * ext, rng.random_range(0.0..=1.0) * ext])
        .collect();
    let wsum: f64 = params.archetype_weights.iter().sum();
    let archetypes: Vec<Archetype> = (0..n)
        .map(|_| {
            let mut u = rng.random_range(0.0..wsum);
            for (k, &w) in params.archetype_weights.iter().enumerate() {
                if u < w {
                    return Archetype::ALL[k];
                }
                u -= w;
            }
            Archetype::Recreational
        })
        .collect();
    let peaks: Vec<f64> = (0..n)
        .map(|_| {
            if params.flow_peak_max > params.flow_peak_min {
                rng.random_range(params.flow_peak_min..params.flow_peak_max)
            } else {
                params.flow_peak_min
            }
        })
        .collect();
    let slot_h = params.slot_minutes as f64 / 60.0;
    let slots_per_day = (1440 / params.slot_minutes) as usize;
    let noise = params.flow_noise;
    let flow: Vec<Vec<f64>> = (0..nt)
        .map(|t| {
            let day = t / slots_per_day;
            let hour = (t % slots_per_day) as f64 * slot_h;
            (0..n)
                .map(|i| {
                    let u = if noise > 0.0 { rng.random_range(1.0 - noise..1.0 + noise) } else { 1.0 };
                    (peaks[i] * archetypes[i].profile(day, hour) * u).round()
                })
                .collect()
        })
        .collect();

    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (a, b) = (positions_km[i], positions_km[j]);
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                })
                .collect()
        })
        .collect();
    if n > 1 && dist.iter().flatten().all(|&d| d == 0.0) {
        return Err(GenError::Invalid("all locations coincide".into()));
    }
    let center = [params.center[0] * ext, params.center[1] * ext];
    let location_cost: Vec<f64> = positions_km
        .iter()
        .map(|p| {
            let d = ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
            params.location_cost_scale * (-params.location_cost_decay * d).exp()
        })
        .collect();
    let alpha = sample_alpha(params.alpha_a, params.alpha_b, params.seed ^ 0xA1FA_5EED, nt, n)?;
    let assign_cost: Vec<Vec<AssignCost<f64>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| AssignCost::from_distance(dist[i][j], params.assign_price_per_km, params.range_km, i == j))
                .collect()
        })
        .collect();
    let delay: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0 } else { travel_slots(dist[i][j], params.speed_kmh, params.slot_minutes, nt) })
                .collect()
        })
        .collect();
    let labels = (0..n)
        .map(|i| {
            let a = match archetypes[i] {
                Archetype::Residential => "residential",
                Archetype::Office => "office",
                Archetype::Recreational => "recreational",
            };
            format!("L{:02}-{a}", i + 1)
        })
        .collect();
    let inst = PlanningInstance {
        n_locations: n,
        n_slots: nt,
        flow,
        alpha,
        beta: params.beta_kw,
        assign_cost,
        delay,
        base_cost: params.pi0,
        location_cost,
        budget: params.budget,
        capacity_max: vec![params.capacity_max; n],
        recurrence: vec![params.recurrence; nt],
        range_limit: params.range_km,
        distance: Some(dist),
        assign_price: Some(params.assign_price_per_km),
        coordinates: Some(positions_km.iter().map(|p| km_to_lonlat(params.origin_lonlat, p[0], p[1])).collect()),
        labels: Some(labels),
    };
    inst.validate().map_err(|e| GenError::Invalid(e.to_string()))?;
    Ok((inst, Layout { positions_km, archetypes }))
}
