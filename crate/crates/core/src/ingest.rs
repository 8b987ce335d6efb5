//! Trip records to planning instances: spatial and temporal binning,
//! destination flow counts and empirical pair distances.

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{sample_alpha, travel_slots};
use crate::model::{AssignCost, ModelError, PlanningInstance};

const EARTH_RADIUS_KM: f64 = 6371.0088;
const SHARD: usize = 8192;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("trip file is empty")]
    Empty,
    #[error("trip file lacks required column `{0}`")]
    MissingColumn(&'static str),
    #[error("invalid binning: {0}")]
    Spec(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One journey. Coordinates are `[lon, lat]` in degrees, the start time is in
/// Unix seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub start_time: i64,
    pub origin: [f64; 2],
    pub destination: [f64; 2],
    pub distance_km: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTrips {
    pub records: Vec<TripRecord>,
    /// Data rows seen, well formed or not.
    pub rows: usize,
    pub skipped: usize,
}

/// Parses Unix seconds, RFC 3339, or `YYYY-MM-DD HH:MM:SS` (also with `T` or
/// `/` separators) read as UTC.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then(|| v.floor() as i64);
    }
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Some(d.timestamp());
    }
    ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y/%m/%d %H:%M:%S", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|d| d.and_utc().timestamp())
}

const REQUIRED: [&str; 5] = ["start_time", "origin_lng", "origin_lat", "dest_lng", "dest_lat"];

/// Reads a CSV with columns `start_time, origin_lng, origin_lat, dest_lng,
/// dest_lat` and optionally `distance_km`. Malformed rows are skipped and
/// counted.
pub fn parse_trips<R: Read>(input: R) -> Result<ParsedTrips, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(IngestError::Empty);
    }
    let col = |name: &'static str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut idx = [0usize; 5];
    for (k, name) in REQUIRED.iter().enumerate() {
        idx[k] = col(name).ok_or(IngestError::MissingColumn(name))?;
    }
    let dist_col = col("distance_km");
    let mut out = ParsedTrips {
        records: Vec::new(),
        rows: 0,
        skipped: 0,
    };
    for row in rdr.records() {
        out.rows += 1;
        let rec = match row {
            Ok(r) => r,
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        };
        match parse_row(&rec, &idx, dist_col) {
            Some(r) => out.records.push(r),
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

fn parse_row(rec: &csv::StringRecord, idx: &[usize; 5], dist_col: Option<usize>) -> Option<TripRecord> {
    let num = |k: usize| -> Option<f64> { rec.get(k)?.parse::<f64>().ok().filter(|v| v.is_finite()) };
    let start_time = parse_timestamp(rec.get(idx[0])?)?;
    let origin = [num(idx[1])?, num(idx[2])?];
    let destination = [num(idx[3])?, num(idx[4])?];
    let valid = |p: [f64; 2]| p[0].abs() <= 180.0 && p[1].abs() <= 90.0;
    if !valid(origin) || !valid(destination) {
        return None;
    }
    let distance_km = match dist_col.and_then(|k| rec.get(k)) {
        None | Some("") => None,
        Some(s) => Some(s.parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0)?),
    };
    Some(TripRecord {
        start_time,
        origin,
        destination,
        distance_km,
    })
}

pub fn read_trips(path: impl AsRef<Path>) -> Result<ParsedTrips, IngestError> {
    parse_trips(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Great-circle distance between two `[lon, lat]` points in km.
pub fn haversine_km(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (la1, la2) = (a[1].to_radians(), b[1].to_radians());
    let dlat = la2 - la1;
    let dlon = (b[0] - a[0]).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zone {
    pub label: String,
    /// `[lon, lat]`.
    pub center: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZoneSpec {
    /// Equal cells over a bounding box; row 0 is the southern edge. Points on
    /// the northern or eastern edge fall in the last row or column.
    Grid {
        min_lon: f64,
        min_lat: f64,
        max_lon: f64,
        max_lat: f64,
        rows: usize,
        cols: usize,
    },
    /// Points go to the nearest zone center, and are dropped when farther
    /// than `max_km` from it.
    Zones { zones: Vec<Zone>, max_km: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinningSpec {
    pub zones: ZoneSpec,
    pub slot_minutes: u32,
    pub n_slots: usize,
    /// Time that maps to the start of slot 0.
    pub start: String,
    /// With `Some(w)`, only records in the first `w` horizons after `start`
    /// are kept and counts are averaged over them. With `None`, every record
    /// is folded onto the cycle.
    pub weeks: Option<usize>,
}

impl Default for BinningSpec {
    fn default() -> Self {
        BinningSpec {
            zones: ZoneSpec::Grid {
                min_lon: 103.9,
                min_lat: 30.5,
                max_lon: 104.2,
                max_lat: 30.8,
                rows: 10,
                cols: 10,
            },
            slot_minutes: 15,
            n_slots: 672,
            start: "1970-01-05 00:00:00".into(),
            weeks: None,
        }
    }
}

impl BinningSpec {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::Spec(m));
        if self.slot_minutes == 0 || 1440 % self.slot_minutes != 0 {
            return bad(format!("slot length {} min does not divide a day", self.slot_minutes));
        }
        if self.n_slots == 0 {
            return bad("n_slots must be positive".into());
        }
        if parse_timestamp(&self.start).is_none() {
            return bad(format!("unreadable start time `{}`", self.start));
        }
        if self.weeks == Some(0) {
            return bad("weeks must be positive".into());
        }
        match &self.zones {
            ZoneSpec::Grid {
                min_lon,
                min_lat,
                max_lon,
                max_lat,
                rows,
                cols,
            } => {
                if *rows == 0 || *cols == 0 {
                    return bad("grid needs at least one row and column".into());
                }
                if !(min_lon < max_lon && min_lat < max_lat) || ![min_lon, min_lat, max_lon, max_lat].iter().all(|v| v.is_finite()) {
                    return bad("grid bounding box is empty".into());
                }
            }
            ZoneSpec::Zones { zones, max_km } => {
                if zones.is_empty() {
                    return bad("zone list is empty".into());
                }
                if zones.iter().any(|z| !(z.center[0].is_finite() && z.center[1].is_finite())) {
                    return bad("zone centers must be finite".into());
                }
                if max_km.is_some_and(|m| !(m >= 0.0)) {
                    return bad("max_km must be non-negative".into());
                }
            }
        }
        Ok(())
    }

    pub fn n_zones(&self) -> usize {
        match &self.zones {
            ZoneSpec::Grid { rows, cols, .. } => rows * cols,
            ZoneSpec::Zones { zones, .. } => zones.len(),
        }
    }

    /// Labels and representative points of the zones.
    pub fn registry(&self) -> Vec<Zone> {
        match &self.zones {
            ZoneSpec::Grid {
                min_lon,
                min_lat,
                max_lon,
                max_lat,
                rows,
                cols,
            } => {
                let (dx, dy) = ((max_lon - min_lon) / *cols as f64, (max_lat - min_lat) / *rows as f64);
                (0..rows * cols)
                    .map(|k| {
                        let (r, c) = (k / cols, k % cols);
                        Zone {
                            label: format!("R{r}C{c}"),
                            center: [min_lon + (c as f64 + 0.5) * dx, min_lat + (r as f64 + 0.5) * dy],
                        }
                    })
                    .collect()
            }
            ZoneSpec::Zones { zones, .. } => zones.clone(),
        }
    }

    /// Zone containing a point, if any.
    pub fn zone_of(&self, p: [f64; 2]) -> Option<usize> {
        match &self.zones {
            ZoneSpec::Grid {
                min_lon,
                min_lat,
                max_lon,
                max_lat,
                rows,
                cols,
            } => {
                if p[0] < *min_lon || p[0] > *max_lon || p[1] < *min_lat || p[1] > *max_lat {
                    return None;
                }
                let c = (((p[0] - min_lon) / (max_lon - min_lon) * *cols as f64) as usize).min(cols - 1);
                let r = (((p[1] - min_lat) / (max_lat - min_lat) * *rows as f64) as usize).min(rows - 1);
                Some(r * cols + c)
            }
            ZoneSpec::Zones { zones, max_km } => {
                let (k, d) = zones
                    .iter()
                    .enumerate()
                    .map(|(k, z)| (k, haversine_km(p, z.center)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))?;
                max_km.is_none_or(|m| d <= m).then_some(k)
            }
        }
    }

    fn slot_seconds(&self) -> i64 {
        self.slot_minutes as i64 * 60
    }

    /// Slot of a timestamp, or `None` outside the kept horizon.
    pub fn slot_of(&self, ts: i64) -> Option<usize> {
        let start = parse_timestamp(&self.start).expect("validated start");
        let rel = ts - start;
        let period = self.slot_seconds() * self.n_slots as i64;
        if let Some(w) = self.weeks {
            if rel < 0 || rel >= period * w as i64 {
                return None;
            }
        }
        Some(rel.div_euclid(self.slot_seconds()).rem_euclid(self.n_slots as i64) as usize)
    }
}

/// Destination counts per slot and zone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTable {
    /// `flow[t][i]`.
    pub flow: Vec<Vec<f64>>,
    pub zones: Vec<Zone>,
    pub retained: usize,
    pub dropped_outside: usize,
    pub dropped_horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    /// `distance[i][j]` in km.
    pub distance: Vec<Vec<f64>>,
    pub observations: Vec<Vec<usize>>,
    /// Set where no trip was observed and the centroid distance was used.
    pub imputed: Vec<Vec<bool>>,
}

impl DistanceTable {
    pub fn imputed_pairs(&self) -> usize {
        self.imputed
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().filter(|&(j, &f)| f && j != i).count())
            .sum()
    }
}

/// Counts each record at its destination zone and start slot.
pub fn build_flows(records: &[TripRecord], spec: &BinningSpec) -> Result<FlowTable, IngestError> {
    spec.validate()?;
    let (n, nt) = (spec.n_zones(), spec.n_slots);
    // integer counts per shard make the merge exact and order independent
    let shards: Vec<(Vec<u64>, usize, usize)> = records
        .par_chunks(SHARD)
        .map(|chunk| {
            let mut counts = vec![0u64; n * nt];
            let (mut outside, mut horizon) = (0, 0);
            for r in chunk {
                let Some(i) = spec.zone_of(r.destination) else {
                    outside += 1;
                    continue;
                };
                let Some(t) = spec.slot_of(r.start_time) else {
                    horizon += 1;
                    continue;
                };
                counts[t * n + i] += 1;
            }
            (counts, outside, horizon)
        })
        .collect();
    let mut counts = vec![0u64; n * nt];
    let (mut outside, mut horizon) = (0, 0);
    for (c, o, h) in shards {
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        outside += o;
        horizon += h;
    }
    let div = spec.weeks.unwrap_or(1) as f64;
    let flow = (0..nt).map(|t| (0..n).map(|i| counts[t * n + i] as f64 / div).collect()).collect();
    Ok(FlowTable {
        flow,
        zones: spec.registry(),
        retained: records.len() - outside - horizon,
        dropped_outside: outside,
        dropped_horizon: horizon,
    })
}

/// Mean observed trip distance per ordered zone pair, using the recorded
/// distance when present and the great-circle distance otherwise. Pairs with
/// no trips get the distance between zone centers and are flagged.
pub fn build_distances(records: &[TripRecord], spec: &BinningSpec) -> Result<DistanceTable, IngestError> {
    spec.validate()?;
    let n = spec.n_zones();
    let shards: Vec<(Vec<f64>, Vec<usize>)> = records
        .par_chunks(SHARD)
        .map(|chunk| {
            let mut sum = vec![0.0; n * n];
            let mut cnt = vec![0usize; n * n];
            for r in chunk {
                if let (Some(i), Some(j)) = (spec.zone_of(r.origin), spec.zone_of(r.destination)) {
                    sum[i * n + j] += r.distance_km.unwrap_or_else(|| haversine_km(r.origin, r.destination));
                    cnt[i * n + j] += 1;
                }
            }
            (sum, cnt)
        })
        .collect();
    let mut sum = vec![0.0; n * n];
    let mut cnt = vec![0usize; n * n];
    for (s, c) in shards {
        for k in 0..n * n {
            sum[k] += s[k];
            cnt[k] += c[k];
        }
    }
    let zones = spec.registry();
    let mut distance = vec![vec![0.0; n]; n];
    let mut imputed = vec![vec![false; n]; n];
    let mut observations = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in 0..n {
            observations[i][j] = cnt[i * n + j];
            if i == j {
                continue;
            }
            if cnt[i * n + j] > 0 {
                distance[i][j] = sum[i * n + j] / cnt[i * n + j] as f64;
            } else {
                distance[i][j] = haversine_km(zones[i].center, zones[j].center);
                imputed[i][j] = true;
            }
        }
    }
    Ok(DistanceTable {
        distance,
        observations,
        imputed,
    })
}

/// Economic and behavioral parameters attached to ingested flows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconParams {
    pub seed: u64,
    pub alpha_a: f64,
    pub alpha_b: f64,
    pub beta_kw: f64,
    pub pi0: f64,
    pub location_cost_scale: f64,
    /// Per km from `center`.
    pub location_cost_decay: f64,
    /// `[lon, lat]` of the cost peak; the mean zone center when absent.
    pub center: Option<[f64; 2]>,
    pub assign_price_per_km: f64,
    pub range_km: f64,
    pub recurrence: f64,
    pub budget: f64,
    pub capacity_max: f64,
    pub speed_kmh: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        EconParams {
            seed: 0,
            alpha_a: 10.0,
            alpha_b: 90.0,
            beta_kw: 250.0,
            pi0: 500.0,
            location_cost_scale: 1500.0,
            location_cost_decay: 0.3,
            center: None,
            assign_price_per_km: 0.2,
            range_km: 3.0,
            recurrence: 520.0,
            budget: 2e10,
            capacity_max: 1e7,
            speed_kmh: 30.0,
        }
    }
}

/// Builds an instance with the same cost, range and delay rules as the
/// synthetic generator.
pub fn assemble_instance(
    flows: &FlowTable,
    distances: &DistanceTable,
    econ: &EconParams,
    slot_minutes: u32,
) -> Result<PlanningInstance<f64>, IngestError> {
    let n = flows.zones.len();
    let nt = flows.flow.len();
    if distances.distance.len() != n || distances.distance.iter().any(|r| r.len() != n) {
        return Err(IngestError::Shape(format!(
            "{} zones but a {}-row distance matrix",
            n,
            distances.distance.len()
        )));
    }
    if flows.flow.iter().any(|r| r.len() != n) || nt == 0 {
        return Err(IngestError::Shape("flow rows must have one entry per zone".into()));
    }
    if !(econ.speed_kmh > 0.0) || !(econ.location_cost_decay > 0.0) {
        return Err(IngestError::Params("speed and decay rate must be positive".into()));
    }
    let alpha = sample_alpha(econ.alpha_a, econ.alpha_b, econ.seed ^ 0xA1FA_5EED, nt, n)
        .map_err(|e| IngestError::Params(e.to_string()))?;
    let center = econ.center.unwrap_or_else(|| {
        let s = flows.zones.iter().fold([0.0, 0.0], |a, z| [a[0] + z.center[0], a[1] + z.center[1]]);
        [s[0] / n as f64, s[1] / n as f64]
    });
    let d = &distances.distance;
    let inst = PlanningInstance {
        n_locations: n,
        n_slots: nt,
        flow: flows.flow.clone(),
        alpha,
        beta: econ.beta_kw,
        assign_cost: (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| AssignCost::from_distance(d[i][j], econ.assign_price_per_km, econ.range_km, i == j))
                    .collect()
            })
            .collect(),
        delay: (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { 0 } else { travel_slots(d[i][j], econ.speed_kmh, slot_minutes, nt) })
                    .collect()
            })
            .collect(),
        base_cost: econ.pi0,
        location_cost: flows
            .zones
            .iter()
            .map(|z| econ.location_cost_scale * (-econ.location_cost_decay * haversine_km(z.center, center)).exp())
            .collect(),
        budget: econ.budget,
        capacity_max: vec![econ.capacity_max; n],
        recurrence: vec![econ.recurrence; nt],
        range_limit: econ.range_km,
        distance: Some(d.clone()),
        assign_price: Some(econ.assign_price_per_km),
        coordinates: Some(flows.zones.iter().map(|z| z.center).collect()),
        labels: Some(flows.zones.iter().map(|z| z.label.clone()).collect()),
    };
    inst.validate()?;
    Ok(inst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub rows_read: usize,
    pub rows_skipped: usize,
    pub records_retained: usize,
    pub dropped_outside: usize,
    pub dropped_horizon: usize,
    pub zones: usize,
    pub observed_pairs: usize,
    pub imputed_pairs: usize,
}

impl IngestSummary {
    pub fn new(parsed: &ParsedTrips, flows: &FlowTable, distances: &DistanceTable) -> Self {
        let n = flows.zones.len();
        IngestSummary {
            rows_read: parsed.rows,
            rows_skipped: parsed.skipped,
            records_retained: flows.retained,
            dropped_outside: flows.dropped_outside,
            dropped_horizon: flows.dropped_horizon,
            zones: n,
            observed_pairs: (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j && distances.observations[i][j] > 0)
                .count(),
            imputed_pairs: distances.imputed_pairs(),
        }
    }
}

/// Parsing, binning and assembly in one call.
pub fn ingest<R: Read>(
    input: R,
    spec: &BinningSpec,
    econ: &EconParams,
) -> Result<(PlanningInstance<f64>, IngestSummary), IngestError> {
    let parsed = parse_trips(input)?;
    let flows = build_flows(&parsed.records, spec)?;
    let distances = build_distances(&parsed.records, spec)?;
    let inst = assemble_instance(&flows, &distances, econ, spec.slot_minutes)?;
    let summary = IngestSummary::new(&parsed, &flows, &distances);
    Ok((inst, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec2x2() -> BinningSpec {
        BinningSpec {
            zones: ZoneSpec::Grid {
                min_lon: 104.0,
                min_lat: 30.0,
                max_lon: 104.2,
                max_lat: 30.2,
                rows: 2,
                cols: 2,
            },
            n_slots: 8,
            ..BinningSpec::default()
        }
    }

    const HEADER: &str = "start_time,origin_lng,origin_lat,dest_lng,dest_lat,distance_km\n";

    #[test]
    fn header_only_is_empty() {
        let p = parse_trips(HEADER.as_bytes()).unwrap();
        assert!(p.records.is_empty());
        assert_eq!(p.skipped, 0);
    }

    #[test]
    fn fully_empty_file_is_an_error() {
        assert!(matches!(parse_trips("".as_bytes()), Err(IngestError::Empty)));
    }

    #[test]
    fn missing_column_is_an_error() {
        let e = parse_trips("start_time,origin_lng,origin_lat,dest_lng\n".as_bytes()).unwrap_err();
        assert!(matches!(e, IngestError::MissingColumn("dest_lat")));
    }

    #[test]
    fn one_row() {
        let csv = format!("{HEADER}2024-03-04 08:15:00,104.05,30.05,104.15,30.15,2.5\n");
        let p = parse_trips(csv.as_bytes()).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].distance_km, Some(2.5));
        assert_eq!(p.records[0].destination, [104.15, 30.15]);
    }

    #[test]
    fn bad_latitude_is_skipped() {
        let csv = format!("{HEADER}2024-03-04 08:15:00,104.05,north,104.15,30.15,\n");
        let p = parse_trips(csv.as_bytes()).unwrap();
        assert_eq!((p.records.len(), p.skipped, p.rows), (0, 1, 1));
    }

    #[test]
    fn timestamp_formats_agree() {
        let a = parse_timestamp("2024-03-04 08:15:00").unwrap();
        assert_eq!(parse_timestamp("2024-03-04T08:15:00Z"), Some(a));
        assert_eq!(parse_timestamp("2024-03-04T09:15:00+01:00"), Some(a));
        assert_eq!(parse_timestamp(&a.to_string()), Some(a));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    fn trip(ts: i64, o: [f64; 2], d: [f64; 2], km: Option<f64>) -> TripRecord {
        TripRecord {
            start_time: ts,
            origin: o,
            destination: d,
            distance_km: km,
        }
    }

    #[test]
    fn no_records_give_zero_flows() {
        let f = build_flows(&[], &spec2x2()).unwrap();
        assert_eq!(f.flow, vec![vec![0.0; 4]; 8]);
        assert_eq!(f.zones.len(), 4);
    }

    #[test]
    fn three_records_one_cell() {
        let s = spec2x2();
        let t0 = parse_timestamp(&s.start).unwrap() + 2 * 900 + 10;
        let recs: Vec<_> = (0..3).map(|k| trip(t0 + k, [104.01, 30.01], [104.15, 30.05], None)).collect();
        let f = build_flows(&recs, &s).unwrap();
        for t in 0..8 {
            for i in 0..4 {
                assert_eq!(f.flow[t][i], if (t, i) == (2, 1) { 3.0 } else { 0.0 });
            }
        }
        assert_eq!(f.retained, 3);
    }

    #[test]
    fn outside_and_horizon_drops() {
        let mut s = spec2x2();
        s.weeks = Some(1);
        let t0 = parse_timestamp(&s.start).unwrap();
        let recs = vec![
            trip(t0, [104.0, 30.0], [105.0, 30.1], None),
            trip(t0 - 1, [104.0, 30.0], [104.1, 30.1], None),
            trip(t0 + 8 * 900, [104.0, 30.0], [104.1, 30.1], None),
            trip(t0 + 8 * 900 - 1, [104.0, 30.0], [104.2, 30.2], None),
        ];
        let f = build_flows(&recs, &s).unwrap();
        assert_eq!((f.retained, f.dropped_outside, f.dropped_horizon), (1, 1, 2));
        assert_eq!(f.flow[7][3], 1.0);
    }

    #[test]
    fn weeks_average() {
        let mut s = spec2x2();
        s.weeks = Some(2);
        let t0 = parse_timestamp(&s.start).unwrap();
        let recs = vec![
            trip(t0, [104.0, 30.0], [104.01, 30.01], None),
            trip(t0 + 8 * 900, [104.0, 30.0], [104.01, 30.01], None),
            trip(t0 + 8 * 900 + 1, [104.0, 30.0], [104.01, 30.01], None),
        ];
        let f = build_flows(&recs, &s).unwrap();
        assert_eq!(f.flow[0][0], 1.5);
    }

    #[test]
    fn distances_mean_fallback_and_diagonal() {
        let s = spec2x2();
        let (a, b) = ([104.05, 30.05], [104.15, 30.05]);
        let recs = vec![trip(0, a, b, Some(2.0)), trip(0, a, b, Some(4.0)), trip(0, a, a, Some(9.0))];
        let d = build_distances(&recs, &s).unwrap();
        assert_eq!(d.distance[0][1], 3.0);
        assert!(!d.imputed[0][1]);
        assert_eq!(d.distance[0][0], 0.0);
        assert_eq!(d.observations[0][0], 1);
        assert!(d.imputed[1][0]);
        let z = s.registry();
        assert_eq!(d.distance[1][0], haversine_km(z[1].center, z[0].center));
        assert_eq!(d.imputed_pairs(), 11);
    }

    #[test]
    fn haversine_reference() {
        // one degree of latitude
        let d = haversine_km([104.0, 30.0], [104.0, 31.0]);
        assert!((d - EARTH_RADIUS_KM * std::f64::consts::PI / 180.0).abs() < 1e-9);
        assert_eq!(haversine_km([1.0, 2.0], [1.0, 2.0]), 0.0);
    }

    #[test]
    fn nearest_zone_lookup() {
        let s = BinningSpec {
            zones: ZoneSpec::Zones {
                zones: vec![
                    Zone {
                        label: "a".into(),
                        center: [104.0, 30.0],
                    },
                    Zone {
                        label: "b".into(),
                        center: [104.1, 30.0],
                    },
                ],
                max_km: Some(3.0),
            },
            ..BinningSpec::default()
        };
        assert_eq!(s.zone_of([104.09, 30.0]), Some(1));
        assert_eq!(s.zone_of([104.01, 30.0]), Some(0));
        assert_eq!(s.zone_of([104.05, 30.2]), None);
    }

    #[test]
    fn far_pairs_collapse_to_base() {
        let s = spec2x2();
        let f = build_flows(&[], &s).unwrap();
        let d = build_distances(&[], &s).unwrap();
        let econ = EconParams {
            range_km: 0.5,
            ..EconParams::default()
        };
        let inst = assemble_instance(&f, &d, &econ, s.slot_minutes).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(inst.assign_cost[i][j].is_forbidden(), i != j);
            }
        }
        assert_eq!(inst.base_cost, 500.0);
    }

    #[test]
    fn bad_spec_rejected() {
        let mut s = spec2x2();
        s.slot_minutes = 7;
        assert!(s.validate().is_err());
        let mut s = spec2x2();
        s.start = "soon".into();
        assert!(s.validate().is_err());
    }
}
