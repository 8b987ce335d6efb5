//! A 50-row trip file with hand-counted flows and distances.

mod common;

use chargeplan::ingest::{build_distances, build_flows, ingest, read_trips, EconParams};
use common::trips50;

#[test]
fn parsing_counts() {
    let parsed = read_trips(trips50::path()).unwrap();
    assert_eq!(parsed.rows, trips50::ROWS);
    assert_eq!(parsed.skipped, trips50::SKIPPED);
    assert_eq!(parsed.records.len(), 48);
}

#[test]
fn flow_matrix_matches_hand_count() {
    let parsed = read_trips(trips50::path()).unwrap();
    let f = build_flows(&parsed.records, &trips50::spec()).unwrap();
    assert_eq!(f.flow, trips50::flow());
    assert_eq!(f.retained, trips50::RETAINED);
    assert_eq!(f.dropped_outside, trips50::DROPPED_OUTSIDE);
    assert_eq!(f.dropped_horizon, 0);
    assert_eq!(f.flow.iter().flatten().sum::<f64>(), f.retained as f64);
    let labels: Vec<&str> = f.zones.iter().map(|z| z.label.as_str()).collect();
    assert_eq!(labels, ["R0C0", "R0C1", "R1C0", "R1C1"]);
}

#[test]
fn distances_match_hand_means() {
    let parsed = read_trips(trips50::path()).unwrap();
    let d = build_distances(&parsed.records, &trips50::spec()).unwrap();
    let want = trips50::distance();
    for i in 0..4 {
        for j in 0..4 {
            assert!((d.distance[i][j] - want[i][j]).abs() <= 1e-9, "({i}, {j}): {} vs {}", d.distance[i][j], want[i][j]);
        }
    }
    assert_eq!(d.imputed, trips50::imputed());
    assert_eq!(d.imputed_pairs(), 7);
    assert_eq!(d.observations[0][1], 15);
    assert_eq!(d.observations[0][0], 3);
    // the data are not symmetric, so neither is the matrix
    assert_ne!(d.distance[0][1], d.distance[1][0]);
}

#[test]
fn assembled_instance() {
    let file = std::fs::File::open(trips50::path()).unwrap();
    let (inst, summary) = ingest(file, &trips50::spec(), &EconParams::default()).unwrap();
    assert_eq!(inst.n_locations, 4);
    assert_eq!(inst.n_slots, 168);
    assert_eq!(inst.base_cost, 500.0);
    assert_eq!(inst.beta, 250.0);
    assert_eq!(inst.flow, trips50::flow());
    assert_eq!(summary.rows_read, trips50::ROWS);
    assert_eq!(summary.rows_skipped, trips50::SKIPPED);
    assert_eq!(summary.records_retained, trips50::RETAINED);
    assert_eq!(summary.dropped_outside, trips50::DROPPED_OUTSIDE);
    assert_eq!(summary.imputed_pairs, 7);
    assert_eq!(summary.observed_pairs, 5);
    let text = inst.to_json().unwrap();
    assert_eq!(chargeplan::Instance::from_json(&text).unwrap(), inst);
}
