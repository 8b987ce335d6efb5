//! Hand-counted expectations for `tests/data/trips50.csv`.
//!
//! Grid of 2 x 2 zones over [104.0, 104.2] x [30.0, 30.2]; zone 0 is the
//! south-west cell, 1 south-east, 2 north-west, 3 north-east. One-hour slots
//! over one week starting Monday 1970-01-05.

use std::path::PathBuf;

use chargeplan::ingest::{BinningSpec, ZoneSpec};

pub const ROWS: usize = 50;
pub const SKIPPED: usize = 2;
pub const RETAINED: usize = 45;
pub const DROPPED_OUTSIDE: usize = 3;

pub const CENTERS: [[f64; 2]; 4] = [[104.05, 30.05], [104.15, 30.05], [104.05, 30.15], [104.15, 30.15]];
/// Pairs with at least one recorded trip off the diagonal.
pub const OBSERVED: [(usize, usize); 5] = [(0, 1), (1, 0), (2, 3), (3, 2), (2, 0)];

pub fn path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/trips50.csv")
}

pub fn spec() -> BinningSpec {
    BinningSpec {
        zones: ZoneSpec::Grid {
            min_lon: 104.0,
            min_lat: 30.0,
            max_lon: 104.2,
            max_lat: 30.2,
            rows: 2,
            cols: 2,
        },
        slot_minutes: 60,
        n_slots: 168,
        ..BinningSpec::default()
    }
}

/// Great-circle distance on a sphere of radius 6371.0088 km.
pub fn great_circle(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (p1, p2) = (a[1].to_radians(), b[1].to_radians());
    let dp = p2 - p1;
    let dl = (b[0] - a[0]).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6371.0088 * h.sqrt().asin()
}

pub fn flow() -> Vec<Vec<f64>> {
    let mut f = vec![vec![0.0; 4]; 168];
    f[8][1] = 10.0 + 5.0; // Monday 08h into zone 1, plus the folded second Monday
    f[18][0] = 8.0; // Monday 18h into zone 0
    f[134][3] = 6.0; // Saturday 14h into zone 3
    f[167][2] = 4.0; // Sunday 23h of the week before, folded
    f[24][0] = 3.0; // Tuesday 00h, trips within zone 0
    f[60][0] = 9.0; // Wednesday 12h into zone 0
    f
}

pub fn distance() -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                d[i][j] = great_circle(CENTERS[i], CENTERS[j]);
            }
        }
    }
    // (5 * 2 + 5 * 4 + 5 * 6) / 15
    d[0][1] = 4.0;
    d[1][0] = 3.5;
    // no distance column in the file
    d[2][3] = great_circle(CENTERS[2], CENTERS[3]);
    d[3][2] = 1.25;
    // (4 * 2.25 + 5 * 2.75) / 9
    d[2][0] = 22.75 / 9.0;
    d
}

pub fn imputed() -> Vec<Vec<bool>> {
    let mut m: Vec<Vec<bool>> = (0..4).map(|i| (0..4).map(|j| i != j).collect()).collect();
    for (i, j) in OBSERVED {
        m[i][j] = false;
    }
    m
}
