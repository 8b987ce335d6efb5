use super::*;
use crate::central::lp::{RowKey, VarKey};

fn lp(
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, RowSense, f64)>,
    bounds: Vec<(f64, f64)>,
) -> StandardFormLP<f64> {
    let n = objective.len();
    let mut triplets = Vec::new();
    for j in 0..n {
        for (i, r) in rows.iter().enumerate() {
            if r.0[j] != 0.0 {
                triplets.push((i, j, r.0[j]));
            }
        }
    }
    StandardFormLP {
        n_rows: rows.len(),
        n_cols: n,
        triplets,
        senses: rows.iter().map(|r| r.1).collect(),
        rhs: rows.iter().map(|r| r.2).collect(),
        lower: bounds.iter().map(|b| b.0).collect(),
        upper: bounds.iter().map(|b| b.1).collect(),
        objective,
        vars: (0..n).map(|i| VarKey::Capacity { i }).collect(),
        rows: (0..rows.len()).map(RowKey::Other).collect(),
    }
}

/// Verifies primal feasibility, dual sign conditions and complementary
/// slackness of a returned point: an optimality certificate independent of
/// how the solver got there.
fn assert_kkt(p: &StandardFormLP<f64>, s: &LpSolution<f64>, tol: f64) {
    let mut ax = vec![0.0; p.n_rows];
    let mut aty = vec![0.0; p.n_cols];
    for &(i, j, v) in &p.triplets {
        ax[i] += v * s.x[j];
        aty[j] += v * s.row_duals[i];
    }
    for i in 0..p.n_rows {
        let (slack, y) = (p.rhs[i] - ax[i], s.row_duals[i]);
        match p.senses[i] {
            RowSense::Le => {
                assert!(slack >= -tol, "row {i} violated by {slack}");
                assert!(y <= tol, "row {i} dual sign {y}");
            }
            RowSense::Ge => {
                assert!(slack <= tol, "row {i} violated by {slack}");
                assert!(y >= -tol, "row {i} dual sign {y}");
            }
            RowSense::Eq => assert!(slack.abs() <= tol),
        }
        assert!((slack * y).abs() <= tol * (1.0 + y.abs() + slack.abs()), "row {i} complementarity");
    }
    for j in 0..p.n_cols {
        let d = p.objective[j] - aty[j];
        let (x, l, u) = (s.x[j], p.lower[j], p.upper[j]);
        assert!(x >= l - tol && x <= u + tol, "column {j} out of bounds");
        if x > l + tol && x < u - tol {
            assert!(d.abs() <= tol * (1.0 + p.objective[j].abs()), "column {j} reduced cost {d}");
        } else if x <= l + tol && l < u {
            assert!(d >= -tol * (1.0 + p.objective[j].abs()), "column {j} reduced cost {d}");
        } else if l < u {
            assert!(d <= tol * (1.0 + p.objective[j].abs()), "column {j} reduced cost {d}");
        }
    }
}

#[test]
fn covering_lp() {
    // min 2x + 3y  s.t. x + y >= 4, x + 3y >= 6
    let p = lp(
        vec![2.0, 3.0],
        vec![(vec![1.0, 1.0], RowSense::Ge, 4.0), (vec![1.0, 3.0], RowSense::Ge, 6.0)],
        vec![(0.0, f64::INFINITY); 2],
    );
    let s = solve(&p, &SimplexOptions::default()).unwrap();
    assert!((s.objective - 9.0).abs() < 1e-9, "{}", s.objective);
    assert!((s.x[0] - 3.0).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9);
    assert_kkt(&p, &s, 1e-9);
}

#[test]
fn upper_bounds_and_equalities() {
    // min x + 2y + 3z  s.t. x + y + z = 10, x <= 4, y <= 5
    let p = lp(
        vec![1.0, 2.0, 3.0],
        vec![(vec![1.0, 1.0, 1.0], RowSense::Eq, 10.0)],
        vec![(0.0, 4.0), (0.0, 5.0), (0.0, f64::INFINITY)],
    );
    let s = solve(&p, &SimplexOptions::default()).unwrap();
    assert!((s.objective - (4.0 + 10.0 + 3.0)).abs() < 1e-9);
    assert_kkt(&p, &s, 1e-9);
}

#[test]
fn detects_infeasibility() {
    let p = lp(
        vec![1.0],
        vec![(vec![1.0], RowSense::Ge, 5.0), (vec![1.0], RowSense::Le, 3.0)],
        vec![(0.0, f64::INFINITY)],
    );
    assert!(matches!(solve(&p, &SimplexOptions::default()), Err(SimplexError::Infeasible { .. })));
}

#[test]
fn empty_rows_are_fine() {
    let p = lp(vec![1.0], vec![(vec![0.0], RowSense::Le, 0.0), (vec![1.0], RowSense::Ge, 2.0)], vec![(0.0, 100.0)]);
    let s = solve(&p, &SimplexOptions::default()).unwrap();
    assert!((s.objective - 2.0).abs() < 1e-12);
}

#[test]
fn random_covering_lps_satisfy_kkt() {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _case in 0..60 {
        let n = rng.random_range(2..12);
        let m = rng.random_range(1..10);
        let objective: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let rows: Vec<(Vec<f64>, RowSense, f64)> = (0..m)
            .map(|_| {
                let a: Vec<f64> = (0..n)
                    .map(|_| if rng.random_bool(0.6) { rng.random_range(-1.0..3.0) } else { 0.0 })
                    .collect();
                let sense = if rng.random_bool(0.5) { RowSense::Ge } else { RowSense::Le };
                let b = match sense {
                    RowSense::Ge => rng.random_range(-2.0..5.0),
                    _ => rng.random_range(0.0..8.0),
                };
                (a, sense, b)
            })
            .collect();
        let bounds: Vec<(f64, f64)> = (0..n)
            .map(|_| (0.0, if rng.random_bool(0.3) { rng.random_range(0.5..4.0) } else { f64::INFINITY }))
            .collect();
        let p = lp(objective, rows, bounds);
        match solve(&p, &SimplexOptions::default()) {
            Ok(s) => assert_kkt(&p, &s, 1e-7),
            Err(SimplexError::Infeasible { .. }) => {}
            Err(e) => panic!("unexpected {e}"),
        }
    }
}
