//! Cost of the joint plan as the reassignment range varies.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::central::{solve_centralized, CentralError, SolverConfig};
use crate::model::{ModelError, PlanningInstance};
use crate::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("no ranges to sweep")]
    Empty,
    #[error("range {range} km: {source}")]
    Solve { range: f64, source: CentralError },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub range_km: f64,
    pub investment: f64,
    pub assignment: f64,
    pub total: f64,
    /// Percent decrease of the total against the previous row.
    pub reduction_pct: Option<f64>,
}

/// Re-applies each range to the instance's stored distances and solves the
/// joint problem. Rows follow the order of `ranges`.
pub fn sweep_range<S: Scalar>(
    inst: &PlanningInstance<S>,
    ranges: &[f64],
    config: &SolverConfig,
    parallel: bool,
) -> Result<Vec<SweepRow>, SweepError> {
    if ranges.is_empty() {
        return Err(SweepError::Empty);
    }
    let instances: Vec<PlanningInstance<S>> = ranges
        .iter()
        .map(|&r| inst.with_range(S::lit(r)))
        .collect::<Result<_, _>>()?;
    let solve = |(k, x): (usize, &PlanningInstance<S>)| {
        solve_centralized(x, config).map_err(|source| SweepError::Solve {
            range: ranges[k],
            source,
        })
    };
    let sols: Vec<_> = if parallel {
        instances.par_iter().enumerate().map(solve).collect::<Result<_, _>>()?
    } else {
        instances.iter().enumerate().map(solve).collect::<Result<_, _>>()?
    };
    let mut rows: Vec<SweepRow> = Vec::with_capacity(sols.len());
    for (k, s) in sols.iter().enumerate() {
        let total = s.cost.total.as_f64();
        let reduction_pct = rows
            .last()
            .map(|p| if p.total > 0.0 { (p.total - total) / p.total * 100.0 } else { 0.0 });
        rows.push(SweepRow {
            range_km: ranges[k],
            investment: s.cost.investment.as_f64(),
            assignment: s.cost.assignment.as_f64(),
            total,
            reduction_pct,
        });
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["range_km", "investment", "assignment", "total", "reduction_pct"])?;
    for r in rows {
        w.write_record([
            r.range_km.to_string(),
            r.investment.to_string(),
            r.assignment.to_string(),
            r.total.to_string(),
            r.reduction_pct.map_or_else(String::new, |v| v.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
