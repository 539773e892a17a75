//! Truncation-refinement studies and conservation drift.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{EdgError, Result};
use crate::integrator::{integrate, IntegratorConfig, StopReason, Trajectory, BASE_ORDERS};
use crate::kernel::Kernel;
use crate::state::{make_state, InitSpec};

/// Environment variable capping the number of concurrent integrations.
pub const THREADS_ENV: &str = "EDG_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n_values: Vec<usize>,
    pub reference_n: usize,
    pub orders: Vec<f64>,
    /// `sup_diffs[i][p]`: sup over shared recorded times of
    /// `|M_p^{N_i} - M_p^{reference}|`.
    pub sup_diffs: Vec<Vec<f64>>,
    pub stop_reasons: Vec<StopReason>,
    /// Blow-up crossing time of each run, if the detector fired.
    pub crossing_times: Vec<Option<f64>>,
    /// Last recorded time of each run.
    pub final_times: Vec<f64>,
}

impl ConvergenceReport {
    pub fn all_reached_end(&self) -> bool {
        self.stop_reasons.iter().all(|r| *r == StopReason::ReachedTEnd)
    }

    pub fn column(&self, order: f64) -> Option<Vec<f64>> {
        let i = self.orders.iter().position(|&p| p == order)?;
        Some(self.sup_diffs.iter().map(|row| row[i]).collect())
    }
}

fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Sup of `|a - b|` per order over the times recorded by both runs.
fn sup_difference(run: &Trajectory, reference: &Trajectory) -> Vec<f64> {
    let (a, b) = (&run.moments, &reference.moments);
    let mut out = vec![0.0f64; a.orders.len()];
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let (ta, tb) = (a.times[i], b.times[j]);
        if ta < tb {
            i += 1;
        } else if tb < ta {
            j += 1;
        } else {
            for (o, (x, y)) in out.iter_mut().zip(a.values[i].iter().zip(&b.values[j])) {
                *o = o.max((x - y).abs());
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Integrates the same problem at every truncation size in `n_list`
/// (concurrently) and compares moments with the largest size.
pub fn convergence_study(
    init: &InitSpec,
    kernel: &Kernel,
    cfg: &IntegratorConfig,
    n_list: &[usize],
) -> Result<ConvergenceReport> {
    if n_list.len() < 2 {
        return Err(EdgError::InvalidParameter(format!(
            "convergence study needs at least two sizes, got {}",
            n_list.len()
        )));
    }
    let mut n_values = n_list.to_vec();
    n_values.sort_unstable();
    n_values.dedup();
    let reference_n = *n_values.last().expect("non-empty");

    let run = |&n: &usize| -> Result<Trajectory> {
        let s = make_state(init, n)?;
        integrate(&s, kernel, cfg)
    };
    let runs: Vec<Result<Trajectory>> = match thread_count() {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| EdgError::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| n_values.par_iter().map(run).collect()),
        None => n_values.par_iter().map(run).collect(),
    };
    let runs: Vec<Trajectory> = runs.into_iter().collect::<Result<_>>()?;
    let reference = runs.last().expect("non-empty");
    Ok(ConvergenceReport {
        sup_diffs: runs.iter().map(|r| sup_difference(r, reference)).collect(),
        stop_reasons: runs.iter().map(|r| r.stop_reason).collect(),
        crossing_times: runs.iter().map(|r| r.crossing.map(|c| c.time())).collect(),
        final_times: runs.iter().map(|r| r.last().t()).collect(),
        orders: BASE_ORDERS.to_vec(),
        n_values,
        reference_n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationReport {
    pub max_drift_m0: f64,
    pub max_drift_m1: f64,
}

impl ConservationReport {
    pub fn within(&self, tol: f64) -> bool {
        self.max_drift_m0 <= tol && self.max_drift_m1 <= tol
    }
}

/// Largest relative drift of `M0` and `M1` over the recorded states
/// (absolute when the initial value is zero).
pub fn conservation_report(traj: &Trajectory) -> ConservationReport {
    let drift = |p: f64| {
        let col = traj.moments.column(p).expect("base orders are tracked");
        let first = col[0];
        let scale = if first != 0.0 { first.abs() } else { 1.0 };
        col.iter().map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
    };
    ConservationReport {
        max_drift_m0: drift(0.0),
        max_drift_m1: drift(1.0),
    }
}
