//! Gelation-time estimates from the `M2` series of a trajectory.

use serde::Serialize;

use crate::error::{EdgError, Result};
use crate::integrator::Trajectory;
use crate::kernel::Kernel;

/// Below this magnitude the fitted slope of `1/M2` is treated as flat.
pub const NON_GELLING_SLOPE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GelationMethod {
    InverseM2LinearFit,
    ThresholdCrossing,
}

impl std::fmt::Display for GelationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GelationMethod::InverseM2LinearFit => "inverse_m2_linear_fit",
            GelationMethod::ThresholdCrossing => "threshold_crossing",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GelationEstimate {
    /// Infinite when the fitted line does not descend.
    pub t_gel: f64,
    pub method: GelationMethod,
    /// Coefficient of determination of the fit; zero for threshold estimates.
    pub fit_r2: f64,
    pub window: (f64, f64),
    pub analytic_prediction: Option<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub samples: usize,
    pub non_gelling: bool,
}

/// `(2 M2(0) C)^-1` for kernels of the form `C j^2 k^2`.
pub fn analytic_gelation_time(kernel: &Kernel, m2_initial: f64) -> Option<f64> {
    let c = kernel.quadratic_coefficient()?;
    (c > 0.0 && m2_initial > 0.0).then(|| 1.0 / (2.0 * m2_initial * c))
}

/// Ordinary least squares `y = intercept + slope x`, with `r^2`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 {
        1.0 - ss_res / syy
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    (slope, intercept, r2.clamp(0.0, 1.0))
}

/// Fits a line through `(t, 1/M2(t))` over the recorded times inside
/// `window` and returns its root as the gelation time.
pub fn estimate_gelation_time(traj: &Trajectory, kernel: &Kernel, window: (f64, f64)) -> Result<GelationEstimate> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(EdgError::InvalidParameter(format!("fit window ({lo}, {hi}) is empty")));
    }
    let m2 = traj
        .moments
        .column(2.0)
        .expect("trajectories always track the second moment");
    let (ts, inv): (Vec<f64>, Vec<f64>) = traj
        .times()
        .iter()
        .zip(&m2)
        .filter(|(t, m)| (lo..=hi).contains(*t) && **m > 0.0)
        .map(|(t, m)| (*t, 1.0 / m))
        .unzip();
    if ts.len() < 4 {
        return Err(EdgError::TooFewSamples {
            lo,
            hi,
            count: ts.len(),
        });
    }
    let (slope, intercept, r2) = linear_fit(&ts, &inv);
    let non_gelling = slope.abs() < NON_GELLING_SLOPE;
    let root = -intercept / slope;
    let t_gel = if slope < 0.0 && root > lo { root } else { f64::INFINITY };
    Ok(GelationEstimate {
        t_gel,
        method: GelationMethod::InverseM2LinearFit,
        fit_r2: r2,
        window,
        analytic_prediction: analytic_gelation_time(kernel, m2[0]),
        slope,
        intercept,
        samples: ts.len(),
        non_gelling,
    })
}

/// Gelation time read off the blow-up detector, if it fired.
pub fn threshold_crossing_estimate(traj: &Trajectory, kernel: &Kernel) -> Option<GelationEstimate> {
    let c = traj.crossing?;
    let m2_0 = traj.initial().moment(2.0);
    Some(GelationEstimate {
        t_gel: c.time(),
        method: GelationMethod::ThresholdCrossing,
        fit_r2: 0.0,
        window: (c.t_before, c.t_after),
        analytic_prediction: analytic_gelation_time(kernel, m2_0),
        slope: f64::NAN,
        intercept: f64::NAN,
        samples: 2,
        non_gelling: false,
    })
}

/// `[0.1, 0.7]` times a reference gelation time: the analytic one when
/// known, else the blow-up crossing, else the end of the trajectory.
pub fn default_fit_window(traj: &Trajectory, kernel: &Kernel) -> (f64, f64) {
    let m2_0 = traj.initial().moment(2.0);
    let reference = analytic_gelation_time(kernel, m2_0)
        .or_else(|| traj.crossing.map(|c| c.time()))
        .unwrap_or_else(|| traj.last().t());
    let t0 = traj.initial().t();
    (t0 + 0.1 * (reference - t0), t0 + 0.7 * (reference - t0))
}
