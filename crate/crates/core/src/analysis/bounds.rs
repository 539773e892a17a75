//! Analytic moment bounds and their comparison with simulated moments.

use serde::Serialize;

use crate::error::{EdgError, Result};
use crate::integrator::Trajectory;
use crate::kernel::Kernel;
use crate::state::DensityState;

/// Relative slack granted to exact inequalities for floating-point roundoff.
pub const ROUNDOFF_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// simulated <= bound
    Upper,
    /// simulated >= bound
    Lower,
}

/// Simulated moment against an analytic bound along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub bound_name: String,
    pub kind: BoundKind,
    /// Truncation size of the run the report was made from.
    pub n: usize,
    pub times: Vec<f64>,
    pub simulated: Vec<f64>,
    pub bound_value: Vec<f64>,
    pub satisfied: Vec<bool>,
    /// Signed relative room: `(bound - sim) / bound` for upper bounds,
    /// `(sim - bound) / bound` for lower bounds. Negative means violated.
    pub margin: Vec<f64>,
}

fn relative_margin(kind: BoundKind, simulated: f64, bound: f64) -> f64 {
    let diff = match kind {
        BoundKind::Upper => bound - simulated,
        BoundKind::Lower => simulated - bound,
    };
    if diff == 0.0 {
        0.0
    } else if bound.is_infinite() {
        match kind {
            BoundKind::Upper => 1.0,
            BoundKind::Lower => -1.0,
        }
    } else if bound == 0.0 {
        diff.signum() * f64::INFINITY
    } else {
        diff / bound.abs()
    }
}

impl BoundReport {
    fn build(
        bound_name: String,
        kind: BoundKind,
        n: usize,
        times: Vec<f64>,
        simulated: Vec<f64>,
        bound_value: Vec<f64>,
    ) -> Self {
        let margin: Vec<f64> = simulated
            .iter()
            .zip(&bound_value)
            .map(|(&s, &b)| relative_margin(kind, s, b))
            .collect();
        let satisfied = margin.iter().map(|&m| m >= -ROUNDOFF_SLACK).collect();
        BoundReport {
            bound_name,
            kind,
            n,
            times,
            simulated,
            bound_value,
            satisfied,
            margin,
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }

    /// Whether every time is within `rel_slack` of the bound.
    pub fn satisfied_within(&self, rel_slack: f64) -> bool {
        self.margin.iter().all(|&m| m >= -rel_slack)
    }

    pub fn min_margin(&self) -> f64 {
        self.margin.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest relative shortfall, zero when the bound holds everywhere.
    pub fn worst_deficit(&self) -> f64 {
        (-self.min_margin()).max(0.0)
    }

    /// Restriction to recorded times `t <= t_max`.
    pub fn up_to(&self, t_max: f64) -> BoundReport {
        let keep = self.times.iter().take_while(|&&t| t <= t_max).count();
        BoundReport {
            bound_name: self.bound_name.clone(),
            kind: self.kind,
            n: self.n,
            times: self.times[..keep].to_vec(),
            simulated: self.simulated[..keep].to_vec(),
            bound_value: self.bound_value[..keep].to_vec(),
            satisfied: self.satisfied[..keep].to_vec(),
            margin: self.margin[..keep].to_vec(),
        }
    }
}

/// Constants of the exponential moment bound `M_lambda(t) <= C_M e^{C t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpperBoundConstants {
    pub lambda: f64,
    pub c_q: f64,
    pub c_lambda: f64,
    pub c_l: f64,
    /// Growth rate `C`.
    pub rate: f64,
    /// Prefactor `C_M`.
    pub prefactor: f64,
}

impl UpperBoundConstants {
    pub fn bound_at(&self, t: f64) -> f64 {
        self.prefactor * (self.rate * t).exp()
    }
}

/// `max{2^lambda - 2, 2^(2 - lambda) lambda (lambda - 1)}`
pub fn convexity_constant(lambda: f64) -> f64 {
    let a = lambda.exp2() - 2.0;
    let b = (2.0 - lambda).exp2() * lambda * (lambda - 1.0);
    a.max(b)
}

/// Constants for the moment of order `lambda` under a kernel bounded by
/// `C_q (j^mu k^nu + j^nu k^mu)`. Needs `lambda` in `(1, 2]`,
/// `lambda >= max(mu, nu)` and `lambda + min(mu, nu) <= 3`.
pub fn moment_upper_bound_constants(kernel: &Kernel, state0: &DensityState, lambda: f64) -> Result<UpperBoundConstants> {
    if !(lambda > 1.0 && lambda <= 2.0) {
        return Err(EdgError::InvalidParameter(format!(
            "moment order lambda must lie in (1, 2], got {lambda}"
        )));
    }
    let g = kernel.growth_bound().ok_or_else(|| {
        EdgError::InvalidParameter(format!("{} kernel has no product-power growth bound", kernel.family()))
    })?;
    let (lo, hi) = (g.mu.min(g.nu), g.mu.max(g.nu));
    if lambda < hi || lambda + lo > 3.0 {
        return Err(EdgError::InvalidParameter(format!(
            "lambda = {lambda} incompatible with exponents ({}, {}): need lambda >= max and lambda + min <= 3",
            g.mu, g.nu
        )));
    }
    let m1 = state0.moment(1.0);
    let m_lambda = state0.moment(lambda);
    let c_lambda = convexity_constant(lambda);
    let c_l = m1.powf((2.0 - lo) / (lambda - 1.0)).max(m1);
    let rate = 2.0 * c_lambda * g.c_q * m1 + 2.0 * c_l * c_lambda * g.c_q;
    let prefactor = 2.0 * c_l * c_lambda * g.c_q + m_lambda;
    Ok(UpperBoundConstants {
        lambda,
        c_q: g.c_q,
        c_lambda,
        c_l,
        rate,
        prefactor,
    })
}

/// Checks `M_lambda(t) <= C_M e^{C t}` at every recorded time.
pub fn verify_upper_bound(traj: &Trajectory, kernel: &Kernel, lambda: f64) -> Result<BoundReport> {
    let consts = moment_upper_bound_constants(kernel, traj.initial(), lambda)?;
    let series = traj.moment_series(&[lambda]);
    let simulated: Vec<f64> = series.values.iter().map(|row| row[0]).collect();
    let t0 = traj.initial().t();
    let bound_value = series.times.iter().map(|&t| consts.bound_at(t - t0)).collect();
    Ok(BoundReport::build(
        format!("M_{lambda} <= {:?} exp({:?} t)", consts.prefactor, consts.rate),
        BoundKind::Upper,
        traj.n(),
        series.times.clone(),
        simulated,
        bound_value,
    ))
}

fn check_blowup_params(alpha: f64, c1: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(EdgError::InvalidParameter(format!("alpha must lie in (1, 2], got {alpha}")));
    }
    if !(c1 > 0.0) || !c1.is_finite() {
        return Err(EdgError::InvalidParameter(format!("C1 must be positive, got {c1}")));
    }
    Ok(())
}

/// `C1 alpha (alpha - 1) 2^(alpha - 2)`, the rate in the Riccati bound.
fn riccati_rate(alpha: f64, c1: f64) -> f64 {
    c1 * alpha * (alpha - 1.0) * (alpha - 2.0).exp2()
}

/// `[1/M_alpha(0) - C1 alpha (alpha - 1) 2^(alpha - 2) t]^-1`, infinite at
/// and beyond the blow-up time.
pub fn blowup_lower_bound(alpha: f64, c1: f64, m_alpha0: f64, t: f64) -> Result<f64> {
    check_blowup_params(alpha, c1)?;
    if !(m_alpha0 >= 0.0) || !(t >= 0.0) {
        return Err(EdgError::InvalidParameter(format!(
            "need M_alpha(0) >= 0 and t >= 0, got {m_alpha0} and {t}"
        )));
    }
    if t == 0.0 {
        return Ok(m_alpha0);
    }
    let denom = 1.0 / m_alpha0 - riccati_rate(alpha, c1) * t;
    Ok(if denom <= 0.0 { f64::INFINITY } else { 1.0 / denom })
}

/// Time at which [`blowup_lower_bound`] diverges.
pub fn blowup_time(alpha: f64, c1: f64, m_alpha0: f64) -> Result<f64> {
    check_blowup_params(alpha, c1)?;
    Ok(1.0 / (riccati_rate(alpha, c1) * m_alpha0))
}

/// Compares `M_alpha` along the trajectory with [`blowup_lower_bound`].
/// Truncated moments trail the full ones, so shortfalls shrink with `N`.
pub fn verify_blowup_bound(traj: &Trajectory, alpha: f64, c1: f64) -> Result<BoundReport> {
    check_blowup_params(alpha, c1)?;
    let series = traj.moment_series(&[alpha]);
    let simulated: Vec<f64> = series.values.iter().map(|row| row[0]).collect();
    let t0 = traj.initial().t();
    let m0 = simulated[0];
    let bound_value = series
        .times
        .iter()
        .map(|&t| blowup_lower_bound(alpha, c1, m0, t - t0))
        .collect::<Result<Vec<f64>>>()?;
    Ok(BoundReport::build(
        format!("M_{alpha} >= [1/M_{alpha}(0) - {:?} t]^-1", riccati_rate(alpha, c1)),
        BoundKind::Lower,
        traj.n(),
        series.times.clone(),
        simulated,
        bound_value,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `M_{n-2+beta} >= M_1^{-L} M_n^{1+L}` with `L = (beta - 2)/(n - 1)`.
pub fn jensen_lower_bound(state: &DensityState, n: usize, beta: f64) -> Result<JensenCheck> {
    if n < 2 {
        return Err(EdgError::InvalidParameter(format!("moment order n must be >= 2, got {n}")));
    }
    if !(beta > 2.0) || !beta.is_finite() {
        return Err(EdgError::InvalidParameter(format!("beta must exceed 2, got {beta}")));
    }
    let m1 = state.moment(1.0);
    if !(m1 > 0.0) {
        return Err(EdgError::ZeroMass);
    }
    let nf = n as f64;
    let exponent = (beta - 2.0) / (nf - 1.0);
    let lhs = state.moment(nf - 2.0 + beta);
    let rhs = m1.powf(-exponent) * state.moment(nf).powf(1.0 + exponent);
    Ok(JensenCheck {
        lhs,
        rhs,
        holds: lhs >= rhs * (1.0 - ROUNDOFF_SLACK),
    })
}

/// Upper bound on the blow-up time of `M_n` under a kernel bounded below
/// by `C (j^beta + k^beta)`, with `M_0(0) >= C2`:
/// `(Mn0 / M10)^{-L} / (C C2 (beta - 2) n)`, `L = (beta - 2)/(n - 1)`.
pub fn instantaneous_blowup_time_bound(n: usize, beta: f64, c: f64, c2: f64, mn0: f64, m10: f64) -> Result<f64> {
    if n < 2 {
        return Err(EdgError::InvalidParameter(format!("moment order n must be >= 2, got {n}")));
    }
    if !(beta > 2.0) || !(c > 0.0) || !(c2 > 0.0) {
        return Err(EdgError::InvalidParameter(format!(
            "need beta > 2, C > 0, C2 > 0; got {beta}, {c}, {c2}"
        )));
    }
    if !(mn0 > 0.0) || !(m10 > 0.0) {
        return Err(EdgError::InvalidParameter(format!(
            "initial moments must be positive, got M_n = {mn0}, M_1 = {m10}"
        )));
    }
    let nf = n as f64;
    let exponent = (beta - 2.0) / (nf - 1.0);
    Ok((mn0 / m10).powf(-exponent) / (c * c2 * (beta - 2.0) * nf))
}

/// [`instantaneous_blowup_time_bound`] for a kernel and initial state,
/// taking `C2 = M_0(0)`.
pub fn instantaneous_blowup_time_for(kernel: &Kernel, state0: &DensityState, n: usize) -> Result<f64> {
    let lb = kernel.superquadratic_lower_bound().ok_or_else(|| {
        EdgError::InvalidParameter("kernel has no superquadratic lower bound".into())
    })?;
    instantaneous_blowup_time_bound(
        n,
        lb.beta,
        lb.c,
        state0.moment(0.0),
        state0.moment(n as f64),
        state0.moment(1.0),
    )
}
