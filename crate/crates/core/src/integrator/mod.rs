//! Adaptive time stepping of the truncated system.
//!
//! Two embedded schemes are available: the explicit Dormand-Prince 5(4)
//! pair for non-stiff runs and a two-stage L-stable Rosenbrock pair for the
//! stiff regime (large `N` with rates growing like `j^2` or faster, where
//! the fastest Jacobian eigenvalues scale like `N^2 M_2`).
//!
//! Each attempted step is accepted when the RMS of the embedded error,
//! scaled by `abs_tol + rel_tol * max(|y|, |y_new|)`, is at most one. An
//! accepted step with entries below `-neg_clip * max(1, M0)` is rejected and
//! the step halved; smaller negative entries are clipped to zero.

mod dopri;
mod rosenbrock;

use serde::{Deserialize, Serialize};

use crate::dynamics::RhsEvaluator;
use crate::error::{EdgError, Result};
use crate::kernel::Kernel;
use crate::state::{moment_of, DensityState, MomentSeries};

use dopri::Dopri5;
use rosenbrock::Ros2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Dopri5,
    Rosenbrock,
}

impl Method {
    /// Order of the embedded error estimate plus one.
    fn error_exponent(self) -> f64 {
        match self {
            Method::Dopri5 => 1.0 / 5.0,
            Method::Rosenbrock => 1.0 / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Dopri5 => "dopri5",
            Method::Rosenbrock => "rosenbrock",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub neg_clip: f64,
    pub blowup_moment_order: f64,
    pub blowup_threshold: f64,
    pub t_end: f64,
    /// Output cadence; states are recorded at integer multiples of it and
    /// at `t_end`.
    pub record_every: f64,
}

impl IntegratorConfig {
    pub fn new(t_end: f64) -> Self {
        IntegratorConfig {
            method: Method::Dopri5,
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            dt_init: 1e-6,
            dt_min: 1e-14,
            dt_max: f64::INFINITY,
            neg_clip: 1e-14,
            blowup_moment_order: 2.0,
            blowup_threshold: 1e9,
            t_end,
            record_every: if t_end > 0.0 { t_end / 100.0 } else { 1.0 },
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_record_every(mut self, record_every: f64) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EdgError::InvalidConfig(msg));
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return bad(format!(
                "tolerances must be positive (rel_tol = {}, abs_tol = {})",
                self.rel_tol, self.abs_tol
            ));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            ));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be finite and non-negative, got {}", self.t_end));
        }
        if !(self.record_every > 0.0) {
            return bad(format!("record_every must be positive, got {}", self.record_every));
        }
        if !(self.neg_clip >= 0.0) {
            return bad(format!("neg_clip must be non-negative, got {}", self.neg_clip));
        }
        if !(self.blowup_moment_order >= 0.0) || !(self.blowup_threshold > 0.0) {
            return bad("blow-up order must be >= 0 and threshold > 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ReachedTEnd,
    BlowupDetected,
    DtUnderflow,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::ReachedTEnd => "reached_t_end",
            StopReason::BlowupDetected => "blowup_detected",
            StopReason::DtUnderflow => "dt_underflow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub final_dt: f64,
}

/// The accepted step across which the blow-up moment first exceeded its
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCrossing {
    pub order: f64,
    pub threshold: f64,
    pub t_before: f64,
    pub value_before: f64,
    pub t_after: f64,
    pub value_after: f64,
}

impl ThresholdCrossing {
    /// Crossing time by linear interpolation inside the step.
    pub fn time(&self) -> f64 {
        let span = self.value_after - self.value_before;
        if span <= 0.0 {
            return self.t_after;
        }
        let s = ((self.threshold - self.value_before) / span).clamp(0.0, 1.0);
        self.t_before + s * (self.t_after - self.t_before)
    }
}

/// Moment orders always carried by a trajectory.
pub const BASE_ORDERS: [f64; 3] = [0.0, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DensityState>,
    /// `M0`, `M1`, `M2` at the recorded times.
    pub moments: MomentSeries,
    /// Step size proposed by the controller at each recorded time.
    pub dts: Vec<f64>,
    pub step_stats: StepStats,
    pub stop_reason: StopReason,
    pub crossing: Option<ThresholdCrossing>,
    pub method: Method,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.moments.times
    }

    pub fn n(&self) -> usize {
        self.states[0].n()
    }

    pub fn initial(&self) -> &DensityState {
        &self.states[0]
    }

    pub fn last(&self) -> &DensityState {
        self.states.last().expect("trajectory has an initial state")
    }

    /// Moments of arbitrary orders at the recorded times.
    pub fn moment_series(&self, orders: &[f64]) -> MomentSeries {
        MomentSeries::from_states(orders, &self.states)
    }

    fn record(&mut self, state: DensityState, dt: f64) {
        self.moments.push(&state);
        self.states.push(state);
        self.dts.push(dt);
    }
}

enum Scheme {
    Dopri(Dopri5),
    Ros(Ros2),
}

/// Per-run stepping machinery: tabulated kernel, stage storage, controller.
struct Stepper<'c> {
    cfg: &'c IntegratorConfig,
    eval: RhsEvaluator,
    scheme: Scheme,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

enum Attempt {
    Accepted { dt_next: f64 },
    Rejected { dt_next: f64 },
}

impl<'c> Stepper<'c> {
    fn new(kernel: &Kernel, n: usize, cfg: &'c IntegratorConfig) -> Result<Self> {
        let eval = RhsEvaluator::new(kernel, n)?;
        let scheme = match cfg.method {
            Method::Dopri5 => Scheme::Dopri(Dopri5::new(n)),
            Method::Rosenbrock => Scheme::Ros(Ros2::new(n)),
        };
        Ok(Stepper {
            cfg,
            eval,
            scheme,
            y_new: vec![0.0; n + 1],
            err: vec![0.0; n + 1],
        })
    }

    fn error_norm(&self, y: &[f64]) -> f64 {
        let (rtol, atol) = (self.cfg.rel_tol, self.cfg.abs_tol);
        let sum: f64 = y
            .iter()
            .zip(&self.y_new)
            .zip(&self.err)
            .map(|((a, b), e)| {
                let sc = atol + rtol * a.abs().max(b.abs());
                (e / sc).powi(2)
            })
            .sum();
        (sum / y.len() as f64).sqrt()
    }

    /// Tries one step of size `h` from `y`. On acceptance `y` is replaced by
    /// the (clipped) new state.
    fn attempt(&mut self, y: &mut Vec<f64>, h: f64) -> Attempt {
        match &mut self.scheme {
            Scheme::Dopri(s) => s.attempt(&self.eval, y, h, &mut self.y_new, &mut self.err),
            Scheme::Ros(s) => s.attempt(&self.eval, y, h, &mut self.y_new, &mut self.err),
        }
        let err = self.error_norm(y);
        let expo = self.cfg.method.error_exponent();
        if !err.is_finite() || err > 1.0 {
            let fac = if err.is_finite() {
                (0.9 * err.powf(-expo)).clamp(0.2, 0.9)
            } else {
                0.5
            };
            return Attempt::Rejected { dt_next: h * fac };
        }

        let scale = moment_of(y, 0.0).max(1.0);
        let floor = -self.cfg.neg_clip * scale;
        if self.y_new.iter().any(|&v| v < floor) {
            return Attempt::Rejected { dt_next: 0.5 * h };
        }
        let mut clipped = false;
        for v in self.y_new.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clipped = true;
            }
        }
        std::mem::swap(y, &mut self.y_new);
        if let Scheme::Dopri(s) = &mut self.scheme {
            if clipped {
                s.invalidate();
            } else {
                s.accept_unmodified();
            }
        }
        let fac = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-expo)).clamp(0.2, 5.0)
        };
        Attempt::Accepted {
            dt_next: (h * fac).min(self.cfg.dt_max),
        }
    }
}

/// Result of a single [`step`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: DensityState,
    pub dt_next: f64,
    pub accepted: bool,
}

/// One adaptive step of size `dt`. A rejected step returns the input state
/// with a reduced `dt_next`; a `dt_next` below `dt_min` is an error.
pub fn step(state: &DensityState, kernel: &Kernel, dt: f64, cfg: &IntegratorConfig) -> Result<StepOutcome> {
    cfg.validate()?;
    if !(dt >= cfg.dt_min) {
        return Err(EdgError::DtUnderflow {
            t: state.t(),
            dt,
            dt_min: cfg.dt_min,
        });
    }
    let mut stepper = Stepper::new(kernel, state.n(), cfg)?;
    let mut y = state.densities().to_vec();
    let (accepted, dt_next) = match stepper.attempt(&mut y, dt) {
        Attempt::Accepted { dt_next } => (true, dt_next),
        Attempt::Rejected { dt_next } => (false, dt_next),
    };
    if dt_next < cfg.dt_min {
        return Err(EdgError::DtUnderflow {
            t: state.t(),
            dt: dt_next,
            dt_min: cfg.dt_min,
        });
    }
    let t = if accepted { state.t() + dt } else { state.t() };
    Ok(StepOutcome {
        state: DensityState::from_parts_unchecked(t, y),
        dt_next,
        accepted,
    })
}

/// Advances `state0` until `t_end`, moment blow-up, or step-size underflow.
pub fn integrate(state0: &DensityState, kernel: &Kernel, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n = state0.n();
    let mut stepper = Stepper::new(kernel, n, cfg)?;
    let mut traj = Trajectory {
        states: Vec::new(),
        moments: MomentSeries::new(BASE_ORDERS.to_vec()),
        dts: Vec::new(),
        step_stats: StepStats::default(),
        stop_reason: StopReason::ReachedTEnd,
        crossing: None,
        method: cfg.method,
    };
    let t0 = state0.t();
    let mut y = state0.densities().to_vec();
    let mut dt = cfg.dt_init.min(cfg.dt_max);
    traj.record(DensityState::from_parts_unchecked(t0, y.clone()), dt);

    let p = cfg.blowup_moment_order;
    let mut blow_value = moment_of(&y, p);
    let mut t = t0;
    let mut record_index: u64 = 1;
    let t_end = t0 + cfg.t_end;
    let next_record = |i: u64| (t0 + i as f64 * cfg.record_every).min(t_end);

    while t < t_end {
        let target = next_record(record_index);
        let landing = t + dt >= target;
        let h = if landing { target - t } else { dt };
        match stepper.attempt(&mut y, h) {
            Attempt::Accepted { dt_next } => {
                traj.step_stats.accepted += 1;
                let t_prev = t;
                t = if landing { target } else { t + h };
                dt = if landing { dt_next.max(dt).min(cfg.dt_max) } else { dt_next };
                if landing {
                    record_index += 1;
                }
                let value = moment_of(&y, p);
                if value > cfg.blowup_threshold {
                    traj.crossing = Some(ThresholdCrossing {
                        order: p,
                        threshold: cfg.blowup_threshold,
                        t_before: t_prev,
                        value_before: blow_value,
                        t_after: t,
                        value_after: value,
                    });
                    traj.stop_reason = StopReason::BlowupDetected;
                    traj.record(DensityState::from_parts_unchecked(t, y.clone()), dt);
                    break;
                }
                blow_value = value;
                if landing {
                    traj.record(DensityState::from_parts_unchecked(t, y.clone()), dt);
                }
            }
            Attempt::Rejected { dt_next } => {
                traj.step_stats.rejected += 1;
                dt = dt_next;
                if dt < cfg.dt_min {
                    traj.stop_reason = StopReason::DtUnderflow;
                    if traj.last().t() < t {
                        traj.record(DensityState::from_parts_unchecked(t, y.clone()), dt);
                    }
                    break;
                }
            }
        }
    }
    traj.step_stats.final_dt = dt;
    Ok(traj)
}
