//! Verdicts drawn from trajectories: gelation times, moment bounds,
//! truncation convergence and conservation.

mod bounds;
mod convergence;
mod gelation;

pub use bounds::{
    blowup_lower_bound, blowup_time, convexity_constant, instantaneous_blowup_time_bound,
    instantaneous_blowup_time_for, jensen_lower_bound, moment_upper_bound_constants, verify_blowup_bound,
    verify_upper_bound, BoundKind, BoundReport, JensenCheck, UpperBoundConstants, ROUNDOFF_SLACK,
};
pub use convergence::{convergence_study, conservation_report, ConservationReport, ConvergenceReport, THREADS_ENV};
pub use gelation::{
    analytic_gelation_time, default_fit_window, estimate_gelation_time, threshold_crossing_estimate,
    GelationEstimate, GelationMethod, NON_GELLING_SLOPE,
};
