//! Solver and verification harness for the truncated exchange-driven
//! growth equations.
//!
//! Clusters of size `j` hand single monomers to clusters of size `k` at
//! rate `K(j, k)`. The crate integrates the `N + 1` dimensional truncation
//! of that system, classifies kernels by existence and gelation regime, and
//! checks simulated moments against analytic bounds.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod kernel;
pub mod output;
pub mod state;

pub use error::{EdgError, Result};
pub use integrator::{integrate, step, IntegratorConfig, Method, StopReason, Trajectory};
pub use kernel::{classify_regime, Kernel, KernelFamily, KernelSpec, KernelTable, Regime, RegimeClass};
pub use state::{make_state, DensityState, InitSpec, MomentSeries};
