//! Deterministic CSV and text artifacts.
//!
//! Floats are written with Rust's shortest round-trip formatting, lines end
//! in `\n`, and nothing depends on wall-clock time, so identical runs give
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{BoundReport, ConvergenceReport};
use crate::error::{EdgError, Result};
use crate::integrator::Trajectory;

/// Column label for a moment order: `M2`, `M1.5`.
pub fn moment_label(p: f64) -> String {
    format!("M{p}")
}

/// `t,M0,M1,M2,M<p>...,dt`, one row per recorded time.
pub fn moments_csv(traj: &Trajectory, extra_orders: &[f64]) -> String {
    let mut orders = vec![0.0, 1.0, 2.0];
    for &p in extra_orders {
        if !orders.contains(&p) {
            orders.push(p);
        }
    }
    let series = traj.moment_series(&orders);
    let mut out = String::from("t");
    for &p in &orders {
        out.push(',');
        out.push_str(&moment_label(p));
    }
    out.push_str(",dt\n");
    for ((t, row), dt) in series.times.iter().zip(&series.values).zip(&traj.dts) {
        write!(out, "{t:?}").unwrap();
        for v in row {
            write!(out, ",{v:?}").unwrap();
        }
        writeln!(out, ",{dt:?}").unwrap();
    }
    out
}

/// `t,f_0,...,f_N`, one row per recorded state.
pub fn states_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t");
    for j in 0..=traj.n() {
        write!(out, ",f_{j}").unwrap();
    }
    out.push('\n');
    for s in &traj.states {
        write!(out, "{:?}", s.t()).unwrap();
        for v in s.densities() {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// `bound,t,simulated,bound_value,margin,satisfied` for several reports.
pub fn bounds_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from("bound,N,t,simulated,bound_value,margin,satisfied\n");
    for r in reports {
        for i in 0..r.times.len() {
            writeln!(
                out,
                "\"{}\",{},{:?},{:?},{:?},{:?},{}",
                r.bound_name, r.n, r.times[i], r.simulated[i], r.bound_value[i], r.margin[i], r.satisfied[i]
            )
            .unwrap();
        }
    }
    out
}

/// One row per truncation size.
pub fn convergence_csv(report: &ConvergenceReport) -> String {
    let mut out = String::from("N,stop_reason,final_t,crossing_t");
    for &p in &report.orders {
        write!(out, ",sup_diff_{}", moment_label(p)).unwrap();
    }
    out.push('\n');
    for (i, n) in report.n_values.iter().enumerate() {
        let crossing = report.crossing_times[i].map_or(String::new(), |t| format!("{t:?}"));
        write!(out, "{n},{},{:?},{crossing}", report.stop_reasons[i], report.final_times[i]).unwrap();
        for v in &report.sup_diffs[i] {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io = |source| EdgError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}
