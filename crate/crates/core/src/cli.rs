//! Command-line front end.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 on
//! usage, configuration or runtime errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    conservation_report, convergence_study, default_fit_window, estimate_gelation_time, instantaneous_blowup_time_for,
    jensen_lower_bound, moment_upper_bound_constants, threshold_crossing_estimate, verify_blowup_bound,
    verify_upper_bound, BoundReport, GelationEstimate,
};
use crate::config::{load_config, SimulationConfig};
use crate::dynamics::{check_divergence_identity, IdentityCheck};
use crate::error::{EdgError, Result};
use crate::integrator::{integrate, Trajectory};
use crate::kernel::{classify_regime, Kernel, KernelSpec, KernelTable, Regime};
use crate::output::{bounds_csv, convergence_csv, moments_csv, states_csv, write_file};
use crate::state::{make_state, DensityState};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Relative tolerance of the divergence-identity oracle.
pub const ORACLE_REL_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "edg", version, about = "Exchange-driven growth solver and verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate and write moment (and optionally state) CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Estimate the gelation time from the 1/M2 series.
    Gelation {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare moments across truncation sizes.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check moment bounds, conservation and Jensen along a run.
    Verify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check the divergence-form identity on random states and kernels.
    OracleCheck {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate { config } => with_config(&config, simulate),
        Command::Gelation { config } => with_config(&config, gelation),
        Command::Converge { config } => with_config(&config, converge),
        Command::Verify { config } => with_config(&config, verify),
        Command::OracleCheck { seed, cases } => oracle_check(seed, cases),
    };
    match outcome {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn with_config(path: &Path, run: fn(&SimulationConfig) -> Result<bool>) -> Result<bool> {
    let cfg = load_config(path)?;
    run(&cfg)
}

fn run_trajectory(cfg: &SimulationConfig, kernel: &Kernel) -> Result<Trajectory> {
    let state0 = make_state(&cfg.init, cfg.n)?;
    integrate(&state0, kernel, &cfg.integrator)
}

fn write_trajectory(cfg: &SimulationConfig, traj: &Trajectory) -> Result<()> {
    write_file(&cfg.outputs.moments_path, &moments_csv(traj, &cfg.tracked_moment_orders))?;
    if let Some(p) = &cfg.outputs.states_path {
        write_file(p, &states_csv(traj))?;
    }
    Ok(())
}

fn run_header(cfg: &SimulationConfig, kernel: &Kernel, traj: &Trajectory) -> String {
    let regime = classify_regime(kernel);
    let mut out = String::new();
    writeln!(out, "kernel = {}", kernel.family()).unwrap();
    writeln!(out, "regime = {}", regime.regime).unwrap();
    writeln!(out, "regime_reason = {}", regime.citation).unwrap();
    writeln!(out, "N = {}", cfg.n).unwrap();
    writeln!(out, "method = {}", traj.method.name()).unwrap();
    writeln!(out, "stop_reason = {}", traj.stop_reason).unwrap();
    writeln!(out, "t_final = {:?}", traj.last().t()).unwrap();
    writeln!(out, "accepted_steps = {}", traj.step_stats.accepted).unwrap();
    writeln!(out, "rejected_steps = {}", traj.step_stats.rejected).unwrap();
    writeln!(out, "final_dt = {:?}", traj.step_stats.final_dt).unwrap();
    if let Some(c) = traj.crossing {
        writeln!(out, "threshold_crossing_t = {:?}", c.time()).unwrap();
    }
    if let Some(t_gel) = crate::analysis::analytic_gelation_time(kernel, traj.initial().moment(2.0)) {
        if traj.last().t() >= t_gel {
            writeln!(out, "note = run continues past the analytic gelation time {t_gel:?}").unwrap();
        }
    }
    let cons = conservation_report(traj);
    writeln!(out, "max_drift_M0 = {:?}", cons.max_drift_m0).unwrap();
    writeln!(out, "max_drift_M1 = {:?}", cons.max_drift_m1).unwrap();
    out
}

fn simulate(cfg: &SimulationConfig) -> Result<bool> {
    let kernel = cfg.build_kernel()?;
    let traj = run_trajectory(cfg, &kernel)?;
    write_trajectory(cfg, &traj)?;
    write_file(&cfg.outputs.report_path, &run_header(cfg, &kernel, &traj))?;
    Ok(true)
}

fn estimate_lines(out: &mut String, prefix: &str, e: &GelationEstimate) {
    writeln!(out, "{prefix}method = {}", e.method).unwrap();
    writeln!(out, "{prefix}t_gel = {:?}", e.t_gel).unwrap();
    writeln!(out, "{prefix}window = [{:?}, {:?}]", e.window.0, e.window.1).unwrap();
    writeln!(out, "{prefix}fit_r2 = {:?}", e.fit_r2).unwrap();
    writeln!(out, "{prefix}slope = {:?}", e.slope).unwrap();
    writeln!(out, "{prefix}intercept = {:?}", e.intercept).unwrap();
    writeln!(out, "{prefix}samples = {}", e.samples).unwrap();
    writeln!(out, "{prefix}non_gelling = {}", e.non_gelling).unwrap();
    match e.analytic_prediction {
        Some(t) => writeln!(out, "{prefix}analytic_prediction = {t:?}").unwrap(),
        None => writeln!(out, "{prefix}analytic_prediction = none").unwrap(),
    }
}

fn gelation(cfg: &SimulationConfig) -> Result<bool> {
    let kernel = cfg.build_kernel()?;
    let traj = run_trajectory(cfg, &kernel)?;
    write_trajectory(cfg, &traj)?;
    let window = cfg.gelation.window.unwrap_or_else(|| default_fit_window(&traj, &kernel));
    let fit = estimate_gelation_time(&traj, &kernel, window)?;
    let mut out = run_header(cfg, &kernel, &traj);
    estimate_lines(&mut out, "fit.", &fit);
    if let Some(e) = threshold_crossing_estimate(&traj, &kernel) {
        estimate_lines(&mut out, "crossing.", &e);
    }
    write_file(&cfg.outputs.report_path, &out)?;
    println!("t_gel = {:?} (slope {:?}, r2 {:?})", fit.t_gel, fit.slope, fit.fit_r2);
    Ok(true)
}

fn converge(cfg: &SimulationConfig) -> Result<bool> {
    let kernel = cfg.build_kernel()?;
    let n_list = cfg
        .n_list
        .clone()
        .ok_or_else(|| EdgError::MissingKey("converge.N_list".into()))?;
    let report = convergence_study(&cfg.init, &kernel, &cfg.integrator, &n_list)?;
    write_file(&cfg.outputs.convergence_path, &convergence_csv(&report))?;
    let mut out = String::new();
    writeln!(out, "kernel = {}", kernel.family()).unwrap();
    writeln!(out, "regime = {}", classify_regime(&kernel).regime).unwrap();
    writeln!(out, "reference_N = {}", report.reference_n).unwrap();
    for (i, n) in report.n_values.iter().enumerate() {
        let diffs: Vec<String> = report.sup_diffs[i].iter().map(|v| format!("{v:?}")).collect();
        let crossing = report.crossing_times[i].map_or("none".to_string(), |t| format!("{t:?}"));
        writeln!(
            out,
            "N = {n}: stop_reason = {}, crossing_t = {crossing}, sup_diffs = [{}]",
            report.stop_reasons[i],
            diffs.join(", ")
        )
        .unwrap();
    }
    write_file(&cfg.outputs.report_path, &out)?;
    Ok(true)
}

fn bound_lines(out: &mut String, r: &BoundReport, passed: bool) {
    writeln!(out, "bound = {}", r.bound_name).unwrap();
    writeln!(out, "  N = {}", r.n).unwrap();
    writeln!(out, "  times_checked = {}", r.times.len()).unwrap();
    writeln!(out, "  min_margin = {:?}", r.min_margin()).unwrap();
    writeln!(out, "  result = {}", if passed { "pass" } else { "FAIL" }).unwrap();
}

fn verify(cfg: &SimulationConfig) -> Result<bool> {
    let kernel = cfg.build_kernel()?;
    kernel.require_symmetric(cfg.n)?;
    let regime = classify_regime(&kernel).regime;
    let traj = run_trajectory(cfg, &kernel)?;
    write_trajectory(cfg, &traj)?;
    let v = &cfg.verify;
    let mut out = run_header(cfg, &kernel, &traj);
    let mut all_pass = true;
    let mut reports = Vec::new();

    let tol = v.conservation_tol.unwrap_or(10.0 * cfg.integrator.rel_tol);
    let cons = conservation_report(&traj);
    let cons_ok = cons.within(tol);
    all_pass &= cons_ok;
    writeln!(out, "conservation_tol = {tol:?}").unwrap();
    writeln!(out, "conservation = {}", if cons_ok { "pass" } else { "FAIL" }).unwrap();

    if v.upper_bound.unwrap_or(regime == Regime::GlobalExistence) {
        let lambda = match v.lambda {
            Some(l) => l,
            None => {
                let g = kernel.growth_bound().ok_or_else(|| {
                    EdgError::Config(format!("{} kernel has no growth bound for the upper-bound check", kernel.family()))
                })?;
                let hi = g.mu.max(g.nu);
                if hi > 1.0 {
                    hi
                } else {
                    2.0
                }
            }
        };
        let consts = moment_upper_bound_constants(&kernel, traj.initial(), lambda)?;
        writeln!(out, "upper_bound.lambda = {lambda:?}").unwrap();
        writeln!(out, "upper_bound.C = {:?}", consts.rate).unwrap();
        writeln!(out, "upper_bound.C_M = {:?}", consts.prefactor).unwrap();
        let r = verify_upper_bound(&traj, &kernel, lambda)?;
        let ok = r.all_satisfied();
        all_pass &= ok;
        bound_lines(&mut out, &r, ok);
        reports.push(r);
    }

    if v.blowup_bound.unwrap_or(regime == Regime::FiniteGelation) {
        let lb = kernel.gelation_lower_bound().ok_or_else(|| {
            EdgError::Config("blow-up bound requested but the kernel has no admissible (alpha, C1)".into())
        })?;
        let full = verify_blowup_bound(&traj, lb.alpha, lb.c1)?;
        let t_blow = crate::analysis::blowup_time(lb.alpha, lb.c1, full.simulated[0])?;
        let r = full.up_to(traj.initial().t() + v.blowup_until * t_blow);
        let ok = r.satisfied_within(v.blowup_slack);
        all_pass &= ok;
        writeln!(out, "blowup_bound.alpha = {:?}", lb.alpha).unwrap();
        writeln!(out, "blowup_bound.C1 = {:?}", lb.c1).unwrap();
        writeln!(out, "blowup_bound.slack = {:?}", v.blowup_slack).unwrap();
        bound_lines(&mut out, &r, ok);
        reports.push(r);
    }

    let mut jensen_ok = true;
    let mut jensen_checked = 0usize;
    for s in traj.states.iter().filter(|s| s.moment(1.0) > 0.0) {
        for &n in &v.jensen_orders {
            let j = jensen_lower_bound(s, n, v.jensen_beta)?;
            jensen_checked += 1;
            jensen_ok &= j.holds;
        }
    }
    all_pass &= jensen_ok;
    writeln!(out, "jensen.checked = {jensen_checked}").unwrap();
    writeln!(out, "jensen = {}", if jensen_ok { "pass" } else { "FAIL" }).unwrap();

    if regime == Regime::InstantaneousGelation {
        for n in [2usize, 4, 8, 16] {
            let t = instantaneous_blowup_time_for(&kernel, traj.initial(), n)?;
            writeln!(out, "instantaneous.blowup_time_bound[M{n}] = {t:?}").unwrap();
        }
    }

    writeln!(out, "overall = {}", if all_pass { "pass" } else { "FAIL" }).unwrap();
    if let Some(p) = &cfg.outputs.bounds_path {
        write_file(p, &bounds_csv(&reports))?;
    }
    write_file(&cfg.outputs.report_path, &out)?;
    if !all_pass {
        eprintln!("verify: a verification check failed; see {}", cfg.outputs.report_path.display());
    }
    Ok(all_pass)
}

/// One randomized divergence-identity case.
#[derive(Debug, Clone)]
pub struct OracleCase {
    pub description: String,
    pub check: IdentityCheck,
}

impl OracleCase {
    pub fn passes(&self) -> bool {
        self.check.passes(ORACLE_REL_TOL)
    }
}

fn random_kernel(rng: &mut ChaCha8Rng, n: usize) -> Result<(Kernel, String)> {
    let c = rng.gen_range(0.1..2.0);
    let zero_row = rng.gen_bool(0.3);
    let (spec, desc) = match rng.gen_range(0..4) {
        0 => {
            let (mu, nu) = (rng.gen_range(0.0..2.5), rng.gen_range(0.0..2.5));
            (KernelSpec::product_power(c, mu, nu), format!("product_power C={c:.3} mu={mu:.3} nu={nu:.3}"))
        }
        1 => {
            let beta = rng.gen_range(0.0..4.0);
            (KernelSpec::sum_power(c, beta), format!("sum_power C={c:.3} beta={beta:.3}"))
        }
        2 => {
            let eta = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.5) };
            (KernelSpec::homogeneous(c, eta), format!("homogeneous_eta C={c:.3} eta={eta:.3}"))
        }
        _ => {
            let mut rows = vec![vec![0.0; n + 1]; n + 1];
            for j in 0..=n {
                for k in j..=n {
                    let v = rng.gen_range(0.0..c);
                    rows[j][k] = v;
                    rows[k][j] = v;
                }
            }
            // the size-0 donor row is never used; make it asymmetric on purpose
            rows[0][1] = 0.0;
            (KernelSpec::tabulated(KernelTable::from_rows(rows)?), format!("tabulated symmetric size {}", n + 1))
        }
    };
    let spec = spec.with_zero_receiver_row(zero_row);
    Ok((Kernel::new(spec)?, format!("{desc} zero_row={zero_row}")))
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> Result<DensityState> {
    let decay = rng.gen_range(0.5..1.0f64);
    let sparsity = rng.gen_range(0.0..0.7);
    let f = (0..=n)
        .map(|j| {
            if rng.gen_bool(sparsity) {
                0.0
            } else {
                rng.gen_range(0.0..1.0) * decay.powi(j as i32)
            }
        })
        .collect();
    DensityState::new(0.0, f)
}

/// Runs `cases` seeded random checks of the divergence identity with
/// `N <= 256` over every symmetric kernel family.
pub fn oracle_cases(seed: u64, cases: usize) -> Result<Vec<OracleCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cases);
    for i in 0..cases {
        let n = rng.gen_range(2..=256usize);
        let (kernel, kdesc) = random_kernel(&mut rng, n)?;
        let state = random_state(&mut rng, n)?;
        let h_scale = rng.gen_range(0.0..2.0);
        let h: Vec<f64> = (0..=n)
            .map(|j| rng.gen_range(-1.0..1.0) * (1.0 + j as f64).powf(h_scale))
            .collect();
        let check = check_divergence_identity(&state, &kernel, &h)?;
        out.push(OracleCase {
            description: format!("case {i}: N={n} {kdesc}"),
            check,
        });
    }
    Ok(out)
}

fn oracle_check(seed: u64, cases: usize) -> Result<bool> {
    let results = oracle_cases(seed, cases)?;
    let mut failed = 0;
    for c in results.iter().filter(|c| !c.passes()) {
        failed += 1;
        eprintln!(
            "{}: direct {:?} vs divergence {:?} (|diff| {:?}, scale {:?})",
            c.description, c.check.direct, c.check.divergence, c.check.abs_diff, c.check.scale
        );
    }
    println!("oracle-check: {} of {} cases passed (seed {seed})", results.len() - failed, results.len());
    Ok(failed == 0)
}
