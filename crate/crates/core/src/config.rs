//! TOML run configuration.
//!
//! ```toml
//! N = 256
//! tracked_moment_orders = [3.0]
//!
//! [kernel]
//! family = "homogeneous_eta"   # product_power | sum_power | tabulated
//! eta = 1.0
//!
//! [init]
//! family = "monodisperse"      # delta_at | geometric | custom
//!
//! [integrator]
//! t_end = 1.0
//!
//! [outputs]
//! moments_path = "moments.csv"
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{EdgError, Result};
use crate::integrator::{IntegratorConfig, Method};
use crate::kernel::{Kernel, KernelFamily, KernelSpec, KernelTable};
use crate::state::InitSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kernel: Option<RawKernel>,
    init: Option<RawInit>,
    #[serde(rename = "N")]
    n: Option<usize>,
    integrator: Option<RawIntegrator>,
    tracked_moment_orders: Option<Vec<f64>>,
    outputs: Option<RawOutputs>,
    gelation: Option<RawGelation>,
    converge: Option<RawConverge>,
    verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    family: Option<KernelFamily>,
    #[serde(alias = "C")]
    coefficient: Option<f64>,
    mu: Option<f64>,
    nu: Option<f64>,
    eta: Option<f64>,
    beta: Option<f64>,
    #[serde(rename = "C1")]
    c1: Option<f64>,
    zero_receiver_row: Option<bool>,
    table_path: Option<String>,
    table: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InitFamily {
    Monodisperse,
    DeltaAt,
    Geometric,
    Custom,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    family: Option<InitFamily>,
    density: Option<f64>,
    size: Option<usize>,
    q: Option<f64>,
    #[serde(rename = "M0")]
    m0: Option<f64>,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    method: Option<Method>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    dt_init: Option<f64>,
    dt_min: Option<f64>,
    dt_max: Option<f64>,
    neg_clip: Option<f64>,
    blowup_moment_order: Option<f64>,
    blowup_threshold: Option<f64>,
    t_end: Option<f64>,
    record_every: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    moments_path: Option<String>,
    states_path: Option<String>,
    report_path: Option<String>,
    convergence_path: Option<String>,
    bounds_path: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGelation {
    window: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConverge {
    #[serde(rename = "N_list")]
    n_list: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    upper_bound: Option<bool>,
    lambda: Option<f64>,
    blowup_bound: Option<bool>,
    blowup_slack: Option<f64>,
    blowup_until: Option<f64>,
    conservation_tol: Option<f64>,
    jensen_orders: Option<Vec<usize>>,
    jensen_beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub moments_path: PathBuf,
    pub states_path: Option<PathBuf>,
    pub report_path: PathBuf,
    pub convergence_path: PathBuf,
    pub bounds_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GelationSettings {
    /// Fit window; derived from the trajectory when absent.
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    /// Check the exponential moment upper bound; defaults to on for kernels
    /// in the global-existence regime.
    pub upper_bound: Option<bool>,
    pub lambda: Option<f64>,
    /// Check the finite-gelation lower bound; defaults to on in the
    /// finite-gelation regime.
    pub blowup_bound: Option<bool>,
    /// Relative shortfall tolerated by the lower-bound check.
    pub blowup_slack: f64,
    /// Fraction of the analytic blow-up time up to which the lower bound
    /// is compared.
    pub blowup_until: f64,
    /// Drift tolerance for `M0`, `M1`; `10 * rel_tol` when absent.
    pub conservation_tol: Option<f64>,
    pub jensen_orders: Vec<usize>,
    pub jensen_beta: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            upper_bound: None,
            lambda: None,
            blowup_bound: None,
            blowup_slack: 0.02,
            blowup_until: 0.7,
            conservation_tol: None,
            jensen_orders: vec![2, 4, 8],
            jensen_beta: 3.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub kernel: KernelSpec,
    pub init: InitSpec,
    pub n: usize,
    pub integrator: IntegratorConfig,
    pub tracked_moment_orders: Vec<f64>,
    pub outputs: OutputPaths,
    pub gelation: GelationSettings,
    pub n_list: Option<Vec<usize>>,
    pub verify: VerifySettings,
}

impl SimulationConfig {
    pub fn build_kernel(&self) -> Result<Kernel> {
        Kernel::new(self.kernel.clone())
    }
}

fn required<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| EdgError::MissingKey(key.to_string()))
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = PathBuf::from(p);
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

/// Reads a square CSV matrix of rates (no header).
pub fn read_kernel_table(path: &Path) -> Result<KernelTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| EdgError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| EdgError::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| EdgError::Csv {
                    path: path.to_path_buf(),
                    message: format!("row {i}: `{field}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    KernelTable::from_rows(rows)
}

fn kernel_spec(raw: RawKernel, base: &Path) -> Result<KernelSpec> {
    let family = required(raw.family, "kernel.family")?;
    let c = raw.coefficient.unwrap_or(1.0);
    let mut spec = match family {
        KernelFamily::ProductPower => KernelSpec::product_power(
            c,
            required(raw.mu, "kernel.mu")?,
            required(raw.nu, "kernel.nu")?,
        ),
        KernelFamily::SumPower => KernelSpec::sum_power(c, required(raw.beta, "kernel.beta")?),
        KernelFamily::HomogeneousEta => KernelSpec::homogeneous(c, required(raw.eta, "kernel.eta")?),
        KernelFamily::Tabulated => {
            let table = match (raw.table, raw.table_path) {
                (Some(rows), None) => KernelTable::from_rows(rows)?,
                (None, Some(p)) => read_kernel_table(&resolve(base, &p))?,
                (Some(_), Some(_)) => {
                    return Err(EdgError::Config(
                        "give either kernel.table or kernel.table_path, not both".into(),
                    ))
                }
                (None, None) => return Err(EdgError::MissingKey("kernel.table_path".into())),
            };
            KernelSpec::tabulated(table)
        }
        KernelFamily::SeparableCustom => {
            return Err(EdgError::Config(
                "separable_custom kernels can only be built from code".into(),
            ))
        }
    };
    spec = spec.with_zero_receiver_row(raw.zero_receiver_row.unwrap_or(false));
    if let Some(c1) = raw.c1 {
        spec = spec.with_c1(c1);
    }
    Ok(spec)
}

fn init_spec(raw: RawInit) -> Result<InitSpec> {
    Ok(match required(raw.family, "init.family")? {
        InitFamily::Monodisperse => InitSpec::Monodisperse {
            density: raw.density.unwrap_or(1.0),
        },
        InitFamily::DeltaAt => InitSpec::DeltaAt {
            size: required(raw.size, "init.size")?,
            density: raw.density.unwrap_or(1.0),
        },
        InitFamily::Geometric => InitSpec::Geometric {
            ratio: required(raw.q, "init.q")?,
            total_number: raw.m0.unwrap_or(1.0),
        },
        InitFamily::Custom => InitSpec::Custom {
            values: required(raw.values, "init.values")?,
        },
    })
}

fn integrator_config(raw: RawIntegrator) -> Result<IntegratorConfig> {
    let t_end = required(raw.t_end, "integrator.t_end")?;
    let mut cfg = IntegratorConfig::new(t_end);
    macro_rules! set {
        ($($field:ident),+) => {$(
            if let Some(v) = raw.$field {
                cfg.$field = v;
            }
        )+};
    }
    set!(method, rel_tol, abs_tol, dt_init, dt_min, dt_max, neg_clip, blowup_moment_order, blowup_threshold, record_every);
    if raw.dt_max.is_some() && raw.dt_init.is_none() {
        cfg.dt_init = cfg.dt_init.min(cfg.dt_max);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a config document; relative paths resolve against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<SimulationConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| EdgError::Config(e.to_string().trim_end().to_string()))?;
    let kernel = kernel_spec(required(raw.kernel, "kernel")?, base_dir)?;
    let init = init_spec(required(raw.init, "init")?)?;
    let n = required(raw.n, "N")?;
    let integrator = integrator_config(required(raw.integrator, "integrator")?)?;

    let tracked_moment_orders = raw.tracked_moment_orders.unwrap_or_default();
    if let Some(p) = tracked_moment_orders.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(EdgError::Config(format!("tracked moment order {p} must be finite and >= 0")));
    }

    let outputs = raw.outputs.unwrap_or(RawOutputs {
        moments_path: None,
        states_path: None,
        report_path: None,
        convergence_path: None,
        bounds_path: None,
    });
    let outputs = OutputPaths {
        moments_path: resolve(base_dir, outputs.moments_path.as_deref().unwrap_or("moments.csv")),
        states_path: outputs.states_path.map(|p| resolve(base_dir, &p)),
        report_path: resolve(base_dir, outputs.report_path.as_deref().unwrap_or("report.txt")),
        convergence_path: resolve(base_dir, outputs.convergence_path.as_deref().unwrap_or("convergence.csv")),
        bounds_path: outputs.bounds_path.map(|p| resolve(base_dir, &p)),
    };

    let gelation = GelationSettings {
        window: raw.gelation.and_then(|g| g.window).map(|[a, b]| (a, b)),
    };
    if let Some((a, b)) = gelation.window {
        if !(a < b) {
            return Err(EdgError::Config(format!("gelation.window ({a}, {b}) is empty")));
        }
    }

    let mut verify = VerifySettings::default();
    if let Some(v) = raw.verify {
        verify.upper_bound = v.upper_bound;
        verify.lambda = v.lambda;
        verify.blowup_bound = v.blowup_bound;
        verify.conservation_tol = v.conservation_tol;
        if let Some(s) = v.blowup_slack {
            verify.blowup_slack = s;
        }
        if let Some(u) = v.blowup_until {
            verify.blowup_until = u;
        }
        if let Some(o) = v.jensen_orders {
            verify.jensen_orders = o;
        }
        if let Some(b) = v.jensen_beta {
            verify.jensen_beta = b;
        }
    }

    Ok(SimulationConfig {
        kernel,
        init,
        n,
        integrator,
        tracked_moment_orders,
        outputs,
        gelation,
        n_list: raw.converge.and_then(|c| c.n_list),
        verify,
    })
}

/// Reads and parses the config file at `path`.
pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| EdgError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, base)
}
