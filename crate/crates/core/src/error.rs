use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EdgError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("kernel table is {rows}x{cols}; a square matrix is required")]
    NonSquareTable { rows: usize, cols: usize },

    #[error("kernel table entry ({j}, {k}) is negative: {value}")]
    NegativeTableEntry { j: usize, k: usize, value: f64 },

    #[error("kernel evaluated at ({j}, {k}) outside its table of size {size}")]
    OutOfTable { j: usize, k: usize, size: usize },

    #[error("kernel is not symmetric: K({j},{k}) = {jk} but K({k},{j}) = {kj}")]
    NotSymmetric {
        j: usize,
        k: usize,
        jk: f64,
        kj: f64,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid initial data: {0}")]
    InvalidInit(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("step size {dt:e} fell below dt_min {dt_min:e} at t = {t}")]
    DtUnderflow { t: f64, dt: f64, dt_min: f64 },

    #[error("state has zero mass")]
    ZeroMass,

    #[error("not enough samples in fit window [{lo}, {hi}]: {count} (need at least 4)")]
    TooFewSamples { lo: f64, hi: f64, count: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, EdgError>;
