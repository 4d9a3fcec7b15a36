use std::path::PathBuf;

use thiserror::Error;

use crate::spectral::FieldKind;

/// Errors raised by the solver, the analysis engine and the harness.
#[derive(Debug, Error)]
pub enum NspError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field kind mismatch: expected {expected:?}, found {found:?}")]
    KindMismatch { expected: FieldKind, found: FieldKind },
    #[error("size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("non-finite exponent {0}")]
    NonFiniteExponent(f64),
    #[error("charge imbalance: zero mode {mean:e} exceeds tolerance relative to norm {norm:e}")]
    ChargeImbalance { mean: f64, norm: f64 },
    #[error("nonzero mean velocity: |mean| = {0:e}")]
    NonzeroMeanVelocity(f64),
    #[error("dyadic block {0} is identically zero")]
    EmptyBlock(i32),
    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),
    #[error("composition pole reachable: sup|f| = {sup:e} >= rho_bar = {rho_bar:e}")]
    PoleReachable { sup: f64, rho_bar: f64 },
    #[error("invalid fluid parameters: {0}")]
    InvalidParams(String),
    #[error("density is not positive: min rho = {0:e}")]
    NonpositiveDensity(f64),
    #[error("density quotient outside admissible regime: min(rho) = {min:e} < rho_bar/2 = {bound:e}")]
    OutsideRegime { min: f64, bound: f64 },
    #[error("estimate constants infeasible: {0}")]
    Infeasible(String),
    #[error("numerical abort at t = {t}: {reason}")]
    NumericalAbort { t: f64, reason: String },
    #[error("stability check failed at t = {t}: dt * rate = {product:.4} exceeds {margin}")]
    Stability { t: f64, product: f64, margin: f64 },
    #[error("invalid stepper configuration: {0}")]
    InvalidStepper(String),
    #[error("monitoring window too short: need at least {need} instants, got {got}")]
    WindowTooShort { need: usize, got: usize },
    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },
    #[error("config key `{key}`: {msg}")]
    ConfigValue { key: String, msg: String },
    #[error("initial-data band is empty on this grid")]
    EmptyBand,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, NspError>;

impl NspError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NspError::Io {
            path: path.into(),
            source,
        }
    }
}
