use thiserror::Error;

use crate::specfun::PoleKind;

/// Errors raised by the kernel, transform and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("root polishing did not converge for {kind:?} zeros at l = {l} (relative residual {residual:e})")]
    NoConvergence { l: usize, kind: PoleKind, residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pole set mismatch: {0}")]
    PoleMismatch(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("model violation: {0}")]
    ModelViolation(String),

    #[error("grid resolution too low: {0}")]
    Resolution(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("instability detected in mode (l = {l}, m = {m}) at t = {t}: |V| = {norm:e}")]
    Instability { l: usize, m: i64, t: f64, norm: f64 },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
