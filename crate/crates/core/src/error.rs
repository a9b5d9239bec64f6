use thiserror::Error;

/// Errors raised by the numerical routines and the CLI layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("kernel overflow: Re(w_{index}) * delta * (L - 1) = {exponent:.3e} exceeds the f64 range")]
    Overflow { index: usize, exponent: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("Cholesky factorization failed after adding jitter {jitter:.1e}")]
    Cholesky { jitter: f64 },

    #[error("power iteration did not converge in {iters} iterations (last change {change:.3e})")]
    NoConvergence { iters: usize, change: f64 },

    #[error("Re(w_{index}) = {real} > 0 violates the Re(w) <= 0 hypothesis of the output bound")]
    PositiveRealPart { index: usize, real: f64 },

    #[error(
        "Gram matrix is numerically singular (condition number {condition:.3e}, separation distance {separation:.3e})"
    )]
    IllConditioned { condition: f64, separation: f64 },

    #[error("{rows} sequences for length {len} leave the least-squares problem underdetermined; retry with ridge >= {suggested_ridge:.3e}")]
    Underdetermined {
        rows: usize,
        len: usize,
        suggested_ridge: f64,
    },

    #[error("requested {requested} frequencies but only {available} are available")]
    TooMany { requested: usize, available: usize },

    #[error("training diverged at step {step} (loss {loss})")]
    Diverged { step: usize, loss: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
