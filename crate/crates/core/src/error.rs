use thiserror::Error;

/// Errors produced by set operations, model construction and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("factor value {value} at position {index} lies outside [-1, 1]")]
    OutOfBox { index: usize, value: f64 },

    #[error("weight code {0} is outside [0, 63]")]
    CodeOutOfRange(i64),

    #[error("no coefficients for code {code} variant {variant}")]
    MissingCoefficients { code: u8, variant: String },

    #[error("rank-deficient design matrix for code {code} variant {variant}: {reason}")]
    RankDeficient {
        code: u8,
        variant: String,
        reason: String,
    },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(op: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { op, expected, got })
    }
}
