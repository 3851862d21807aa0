use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid is empty")]
    EmptyGrid,

    #[error("symbol support [{lo}, {hi}] leaves the admissible window [{min}, {max}]")]
    SupportOutOfRange { lo: f64, hi: f64, min: f64, max: f64 },

    #[error("truncation tail {tail:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationTail { tail: f64, tolerance: f64 },

    #[error("aliasing: symbol support [{lo}, {hi}] is not well inside the sampling window [-{half_width}, {half_width}]")]
    Aliasing { lo: f64, hi: f64, half_width: f64 },

    #[error("hull requires R >= |a|/4 (R = {radius}, |a| = {center_norm})")]
    HullHypothesis { radius: f64, center_norm: f64 },

    #[error("overlap certification found {found} overlapping balls for dilation {lambda}, above the configured bound {bound}")]
    OverlapBound { lambda: f64, found: usize, bound: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {value}")))
    }
}
