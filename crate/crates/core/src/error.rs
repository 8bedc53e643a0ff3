use thiserror::Error;

/// Errors raised by the operator, state, engine and geometry layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("specification error: {0}")]
    Spec(String),

    #[error("degenerate state: squared norm {0:e}")]
    DegenerateState(f64),

    #[error("step size underflow at t = {t} (h = {h:e}); system too stiff for tolerance")]
    Stiffness { t: f64, h: f64 },

    #[error("insufficient data: need at least {needed} time points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("near exceptional point: eigenvector residual {residual:e}")]
    NearExceptionalPoint { residual: f64 },

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("chart singularity: {0}")]
    ChartSingularity(String),

    #[error("singular structure: {0}")]
    SingularStructure(&'static str),

    #[error("unsupported chart: {0}")]
    UnsupportedChart(String),

    #[error("near resonance: |ω̃² − Ω²| = {0:e}")]
    NearResonance(f64),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

pub(crate) fn require_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be non-negative and finite",
        })
    }
}
