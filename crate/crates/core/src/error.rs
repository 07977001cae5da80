use thiserror::Error;

/// Errors produced by the compound random measure toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("unsupported family `{0}`")]
    UnsupportedFamily(String),

    #[error("stability index must lie in {range}, got {value}")]
    InvalidIndex { value: f64, range: &'static str },

    #[error("measure fails the Lévy integrability condition: {0}")]
    IntegrabilityFailure(String),

    #[error("fractional moment of order {order} does not converge for {family}")]
    NonConvergentMoment { family: String, order: f64 },

    #[error("score density `{family}` is not normalised: integral = {integral}")]
    NotNormalised { family: String, integral: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Quad(#[from] crate::quad::QuadError),

    #[error("intensity integral diverges at s = {at}")]
    DivergentIntensity { at: f64 },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("assertion failed at {point}: relative deviation {deviation:e} exceeds {tolerance:e}")]
    AssertionFailure {
        point: String,
        deviation: f64,
        tolerance: f64,
    },

    #[error("scores are not independent standard exponentials")]
    NonExponentialScores,

    #[error("truncation budget exceeded: more than {0} atoms above the jump threshold")]
    TruncationBudgetExceeded(usize),

    #[error("specification is not well posed (verdict: {0})")]
    IllPosedSpec(String),

    #[error("every threshold is too small relative to the truncation level: {0}")]
    TruncationBias(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    SpecFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPositiveParameter { name, value })
    }
}
