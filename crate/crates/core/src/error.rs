use thiserror::Error;

pub type Result<T> = std::result::Result<T, GameError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("expected {expected} entries (one per sensor), got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sensor index {index} out of range for a game with {sensors} sensors")]
    SensorOutOfRange { index: usize, sensors: usize },

    #[error("rate vector is outside the achievable region (load {load} >= {limit})")]
    InfeasibleRates { load: f64, limit: f64 },

    #[error("sensor index {sensor} would need received power {required} above its cap {cap}")]
    PowerBoundExceeded { sensor: usize, required: f64, cap: f64 },

    #[error("sensor index {sensor} has no feasible rate: upper bound {upper} is below minimum rate {lower}")]
    EmptyFeasibleInterval { sensor: usize, lower: f64, upper: f64 },

    #[error("none of {draws} sampled points lies in the achievable rate region")]
    EmptyRegion { draws: usize },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("config error: {0}")]
    Config(String),
}

impl GameError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        GameError::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors that mean a rate profile cannot be realized by any power vector.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            GameError::InfeasibleRates { .. }
                | GameError::PowerBoundExceeded { .. }
                | GameError::EmptyFeasibleInterval { .. }
                | GameError::EmptyRegion { .. }
        )
    }
}
