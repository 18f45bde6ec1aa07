use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(f64),

    /// `1 - c * z` fell below the admissible floor in one of the flip-target maps.
    #[error("degenerate flip-target map: denominator {denominator:e} below {floor:e}")]
    DegenerateMap { denominator: f64, floor: f64 },

    #[error("M-box input {name} = {value} outside [0, 1]")]
    BoxInput { name: &'static str, value: f64 },

    #[error("resource budget violated: {0}")]
    BudgetViolation(String),

    #[error("decomposition failure: {0}")]
    Decomposition(String),

    #[error("transcripts mix settings or protocols")]
    MixedSettings,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
