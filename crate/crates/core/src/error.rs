use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlateError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid configuration: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    /// The characteristic cubic has complex roots at this frequency parameter.
    #[error("unsupported regime at beta = {beta}: {message}")]
    UnsupportedRegime { beta: f64, message: String },

    /// A characteristic root sits inside the branch-transition guard band.
    #[error("branch transition at beta = {beta} (|x| = {magnitude:e})")]
    BranchTransition { beta: f64, magnitude: f64 },

    #[error("degenerate frequency at beta = {beta}: {message}")]
    DegenerateFrequency { beta: f64, message: String },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("oracle failure: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, PlateError>;

impl PlateError {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        PlateError::InvalidConfig {
            field: field.into(),
            message: message.into(),
        }
    }
}
