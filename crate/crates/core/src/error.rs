use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum G2Error {
    #[error("3-form is not positive: {0}")]
    NonPositiveForm(String),
    #[error("metric is not positive definite: {0}")]
    DegenerateMetric(String),
    #[error("non-finite values encountered: {0}")]
    NumericalBlowup(String),
    #[error("(1,1)-form is not positive: {0}")]
    NonPositiveChi(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, G2Error>;
