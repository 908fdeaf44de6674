use thiserror::Error;

use crate::sl2::Sl2Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Sl2(#[from] Sl2Error),
    #[error("fundamental-domain reduction did not terminate within {0} steps")]
    NonTermination(usize),
    #[error("bump support radius {support:.4} does not fit below the injectivity radius {limit:.4}")]
    WidthTooLarge { support: f64, limit: f64 },
    #[error("adaptive integration could not reach tolerance {tolerance:e} within {substeps} substeps")]
    ToleranceNotMet { tolerance: f64, substeps: usize },
    #[error("finite-difference step {step:e} loses too many digits to cancellation")]
    StepTooSmall { step: f64 },
    #[error("requested {requested} evaluations exceeds the budget of {budget}")]
    BudgetExceeded { requested: f64, budget: f64 },
    #[error("unknown lag window `{0}`")]
    WindowUnknown(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("generator file line {line}: {message}")]
    GeneratorParse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
