use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid side lengths: {0}")]
    InvalidLengths(String),
    #[error("unsupported polygon size {0} (supported: 4..=12)")]
    UnsupportedSize(usize),
    #[error("hypotheses violated: {0}")]
    HypothesisViolation(String),
    #[error("polygon space is empty for these side lengths")]
    EmptySpace,
    #[error("sampling failed after {0} attempts")]
    SamplingFailed(usize),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("vanishing moment: ell_12 = {0:e} is below threshold")]
    VanishingMoment(f64),
    #[error("level {0} outside the image of J")]
    LevelOutOfRange(f64),
    #[error("point is not singular: {0}")]
    NotSingular(String),
    #[error("point is not rank 0: rank is {0}")]
    NotRankZero(usize),
    #[error("point is not rank 1: rank is {0}")]
    NotRankOne(usize),
    #[error("point is not on a fixed surface of J")]
    NotOnFixedSurface,
    #[error("local model parameters violate integrability: {0}")]
    NotIntegrable(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;
