use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sequence too short: index {needed} requested, {available} stored")]
    Length { needed: usize, available: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("order {requested} exceeds the configured limit {max}")]
    OrderGuard { requested: usize, max: usize },

    #[error("coefficient A[{r},{i}] lies beyond the declared model order {order}")]
    ModelOrder { r: usize, i: usize, order: usize },

    #[error("model error: {0}")]
    Model(String),

    #[error("series truncated at order {have}, coefficient {want} requested")]
    Truncation { want: usize, have: usize },

    #[error("numeric failure in {routine}: {detail}")]
    Numeric { routine: &'static str, detail: String },

    #[error("skewness matching failed: {0}")]
    Matching(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn numeric(routine: &'static str, detail: impl Into<String>) -> Self {
        Error::Numeric { routine, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
