use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("decoy index {index} out of range ({count} settings)")]
    DecoyIndex { index: usize, count: usize },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("linear program solver failure: {0}")]
    Solver(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn probability(name: &str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(domain(format!("{name} = {value} is not a probability")))
    }
}
