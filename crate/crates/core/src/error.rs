use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error on line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("kind violation: {0}")]
    Kind(String),
    #[error("unsafe filter: variable {0} does not occur in the filtered expression")]
    UnsafeFilter(String),
    #[error("fragment error: {0}")]
    Fragment(String),
    #[error("invalid constraint: {0}")]
    Constraint(String),
    #[error("rule {rule} is not applicable at {site}")]
    Inapplicable { rule: String, site: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
}

pub type Result<T> = std::result::Result<T, Error>;
