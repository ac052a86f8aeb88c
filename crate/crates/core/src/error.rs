use thiserror::Error;

use crate::apply::Integral;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shifted solve failed at node {node} of the {integral} integral: {reason}")]
    Operator {
        node: usize,
        integral: Integral,
        reason: String,
    },

    #[error("eigenvalue iteration did not converge for rule size {0}")]
    NoConvergence(usize),

    #[error("adaptive quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
