//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("no length bound declared for variable {0}")]
    MissingBound(char),

    #[error("substitution maps {var} to a word of length {len}, above its bound {bound}")]
    BoundExceeded { var: char, len: usize, bound: usize },

    #[error("substitution does not map variable {0}")]
    Unmapped(char),

    #[error("undeclared symbol {0:?}")]
    Undeclared(char),

    #[error("symbol {0:?} declared twice")]
    DuplicateDeclaration(char),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("internal soundness check failed: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
