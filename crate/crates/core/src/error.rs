use thiserror::Error;

/// Errors raised by the library. Each variant maps to one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-domain input (exit code 4).
    #[error("bad input: {0}")]
    BadInput(String),
    /// A configured size ceiling was exceeded (exit code 3).
    #[error("resource limit: {0}")]
    Resource(String),
    /// A checked identity or invariant failed (exit code 2).
    #[error("invariant violation: {0}")]
    Invariant(String),
    /// The level and the characteristic are not coprime.
    #[error("characteristic {q} is not coprime to {what} {level}")]
    NotCoprime {
        q: u64,
        level: u64,
        what: &'static str,
    },
    /// A representable family produced additive reduction.
    #[error("additive reduction in representable family {level} at q={q} (A={a}, B={b})")]
    AdditiveInRepresentable {
        level: String,
        q: u64,
        a: i128,
        b: i128,
    },
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) | Error::AdditiveInRepresentable { .. } => 2,
            Error::Resource(_) | Error::Overflow(_) => 3,
            Error::BadInput(_) | Error::NotCoprime { .. } | Error::Parse(_) => 4,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
