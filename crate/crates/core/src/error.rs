use thiserror::Error;

/// Errors produced across the library.
///
/// The variants mirror how callers are expected to react: `Domain` and
/// `Data` are bad inputs, `Usage` is a misuse of the API (e.g. stepping a
/// monitor past its horizon), `Numerical` signals non-convergence of an
/// iterative or quadrature computation, `DegenerateVariance` flags inputs
/// from which no positive variance can be estimated, and `Resource` guards
/// deliberately bounded computations.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;
