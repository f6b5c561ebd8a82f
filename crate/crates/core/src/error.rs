use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular lattice generator (scaled |det| = {0:e})")]
    SingularLattice(f64),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("s = {s} lies within {tol:e} of the pole at {pole}")]
    PoleProximity { s: f64, pole: f64, tol: f64 },
    #[error("test function is indexed by a different lattice")]
    LatticeMismatch,
    #[error("map is not admissible: {0}")]
    Admissibility(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("positivity violated: {0}")]
    Positivity(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
}

impl Error {
    /// True for errors caused by evaluating outside a numeric domain, as
    /// opposed to malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::PoleProximity { .. }
                | Error::Convergence(_)
                | Error::Positivity(_)
                | Error::ResourceLimit(_)
                | Error::SingularLattice(_)
        )
    }
}
