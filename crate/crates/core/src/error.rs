use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("window error: {0}")]
    Window(String),

    /// A cocycle query would silently drop sites beyond the sampled window.
    #[error("truncation: tail risk {tail_risk:.3e} exceeds {epsilon:.1e} for shift {shift}; need hi >= {required_hi}")]
    Truncation { shift: i64, tail_risk: f64, epsilon: f64, required_hi: i64 },

    #[error("degenerate set: {0}")]
    DegenerateSet(String),

    #[error("point not in domain of the partial transformation: {0}")]
    NotInDomain(String),

    #[error("not a lattice family: {0}")]
    NotLattice(String),
}
