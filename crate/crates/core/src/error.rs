use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("condition is not self-adjoint (residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("matrix is not Hermitian positive semidefinite: {0}")]
    NotPositive(String),

    #[error("matrix exponential overflowed")]
    Overflow,

    #[error("point {x} is outside the domain [{start}, {end}]")]
    OutOfDomain { x: f64, start: f64, end: f64 },

    #[error("bad domain: {0}")]
    BadDomain(String),

    #[error("quadrature did not converge (last relative change {change:.3e})")]
    NoConvergence { change: f64 },

    #[error("z = {re} + {im}i is (numerically) an eigenvalue")]
    AtEigenvalue { re: f64, im: f64 },

    #[error("spectral parameter must be non-real")]
    RealZ,

    #[error("tail dynamics do not split into decaying/growing halves: {0}")]
    DichotomyFailure(String),

    #[error("Hamiltonian is not definite: {0}")]
    NotDefinite(String),

    #[error("spectral window too small: truncation bound {bound:.3e} exceeds tolerance {tol:.3e}")]
    WindowTooSmall { bound: f64, tol: f64 },

    #[error("graph has half-line edges; use the non-compact compiler")]
    HasHalfLine,

    #[error("half line `{0}` is theta-form on (0, ∞); reduce it to a boundary row first")]
    IndefiniteTail(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("{0}")]
    Input(String),
}

impl Error {
    /// Whether the error comes from the input rather than from a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Shape(_)
                | Error::RankDeficient { .. }
                | Error::NotSelfAdjoint { .. }
                | Error::NotPositive(_)
                | Error::OutOfDomain { .. }
                | Error::BadDomain(_)
                | Error::HasHalfLine
                | Error::IndefiniteTail(_)
                | Error::InvalidGraph(_)
                | Error::Input(_)
        )
    }
}

/// Non-fatal diagnostics attached to results.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The eigenvalue scan grid may be coarser than the local oscillation.
    MissedRootRisk { near: f64, detail: String },
    /// Every block of a compiled system is theta-form; the compiled `H` is not
    /// definite and its maximal domain is finite-dimensional.
    NonDefiniteCompiled { thetas: Vec<f64> },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::MissedRootRisk { near, detail } => write!(f, "MissedRootRisk near t = {near}: {detail}"),
            Warning::NonDefiniteCompiled { thetas } => {
                write!(f, "NonDefiniteCompiled: every block is theta-form (θ = {thetas:?})")
            }
        }
    }
}
