use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unstable point: max Re(lambda) = {0:.3e}")]
    UnstablePoint(f64),

    #[error("defective matrix: eigenvector residual {0:.3e} exceeds contract")]
    DefectiveMatrix(f64),

    #[error("ill-conditioned eigenvector matrix (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("not a fixed point: residual {0:.3e}")]
    NotFixedPoint(f64),

    #[error("point absent: {0}")]
    PointAbsent(String),

    #[error("no Hopf in bracket: {0}")]
    NoHopfInBracket(String),

    #[error("static crossing at injection {injection:.6e}: |Im lambda| = {imag:.3e}")]
    StaticCrossing { injection: f64, imag: f64 },

    #[error("integration did not converge: {0}")]
    NonConvergence(String),

    #[error("covariance has imaginary residue {0:.3e}")]
    ImaginaryResidue(f64),

    #[error("unphysical covariance: smallest symplectic eigenvalue {0:.6}")]
    UnphysicalCovariance(f64),

    #[error("excessive divergence: {diverged} of {total} trajectories discarded")]
    ExcessiveDivergence { diverged: usize, total: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
