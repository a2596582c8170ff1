use alloc::string::String;

use crate::linalg::eigen::NoConvergence;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("Fock truncation too small: weight {weight:e} exceeds tolerance {tol:e}")]
    Truncation { weight: f64, tol: f64 },
    #[error("odd cat state with zero amplitude is the zero vector")]
    DegenerateCat,
    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("steady state is degenerate (multiplicity {multiplicity})")]
    DegenerateSteadyState { multiplicity: usize },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("eigensolver failed to converge")]
    EigenNoConvergence,
    #[error("singular linear system at column {column}")]
    Singular { column: usize },
    #[error("reference state is not symmetric: |Tr(a rho)| = {value:e}")]
    SymmetryViolation { value: f64 },
    #[error("stationary mode could not be identified ({candidates} candidates)")]
    StationaryModeAmbiguous { candidates: usize },
    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("positivity lost at t = {t}: min eigenvalue {min_eigenvalue:e}")]
    PositivityLost { t: f64, min_eigenvalue: f64 },
    #[error("critical fit diverged: {0}")]
    FitDiverged(String),
}

impl From<NoConvergence> for Error {
    fn from(_: NoConvergence) -> Self {
        Error::EigenNoConvergence
    }
}

impl From<crate::linalg::band::SingularPivot> for Error {
    fn from(e: crate::linalg::band::SingularPivot) -> Self {
        Error::Singular { column: e.column }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
