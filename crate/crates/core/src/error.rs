use thiserror::Error;

/// Errors produced by the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site count mismatch: {0} vs {1}")]
    SiteMismatch(usize, usize),

    #[error("dense representation refused: {sites} sites exceeds the dense limit of {limit}")]
    DenseLimit { sites: usize, limit: usize },

    #[error("operator is not Hermitian (nor i times Hermitian)")]
    NonHermitian,

    #[error("extremal eigenvalue iteration did not converge within {0} Krylov vectors")]
    NormNotConverged(usize),

    #[error("generator terms do not pairwise commute; exact layer exponential unavailable")]
    NonCommutingLayer,

    #[error("formula degenerate: |beta2| = {beta2:.3e} below floor for stepsize {dt:.3e}")]
    FormulaDegenerate { beta2: f64, dt: f64 },

    #[error("time-dependent Hamiltonian passed to a time-independent path")]
    TimeDependent,

    #[error("fidelity residue {0:.3e} is negative beyond roundoff")]
    NegativeFidelity(f64),

    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),

    #[error("stepsize {dt:.3e} fell below the abort floor {floor:.3e} at t = {t}")]
    StepsizeUnderflow { dt: f64, floor: f64, t: f64 },

    #[error("step at t = {t} rejected {count} times, exceeding the per-step limit")]
    TooManyRejections { t: f64, count: usize },

    #[error("observable has zero norm")]
    ZeroNormObservable,

    #[error("extrapolation needs distinct abscissae (duplicate at {0})")]
    DuplicateAbscissa(f64),

    #[error("not enough accepted steps: need at least {need}, trace has {have}")]
    NotEnoughSteps { need: usize, have: usize },

    #[error("linear-algebra backend failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
