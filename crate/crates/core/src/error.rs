use thiserror::Error;

/// Errors surfaced by the numerical core.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("operators built on different grids cannot be combined (lhs n={lhs}, rhs n={rhs})")]
    GridMismatch { lhs: usize, rhs: usize },

    #[error("matrix violates its `{flag}` flag: defect {defect:.3e} exceeds {tol:.3e}")]
    SymmetryViolation {
        flag: &'static str,
        defect: f64,
        tol: f64,
    },

    #[error("coercivity violated: min eigenvalue of sigma is {c0:.6e}")]
    CoercivityViolation { c0: f64 },

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("non-finite value produced in {context}")]
    NonFinite { context: String },

    #[error(
        "ill-posed vorticity-to-psi transform: relative mass {mass:.3e} sits below the m-floor"
    )]
    IllPosedTransform { mass: f64 },

    #[error("derivative ratio {name} is unbounded on the grid (max {value:.3e})")]
    UnboundedRatio { name: &'static str, value: f64 },

    #[error("decay fit failed: {reason}")]
    FitFailure { reason: String },

    #[error("profile table error: {0}")]
    TableFormat(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
