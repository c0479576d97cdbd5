use thiserror::Error;

/// Every failure mode surfaced by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("denominator polynomial is identically zero")]
    ZeroDenominator,
    #[error("evaluation point {0} is (numerically) a pole")]
    PoleEvaluation(String),
    #[error("closed loop has an identically zero characteristic polynomial")]
    AlgebraicLoop,
    #[error("system is improper (numerator degree {num} > denominator degree {den})")]
    ImproperSystem { num: usize, den: usize },
    #[error("frequency grid point {0} rad/s hits an imaginary-axis pole")]
    PoleOnGrid(f64),
    #[error("system is unstable")]
    UnstableSystem,
    #[error("bilinear transform is singular at the requested sample rate")]
    SingularTransform,
    #[error("system has a pole at the origin")]
    IntegratorPresent,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate (constant) signal: {0}")]
    DegenerateSignal(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("least-squares problem ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("no admissible candidate model")]
    NoAdmissibleCandidate,
    #[error("nominal model vanishes at {0} rad/s")]
    NominalZero(f64),
    #[error("profiles are defined on different frequency grids")]
    GridMismatch,
    #[error("weight fit diverged: {0}")]
    FitDiverged(String),
    #[error("invalid synthesis specification: {0}")]
    InvalidSpec(String),
    #[error("generalized plant is not regular: {0}")]
    RankDeficient(String),
    #[error("Riccati equation has no stabilizing solution: {0}")]
    NoStabilizingSolution(String),
    #[error("no controller exists at the upper gamma bound {0}")]
    InfeasibleAtUpperBound(f64),
    #[error("closed loop is internally unstable")]
    InternallyUnstable,
    #[error("controller is unstable")]
    UnstableController,
    #[error("reduced controller deviates by {0:.4} (relative), limit 0.05")]
    DeviationExceeded(f64),
    #[error("simulation state became non-finite")]
    NonFiniteState,
    #[error("motor allocation infeasible: {0}")]
    InfeasibleAllocation(String),
    #[error("simulation diverged at t = {0:.3} s")]
    Diverged(f64),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
