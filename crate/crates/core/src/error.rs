use thiserror::Error;

/// Errors raised by model validation and the bound computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix `{0}` is not symmetric")]
    NonSymmetric(&'static str),
    #[error("matrix `{0}` is not positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("dimension mismatch in `{what}`: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("noise variance noise_var[{index}] = {value} must be strictly positive")]
    NonpositiveNoise { index: usize, value: f64 },
    #[error("rate r[{index}] = {value} must be finite and nonnegative")]
    NegativeRate { index: usize, value: f64 },
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("subset {mask:#b} has members beyond L = {l}")]
    SubsetOutOfRange { mask: u32, l: usize },
    #[error("theta must be positive, got {0}")]
    NonpositiveTheta(f64),
    #[error("distortion spec has dimension {found}, model needs {expected}")]
    SpecDimensionMismatch { expected: usize, found: usize },
    #[error("invalid distortion spec: {0}")]
    InvalidSpec(String),
    #[error("weighting matrix gamma is singular")]
    SingularGamma,
    #[error("infeasible distortion spec: {0}")]
    InfeasibleSpec(String),
    #[error("distortion budget {budget} is below the forced minimum {required}")]
    InsufficientBudget { budget: f64, required: f64 },
    #[error("rate allocation does not meet the distortion constraint: {0}")]
    InfeasibleAllocation(String),
    #[error("observation row {0} of A*inv(gamma) is zero")]
    ZeroObservationRow(usize),
    #[error("hidden source covariance Sigma_Y - delta^2 Gamma^2 is not positive definite")]
    HiddenSourceNotPD,
    #[error("distortion pair ({d1}, {d2}) lies outside the Wagner set for rho = {rho}")]
    OutsideD { rho: f64, d1: f64, d2: f64 },
    #[error("distortion budget {d_total} does not exceed the floor tr[B] = {floor}")]
    DistortionNotPositive { d_total: f64, floor: f64 },
    #[error("need at least 2 Monte-Carlo samples, got {0}")]
    BadSampleCount(usize),
    #[error("covariance is not circulant (max deviation {0:e})")]
    NotCirculant(f64),
    #[error("cyclic instance requires equal noise variances")]
    UnequalNoise,
    #[error("at most {max} observations are supported, got {found}")]
    TooManyObservations { max: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{}field `{field}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        field: String,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
