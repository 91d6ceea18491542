use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("step {step}: input vector has l2 norm {norm} > 1")]
    NormViolation { step: usize, norm: f64 },

    #[error("step {step}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        step: usize,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of bounds for dimension {len}")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix exceeds L*c*I (max eigenvalue {max_eigenvalue} > {bound})")]
    AboveBound { max_eigenvalue: f64, bound: f64 },

    #[error("variance {sigma2} >= 2Lc = {limit}: exponential moment diverges")]
    DivergentMoment { sigma2: f64, limit: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("coordinate {value} of point {point} lies outside [0, 1]")]
    OutsideUnitCube { point: usize, value: f64 },

    #[error("distribution has an atom in coordinate {dim} near {value}; only atomless distributions are supported")]
    AtomicDistribution { dim: usize, value: f64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// True for I/O failures, as opposed to validation problems.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
