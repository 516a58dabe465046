use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("step size underflow at t = {t} ps (h = {h:e}); the system is too stiff for tol = {tol:e}")]
    Stiffness { t: f64, h: f64, tol: f64 },

    #[error("negative time {0} ps")]
    NegativeTime(f64),

    #[error("positivity violated: smallest eigenvalue {min_eig:e} at t = {t} ps")]
    Positivity { t: f64, min_eig: f64 },

    #[error("spin reservoir saturated: |2<Jz>| = {two_jz} >= N = {n}")]
    SpinTemperatureSaturation { two_jz: f64, n: f64 },

    #[error("zero inverse spin temperature: spinlabor bound is unbounded")]
    UnboundedSpinlabor,

    #[error("singular matching field: g*muB equals g_n*mu_n")]
    SingularMatching,

    #[error("lattice box too small: boundary coupling ratio {ratio:e} exceeds 1e-6")]
    LatticeTooSmall { ratio: f64 },

    #[error("pulse ineffective: zero field gradient leaves |gamma~(tau)|/gamma = 1")]
    PulseIneffective,

    #[error("brute-force oracle limited to N <= 12 spins, got {0}")]
    OracleTooLarge(usize),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("config error for key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Unwraps stage context to reach the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
