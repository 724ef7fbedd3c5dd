use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter {
        name: &'static str,
        constraint: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("enumeration needs {required} iterations but the cap is {cap}; raise the cap to at least {required}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("simulation needs {required} cells but the memory budget is {budget}")]
    ResourceBudget { required: u128, budget: u128 },

    #[error("(N={n_balls}, B={n_bins}) lies in the gap regime; bounds need B >= N + sqrt(N) or B <= N - sqrt(N)")]
    Regime { n_balls: u64, n_bins: u64 },

    #[error("ratio P_{j}/P_{next} is undefined because P_{next} = 0", next = j + 1)]
    DegenerateRatio { j: u64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("audit not applicable: {0}")]
    AuditNotApplicable(String),

    #[error("schedule line {line}: {message}")]
    ScheduleParse { line: usize, message: String },

    #[error("calibration data: {0}")]
    Calibration(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, constraint: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            constraint: constraint.into(),
        }
    }
}
