use thiserror::Error;

pub type Result<T> = std::result::Result<T, AppraiseError>;

#[derive(Debug, Error)]
pub enum AppraiseError {
    #[error("tenor {tenor} is outside the curve horizon 1..={horizon}")]
    TenorOutOfRange { tenor: usize, horizon: usize },

    #[error("requested horizon {requested} exceeds the curve horizon {available}")]
    HorizonOutOfRange { requested: usize, available: usize },

    #[error("yield curve is missing tenor {tenor}")]
    MissingTenor { tenor: usize },

    #[error("invalid yield curve: {0}")]
    InvalidCurve(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("horizon mismatch: expected {expected}, found {found}")]
    HorizonMismatch { expected: usize, found: usize },

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("total initial outlay is zero; returns and profitability index are undefined")]
    ZeroTotalOutlay,

    #[error("return undefined: 1 + npv / basis = {ratio} is not positive")]
    ReturnUndefined { ratio: f64 },

    #[error("MIRR denominator is zero")]
    ZeroDenominator,

    #[error("invalid hurdle: {0}")]
    InvalidHurdle(String),

    #[error("distribution has no samples")]
    EmptyDistribution,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("threshold grid is empty")]
    EmptyGrid,

    #[error("threshold grid must be strictly increasing (index {index})")]
    GridNotIncreasing { index: usize },

    #[error("Omega curves are not on the same grid")]
    GridMismatch,

    #[error("non-canonical cash flow in scenario {scenario} at t={tenor}: {value}")]
    NonCanonical {
        scenario: usize,
        tenor: usize,
        value: f64,
    },

    #[error("scenario set is empty")]
    EmptySet,

    #[error("no moment-matching solution: {0}")]
    NoSolution(String),

    #[error("standard deviation must be positive, got {0}")]
    NonPositiveStd(f64),

    #[error("invalid value for field `{field}`: {message}")]
    InvalidSpec { field: String, message: String },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("no project has a determinate Omega at the hurdle")]
    NoRankableProject,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl AppraiseError {
    /// True for errors raised by the financial computation itself (as opposed
    /// to malformed input, configuration or I/O).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            AppraiseError::ZeroTotalOutlay
                | AppraiseError::ReturnUndefined { .. }
                | AppraiseError::ZeroDenominator
                | AppraiseError::NonCanonical { .. }
                | AppraiseError::NoSolution(_)
                | AppraiseError::NoRankableProject
                | AppraiseError::EmptyDistribution
        )
    }
}

/// Maps a CSV deserialization failure onto a 1-based row/column location.
pub(crate) fn csv_parse_error(err: csv::Error, fallback_row: usize) -> AppraiseError {
    let row = err
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_row);
    let column = match err.kind() {
        csv::ErrorKind::Deserialize { err: de, .. } => de.field().map(|f| f as usize + 1).unwrap_or(1),
        _ => 1,
    };
    AppraiseError::Parse {
        row,
        column,
        message: err.to_string(),
    }
}
