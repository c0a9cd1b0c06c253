use thiserror::Error;

/// Errors shared across the estimation, simulation, and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("series `{name}` contains a non-finite value at row {row}")]
    NonFinite { name: String, row: usize },
    #[error("series must contain at least one observation")]
    EmptySeries,
    #[error("column `{0}` not found")]
    UnknownColumn(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("columns have mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("insufficient data: need at least {needed} observations, have {have}")]
    InsufficientData { needed: usize, have: usize },
    #[error(
        "rank-deficient design: smallest singular value {smallest:.3e} \
         below {tol:.0e} x largest ({largest:.3e})"
    )]
    RankDeficient { smallest: f64, largest: f64, tol: f64 },
    #[error("degenerate sample: zero variance, cannot form a bandwidth")]
    DegenerateSample,
    #[error("degenerate variance in `{0}`")]
    DegenerateVariance(String),
    #[error("bandwidth must be positive and finite, got {0}")]
    BandwidthDegenerate(f64),
    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("cell `{cell}` too small: {size} observations (need {needed})")]
    CellTooSmall { cell: String, size: usize, needed: usize },
    #[error("horizon {horizon} too long for {n} observations and {k} regressors")]
    HorizonTooLong { horizon: usize, n: usize, k: usize },
    #[error("state column `{0}` is degenerate: {1}")]
    StateDegenerate(String, String),
    #[error("treatment support has a gap at step {0}: no observations on one side")]
    MissingStep(i64),

    #[error("invalid DGP spec: {0}")]
    InvalidSpec(String),
    #[error("operation requires latent draws ({0})")]
    RequiresLatent(String),
    #[error("regime law of the shock is not symmetric around zero")]
    AsymmetricRLaw,
    #[error("degenerate sample covariance; cannot whiten")]
    DegenerateCovariance,
    #[error("dimension {0} exceeds the supported maximum of {1}")]
    TooHighDimensional(usize, usize),

    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("parse error at row {row}, column `{column}`: {message}")]
    ParseError { row: usize, column: String, message: String },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
