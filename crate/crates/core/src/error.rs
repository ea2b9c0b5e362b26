use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("measure has empty support")]
    EmptySupport,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("channel scale must be positive and finite, got {0}")]
    InvalidScale(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("channel count mismatch: {0} vs {1}")]
    ChannelMismatch(usize, usize),

    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("cost matrix shape ({0}, {1}) does not match supports ({2}, {3})")]
    CostShape(usize, usize, usize, usize),

    #[error("numerical overflow in Sinkhorn scaling; retry with log-domain iterations")]
    SuggestLogDomain,

    #[error("plan row {0} carries no mass")]
    DegenerateRow(usize),

    #[error("exact solver failed: {0}")]
    SolverFailure(String),

    #[error("signals are not defined on a common grid")]
    GridMismatch,

    #[error("embedding shapes differ")]
    ShapeMismatch,

    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("no principal component {index} (rank {rank})")]
    NoSuchComponent { index: usize, rank: usize },

    #[error("requested {requested} components but rank is {rank}")]
    RankError { requested: usize, rank: usize },

    #[error("density has an empty slice at index {0}")]
    DegenerateDensity(usize),

    #[error("energy increased for {0} consecutive steps; use a smaller step size")]
    StepTooLarge(usize),

    #[error("training set is empty")]
    EmptyTrain,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("gamma {gamma} does not divide r = {r} into an integer count")]
    InvalidGamma { gamma: f64, r: f64 },

    #[error("f + chi is not strictly positive (min {0})")]
    NegativeMass(f64),

    #[error("non-positive price {price} for {ticker} at row {row}")]
    InvalidPrice {
        ticker: String,
        row: usize,
        price: f64,
    },

    #[error("window has zero variance after standardization")]
    DegenerateWindow,

    #[error("statistic undefined: {0}")]
    Undefined(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
