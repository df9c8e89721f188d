use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node count must be at least 2, got {0}")]
    TooFewNodes(usize),
    #[error("series must contain at least {needed} slices, got {got}")]
    TooFewSlices { needed: usize, got: usize },
    #[error("record (t={t}, i={i}, j={j}) is outside the declared {n} nodes x {slices} slices")]
    OutOfRange {
        t: usize,
        i: usize,
        j: usize,
        n: usize,
        slices: usize,
    },
    #[error("self-loop record at t={t} for node {node}")]
    SelfLoop { t: usize, node: usize },
    #[error("non-binary value {value:?} at slice {t}, row {row}, column {col}")]
    NonBinary {
        t: usize,
        row: usize,
        col: usize,
        value: String,
    },
    #[error("pair ({i}, {j}) must satisfy i < j")]
    InvalidPair { i: usize, j: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite objective while fitting pair ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("lambda grid is empty")]
    EmptyGrid,
    #[error("invalid lambda grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("every lambda in the grid failed for some pair")]
    NoValidLambda,
    #[error("labels must contain both classes")]
    SingleClass,
    #[error("no pair fit for ({0}, {1})")]
    MissingFit(usize, usize),
    #[error("nothing to aggregate")]
    EmptyReport,
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error originates in the numerics rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(..) | Error::NoValidLambda)
    }
}
