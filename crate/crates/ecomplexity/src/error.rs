use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the matrix model, the iterative engines and the
/// analysis layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no flow records supplied")]
    EmptyInput,

    #[error("negative flow value {value} for ({country}, {product})")]
    NegativeValue {
        country: String,
        product: String,
        value: f64,
    },

    #[error("non-finite flow value for ({country}, {product})")]
    NonFiniteValue { country: String, product: String },

    #[error("duplicate label {label:?}")]
    DuplicateLabel { label: String },

    #[error("matrix of {entries} entries exceeds the {max}-entry limit")]
    InputTooLarge { entries: usize, max: usize },

    #[error("pruning removed every row and column")]
    AllPruned,

    #[error("matrix has a zero row or column sum; prune it first")]
    NotPruned,

    #[error("fitness iteration broke down: {0}")]
    ZeroFitness(String),

    #[error("ranking did not stabilize within {max} iterations")]
    MaxIterationsExceeded { max: usize },

    #[error("distribution is constant; statistic undefined")]
    DegenerateDistribution,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite score at index {index}")]
    NonFiniteScore { index: usize },

    #[error(
        "iterate {iteration} deviates by {deviation:e} (tolerance {tol:e}) between the two formulations"
    )]
    EquivalenceViolation {
        iteration: usize,
        deviation: f64,
        tol: f64,
    },

    #[error("label sets differ; only in a: {only_in_a:?}, only in b: {only_in_b:?}")]
    LabelMismatch {
        only_in_a: Vec<String>,
        only_in_b: Vec<String>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    CsvFormat { line: u64, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI's JSON error output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::NegativeValue { .. } => "NegativeValue",
            Error::NonFiniteValue { .. } => "NonFiniteValue",
            Error::DuplicateLabel { .. } => "DuplicateLabel",
            Error::InputTooLarge { .. } => "InputTooLarge",
            Error::AllPruned => "AllPruned",
            Error::NotPruned => "NotPruned",
            Error::ZeroFitness(_) => "ZeroFitness",
            Error::MaxIterationsExceeded { .. } => "MaxIterationsExceeded",
            Error::DegenerateDistribution => "DegenerateDistribution",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NonFiniteScore { .. } => "NonFiniteScore",
            Error::EquivalenceViolation { .. } => "EquivalenceViolation",
            Error::LabelMismatch { .. } => "LabelMismatch",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::CsvFormat { .. } => "ParseError",
            Error::Csv(_) => "ParseError",
            Error::Json(_) => "ParseError",
            Error::Io(_) => "IoError",
        }
    }
}
