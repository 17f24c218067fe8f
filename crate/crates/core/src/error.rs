use thiserror::Error;

/// Every failure the pipeline can surface, grouped by the CLI exit code it maps to.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // configuration
    #[error("config error: {0}")]
    Config(String),

    // data / contract violations
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("column `{column}`: value `{value}` is not a level of the codebook")]
    CodebookViolation { column: String, value: String },
    #[error("column `{0}` has a kind that does not support this operation")]
    WrongKind(String),
    #[error("column length mismatch: `{column}` has {got} rows, expected {expected}")]
    LengthMismatch { column: String, got: usize, expected: usize },
    #[error("outcome `{0}` is absent, non-binary or contains missing cells")]
    InvalidOutcome(String),
    #[error("stratum {0} has fewer than 2 members")]
    DegenerateStratum(u32),
    #[error("degenerate range: hi == lo ({0})")]
    DegenerateRange(f64),
    #[error("zero variance")]
    DegenerateVariance,
    #[error("all items missing")]
    AllMissing,
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("no handgrip norms cell for sex={sex}, age={age}")]
    NormsGap { sex: String, age: f64 },
    #[error("participant cannot be classified by either path")]
    Unclassifiable,
    #[error("column {0} has no observed values")]
    UnimputableColumn(usize),
    #[error("row {0} has no observed values")]
    UnimputableRow(usize),
    #[error("could not draw a mask leaving every row and column observed")]
    MaskingFailure,
    #[error("target has a single class")]
    DegenerateTarget,
    #[error("empty node")]
    EmptyNode,
    #[error("feature count mismatch: model has {expected}, input has {got}")]
    FeatureMismatch { expected: usize, got: usize },
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("contingency table is degenerate")]
    DegenerateTable,
    #[error("minority class has {minority} rows, fewer than {folds} folds")]
    StratificationImpossible { minority: usize, folds: usize },
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),

    // numeric failures
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("separation detected in columns {0:?}")]
    SeparationDetected(Vec<String>),
    #[error("model did not converge")]
    NotConverged,

    #[error("stage `{stage}` failed ({rows} rows): {source}")]
    Stage {
        stage: String,
        rows: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code: 2 config, 3 data, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::SingularDesign | Error::SeparationDetected(_) | Error::NotConverged => 4,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    pub fn in_stage(self, stage: &str, rows: usize) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage: stage.to_string(), rows, source: Box::new(e) },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
