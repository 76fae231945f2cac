use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid panel: {0}")]
    Validation(String),

    #[error("conflicting duplicate row for ({region}, {year}) in column {variable}")]
    DuplicateConflict {
        region: String,
        year: i32,
        variable: String,
    },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("degenerate apportionment in year {year}: proxy `{proxy}` sums to zero")]
    DegenerateApportionment { year: i32, proxy: String },

    #[error("variable `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("empty share vector")]
    EmptyShares,

    #[error("invalid shares: {0}")]
    InvalidShares(String),

    #[error("industry `{0}` has no parent sector")]
    UnmappedIndustry(String),

    #[error("total employment is zero on the {0} side")]
    ZeroEmployment(&'static str),

    #[error("design matrix is rank deficient; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("insufficient observations: {available} rows for {required} parameters")]
    InsufficientData { required: usize, available: usize },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("correlation matrix not repairable: {0}")]
    NotRepairable(String),

    #[error("grand mean of the dependent variable is zero")]
    ZeroMean,

    #[error("non-finite input: {0}")]
    NonFinite(String),
}
