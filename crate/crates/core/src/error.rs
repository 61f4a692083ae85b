//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by loaders, validators, and analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("duplicate item_id {0:?}")]
    DuplicateItem(String),

    #[error("unknown gold_label {value:?} (expected entailment, contradiction, or neutral)")]
    UnknownLabel { value: String },

    #[error("response references unknown item_id {item_id:?} (respondent {respondent_id:?})")]
    UnknownItem {
        respondent_id: String,
        item_id: String,
    },

    #[error("respondent {respondent_id:?} has conflicting {field} values: {first:?} vs {second:?}")]
    ConflictingField {
        respondent_id: String,
        field: &'static str,
        first: String,
        second: String,
    },

    #[error("duplicate response for respondent {respondent_id:?} on item {item_id:?}")]
    DuplicateResponse {
        respondent_id: String,
        item_id: String,
    },

    #[error("selector {0:?} matches no respondents")]
    EmptySlice(String),

    #[error("category {0:?} has no analyzable items")]
    EmptyCategory(String),

    #[error("missing response: respondent {respondent_id:?} did not answer item {item_id:?}")]
    MissingData {
        respondent_id: String,
        item_id: String,
    },

    #[error("unknown item {0:?}")]
    ItemNotFound(String),

    #[error("respondent {0:?} answered none of the fitted items")]
    NoResponses(String),

    #[error("vectors have mismatched lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("item sets do not match: {0}")]
    ItemSetMismatch(String),

    #[error("exact permutation test limited to n <= {max}, got n = {n}")]
    PermutationTooLarge { n: usize, max: usize },

    #[error("need at least {required} {what}, got {actual}")]
    TooFew {
        what: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("cluster count k = {k} out of range [{min}, {max}]")]
    ClusterCountOutOfRange { k: usize, min: usize, max: usize },

    #[error("silhouette requires at least 2 nonempty clusters")]
    SingleCluster,

    #[error("all item pairs have undefined correlation")]
    AllPairsUndefined,

    #[error("degenerate response matrix: {0}")]
    DegenerateMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
