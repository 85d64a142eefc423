//! Errors shared by the CSV ingestion layer.

use thiserror::Error;

/// Failure while parsing one of the three CSV schemas (items, votes,
/// ratings). Variants that refer to a row carry its 1-based data-row number
/// (the header is row 0).
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("missing column '{column}' in header")]
    MissingColumn { column: String },
    #[error("row {row}: duplicate item_id '{item_id}'")]
    DuplicateItemId { row: usize, item_id: String },
    #[error("row {row}: source '{source_id}' has more than one reference item")]
    MultipleReferences { row: usize, source_id: String },
    #[error("row {row}: non-positive bitrate for non-reference item")]
    NonPositiveBitrate { row: usize },
    #[error("row {row}: column '{column}' has invalid value '{value}'")]
    InvalidField {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: item compared against itself")]
    SelfComparison { row: usize },
    #[error("row {row}: unknown outcome token '{token}' (expected a, b or tie)")]
    BadOutcome { row: usize, token: String },
    #[error("row {row}: score {value} is not an integer in [0, 20]")]
    ScoreOutOfRange { row: usize, value: String },
    #[error("row {row}: duplicate rating for (item '{item_id}', observer '{observer_id}')")]
    DuplicateRating {
        row: usize,
        item_id: String,
        observer_id: String,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
