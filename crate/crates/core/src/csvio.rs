//! Small helpers shared by the CSV parsers.

use crate::error::ParseError;
use csv::StringRecord;

/// Resolves required column names to indices, so files may reorder columns
/// or carry extras.
pub(crate) struct Columns {
    indices: Vec<usize>,
}

impl Columns {
    pub(crate) fn resolve(header: &StringRecord, names: &[&str]) -> Result<Self, ParseError> {
        let mut indices = Vec::with_capacity(names.len());
        for name in names {
            let idx = header
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| ParseError::MissingColumn {
                    column: (*name).to_string(),
                })?;
            indices.push(idx);
        }
        Ok(Self { indices })
    }

    /// Field `slot` (index into the name list given to `resolve`) of `record`.
    pub(crate) fn field<'r>(&self, record: &'r StringRecord, slot: usize) -> &'r str {
        record.get(self.indices[slot]).unwrap_or("").trim()
    }
}

pub(crate) fn parse_f64(
    row: usize,
    column: &str,
    value: &str,
) -> Result<f64, ParseError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ParseError::InvalidField {
            row,
            column: column.to_string(),
            value: value.to_string(),
        })
}

pub(crate) fn parse_bool(row: usize, column: &str, value: &str) -> Result<bool, ParseError> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(ParseError::InvalidField {
            row,
            column: column.to_string(),
            value: value.to_string(),
        }),
    }
}
