//! Item catalog: every encoded clip with its grouping key (source, codec,
//! preset) and bitrate/duration metadata.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::csvio::{parse_bool, parse_f64, Columns};
use crate::error::ParseError;

pub const ITEM_COLUMNS: [&str; 8] = [
    "item_id",
    "source_id",
    "codec",
    "preset",
    "target_bitrate_kbps",
    "actual_bitrate_kbps",
    "duration_s",
    "is_reference",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub item_id: String,
    pub source_id: String,
    pub codec: String,
    pub preset: String,
    pub target_bitrate_kbps: f64,
    pub actual_bitrate_kbps: f64,
    pub duration_s: f64,
    pub is_reference: bool,
}

/// Validated catalog in file order. `item_id` is unique, each source has at
/// most one reference item, and non-reference items carry positive bitrates.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ItemCatalog {
    pub items: Vec<CatalogItem>,
}

impl ItemCatalog {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Lookup table item_id -> item.
    pub fn index(&self) -> BTreeMap<&str, &CatalogItem> {
        self.items
            .iter()
            .map(|it| (it.item_id.as_str(), it))
            .collect()
    }

    /// The reference item of `source_id`, if the catalog has one.
    pub fn reference_of(&self, source_id: &str) -> Option<&CatalogItem> {
        self.items
            .iter()
            .find(|it| it.is_reference && it.source_id == source_id)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<(), ParseError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(ITEM_COLUMNS)?;
        for it in &self.items {
            w.write_record([
                it.item_id.as_str(),
                it.source_id.as_str(),
                it.codec.as_str(),
                it.preset.as_str(),
                &it.target_bitrate_kbps.to_string(),
                &it.actual_bitrate_kbps.to_string(),
                &it.duration_s.to_string(),
                if it.is_reference { "true" } else { "false" },
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses the items CSV schema. Row order is preserved; every invariant
/// violation names the offending 1-based data row.
pub fn parse_items<R: Read>(reader: R) -> Result<ItemCatalog, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &ITEM_COLUMNS)?;

    let mut items: Vec<CatalogItem> = Vec::new();
    let mut seen_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut ref_sources: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        let item_id = cols.field(&record, 0).to_string();
        if item_id.is_empty() {
            return Err(ParseError::InvalidField {
                row,
                column: "item_id".into(),
                value: String::new(),
            });
        }
        if seen_ids.insert(item_id.clone(), row).is_some() {
            return Err(ParseError::DuplicateItemId { row, item_id });
        }
        let source_id = cols.field(&record, 1).to_string();
        let codec = cols.field(&record, 2).to_string();
        let preset = cols.field(&record, 3).to_string();
        let target = parse_f64(row, "target_bitrate_kbps", cols.field(&record, 4))?;
        let actual = parse_f64(row, "actual_bitrate_kbps", cols.field(&record, 5))?;
        let duration = parse_f64(row, "duration_s", cols.field(&record, 6))?;
        let is_reference = parse_bool(row, "is_reference", cols.field(&record, 7))?;

        if !is_reference && (actual <= 0.0 || target <= 0.0) {
            return Err(ParseError::NonPositiveBitrate { row });
        }
        if actual < 0.0 || target < 0.0 {
            return Err(ParseError::NonPositiveBitrate { row });
        }
        if duration <= 0.0 {
            return Err(ParseError::InvalidField {
                row,
                column: "duration_s".into(),
                value: duration.to_string(),
            });
        }
        if is_reference {
            if ref_sources.insert(source_id.clone(), row).is_some() {
                return Err(ParseError::MultipleReferences { row, source_id });
            }
        }
        items.push(CatalogItem {
            item_id,
            source_id,
            codec,
            preset,
            target_bitrate_kbps: target,
            actual_bitrate_kbps: actual,
            duration_s: duration,
            is_reference,
        });
    }
    Ok(ItemCatalog { items })
}
