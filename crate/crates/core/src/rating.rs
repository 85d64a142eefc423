//! Opinion ratings on the 21-point discrete scale (0 = worst, 20 = best),
//! stored sparsely: a missing (item, observer) cell means "not rated".

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::csvio::Columns;
use crate::error::ParseError;
use crate::score::{QualityScores, ScoreEntry, ScoreMethod};

pub const RATING_COLUMNS: [&str; 3] = ["observer_id", "item_id", "score"];

/// Highest value of the rating scale.
pub const MAX_SCORE: u8 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub observer_id: String,
    pub item_id: String,
    pub score: u8,
}

/// All ratings in file order. Each (item, observer) pair appears at most
/// once and every score is an integer in `[0, 20]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RatingSet {
    pub ratings: Vec<Rating>,
}

impl RatingSet {
    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// Distinct item ids in lexicographic order.
    pub fn item_ids(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.ratings.iter().map(|r| r.item_id.as_str()).collect();
        set.into_iter().collect()
    }

    /// Distinct observer ids in lexicographic order.
    pub fn observer_ids(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.ratings.iter().map(|r| r.observer_id.as_str()).collect();
        set.into_iter().collect()
    }

    /// Ratings grouped by item; within an item, (observer, score) pairs are
    /// sorted by observer id.
    pub fn by_item(&self) -> BTreeMap<&str, Vec<(&str, u8)>> {
        let mut map: BTreeMap<&str, Vec<(&str, u8)>> = BTreeMap::new();
        for r in &self.ratings {
            map.entry(r.item_id.as_str())
                .or_default()
                .push((r.observer_id.as_str(), r.score));
        }
        for list in map.values_mut() {
            list.sort();
        }
        map
    }

    /// Ratings grouped by observer; within an observer, (item, score) pairs
    /// are sorted by item id.
    pub fn by_observer(&self) -> BTreeMap<&str, Vec<(&str, u8)>> {
        let mut map: BTreeMap<&str, Vec<(&str, u8)>> = BTreeMap::new();
        for r in &self.ratings {
            map.entry(r.observer_id.as_str())
                .or_default()
                .push((r.item_id.as_str(), r.score));
        }
        for list in map.values_mut() {
            list.sort();
        }
        map
    }

    /// Mean opinion score per item.
    pub fn mos(&self) -> QualityScores {
        let mut scores = QualityScores::new(ScoreMethod::Mos);
        scores.scale_note = "mean opinion score on the 0-20 rating scale".into();
        for (item, list) in self.by_item() {
            let mean = list.iter().map(|&(_, s)| s as f64).sum::<f64>() / list.len() as f64;
            scores.insert(item, ScoreEntry::point(mean));
        }
        scores
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<(), ParseError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(RATING_COLUMNS)?;
        for r in &self.ratings {
            w.write_record([
                r.observer_id.as_str(),
                r.item_id.as_str(),
                &r.score.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses the ratings CSV schema, rejecting out-of-range scores and
/// duplicate (item, observer) cells.
pub fn parse_ratings<R: Read>(reader: R) -> Result<RatingSet, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &RATING_COLUMNS)?;

    let mut ratings = Vec::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        let observer_id = cols.field(&record, 0).to_string();
        let item_id = cols.field(&record, 1).to_string();
        let raw = cols.field(&record, 2);
        let score: u8 = raw
            .parse::<u8>()
            .ok()
            .filter(|&s| s <= MAX_SCORE)
            .ok_or_else(|| ParseError::ScoreOutOfRange {
                row,
                value: raw.to_string(),
            })?;
        if !seen.insert((item_id.clone(), observer_id.clone())) {
            return Err(ParseError::DuplicateRating {
                row,
                item_id,
                observer_id,
            });
        }
        ratings.push(Rating {
            observer_id,
            item_id,
            score,
        });
    }
    Ok(RatingSet { ratings })
}
