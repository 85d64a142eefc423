//! Latent quality estimates per item, with provenance and optional
//! confidence intervals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// How a set of quality scores was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMethod {
    Bt,
    Elo,
    Fused,
    Mos,
    Dmos,
}

impl ScoreMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreMethod::Bt => "bt",
            ScoreMethod::Elo => "elo",
            ScoreMethod::Fused => "fused",
            ScoreMethod::Mos => "mos",
            ScoreMethod::Dmos => "dmos",
        }
    }
}

/// One item's latent quality, optionally with an empirical confidence
/// interval (`ci_lo <= q <= ci_hi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_hi: Option<f64>,
}

impl ScoreEntry {
    pub fn point(q: f64) -> Self {
        Self {
            q,
            ci_lo: None,
            ci_hi: None,
        }
    }

    pub fn with_ci(q: f64, ci_lo: f64, ci_hi: f64) -> Self {
        debug_assert!(ci_lo <= q && q <= ci_hi);
        Self {
            q,
            ci_lo: Some(ci_lo),
            ci_hi: Some(ci_hi),
        }
    }
}

/// Quality estimates keyed by item id. Items iterate in lexicographic order,
/// which keeps every serialization and downstream computation reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub method: ScoreMethod,
    #[serde(default)]
    pub scale_note: String,
    pub entries: BTreeMap<String, ScoreEntry>,
}

impl QualityScores {
    pub fn new(method: ScoreMethod) -> Self {
        Self {
            method,
            scale_note: String::new(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, item_id: impl Into<String>, entry: ScoreEntry) {
        self.entries.insert(item_id.into(), entry);
    }

    pub fn get(&self, item_id: &str) -> Option<&ScoreEntry> {
        self.entries.get(item_id)
    }

    pub fn q(&self, item_id: &str) -> Option<f64> {
        self.entries.get(item_id).map(|e| e.q)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Item ids in lexicographic order.
    pub fn item_ids(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    pub fn mean_q(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.values().map(|e| e.q).sum::<f64>() / self.entries.len() as f64
    }

    /// Checks the CI ordering invariant on every entry.
    pub fn validate(&self) -> Result<(), String> {
        for (id, e) in &self.entries {
            if let (Some(lo), Some(hi)) = (e.ci_lo, e.ci_hi) {
                if !(lo <= e.q && e.q <= hi) {
                    return Err(format!(
                        "item '{id}': ci ordering violated (lo={lo}, q={}, hi={hi})",
                        e.q
                    ));
                }
            }
            if !e.q.is_finite() {
                return Err(format!("item '{id}': non-finite score"));
            }
        }
        Ok(())
    }
}

/// One row of the on-disk scores document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub item_id: String,
    pub q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci_hi: Option<f64>,
}

/// File format for score sets: method, free-form scale note, an echo of the
/// producing configuration, and entries as a list sorted by item id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresDoc {
    pub schema_version: u32,
    pub method: ScoreMethod,
    #[serde(default)]
    pub scale_note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub entries: Vec<ScoreRow>,
}

impl ScoresDoc {
    pub fn from_scores(scores: &QualityScores, config: Option<serde_json::Value>) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            method: scores.method,
            scale_note: scores.scale_note.clone(),
            config,
            entries: scores
                .entries
                .iter()
                .map(|(id, e)| ScoreRow {
                    item_id: id.clone(),
                    q: e.q,
                    ci_lo: e.ci_lo,
                    ci_hi: e.ci_hi,
                })
                .collect(),
        }
    }

    pub fn into_scores(self) -> QualityScores {
        let mut scores = QualityScores::new(self.method);
        scores.scale_note = self.scale_note;
        for row in self.entries {
            scores.insert(
                row.item_id,
                ScoreEntry {
                    q: row.q,
                    ci_lo: row.ci_lo,
                    ci_hi: row.ci_hi,
                },
            );
        }
        scores
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doc_round_trip_preserves_entries() {
        let mut s = QualityScores::new(ScoreMethod::Bt);
        s.scale_note = "mean-zero per group".into();
        s.insert("v2", ScoreEntry::point(-0.5));
        s.insert("v1", ScoreEntry::with_ci(0.5, 0.1, 0.9));
        let doc = ScoresDoc::from_scores(&s, None);
        assert_eq!(doc.entries[0].item_id, "v1");
        let json = serde_json::to_string(&doc).unwrap();
        let back: ScoresDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_scores(), s);
    }

    #[test]
    fn validate_rejects_bad_ci() {
        let mut s = QualityScores::new(ScoreMethod::Elo);
        s.insert(
            "v1",
            ScoreEntry {
                q: 2.0,
                ci_lo: Some(3.0),
                ci_hi: Some(4.0),
            },
        );
        assert!(s.validate().is_err());
    }
}
