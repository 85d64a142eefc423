//! Pairwise votes and the per-group comparison (win-count) matrix.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::csvio::Columns;
use crate::error::ParseError;

pub const VOTE_COLUMNS: [&str; 5] = ["group_id", "item_a", "item_b", "outcome", "observer_id"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteOutcome {
    AWins,
    BWins,
    Tie,
}

impl VoteOutcome {
    fn csv_token(self) -> &'static str {
        match self {
            VoteOutcome::AWins => "a",
            VoteOutcome::BWins => "b",
            VoteOutcome::Tie => "tie",
        }
    }
}

/// One pairwise judgement: which of two items of the same group looked
/// better to one observer, or a tie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub group_id: String,
    pub item_a: String,
    pub item_b: String,
    pub outcome: VoteOutcome,
    pub observer_id: String,
}

/// All collected votes, in file order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComparisonSet {
    pub votes: Vec<Vote>,
}

impl ComparisonSet {
    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    /// Distinct group ids in lexicographic order.
    pub fn group_ids(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.votes.iter().map(|v| v.group_id.as_str()).collect();
        set.into_iter().collect()
    }

    /// Votes of one group, in file order.
    pub fn votes_for(&self, group_id: &str) -> Vec<&Vote> {
        self.votes
            .iter()
            .filter(|v| v.group_id == group_id)
            .collect()
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<(), ParseError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(VOTE_COLUMNS)?;
        for v in &self.votes {
            w.write_record([
                v.group_id.as_str(),
                v.item_a.as_str(),
                v.item_b.as_str(),
                v.outcome.csv_token(),
                v.observer_id.as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses the votes CSV schema (`outcome` is one of `a`, `b`, `tie`).
pub fn parse_votes<R: Read>(reader: R) -> Result<ComparisonSet, ParseError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, &VOTE_COLUMNS)?;

    let mut votes = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record?;
        let item_a = cols.field(&record, 1).to_string();
        let item_b = cols.field(&record, 2).to_string();
        if item_a == item_b {
            return Err(ParseError::SelfComparison { row });
        }
        let token = cols.field(&record, 3);
        let outcome = match token {
            "a" => VoteOutcome::AWins,
            "b" => VoteOutcome::BWins,
            "tie" => VoteOutcome::Tie,
            _ => {
                return Err(ParseError::BadOutcome {
                    row,
                    token: token.to_string(),
                })
            }
        };
        votes.push(Vote {
            group_id: cols.field(&record, 0).to_string(),
            item_a,
            item_b,
            outcome,
            observer_id: cols.field(&record, 4).to_string(),
        });
    }
    Ok(ComparisonSet { votes })
}

/// How tie votes enter the win-count matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// A tie contributes 0.5 wins to each direction, preserving the pair's
    /// total comparison count.
    #[default]
    HalfWin,
    /// Ties are discarded.
    Drop,
}

impl TiePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            TiePolicy::HalfWin => "half_win",
            TiePolicy::Drop => "drop",
        }
    }
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("unknown group '{0}'")]
    UnknownGroup(String),
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
}

/// Win-count matrix of one group. Entry `(i, j)` is the number of times item
/// `i` was chosen over item `j` (half-integers under [`TiePolicy::HalfWin`]).
/// Items are ordered lexicographically by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct ComparisonMatrix {
    item_ids: Vec<String>,
    counts: Vec<f64>,
    tie_policy: TiePolicy,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    item_ids: Vec<String>,
    c: Vec<Vec<f64>>,
    tie_policy: TiePolicy,
}

impl From<ComparisonMatrix> for MatrixRepr {
    fn from(m: ComparisonMatrix) -> Self {
        let n = m.len();
        let c = (0..n)
            .map(|i| m.counts[i * n..(i + 1) * n].to_vec())
            .collect();
        Self {
            item_ids: m.item_ids,
            c,
            tie_policy: m.tie_policy,
        }
    }
}

impl TryFrom<MatrixRepr> for ComparisonMatrix {
    type Error = MatrixError;

    fn try_from(repr: MatrixRepr) -> Result<Self, MatrixError> {
        let n = repr.item_ids.len();
        if repr.c.len() != n || repr.c.iter().any(|row| row.len() != n) {
            return Err(MatrixError::InvalidCounts("matrix is not n x n".into()));
        }
        let counts: Vec<f64> = repr.c.into_iter().flatten().collect();
        ComparisonMatrix::from_counts(repr.item_ids, counts, repr.tie_policy)
    }
}

impl ComparisonMatrix {
    /// Builds a matrix from raw row-major counts, validating the zero
    /// diagonal and non-negativity.
    pub fn from_counts(
        item_ids: Vec<String>,
        counts: Vec<f64>,
        tie_policy: TiePolicy,
    ) -> Result<Self, MatrixError> {
        let n = item_ids.len();
        if counts.len() != n * n {
            return Err(MatrixError::InvalidCounts(format!(
                "expected {} entries, got {}",
                n * n,
                counts.len()
            )));
        }
        for i in 0..n {
            if counts[i * n + i] != 0.0 {
                return Err(MatrixError::InvalidCounts(format!(
                    "nonzero diagonal at item '{}'",
                    item_ids[i]
                )));
            }
        }
        if counts.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(MatrixError::InvalidCounts(
                "negative or non-finite count".into(),
            ));
        }
        Ok(Self {
            item_ids,
            counts,
            tie_policy,
        })
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn tie_policy(&self) -> TiePolicy {
        self.tie_policy
    }

    pub fn index_of(&self, item_id: &str) -> Option<usize> {
        self.item_ids.iter().position(|id| id == item_id)
    }

    /// Times item `i` was chosen over item `j`.
    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.counts[i * self.item_ids.len() + j]
    }

    /// Total comparisons of the pair: `c_ij + c_ji`.
    pub fn n_ij(&self, i: usize, j: usize) -> f64 {
        self.c(i, j) + self.c(j, i)
    }

    /// Sum of `n_ij` over unordered pairs (ties counted once under HalfWin).
    pub fn total_comparisons(&self) -> f64 {
        let n = self.len();
        let mut total = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                total += self.n_ij(i, j);
            }
        }
        total
    }

    /// True when every pair of items is linked by a chain of compared pairs.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && self.n_ij(i, j) > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Counts the votes of `group_id` into a [`ComparisonMatrix`].
///
/// A_WINS adds 1 to `c[a][b]`, B_WINS adds 1 to `c[b][a]`, and a tie adds
/// 0.5 to both directions under [`TiePolicy::HalfWin`] (nothing under
/// [`TiePolicy::Drop`]).
pub fn build_comparison_matrix(
    set: &ComparisonSet,
    group_id: &str,
    tie_policy: TiePolicy,
) -> Result<ComparisonMatrix, MatrixError> {
    let votes = set.votes_for(group_id);
    if votes.is_empty() {
        return Err(MatrixError::UnknownGroup(group_id.to_string()));
    }
    let ids: BTreeSet<&str> = votes
        .iter()
        .flat_map(|v| [v.item_a.as_str(), v.item_b.as_str()])
        .collect();
    let item_ids: Vec<String> = ids.into_iter().map(String::from).collect();
    let index: BTreeMap<&str, usize> = item_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let n = item_ids.len();
    let mut counts = vec![0.0; n * n];
    for vote in votes {
        let a = index[vote.item_a.as_str()];
        let b = index[vote.item_b.as_str()];
        match vote.outcome {
            VoteOutcome::AWins => counts[a * n + b] += 1.0,
            VoteOutcome::BWins => counts[b * n + a] += 1.0,
            VoteOutcome::Tie => {
                if tie_policy == TiePolicy::HalfWin {
                    counts[a * n + b] += 0.5;
                    counts[b * n + a] += 0.5;
                }
            }
        }
    }
    ComparisonMatrix::from_counts(item_ids, counts, tie_policy)
}
