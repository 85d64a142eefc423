//! Toolkit for turning raw subjective-study data (pairwise votes, category
//! ratings) into a unified quality scale and for benchmarking objective
//! quality metrics against that scale.
//!
//! The pipeline stages map onto the module tree:
//!
//! * [`catalog`], [`comparison`], [`rating`], [`score`] — data model and CSV
//!   ingestion for item catalogs, pairwise votes and opinion ratings.
//! * [`bt`] / [`elo`] — Bradley-Terry maximum likelihood and bootstrapped
//!   online Elo ranking of a comparison matrix.
//! * [`fusion`] — MAP estimation of latent quality from joint pairwise and
//!   rating evidence on a single scale.
//! * [`rdae`] — Rate-Distortion Alignment Error (under-prediction cost and
//!   over-compression penalty) of a metric against subjective RD curves.
//! * [`correlate`] / [`consistency`] / [`leaderboard`] — SRCC/PLCC,
//!   Fisher-Z aggregation, DMOS, observer-consistency checks and leaderboard
//!   assembly.
//! * [`simulate`] — synthetic observers with known ground truth, the
//!   verification oracle for the estimators.
//! * [`y4m`] / [`siti`] / [`kmeans`] — content-complexity features and
//!   clustering for source-selection analysis.
//!
//! All randomness is drawn from named, seeded streams ([`rng`]); every
//! operation is deterministic for a fixed seed and input order.

pub mod bt;
pub mod catalog;
pub mod comparison;
pub mod consistency;
pub mod correlate;
pub mod elo;
pub mod error;
pub mod fusion;
pub mod kmeans;
pub mod leaderboard;
pub mod rating;
pub mod rdae;
pub mod rng;
pub mod score;
pub mod simulate;
pub mod siti;
pub mod y4m;

mod btmodel;
mod csvio;
mod stats;

pub use bt::{bt_fit, BtFitOptions};
pub use btmodel::{bt_cdf, BetaScale};
pub use catalog::{parse_items, CatalogItem, ItemCatalog};
pub use comparison::{
    build_comparison_matrix, parse_votes, ComparisonMatrix, ComparisonSet, TiePolicy, Vote,
    VoteOutcome,
};
pub use correlate::{fisher_aggregate, plcc, srcc, CorrelationResult, FisherAggregate};
pub use elo::{elo_bootstrap, elo_run, EloConfig};
pub use error::ParseError;
pub use fusion::{fuse, FuseOptions, FusedScores, FusionParams};
pub use rating::{parse_ratings, Rating, RatingSet};
pub use rdae::{align_scales, build_rd_groups, rdae, upc_ocp, RdGroup, RdaeReport, RdaeUnits};
pub use score::{QualityScores, ScoreEntry, ScoreMethod, ScoresDoc};
pub use simulate::{recovery_experiment, simulate_pairwise, simulate_ratings, SimConfig};

/// Version stamp written into every machine-readable report.
pub const SCHEMA_VERSION: u32 = 1;
