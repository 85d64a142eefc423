//! Synthetic observers with known latent quality: the ground-truth oracle
//! for the ranking and fusion estimators.
//!
//! Pairwise outcomes follow the Bradley-Terry observer model exactly
//! (Bernoulli with the logistic win probability). Ratings follow
//! `rating = (q_i + bias_k + noise_ik - b_true) / a_true`, rounded and
//! clamped to the 0-20 scale; the noise can be Normal (the stated observer
//! model) or Gumbel (matching the fusion likelihood).

use rand::Rng;
use rand_distr::{Distribution, Gumbel, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{bt_fit, BtFitOptions};
use crate::btmodel::{bt_cdf, BetaScale};
use crate::catalog::{CatalogItem, ItemCatalog};
use crate::comparison::{build_comparison_matrix, ComparisonSet, TiePolicy, Vote, VoteOutcome};
use crate::correlate::srcc;
use crate::elo::{elo_bootstrap, EloConfig};
use crate::fusion::{fuse, FuseOptions};
use crate::rating::{Rating, RatingSet, MAX_SCORE};
use crate::rng::stream;
use crate::score::QualityScores;

/// Latent qualities: explicit values or i.i.d. uniform draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QTrueSpec {
    Values(Vec<f64>),
    Uniform { uniform: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Normal,
    Gumbel,
}

/// Affine map between the latent scale and the rating scale:
/// `latent = a_true * rating + b_true`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkTruth {
    pub a_true: f64,
    pub b_true: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_items: usize,
    pub q_true: QTrueSpec,
    #[serde(default)]
    pub beta: BetaScale,
    pub votes_per_pair: usize,
    pub n_observers: usize,
    #[serde(default)]
    pub observer_bias_sd: f64,
    pub rating_noise_sd: f64,
    #[serde(default)]
    pub rating_noise: NoiseKind,
    pub link: LinkTruth,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub elo: Option<EloConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_items: 20,
            q_true: QTrueSpec::Uniform { uniform: [0.0, 4.0] },
            beta: BetaScale::default(),
            votes_per_pair: 30,
            n_observers: 10,
            observer_bias_sd: 0.0,
            rating_noise_sd: 1.0,
            rating_noise: NoiseKind::Normal,
            link: LinkTruth {
                a_true: 0.2,
                b_true: 0.0,
            },
            rng_seed: 0,
            elo: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error("estimator failed: {0}")]
    Estimator(String),
}

pub const SIM_GROUP: &str = "sim";

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_items < 2 {
            return Err(SimError::BadConfig("n_items must be >= 2".into()));
        }
        if self.votes_per_pair == 0 {
            return Err(SimError::BadConfig("votes_per_pair must be >= 1".into()));
        }
        if self.n_observers == 0 {
            return Err(SimError::BadConfig("n_observers must be >= 1".into()));
        }
        if self.observer_bias_sd < 0.0 || self.rating_noise_sd < 0.0 {
            return Err(SimError::BadConfig("noise sds must be >= 0".into()));
        }
        if !(self.link.a_true > 0.0) {
            return Err(SimError::BadConfig("link.a_true must be > 0".into()));
        }
        if let QTrueSpec::Values(v) = &self.q_true {
            if v.len() != self.n_items {
                return Err(SimError::BadConfig(format!(
                    "q_true has {} values for {} items",
                    v.len(),
                    self.n_items
                )));
            }
        }
        Ok(())
    }

    pub fn item_id(&self, index: usize) -> String {
        format!("item_{index:03}")
    }

    /// The latent quality vector (deterministic per seed).
    pub fn q_true_values(&self) -> Vec<f64> {
        match &self.q_true {
            QTrueSpec::Values(v) => v.clone(),
            QTrueSpec::Uniform { uniform: [lo, hi] } => {
                let mut rng = stream(self.rng_seed, "sim.qtrue");
                (0..self.n_items).map(|_| rng.random_range(*lo..*hi)).collect()
            }
        }
    }
}

/// Independent Bernoulli votes for every unordered pair, with
/// `P(i beats j)` given by the Bradley-Terry CDF. No ties are generated.
pub fn simulate_pairwise(cfg: &SimConfig) -> Result<ComparisonSet, SimError> {
    cfg.validate()?;
    let q = cfg.q_true_values();
    let mut rng = stream(cfg.rng_seed, "sim.pairwise");
    let mut votes = Vec::new();
    let mut observer = 0usize;
    for i in 0..cfg.n_items {
        for j in (i + 1)..cfg.n_items {
            let p_i_wins = bt_cdf(q[i] - q[j], cfg.beta);
            for _ in 0..cfg.votes_per_pair {
                let outcome = if rng.random::<f64>() < p_i_wins {
                    VoteOutcome::AWins
                } else {
                    VoteOutcome::BWins
                };
                votes.push(Vote {
                    group_id: SIM_GROUP.to_string(),
                    item_a: cfg.item_id(i),
                    item_b: cfg.item_id(j),
                    outcome,
                    observer_id: format!("w{observer}"),
                });
                observer += 1;
            }
        }
    }
    Ok(ComparisonSet { votes })
}

/// A full observer-by-item rating table on the 0-20 scale.
pub fn simulate_ratings(cfg: &SimConfig) -> Result<RatingSet, SimError> {
    cfg.validate()?;
    let q = cfg.q_true_values();
    let mut bias_rng = stream(cfg.rng_seed, "sim.bias");
    let mut noise_rng = stream(cfg.rng_seed, "sim.noise");

    let biases: Vec<f64> = if cfg.observer_bias_sd > 0.0 {
        let dist = Normal::new(0.0, cfg.observer_bias_sd)
            .map_err(|e| SimError::BadConfig(e.to_string()))?;
        (0..cfg.n_observers).map(|_| dist.sample(&mut bias_rng)).collect()
    } else {
        vec![0.0; cfg.n_observers]
    };

    enum Noise {
        None,
        Normal(Normal<f64>),
        Gumbel(Gumbel<f64>),
    }
    let noise = if cfg.rating_noise_sd == 0.0 {
        Noise::None
    } else {
        match cfg.rating_noise {
            NoiseKind::Normal => Noise::Normal(
                Normal::new(0.0, cfg.rating_noise_sd)
                    .map_err(|e| SimError::BadConfig(e.to_string()))?,
            ),
            NoiseKind::Gumbel => {
                // Scale chosen so the noise standard deviation matches the
                // nominal sd: sd(Gumbel(0, s)) = s * pi / sqrt(6).
                let s = cfg.rating_noise_sd * 6f64.sqrt() / std::f64::consts::PI;
                Noise::Gumbel(Gumbel::new(0.0, s).map_err(|e| SimError::BadConfig(e.to_string()))?)
            }
        }
    };

    let mut ratings = Vec::with_capacity(cfg.n_observers * cfg.n_items);
    for (k, bias) in biases.iter().enumerate() {
        for (i, qi) in q.iter().enumerate() {
            let xi = match &noise {
                Noise::None => 0.0,
                Noise::Normal(d) => d.sample(&mut noise_rng),
                Noise::Gumbel(d) => d.sample(&mut noise_rng),
            };
            let raw = (qi + bias + xi - cfg.link.b_true) / cfg.link.a_true;
            let score = raw.round().clamp(0.0, MAX_SCORE as f64) as u8;
            ratings.push(Rating {
                observer_id: format!("obs_{k:04}"),
                item_id: cfg.item_id(i),
                score,
            });
        }
    }
    Ok(RatingSet { ratings })
}

/// A synthetic catalog for file-level pipeline fixtures: one source, one
/// codec, one preset, bitrates increasing with latent quality rank.
pub fn simulate_catalog(cfg: &SimConfig) -> Result<ItemCatalog, SimError> {
    cfg.validate()?;
    let q = cfg.q_true_values();
    let mut order: Vec<usize> = (0..cfg.n_items).collect();
    order.sort_by(|&a, &b| q[a].partial_cmp(&q[b]).unwrap());
    let mut rank_of = vec![0usize; cfg.n_items];
    for (rank, &idx) in order.iter().enumerate() {
        rank_of[idx] = rank;
    }
    let items = (0..cfg.n_items)
        .map(|i| CatalogItem {
            item_id: cfg.item_id(i),
            source_id: "src0".into(),
            codec: "simc".into(),
            preset: "p0".into(),
            target_bitrate_kbps: 800.0 + 300.0 * rank_of[i] as f64,
            actual_bitrate_kbps: 800.0 + 300.0 * rank_of[i] as f64,
            duration_s: 10.0,
            is_reference: false,
        })
        .collect();
    Ok(ItemCatalog { items })
}

/// Relative/absolute errors of the recovered link parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParamErrors {
    pub a_rel: f64,
    pub b_abs: f64,
    /// Relative error of `c` against the matched-variance equivalent
    /// `rating_noise_sd * sqrt(6) / (pi * beta)`; absent for noise-free runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_rel: Option<f64>,
}

/// End-to-end estimator check on one simulated dataset.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub srcc_bt: f64,
    pub srcc_elo: f64,
    pub srcc_fused: f64,
    pub param_errors: ParamErrors,
    pub fused_converged: bool,
    pub n_votes: usize,
    pub n_ratings: usize,
}

fn srcc_against_truth(scores: &QualityScores, cfg: &SimConfig, q_true: &[f64]) -> Result<f64, SimError> {
    let est: Vec<f64> = (0..cfg.n_items)
        .map(|i| {
            scores
                .q(&cfg.item_id(i))
                .ok_or_else(|| SimError::Estimator(format!("missing item {i}")))
        })
        .collect::<Result<_, _>>()?;
    srcc(&est, q_true)
        .map(|c| c.r)
        .map_err(|e| SimError::Estimator(e.to_string()))
}

/// Simulates both data kinds, runs the three estimators, and reports rank
/// agreement with the ground truth plus link-parameter recovery errors.
pub fn recovery_experiment(cfg: &SimConfig) -> Result<RecoveryReport, SimError> {
    cfg.validate()?;
    let q_true = cfg.q_true_values();
    let votes = simulate_pairwise(cfg)?;
    let ratings = simulate_ratings(cfg)?;

    let matrix = build_comparison_matrix(&votes, SIM_GROUP, TiePolicy::HalfWin)
        .map_err(|e| SimError::Estimator(e.to_string()))?;
    let bt_opts = BtFitOptions {
        beta: cfg.beta,
        ..Default::default()
    };
    let bt_scores = bt_fit(&matrix, &bt_opts).map_err(|e| SimError::Estimator(e.to_string()))?;

    let elo_cfg = cfg.elo.unwrap_or(EloConfig {
        rng_seed: cfg.rng_seed,
        ..Default::default()
    });
    let elo_scores = elo_bootstrap(&votes, SIM_GROUP, &elo_cfg)
        .map_err(|e| SimError::Estimator(e.to_string()))?;

    let fuse_opts = FuseOptions {
        beta: cfg.beta,
        ..Default::default()
    };
    let fused = fuse(&[matrix], &ratings, &fuse_opts)
        .map_err(|e| SimError::Estimator(e.to_string()))?;

    let c_equiv = cfg.rating_noise_sd * 6f64.sqrt() / (std::f64::consts::PI * cfg.beta.get());
    // The fused scores are mean-zero anchored, so the recoverable offset is
    // b_true shifted by the true quality mean (the (q, b) gauge).
    let mu_true = q_true.iter().sum::<f64>() / q_true.len() as f64;
    let param_errors = ParamErrors {
        a_rel: (fused.params.a - cfg.link.a_true).abs() / cfg.link.a_true,
        b_abs: (fused.params.b - (cfg.link.b_true - mu_true)).abs(),
        c_rel: (c_equiv > 0.0).then(|| (fused.params.c - c_equiv).abs() / c_equiv),
    };

    Ok(RecoveryReport {
        srcc_bt: srcc_against_truth(&bt_scores, cfg, &q_true)?,
        srcc_elo: srcc_against_truth(&elo_scores, cfg, &q_true)?,
        srcc_fused: srcc_against_truth(&fused.scores, cfg, &q_true)?,
        param_errors,
        fused_converged: fused.converged,
        n_votes: votes.len(),
        n_ratings: ratings.len(),
    })
}
