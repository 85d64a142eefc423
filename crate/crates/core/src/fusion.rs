//! MAP fusion of pairwise and rating evidence onto one quality scale.
//!
//! Pairwise votes constrain quality differences within a group; category
//! ratings tie all groups together through one global affine link
//! `omega = a * m + b` between the rating scale and the latent scale. The
//! posterior combines the Bradley-Terry binomial likelihood of the win
//! counts, a Gumbel likelihood of the rating cells, and a Gaussian prior on
//! the quality vector; `(q, a, b, c)` are found by quasi-Newton ascent with
//! `a` and `c` optimized in log-space.
//!
//! The rating log-density is `log a - log(c*beta) - z - exp(-z)` with
//! `z = (a*m + b - q_i) / (c*beta)`: the change of variables from the latent
//! scale puts the Jacobian `a` in the numerator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{self, BtFitOptions};
use crate::btmodel::{bt_cdf, ln_binomial, log_bt_cdf, BetaScale};
use crate::comparison::ComparisonMatrix;
use crate::rating::RatingSet;
use crate::score::{QualityScores, ScoreEntry, ScoreMethod};
use crate::stats::cholesky_solve;

/// Link and prior parameters of the fusion objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionParams {
    /// Rating-to-perceptual slope (positive).
    pub a: f64,
    /// Rating-to-perceptual offset.
    pub b: f64,
    /// Rating noise scale multiplier (positive).
    pub c: f64,
    pub beta: BetaScale,
    /// Mean of the quality vector at the reported solution.
    pub mu_q: f64,
    /// Prior spread (positive).
    pub sigma: f64,
}

impl FusionParams {
    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.a > 0.0 && self.c > 0.0 && self.sigma > 0.0)
            || !self.a.is_finite()
            || !self.b.is_finite()
            || !self.c.is_finite()
        {
            return Err(FusionError::BadParams(format!(
                "a={}, b={}, c={}, sigma={}",
                self.a, self.b, self.c, self.sigma
            )));
        }
        Ok(())
    }
}

/// How the Gaussian prior variance scales with the item count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorVariance {
    /// Per-item variance `N * sigma^2` (weakens as the dataset grows).
    #[default]
    ScaledByN,
    /// Per-item variance `sigma^2`.
    Plain,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuseOptions {
    pub beta: BetaScale,
    pub sigma: f64,
    pub variance_mode: PriorVariance,
    /// Include the binomial coefficient (constant in `q`) in the pairwise
    /// log-likelihood; used by oracle tests.
    pub include_binomial: bool,
    /// Fix the link at `(a, b, c)` and optimize the quality vector only.
    /// The mean-zero anchor is skipped in this mode, since shifting `q`
    /// without shifting `b` would change the objective.
    pub freeze_link: Option<(f64, f64, f64)>,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FuseOptions {
    fn default() -> Self {
        Self {
            beta: BetaScale::default(),
            sigma: 2.0,
            variance_mode: PriorVariance::default(),
            include_binomial: false,
            freeze_link: None,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Fusion result: fused scores, link parameters at the optimum, and the
/// objective value reached.
#[derive(Debug, Clone, Serialize)]
pub struct FusedScores {
    pub scores: QualityScores,
    pub params: FusionParams,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("quality vector has dimension {got}, matrix has {want} items")]
    DimensionMismatch { want: usize, got: usize },
    #[error("rated item '{0}' has no quality entry")]
    MissingQuality(String),
    #[error("invalid fusion parameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Rank(#[from] bt::RankError),
}

/// Log of the Bradley-Terry binomial likelihood of one comparison matrix.
///
/// `q` is indexed like the matrix's items. The binomial coefficient term is
/// constant in `q` and excluded unless `include_binomial` is set.
pub fn pairwise_loglik(
    matrix: &ComparisonMatrix,
    q: &[f64],
    beta: BetaScale,
    include_binomial: bool,
) -> Result<f64, FusionError> {
    if q.len() != matrix.len() {
        return Err(FusionError::DimensionMismatch {
            want: matrix.len(),
            got: q.len(),
        });
    }
    let b = beta.get();
    let n = matrix.len();
    let mut ll = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let cij = matrix.c(i, j);
            let cji = matrix.c(j, i);
            let nij = cij + cji;
            if nij == 0.0 {
                continue;
            }
            let d = q[i] - q[j];
            if cij > 0.0 {
                ll += cij * log_bt_cdf(d, b);
            }
            if cji > 0.0 {
                ll += cji * log_bt_cdf(-d, b);
            }
            if include_binomial {
                ll += ln_binomial(nij, cij);
            }
        }
    }
    Ok(ll)
}

/// Gumbel log-likelihood of every rating cell given per-item qualities and
/// link parameters.
pub fn rating_loglik(
    ratings: &RatingSet,
    q: &BTreeMap<String, f64>,
    params: &FusionParams,
) -> Result<f64, FusionError> {
    params.validate()?;
    let cb = params.c * params.beta.get();
    let log_pref = params.a.ln() - cb.ln();
    let mut ll = 0.0;
    for r in &ratings.ratings {
        let qi = q
            .get(&r.item_id)
            .ok_or_else(|| FusionError::MissingQuality(r.item_id.clone()))?;
        let z = (params.a * r.score as f64 + params.b - qi) / cb;
        ll += log_pref - z - (-z).exp();
    }
    Ok(ll)
}

/// Gaussian prior on the quality vector. The prior mean is the current mean
/// of `q`, recomputed on every evaluation.
pub fn log_prior(q: &[f64], sigma: f64, mode: PriorVariance) -> f64 {
    let n = q.len();
    if n == 0 {
        return 0.0;
    }
    let v = match mode {
        PriorVariance::ScaledByN => n as f64 * sigma * sigma,
        PriorVariance::Plain => sigma * sigma,
    };
    let mu = q.iter().sum::<f64>() / n as f64;
    let norm = -0.5 * (2.0 * std::f64::consts::PI * v).ln();
    q.iter().map(|qi| norm - (mu - qi) * (mu - qi) / v).sum()
}

struct IndexedMatrix<'a> {
    matrix: &'a ComparisonMatrix,
    /// local item index -> global item index
    map: Vec<usize>,
}

struct Problem<'a> {
    matrices: Vec<IndexedMatrix<'a>>,
    /// (global item index, rating value)
    cells: Vec<(usize, f64)>,
    n_items: usize,
    beta: f64,
    sigma: f64,
    variance_mode: PriorVariance,
    frozen: Option<(f64, f64, f64)>,
    /// Constant binomial-coefficient contribution, when included.
    binom_const: f64,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        if self.frozen.is_some() {
            self.n_items
        } else {
            self.n_items + 3
        }
    }

    fn link(&self, x: &[f64]) -> (f64, f64, f64) {
        match self.frozen {
            Some(link) => link,
            None => (
                x[self.n_items].exp(),
                x[self.n_items + 1],
                x[self.n_items + 2].exp(),
            ),
        }
    }

    fn prior_variance(&self) -> f64 {
        match self.variance_mode {
            PriorVariance::ScaledByN => self.n_items as f64 * self.sigma * self.sigma,
            PriorVariance::Plain => self.sigma * self.sigma,
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let q = &x[..self.n_items];
        let mut ll = self.binom_const;
        for im in &self.matrices {
            let n = im.matrix.len();
            for i in 0..n {
                for j in (i + 1)..n {
                    let cij = im.matrix.c(i, j);
                    let cji = im.matrix.c(j, i);
                    if cij + cji == 0.0 {
                        continue;
                    }
                    let d = q[im.map[i]] - q[im.map[j]];
                    if cij > 0.0 {
                        ll += cij * log_bt_cdf(d, self.beta);
                    }
                    if cji > 0.0 {
                        ll += cji * log_bt_cdf(-d, self.beta);
                    }
                }
            }
        }
        if !self.cells.is_empty() {
            let (a, b, c) = self.link(x);
            let cb = c * self.beta;
            let log_pref = a.ln() - cb.ln();
            for &(gi, m) in &self.cells {
                let z = (a * m + b - q[gi]) / cb;
                ll += log_pref - z - (-z).exp();
                if !ll.is_finite() {
                    return f64::NEG_INFINITY;
                }
            }
        }
        ll + log_prior(q, self.sigma, self.variance_mode)
    }

    /// Objective value and gradient in the packed variable layout
    /// `[q..., ln a, b, ln c]` (link entries absent when frozen).
    fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let q = &x[..self.n_items];
        let mut grad = vec![0.0f64; self.dim()];
        let mut ll = self.binom_const;
        let scale = BetaScale::new(self.beta).expect("validated beta");

        for im in &self.matrices {
            let n = im.matrix.len();
            for i in 0..n {
                for j in (i + 1)..n {
                    let cij = im.matrix.c(i, j);
                    let cji = im.matrix.c(j, i);
                    if cij + cji == 0.0 {
                        continue;
                    }
                    let gi = im.map[i];
                    let gj = im.map[j];
                    let d = q[gi] - q[gj];
                    if cij > 0.0 {
                        ll += cij * log_bt_cdf(d, self.beta);
                    }
                    if cji > 0.0 {
                        ll += cji * log_bt_cdf(-d, self.beta);
                    }
                    let f = bt_cdf(d, scale);
                    let g = (cij * (1.0 - f) - cji * f) / self.beta;
                    grad[gi] += g;
                    grad[gj] -= g;
                }
            }
        }

        if !self.cells.is_empty() {
            let (a, b, c) = self.link(x);
            let cb = c * self.beta;
            let log_pref = a.ln() - cb.ln();
            for &(gi, m) in &self.cells {
                let z = (a * m + b - q[gi]) / cb;
                let e = (-z).exp();
                ll += log_pref - z - e;
                grad[gi] += (1.0 - e) / cb;
                if self.frozen.is_none() {
                    grad[self.n_items] += 1.0 + (e - 1.0) * a * m / cb;
                    grad[self.n_items + 1] += (e - 1.0) / cb;
                    grad[self.n_items + 2] += -1.0 + z * (1.0 - e);
                }
            }
        }

        let v = self.prior_variance();
        let mu = q.iter().sum::<f64>() / self.n_items.max(1) as f64;
        let norm = -0.5 * (2.0 * std::f64::consts::PI * v).ln();
        for (gi, qi) in q.iter().enumerate() {
            ll += norm - (mu - qi) * (mu - qi) / v;
            grad[gi] += -2.0 * (qi - mu) / v;
        }

        if !ll.is_finite() {
            return (f64::NEG_INFINITY, grad);
        }
        (ll, grad)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// L-BFGS ascent on `problem`, returning `(x, converged, iterations)`.
fn lbfgs_maximize(problem: &Problem, mut x: Vec<f64>, tol: f64, max_iter: usize) -> (Vec<f64>, bool, usize) {
    const MEMORY: usize = 10;
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new(); // (s, y, rho) of -f
    let (mut fval, mut grad) = problem.value_grad(&x);
    let mut iterations = 0;
    let mut stalled = 0usize;

    for iter in 0..max_iter {
        iterations = iter;
        let gnorm = inf_norm(&grad);
        if gnorm < tol {
            return (x, true, iter);
        }

        // Two-loop recursion on the minimization problem (g_min = -grad).
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect(); // gradient of -f
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let alpha = rho * dot(s, &dir);
            for (d, yi) in dir.iter_mut().zip(y) {
                *d -= alpha * yi;
            }
            alphas.push(alpha);
        }
        if let Some((s, y, _)) = history.last() {
            let gamma = dot(s, y) / dot(y, y);
            if gamma.is_finite() && gamma > 0.0 {
                for d in dir.iter_mut() {
                    *d *= gamma;
                }
            }
        }
        for ((s, y, rho), alpha) in history.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &dir);
            for (d, si) in dir.iter_mut().zip(s) {
                *d += (alpha - beta) * si;
            }
        }
        // dir now approximates H^{-1} g_min; the descent step for -f is -dir,
        // which is an ascent step for f.
        let mut step: Vec<f64> = dir.iter().map(|d| -d).collect();
        if dot(&step, &grad) <= 0.0 {
            history.clear();
            step = grad.clone();
        }

        let mut t = if history.is_empty() {
            (1.0 / inf_norm(&step).max(1e-12)).min(1.0)
        } else {
            1.0
        };
        let slope = dot(&step, &grad);
        let slack = 1e-12 * (1.0 + fval.abs());
        let mut accepted = false;
        let mut improved = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, s)| xi + t * s).collect();
            let tv = problem.value(&trial);
            // Strict Armijo when representable; near the optimum the
            // improvement of a good step drops below float resolution, so a
            // full step within a few ulps is also accepted (that regime is
            // bounded by the stall counter below).
            let strict = tv.is_finite() && tv >= fval + 1e-4 * t * slope && tv > fval;
            let slacked = t == 1.0 && tv.is_finite() && tv >= fval - slack;
            if strict || slacked {
                let (new_f, new_g) = problem.value_grad(&trial);
                let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = new_g.iter().zip(&grad).map(|(a, b)| b - a).collect(); // y of -f
                let sy = dot(&s, &y);
                if sy > 1e-12 * inf_norm(&s) * inf_norm(&y) {
                    if history.len() == MEMORY {
                        history.remove(0);
                    }
                    history.push((s, y.clone(), 1.0 / sy));
                }
                x = trial;
                improved = new_f > fval;
                fval = new_f;
                grad = new_g;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if !history.is_empty() {
                // Retry from a fresh steepest-ascent direction.
                history.clear();
                continue;
            }
            break; // flat to machine precision
        }
        if improved {
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 10 {
                break;
            }
        }
    }
    let converged = inf_norm(&grad) < tol;
    (x, converged, iterations)
}

/// Union of compared and rated item ids, sorted lexicographically. This is
/// the coordinate order of the packed variable vector used by the optimizer
/// and by [`objective_at`].
pub fn item_universe(matrices: &[ComparisonMatrix], ratings: &RatingSet) -> Vec<String> {
    let mut ids: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for m in matrices {
        ids.extend(m.item_ids().iter().cloned());
    }
    ids.extend(ratings.item_ids().iter().map(|s| s.to_string()));
    ids.into_iter().collect()
}

fn build_problem<'a>(
    matrices: &'a [ComparisonMatrix],
    ratings: &RatingSet,
    opts: &FuseOptions,
) -> (Problem<'a>, BTreeMap<String, usize>) {
    let universe: BTreeMap<String, usize> = item_universe(matrices, ratings)
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id, i))
        .collect();
    let indexed: Vec<IndexedMatrix> = matrices
        .iter()
        .map(|m| IndexedMatrix {
            matrix: m,
            map: m.item_ids().iter().map(|id| universe[id]).collect(),
        })
        .collect();
    let cells: Vec<(usize, f64)> = ratings
        .ratings
        .iter()
        .map(|r| (universe[&r.item_id], r.score as f64))
        .collect();
    let binom_const = if opts.include_binomial {
        let mut s = 0.0;
        for m in matrices {
            for i in 0..m.len() {
                for j in (i + 1)..m.len() {
                    s += ln_binomial(m.n_ij(i, j), m.c(i, j));
                }
            }
        }
        s
    } else {
        0.0
    };
    let problem = Problem {
        matrices: indexed,
        cells,
        n_items: universe.len(),
        beta: opts.beta.get(),
        sigma: opts.sigma,
        variance_mode: opts.variance_mode,
        frozen: opts.freeze_link,
        binom_const,
    };
    (problem, universe)
}

/// Value and analytic gradient of the full fusion objective at an arbitrary
/// point `x` in the packed layout `[q (item_universe order)..., ln a, b,
/// ln c]` (the three link entries are absent when the link is frozen).
pub fn objective_at(
    matrices: &[ComparisonMatrix],
    ratings: &RatingSet,
    opts: &FuseOptions,
    x: &[f64],
) -> Result<(f64, Vec<f64>), FusionError> {
    let (problem, _) = build_problem(matrices, ratings, opts);
    if x.len() != problem.dim() {
        return Err(FusionError::DimensionMismatch {
            want: problem.dim(),
            got: x.len(),
        });
    }
    Ok(problem.value_grad(x))
}

/// MAP fusion over the union of all matrix and rating items with one global
/// link. Non-convergence is reported through `converged = false`, not an
/// error.
pub fn fuse(
    matrices: &[ComparisonMatrix],
    ratings: &RatingSet,
    opts: &FuseOptions,
) -> Result<FusedScores, FusionError> {
    if !(opts.sigma > 0.0) {
        return Err(FusionError::BadParams(format!("sigma={}", opts.sigma)));
    }
    if let Some((a, _, c)) = opts.freeze_link {
        if !(a > 0.0 && c > 0.0) {
            return Err(FusionError::BadParams(format!("frozen a={a}, c={c}")));
        }
    }

    let (problem, universe) = build_problem(matrices, ratings, opts);
    let n_items = universe.len();
    if n_items == 0 {
        return Ok(FusedScores {
            scores: QualityScores::new(ScoreMethod::Fused),
            params: FusionParams {
                a: 1.0,
                b: 0.0,
                c: 1.0,
                beta: opts.beta,
                mu_q: 0.0,
                sigma: opts.sigma,
            },
            loglik: 0.0,
            converged: true,
            iterations: 0,
        });
    }

    // Warm start: per-group BT scores, then a least-squares line from mean
    // ratings to BT scores for the link and for items that were only rated.
    let mut q0 = vec![0.0f64; n_items];
    let mut has_bt = vec![false; n_items];
    for (m, im) in matrices.iter().zip(&problem.matrices) {
        let bt_opts = BtFitOptions {
            beta: opts.beta,
            tol: 1e-7,
            ..Default::default()
        };
        let q = bt::fit_quality_vector(m, &bt_opts)?;
        for (local, &global) in im.map.iter().enumerate() {
            q0[global] = q[local];
            has_bt[global] = true;
        }
    }

    let mut mean_rating = vec![f64::NAN; n_items];
    for (item, list) in ratings.by_item() {
        let gi = universe[item];
        mean_rating[gi] =
            list.iter().map(|&(_, s)| s as f64).sum::<f64>() / list.len() as f64;
    }

    let (a0, b0) = match opts.freeze_link {
        Some((a, b, _)) => (a, b),
        None => {
            let pts: Vec<(f64, f64)> = (0..n_items)
                .filter(|&i| has_bt[i] && mean_rating[i].is_finite())
                .map(|i| (mean_rating[i], q0[i]))
                .collect();
            fit_line(&pts).unwrap_or((1.0, 0.0))
        }
    };
    for i in 0..n_items {
        if !has_bt[i] {
            q0[i] = if mean_rating[i].is_finite() {
                a0 * mean_rating[i] + b0
            } else {
                0.0
            };
        }
    }

    let mut x0 = q0;
    if opts.freeze_link.is_none() {
        x0.push(a0.ln());
        x0.push(b0);
        x0.push(match opts.freeze_link {
            Some((_, _, c)) => c.ln(),
            None => 0.0,
        });
    }

    let (mut x, converged, iterations) = lbfgs_maximize(&problem, x0, opts.tol, opts.max_iter);

    // Shifting (q, b) together is a gauge freedom of the objective; anchor
    // the quality vector at mean zero when the link is free.
    if opts.freeze_link.is_none() {
        let mu = x[..n_items].iter().sum::<f64>() / n_items as f64;
        for qi in &mut x[..n_items] {
            *qi -= mu;
        }
        x[n_items + 1] -= mu;
    }
    let (a, b, c) = problem.link(&x);
    let loglik = problem.value(&x);
    let mu_q = x[..n_items].iter().sum::<f64>() / n_items as f64;

    let mut scores = QualityScores::new(ScoreMethod::Fused);
    scores.scale_note = format!(
        "map fusion of pairwise and rating evidence; beta={:.6}, sigma={}, prior_variance={}, rating density uses jacobian prefactor a/(c*beta){}",
        opts.beta.get(),
        opts.sigma,
        match opts.variance_mode {
            PriorVariance::ScaledByN => "n_items*sigma^2",
            PriorVariance::Plain => "sigma^2",
        },
        if opts.freeze_link.is_some() {
            "; link frozen, no mean-zero anchor"
        } else {
            "; mean-zero anchored"
        }
    );
    for (id, &gi) in &universe {
        scores.insert(id.clone(), ScoreEntry::point(x[gi]));
    }

    Ok(FusedScores {
        scores,
        params: FusionParams {
            a,
            b,
            c,
            beta: opts.beta,
            mu_q,
            sigma: opts.sigma,
        },
        loglik,
        converged,
        iterations,
    })
}

/// Least-squares slope/intercept of `y` on `x`; slope clamped positive.
fn fit_line(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    if sxx <= 0.0 {
        return None;
    }
    let sxy = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    let slope = (sxy / sxx).max(1e-3);
    Some((slope, my - slope * mx))
}

/// Newton fit of the quality vector against pairwise evidence plus the
/// Gaussian prior alone (no ratings, no link). This is an independent route
/// to the `fuse` optimum in the empty-ratings degenerate mode.
pub fn fit_q_map(
    matrices: &[ComparisonMatrix],
    opts: &FuseOptions,
) -> Result<QualityScores, FusionError> {
    let mut universe: BTreeMap<String, usize> = BTreeMap::new();
    for m in matrices {
        for id in m.item_ids() {
            let next = universe.len();
            universe.entry(id.clone()).or_insert(next);
        }
    }
    let n = universe.len();
    let indexed: Vec<IndexedMatrix> = matrices
        .iter()
        .map(|m| IndexedMatrix {
            matrix: m,
            map: m.item_ids().iter().map(|id| universe[id]).collect(),
        })
        .collect();
    let problem = Problem {
        matrices: indexed,
        cells: Vec::new(),
        n_items: n,
        beta: opts.beta.get(),
        sigma: opts.sigma,
        variance_mode: opts.variance_mode,
        frozen: Some((1.0, 0.0, 1.0)),
        binom_const: 0.0,
    };

    let mut q = vec![0.0f64; n];
    if n > 0 {
        let beta = opts.beta.get();
        let inv_b2 = 1.0 / (beta * beta);
        let v = problem.prior_variance();
        let scale = opts.beta;
        let mut fval = problem.value(&q);
        for _ in 0..opts.max_iter {
            let (_, grad) = problem.value_grad(&q);
            if inf_norm(&grad) < opts.tol {
                break;
            }
            // -Hessian: BT Laplacian + prior curvature + all-ones ridge.
            let mut a = vec![0.0f64; n * n];
            for im in &problem.matrices {
                let nn = im.matrix.len();
                for i in 0..nn {
                    for j in (i + 1)..nn {
                        let nij = im.matrix.n_ij(i, j);
                        if nij == 0.0 {
                            continue;
                        }
                        let gi = im.map[i];
                        let gj = im.map[j];
                        let f = bt_cdf(q[gi] - q[gj], scale);
                        let w = nij * f * (1.0 - f) * inv_b2;
                        a[gi * n + gj] -= w;
                        a[gj * n + gi] -= w;
                        a[gi * n + gi] += w;
                        a[gj * n + gj] += w;
                    }
                }
            }
            let pc = 2.0 / v;
            for i in 0..n {
                for j in 0..n {
                    a[i * n + j] += pc * (if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64);
                }
            }
            let mut diag_mean = 0.0;
            for i in 0..n {
                diag_mean += a[i * n + i];
            }
            diag_mean /= n as f64;
            let alpha = (diag_mean + 1e-12) / n as f64;
            for x in a.iter_mut() {
                *x += alpha;
            }

            let step = match cholesky_solve(&mut a, &grad) {
                Some(s) => s,
                None => grad.iter().map(|g| g * beta * beta).collect(),
            };
            let mut t = 1.0;
            let mut advanced = false;
            for _ in 0..60 {
                let trial: Vec<f64> = q.iter().zip(&step).map(|(qi, s)| qi + t * s).collect();
                let tv = problem.value(&trial);
                if tv > fval {
                    q = trial;
                    fval = tv;
                    advanced = true;
                    break;
                }
                t *= 0.5;
            }
            if !advanced {
                break;
            }
        }
        let mu = q.iter().sum::<f64>() / n as f64;
        for qi in &mut q {
            *qi -= mu;
        }
    }

    let mut scores = QualityScores::new(ScoreMethod::Bt);
    scores.scale_note = "bradley-terry with gaussian prior, mean-zero anchored".into();
    for (id, &gi) in &universe {
        scores.insert(id.clone(), ScoreEntry::point(q[gi]));
    }
    Ok(scores)
}
