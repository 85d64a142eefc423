//! Bradley-Terry maximum-likelihood fit of a comparison matrix.
//!
//! The binomial log-likelihood is concave in the quality vector, so a damped
//! Newton iteration converges quickly. Adding a constant to all qualities
//! leaves the likelihood unchanged; the fit is anchored to mean zero per
//! group after convergence. A small L2 penalty (`reg`) keeps items with
//! all-wins or all-losses records finite.

use serde::Serialize;
use thiserror::Error;

use crate::btmodel::{bt_cdf, log_bt_cdf, BetaScale};
use crate::comparison::ComparisonMatrix;
use crate::score::{QualityScores, ScoreEntry, ScoreMethod};
use crate::stats::cholesky_solve;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BtFitOptions {
    pub beta: BetaScale,
    /// L2 coefficient on the quality vector.
    pub reg: f64,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BtFitOptions {
    fn default() -> Self {
        Self {
            beta: BetaScale::default(),
            reg: 1e-4,
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum RankError {
    #[error("did not converge within {iterations} iterations (gradient max-norm {grad_norm:.3e})")]
    MaxIter { iterations: usize, grad_norm: f64 },
}

/// Maximizes the Bradley-Terry binomial log-likelihood plus
/// `-reg * sum(q_i^2)` and returns mean-zero anchored scores.
///
/// When `reg == 0` and the comparison graph is disconnected, a warning is
/// appended to the returned `scale_note` (relative scores across components
/// are then arbitrary).
pub fn bt_fit(matrix: &ComparisonMatrix, opts: &BtFitOptions) -> Result<QualityScores, RankError> {
    let q = fit_quality_vector(matrix, opts)?;
    let mut scores = QualityScores::new(ScoreMethod::Bt);
    scores.scale_note = format!(
        "bradley-terry MLE, mean-zero anchored; beta={:.6}, reg={:e}, ties={}",
        opts.beta.get(),
        opts.reg,
        matrix.tie_policy().as_str()
    );
    if opts.reg == 0.0 && !matrix.is_connected() {
        scores
            .scale_note
            .push_str(" [warning: DISCONNECTED_GRAPH - scores across components are not comparable]");
    }
    for (id, &qi) in matrix.item_ids().iter().zip(q.iter()) {
        scores.insert(id.clone(), ScoreEntry::point(qi));
    }
    Ok(scores)
}

/// The raw mean-zero quality vector in matrix item order.
pub(crate) fn fit_quality_vector(
    matrix: &ComparisonMatrix,
    opts: &BtFitOptions,
) -> Result<Vec<f64>, RankError> {
    let n = matrix.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let beta = opts.beta.get();
    let mut q = vec![0.0f64; n];
    let mut value = loglik(matrix, &q, beta, opts.reg);

    for _iter in 0..opts.max_iter {
        let grad = gradient(matrix, &q, beta, opts.reg);
        let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gnorm < opts.tol {
            let mean = q.iter().sum::<f64>() / n as f64;
            for qi in &mut q {
                *qi -= mean;
            }
            return Ok(q);
        }

        let step = newton_step(matrix, &q, &grad, beta, opts.reg);
        // Backtracking with a slack of a few ulps: near the optimum the
        // improvement of a full Newton step falls below float resolution
        // while the step itself still contracts the gradient quadratically.
        let slack = 1e-12 * (1.0 + value.abs());
        let mut t = 1.0;
        let mut advanced = false;
        for _ in 0..60 {
            let trial: Vec<f64> = q.iter().zip(&step).map(|(qi, d)| qi + t * d).collect();
            let trial_value = loglik(matrix, &trial, beta, opts.reg);
            if trial_value.is_finite() && trial_value >= value - slack {
                q = trial;
                value = trial_value;
                advanced = true;
                break;
            }
            t *= 0.5;
        }
        if !advanced {
            break;
        }
    }

    let grad = gradient(matrix, &q, beta, opts.reg);
    let gnorm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if gnorm < opts.tol.max(1e-8) {
        let mean = q.iter().sum::<f64>() / n as f64;
        for qi in &mut q {
            *qi -= mean;
        }
        Ok(q)
    } else {
        Err(RankError::MaxIter {
            iterations: opts.max_iter,
            grad_norm: gnorm,
        })
    }
}

pub(crate) fn loglik(matrix: &ComparisonMatrix, q: &[f64], beta: f64, reg: f64) -> f64 {
    let n = matrix.len();
    let mut ll = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let cij = matrix.c(i, j);
            let cji = matrix.c(j, i);
            if cij + cji == 0.0 {
                continue;
            }
            let d = q[i] - q[j];
            if cij > 0.0 {
                ll += cij * log_bt_cdf(d, beta);
            }
            if cji > 0.0 {
                ll += cji * log_bt_cdf(-d, beta);
            }
        }
    }
    ll - reg * q.iter().map(|qi| qi * qi).sum::<f64>()
}

fn gradient(matrix: &ComparisonMatrix, q: &[f64], beta: f64, reg: f64) -> Vec<f64> {
    let n = matrix.len();
    let scale = BetaScale::new(beta).expect("validated beta");
    let mut grad = vec![0.0f64; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let cij = matrix.c(i, j);
            let cji = matrix.c(j, i);
            if cij + cji == 0.0 {
                continue;
            }
            let f = bt_cdf(q[i] - q[j], scale);
            let g = (cij * (1.0 - f) - cji * f) / beta;
            grad[i] += g;
            grad[j] -= g;
        }
    }
    for (gi, qi) in grad.iter_mut().zip(q) {
        *gi -= 2.0 * reg * qi;
    }
    grad
}

/// Solves `(-Hessian) step = grad`. The Hessian of the likelihood is a
/// weighted graph Laplacian scaled by `-1/beta^2`; a rank-one term in the
/// all-ones direction removes the translation null space when `reg == 0`.
fn newton_step(
    matrix: &ComparisonMatrix,
    q: &[f64],
    grad: &[f64],
    beta: f64,
    reg: f64,
) -> Vec<f64> {
    let n = matrix.len();
    let scale = BetaScale::new(beta).expect("validated beta");
    let inv_b2 = 1.0 / (beta * beta);
    let mut a = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let nij = matrix.n_ij(i, j);
            if nij == 0.0 {
                continue;
            }
            let f = bt_cdf(q[i] - q[j], scale);
            let w = nij * f * (1.0 - f) * inv_b2;
            a[i * n + j] -= w;
            a[j * n + i] -= w;
            a[i * n + i] += w;
            a[j * n + j] += w;
        }
    }
    let mut diag_mean = 0.0;
    for i in 0..n {
        a[i * n + i] += 2.0 * reg;
        diag_mean += a[i * n + i];
    }
    diag_mean /= n as f64;
    if reg == 0.0 {
        let alpha = (diag_mean + 1e-12) / n as f64;
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] += alpha;
            }
        }
    }

    let mut jitter = 0.0;
    loop {
        let mut m = a.clone();
        if jitter > 0.0 {
            for i in 0..n {
                m[i * n + i] += jitter;
            }
        }
        if let Some(step) = cholesky_solve(&mut m, grad) {
            return step;
        }
        jitter = if jitter == 0.0 {
            diag_mean.max(1e-12) * 1e-10
        } else {
            jitter * 100.0
        };
        if jitter > diag_mean.max(1.0) * 1e3 {
            // Give up on curvature information entirely.
            return grad.iter().map(|g| g * beta * beta).collect();
        }
    }
}
