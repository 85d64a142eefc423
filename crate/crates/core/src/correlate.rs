//! Rank and linear correlation plus Fisher-Z aggregation across groups.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::average_ranks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrKind {
    Srcc,
    Plcc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub n: usize,
    pub kind: CorrKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum CorrError {
    #[error("need at least 3 paired samples, got {0}")]
    InsufficientData(usize),
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("constant input has no defined correlation")]
    ConstantInput,
    #[error("fisher aggregation needs every group size >= 4, got {0}")]
    GroupTooSmall(usize),
    #[error("no groups to aggregate")]
    Empty,
}

fn pearson_of(x: &[f64], y: &[f64]) -> Result<f64, CorrError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn check_lengths(x: &[f64], y: &[f64]) -> Result<(), CorrError> {
    if x.len() != y.len() {
        return Err(CorrError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(CorrError::InsufficientData(x.len()));
    }
    Ok(())
}

/// Pearson linear correlation coefficient.
pub fn plcc(x: &[f64], y: &[f64]) -> Result<CorrelationResult, CorrError> {
    check_lengths(x, y)?;
    Ok(CorrelationResult {
        r: pearson_of(x, y)?,
        n: x.len(),
        kind: CorrKind::Plcc,
    })
}

/// Spearman rank correlation: Pearson on average ranks (ties share the mean
/// rank of their block).
pub fn srcc(x: &[f64], y: &[f64]) -> Result<CorrelationResult, CorrError> {
    check_lengths(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    Ok(CorrelationResult {
        r: pearson_of(&rx, &ry)?,
        n: x.len(),
        kind: CorrKind::Srcc,
    })
}

/// Per-group correlations pooled on the Fisher-Z scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherAggregate {
    pub r_agg: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub groups: usize,
    /// Number of groups whose |r| = 1 was clamped to 1 - 1e-12 before the
    /// transform.
    pub clamped: usize,
}

/// Sample-size-weighted mean of `atanh(r)` with weights `n - 3` (the
/// inverse-variance weight of the Fisher transform) and a 95% confidence
/// interval, mapped back through `tanh`.
pub fn fisher_aggregate(results: &[CorrelationResult]) -> Result<FisherAggregate, CorrError> {
    if results.is_empty() {
        return Err(CorrError::Empty);
    }
    let mut sum_w = 0.0;
    let mut sum_wz = 0.0;
    let mut clamped = 0;
    for res in results {
        if res.n < 4 {
            return Err(CorrError::GroupTooSmall(res.n));
        }
        let mut r = res.r;
        if r.abs() >= 1.0 {
            r = (1.0f64 - 1e-12).copysign(r);
            clamped += 1;
        }
        let w = (res.n - 3) as f64;
        sum_w += w;
        sum_wz += w * r.atanh();
    }
    let z_bar = sum_wz / sum_w;
    let half = 1.96 / sum_w.sqrt();
    Ok(FisherAggregate {
        r_agg: z_bar.tanh(),
        ci_lo: (z_bar - half).tanh(),
        ci_hi: (z_bar + half).tanh(),
        groups: results.len(),
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn corr(r: f64, n: usize) -> CorrelationResult {
        CorrelationResult {
            r,
            n,
            kind: CorrKind::Srcc,
        }
    }

    #[test]
    fn srcc_perfect_monotone_and_reversal() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        assert_eq!(srcc(&x, &y).unwrap().r, 1.0);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(srcc(&x, &neg).unwrap().r, -1.0);
    }

    #[test]
    fn srcc_hand_value() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 3.0, 2.0, 4.0];
        assert_abs_diff_eq!(srcc(&x, &y).unwrap().r, 0.8, epsilon = 1e-12);
    }

    #[test]
    fn plcc_affine_and_orthogonal() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        assert_abs_diff_eq!(plcc(&x, &y).unwrap().r, 1.0, epsilon = 1e-12);
        // mean-centered, zero dot product
        let x0 = [-1.0, 0.0, 1.0];
        let y0 = [1.0, -2.0, 1.0];
        assert_abs_diff_eq!(plcc(&x0, &y0).unwrap().r, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn plcc_hand_value() {
        let x = [1.0, 2.0, 3.0];
        let y = [1.0, 2.0, 4.0];
        let expected = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
        assert_abs_diff_eq!(plcc(&x, &y).unwrap().r, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(plcc(&x, &y).unwrap().r, 0.981980506, epsilon = 1e-9);
    }

    #[test]
    fn errors_on_degenerate_input() {
        assert_eq!(
            srcc(&[1.0, 2.0], &[1.0, 2.0]),
            Err(CorrError::InsufficientData(2))
        );
        assert_eq!(
            plcc(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(CorrError::ConstantInput)
        );
        assert_eq!(
            plcc(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(CorrError::LengthMismatch(3, 2))
        );
    }

    #[test]
    fn fisher_identical_r_is_fixed_point() {
        let groups = [corr(0.5, 10), corr(0.5, 40), corr(0.5, 7)];
        let agg = fisher_aggregate(&groups).unwrap();
        assert_abs_diff_eq!(agg.r_agg, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fisher_single_group_passthrough_with_ci() {
        let agg = fisher_aggregate(&[corr(0.5, 30)]).unwrap();
        assert_abs_diff_eq!(agg.r_agg, 0.5, epsilon = 1e-12);
        let half = 1.96 / 27f64.sqrt();
        assert_abs_diff_eq!(agg.ci_lo, (0.5f64.atanh() - half).tanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(agg.ci_hi, (0.5f64.atanh() + half).tanh(), epsilon = 1e-12);
    }

    #[test]
    fn fisher_two_group_hand_case() {
        let agg = fisher_aggregate(&[corr(0.8, 103), corr(0.2, 13)]).unwrap();
        let z = (100.0 * 0.8f64.atanh() + 10.0 * 0.2f64.atanh()) / 110.0;
        assert_abs_diff_eq!(agg.r_agg, z.tanh(), epsilon = 1e-10);
    }

    #[test]
    fn fisher_clamps_perfect_correlation() {
        let agg = fisher_aggregate(&[corr(1.0, 10), corr(0.5, 10)]).unwrap();
        assert_eq!(agg.clamped, 1);
        assert!(agg.r_agg < 1.0);
        assert!(fisher_aggregate(&[corr(0.5, 3)]).is_err());
    }

    proptest! {
        #[test]
        fn srcc_invariant_under_increasing_transform(
            xs in proptest::collection::vec(-100.0f64..100.0, 4..20),
            ys in proptest::collection::vec(-100.0f64..100.0, 4..20),
        ) {
            let n = xs.len().min(ys.len());
            let x = &xs[..n];
            let y = &ys[..n];
            if let Ok(base) = srcc(x, y) {
                let tx: Vec<f64> = x.iter().map(|v| (v * 0.05).exp() * 2.0 + 1.0).collect();
                let t = srcc(&tx, y).unwrap();
                prop_assert!((base.r - t.r).abs() < 1e-9);
            }
        }

        #[test]
        fn correlations_bounded(
            xs in proptest::collection::vec(-1e3f64..1e3, 3..30),
            ys in proptest::collection::vec(-1e3f64..1e3, 3..30),
        ) {
            let n = xs.len().min(ys.len());
            if let Ok(r) = plcc(&xs[..n], &ys[..n]) {
                prop_assert!(r.r.abs() <= 1.0);
            }
            if let Ok(r) = srcc(&xs[..n], &ys[..n]) {
                prop_assert!(r.r.abs() <= 1.0);
            }
        }
    }
}
