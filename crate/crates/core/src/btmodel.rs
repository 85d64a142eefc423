//! Bradley-Terry observer model primitives shared by the ranker and the
//! fusion objective.

use serde::{Deserialize, Serialize};

/// Logistic scale of the Bradley-Terry observer model. The default
/// `1 / ln 3` makes a 1-unit quality gap correspond to a 75% preference
/// rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaScale(f64);

impl BetaScale {
    pub fn new(beta: f64) -> Option<Self> {
        (beta.is_finite() && beta > 0.0).then_some(Self(beta))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for BetaScale {
    fn default() -> Self {
        Self(1.0 / 3f64.ln())
    }
}

/// CDF of the Bradley-Terry observer model:
/// `F(dq) = 1 / (1 + exp(-dq / beta))`.
pub fn bt_cdf(delta_q: f64, beta: BetaScale) -> f64 {
    1.0 / (1.0 + (-delta_q / beta.get()).exp())
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln F(dq)` evaluated stably.
pub(crate) fn log_bt_cdf(delta_q: f64, beta: f64) -> f64 {
    -softplus(-delta_q / beta)
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
/// Absolute error is below 1e-13 for the positive arguments used here.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    let z = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln C(n, c)` generalized to real arguments via the gamma function, so
/// half-integer counts from the half-win tie policy are handled.
pub(crate) fn ln_binomial(n: f64, c: f64) -> f64 {
    if n <= 0.0 || c <= 0.0 || c >= n {
        return 0.0;
    }
    ln_gamma(n + 1.0) - ln_gamma(c + 1.0) - ln_gamma(n - c + 1.0)
}
