//! Independent oracles for the Bradley-Terry fit: a closed form for two
//! items and a mean-zero-constrained grid maximizer of the binomial
//! log-likelihood for four.

use rand::Rng;
use vqbench_core::comparison::{ComparisonMatrix, TiePolicy};
use vqbench_core::rng::stream;
use vqbench_core::{bt_fit, BetaScale, BtFitOptions};

fn matrix_of(ids: &[&str], counts: &[f64]) -> ComparisonMatrix {
    ComparisonMatrix::from_counts(
        ids.iter().map(|s| s.to_string()).collect(),
        counts.to_vec(),
        TiePolicy::HalfWin,
    )
    .unwrap()
}

/// The raw objective the oracle maximizes: the binomial log-likelihood of
/// the win counts (binomial coefficients omitted; they are constant in q).
fn loglik_direct(counts: &[f64], n: usize, q: &[f64], beta: f64) -> f64 {
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j || counts[i * n + j] == 0.0 {
                continue;
            }
            let p = 1.0 / (1.0 + (-(q[i] - q[j]) / beta).exp());
            ll += counts[i * n + j] * p.ln();
        }
    }
    ll
}

/// Mean-zero-constrained grid maximizer over [-5, 5]^3 for four items
/// (q4 = -(q1+q2+q3)). Multi-resolution refinement down to the 0.01 grid;
/// each level re-scans a window of twice the previous step, which is sound
/// because the log-likelihood is concave.
fn grid_argmax_4(counts: &[f64], beta: f64) -> [f64; 4] {
    let mut center = [0.0f64; 3];
    let mut span = 5.0;
    let mut best = [0.0f64; 3];
    for &step in &[0.2f64, 0.04, 0.01] {
        let half_points = (span / step).round() as i64;
        let mut best_ll = f64::NEG_INFINITY;
        let mut q = [0.0f64; 4];
        for i in -half_points..=half_points {
            let q1 = (center[0] + i as f64 * step).clamp(-5.0, 5.0);
            for j in -half_points..=half_points {
                let q2 = (center[1] + j as f64 * step).clamp(-5.0, 5.0);
                for k in -half_points..=half_points {
                    let q3 = (center[2] + k as f64 * step).clamp(-5.0, 5.0);
                    q[0] = q1;
                    q[1] = q2;
                    q[2] = q3;
                    q[3] = -(q1 + q2 + q3);
                    let ll = loglik_direct(counts, 4, &q, beta);
                    if ll > best_ll {
                        best_ll = ll;
                        best = [q1, q2, q3];
                    }
                }
            }
        }
        center = best;
        span = 2.0 * step;
    }
    [best[0], best[1], best[2], -(best[0] + best[1] + best[2])]
}

#[test]
fn two_item_closed_form_twenty_random_pairs() {
    let beta = BetaScale::default();
    let mut rng = stream(11, "bt.oracle.pairs");
    let opts = BtFitOptions {
        reg: 0.0,
        tol: 1e-12,
        ..Default::default()
    };
    for _ in 0..20 {
        let c12 = rng.random_range(1..=19) as f64;
        let c21 = rng.random_range(1..=19) as f64;
        let m = matrix_of(&["a", "b"], &[0.0, c12, c21, 0.0]);
        let scores = bt_fit(&m, &opts).unwrap();
        let dq = scores.q("a").unwrap() - scores.q("b").unwrap();
        let expected = beta.get() * (c12 / c21).ln();
        assert!(
            (dq - expected).abs() < 1e-6,
            "c12={c12} c21={c21}: dq={dq}, closed form={expected}"
        );
    }
}

#[test]
fn four_item_grid_oracle_twenty_five_matrices() {
    let beta = BetaScale::default();
    let mut rng = stream(12, "bt.oracle.grid");
    let ids = ["a", "b", "c", "d"];
    for case in 0..25 {
        // Up to 20 votes per pair, both directions at least 1, so the
        // unregularized maximizer stays interior.
        let mut counts = vec![0.0f64; 16];
        for i in 0..4 {
            for j in (i + 1)..4 {
                let total = rng.random_range(6..=20u32);
                let cij = rng.random_range(1..total) as f64;
                counts[i * 4 + j] = cij;
                counts[j * 4 + i] = total as f64 - cij;
            }
        }
        let m = matrix_of(&ids, &counts);
        let fitted = bt_fit(&m, &BtFitOptions::default()).unwrap();
        let oracle = grid_argmax_4(&counts, beta.get());
        for (idx, id) in ids.iter().enumerate() {
            let got = fitted.q(id).unwrap();
            assert!(
                (got - oracle[idx]).abs() < 0.02,
                "case {case}, item {id}: fit={got:.4}, grid oracle={:.4}",
                oracle[idx]
            );
        }
    }
}

#[test]
fn rank_consistency_under_dominance() {
    // Matrices where row i dominates row j entrywise against every
    // common opponent, with a strict advantage; then q_i > q_j.
    let mut rng = stream(13, "bt.oracle.dominance");
    for _ in 0..10 {
        let base: Vec<f64> = (0..3).map(|_| rng.random_range(2..10) as f64).collect();
        // item0 beats each opponent strictly more often than item1 does.
        let counts = vec![
            0.0,
            base[0] + 3.0,
            base[1] + 2.0,
            base[2] + 1.0, // row 0
            base[0] - 1.0,
            0.0,
            base[1],
            base[2], // row 1 (vs 0 fewer, vs others fewer)
            base[1],
            base[1],
            0.0,
            4.0, // row 2
            base[2],
            base[2],
            4.0,
            0.0, // row 3
        ];
        let m = matrix_of(&["w", "x", "y", "z"], &counts);
        let s = bt_fit(&m, &BtFitOptions::default()).unwrap();
        assert!(
            s.q("w").unwrap() > s.q("x").unwrap(),
            "dominating item must rank higher"
        );
    }
}
