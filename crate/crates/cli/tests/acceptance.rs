//! Acceptance suite: one test per release criterion, each printing the
//! measured values it gates on. Run with `--nocapture` to see them.

use std::path::Path;
use std::process::Command;

use rand::Rng;
use vqbench_core::bt::{bt_fit, BtFitOptions};
use vqbench_core::comparison::{parse_votes, ComparisonMatrix, TiePolicy};
use vqbench_core::consistency::{intra_subject_consistency, split_half_consistency};
use vqbench_core::correlate::{fisher_aggregate, CorrKind, CorrelationResult};
use vqbench_core::elo::{elo_bootstrap, EloConfig};
use vqbench_core::fusion::{fit_q_map, fuse, item_universe, objective_at, FuseOptions};
use vqbench_core::rating::{Rating, RatingSet};
use vqbench_core::rdae::{upc_ocp, GroupKey, RdGroup, RdPoint};
use vqbench_core::rng::stream;
use vqbench_core::simulate::{recovery_experiment, simulate_ratings, SimConfig};
use vqbench_core::siti::compute_si_ti;
use vqbench_core::y4m::{parse_y4m_luma, write_y4m, FrameSequence};
use vqbench_core::{bt_cdf, rdae, BetaScale, RdaeUnits};

fn matrix_of(ids: &[&str], counts: &[f64]) -> ComparisonMatrix {
    ComparisonMatrix::from_counts(
        ids.iter().map(|s| s.to_string()).collect(),
        counts.to_vec(),
        TiePolicy::HalfWin,
    )
    .unwrap()
}

#[test]
fn acceptance_01_analytic_anchor() {
    let beta = BetaScale::default();
    let at_one = bt_cdf(1.0, beta);
    let at_zero = bt_cdf(0.0, beta);
    println!("criterion 01: bt_cdf(1, 1/ln3) = {at_one:.15}, bt_cdf(0) = {at_zero}");
    assert!((at_one - 0.75).abs() < 1e-12);
    assert_eq!(at_zero, 0.5);
}

/// Binomial log-likelihood of counts at q (coefficients dropped).
fn loglik_direct(counts: &[f64], n: usize, q: &[f64], beta: f64) -> f64 {
    let mut ll = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && counts[i * n + j] > 0.0 {
                let p = 1.0 / (1.0 + (-(q[i] - q[j]) / beta).exp());
                ll += counts[i * n + j] * p.ln();
            }
        }
    }
    ll
}

/// Mean-zero-constrained maximizer on the 0.01 grid over [-5, 5]^3,
/// reached through coarse-to-fine scans (sound: the objective is concave).
fn grid_argmax_4(counts: &[f64], beta: f64) -> [f64; 4] {
    let mut center = [0.0f64; 3];
    let mut span = 5.0;
    let mut best = [0.0f64; 3];
    for &step in &[0.2f64, 0.04, 0.01] {
        let half = (span / step).round() as i64;
        let mut best_ll = f64::NEG_INFINITY;
        let mut q = [0.0f64; 4];
        for i in -half..=half {
            for j in -half..=half {
                for k in -half..=half {
                    q[0] = (center[0] + i as f64 * step).clamp(-5.0, 5.0);
                    q[1] = (center[1] + j as f64 * step).clamp(-5.0, 5.0);
                    q[2] = (center[2] + k as f64 * step).clamp(-5.0, 5.0);
                    q[3] = -(q[0] + q[1] + q[2]);
                    let ll = loglik_direct(counts, 4, &q, beta);
                    if ll > best_ll {
                        best_ll = ll;
                        best = [q[0], q[1], q[2]];
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
fn acceptance_02_bt_grid_oracle_equivalence() {
    let beta = BetaScale::default();
    let mut rng = stream(2, "acceptance.bt.grid");
    let ids = ["a", "b", "c", "d"];
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let mut counts = vec![0.0f64; 16];
        for i in 0..4 {
            for j in (i + 1)..4 {
                let total = rng.random_range(6..=20u32);
                let cij = rng.random_range(1..total) as f64;
                counts[i * 4 + j] = cij;
                counts[j * 4 + i] = total as f64 - cij;
            }
        }
        let fitted = bt_fit(&matrix_of(&ids, &counts), &BtFitOptions::default()).unwrap();
        let oracle = grid_argmax_4(&counts, beta.get());
        for (idx, id) in ids.iter().enumerate() {
            let err = (fitted.q(id).unwrap() - oracle[idx]).abs();
            worst = worst.max(err);
            assert!(err < 0.02, "coordinate error {err} vs grid oracle");
        }
    }
    println!("criterion 02: worst coordinate error vs 0.01-grid oracle = {worst:.5} (< 0.02)");
}

#[test]
fn acceptance_03_two_item_closed_form() {
    let beta = BetaScale::default();
    let mut rng = stream(3, "acceptance.bt.pairs");
    let opts = BtFitOptions {
        reg: 0.0,
        tol: 1e-12,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c12 = rng.random_range(1..=40) as f64;
        let c21 = rng.random_range(1..=40) as f64;
        let scores = bt_fit(&matrix_of(&["a", "b"], &[0.0, c12, c21, 0.0]), &opts).unwrap();
        let dq = scores.q("a").unwrap() - scores.q("b").unwrap();
        let expected = beta.get() * (c12 / c21).ln();
        worst = worst.max((dq - expected).abs());
        assert!((dq - expected).abs() < 1e-6);
    }
    println!("criterion 03: worst |dq - beta*ln(c12/c21)| = {worst:.2e} (< 1e-6)");
}

#[test]
fn acceptance_04_fusion_gradient_check() {
    let opts = FuseOptions::default();
    let mut worst = 0.0f64;
    for instance in 0..10u64 {
        let mut rng = stream(4 + instance, "acceptance.fusion.grad");
        let ids: Vec<String> = (0..15).map(|i| format!("v{i:02}")).collect();
        let mut counts = vec![0.0f64; 15 * 15];
        for i in 0..15 {
            for j in 0..15 {
                if i != j {
                    counts[i * 15 + j] = rng.random_range(0..=6) as f64;
                }
            }
        }
        let matrix =
            ComparisonMatrix::from_counts(ids.clone(), counts, TiePolicy::HalfWin).unwrap();
        let mut ratings = Vec::new();
        for k in 0..5 {
            for id in &ids {
                ratings.push(Rating {
                    observer_id: format!("u{k}"),
                    item_id: id.clone(),
                    score: rng.random_range(0..=20u32) as u8,
                });
            }
        }
        let ratings = RatingSet { ratings };
        let matrices = vec![matrix];
        let n = item_universe(&matrices, &ratings).len();
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        x.push(rng.random_range(-1.0..0.5));
        x.push(rng.random_range(-1.0..1.0));
        x.push(rng.random_range(-0.5..0.5));

        let (_, grad) = objective_at(&matrices, &ratings, &opts, &x).unwrap();
        let h = 1e-6;
        for d in 0..x.len() {
            let mut xp = x.clone();
            xp[d] += h;
            let mut xm = x.clone();
            xm[d] -= h;
            let (fp, _) = objective_at(&matrices, &ratings, &opts, &xp).unwrap();
            let (fm, _) = objective_at(&matrices, &ratings, &opts, &xm).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let rel = (grad[d] - fd).abs() / grad[d].abs().max(fd.abs()).max(1.0);
            worst = worst.max(rel);
            assert!(rel < 1e-4, "instance {instance}, coord {d}: rel error {rel}");
        }
    }
    println!("criterion 04: worst relative gradient error = {worst:.2e} (< 1e-4)");
}

#[test]
fn acceptance_05_fusion_recovery_suite() {
    let mut srccs = Vec::new();
    for seed in 0..10u64 {
        let cfg = SimConfig {
            rng_seed: seed,
            elo: Some(EloConfig {
                n_bootstrap: 100,
                rng_seed: seed,
                ..Default::default()
            }),
            ..Default::default()
        };
        let report = recovery_experiment(&cfg).unwrap();
        assert!(
            report.srcc_fused >= 0.95,
            "seed {seed}: srcc_fused = {}",
            report.srcc_fused
        );
        srccs.push(report.srcc_fused);
    }
    let mean = srccs.iter().sum::<f64>() / srccs.len() as f64;
    println!(
        "criterion 05: srcc_fused per seed = {srccs:.3?}, mean = {mean:.4} (every >= 0.95, mean >= 0.97)"
    );
    assert!(mean >= 0.97);
}

#[test]
fn acceptance_06_degenerate_mode_reductions() {
    // (a) Empty ratings: fuse equals the Newton fit of pairwise + prior.
    let m1 = matrix_of(
        &["a1", "a2", "a3", "a4"],
        &[
            0.0, 7.0, 4.0, 5.0, //
            3.0, 0.0, 6.0, 2.0, //
            2.0, 4.0, 0.0, 8.0, //
            5.0, 6.0, 2.0, 0.0,
        ],
    );
    let opts = FuseOptions::default();
    let fused = fuse(&[m1.clone()], &RatingSet::default(), &opts).unwrap();
    let newton = fit_q_map(&[m1], &opts).unwrap();
    let mut worst_a = 0.0f64;
    for (id, entry) in &newton.entries {
        let err = (fused.scores.q(id).unwrap() - entry.q).abs();
        worst_a = worst_a.max(err);
        assert!(err < 1e-6, "item {id}: error {err}");
    }

    // (b) Empty comparisons with a frozen identity link: per-item Gumbel
    // location grid MLE.
    let mut rng = stream(6, "acceptance.gumbel");
    let mut ratings = Vec::new();
    for k in 0..6 {
        for i in 0..5 {
            let base = 4 + 3 * i;
            let jitter: i32 = rng.random_range(-2..=2);
            ratings.push(Rating {
                observer_id: format!("u{k}"),
                item_id: format!("v{i}"),
                score: (base as i32 + jitter).clamp(0, 20) as u8,
            });
        }
    }
    let set = RatingSet { ratings };
    let beta = BetaScale::new(1.0).unwrap();
    let frozen_opts = FuseOptions {
        beta,
        sigma: 1e6, // prior negligible: the oracle has no prior term
        freeze_link: Some((1.0, 0.0, 1.0)),
        ..Default::default()
    };
    let fused = fuse(&[], &set, &frozen_opts).unwrap();
    let mut worst_b = 0.0f64;
    for (item, list) in set.by_item() {
        let scores: Vec<f64> = list.iter().map(|&(_, s)| s as f64).collect();
        // 1-D grid MLE of the Gumbel location, refined to 5e-5.
        let ll = |q: f64| -> f64 {
            scores
                .iter()
                .map(|m| {
                    let z = (m - q) / beta.get();
                    -z - (-z).exp()
                })
                .sum()
        };
        let mut center = scores.iter().sum::<f64>() / scores.len() as f64;
        let mut span = 10.0;
        for &step in &[0.05f64, 0.005, 0.0005, 0.00005] {
            let half = (span / step).round() as i64;
            let (mut best_q, mut best_ll) = (center, f64::NEG_INFINITY);
            for i in -half..=half {
                let q = center + i as f64 * step;
                let v = ll(q);
                if v > best_ll {
                    best_ll = v;
                    best_q = q;
                }
            }
            center = best_q;
            span = 2.0 * step;
        }
        let err = (fused.scores.q(item).unwrap() - center).abs();
        worst_b = worst_b.max(err);
        assert!(err < 1e-3, "item {item}: error {err}");
    }
    println!(
        "criterion 06: empty-ratings reduction worst error = {worst_a:.2e} (< 1e-6); \
         frozen-link Gumbel reduction worst error = {worst_b:.2e} (< 1e-3)"
    );
}

fn rd_group(points: &[(f64, f64, f64)]) -> RdGroup {
    RdGroup {
        key: GroupKey {
            source_id: "s".into(),
            codec: "c".into(),
            preset: "p".into(),
        },
        points: points
            .iter()
            .map(|&(b, s, s_hat)| RdPoint {
                bitrate_kbps: b,
                s,
                s_hat,
            })
            .collect(),
        duration_s: 10.0,
    }
}

#[test]
fn acceptance_07_rdae_exactness() {
    // (a) identical curves
    let same = rd_group(&[(1000.0, 0.3, 0.3), (2000.0, 0.7, 0.7), (4000.0, 0.9, 0.9)]);
    let report = rdae(&[same], RdaeUnits::QualityKbps).unwrap();
    assert!(report.rdae.abs() < 1e-12);

    // (b) constant 0.2 gap over a 3000 kbps span
    let gap = rd_group(&[(1000.0, 0.8, 0.6), (2500.0, 0.8, 0.6), (4000.0, 0.8, 0.6)]);
    let (upc, ocp) = upc_ocp(&gap);
    assert!((upc - 600.0).abs() < 1e-9, "upc = {upc}");
    assert_eq!(ocp, 0.0);

    // (c) crossing triangles of area 150 each
    let cross = rd_group(&[(1000.0, 0.2, 0.5), (2000.0, 0.5, 0.5), (3000.0, 0.8, 0.5)]);
    let (u, o) = upc_ocp(&cross);
    assert!((u - 150.0).abs() < 1e-9 && (o - 150.0).abs() < 1e-9);

    // (d) the report identity on a random suite
    let mut rng = stream(7, "acceptance.rdae.identity");
    let groups: Vec<RdGroup> = (0..20)
        .map(|i| {
            let mut b = 500.0;
            let pts: Vec<(f64, f64, f64)> = (0..4)
                .map(|_| {
                    b += rng.random_range(300.0..900.0);
                    (b, rng.random::<f64>(), rng.random::<f64>())
                })
                .collect();
            let mut g = rd_group(&pts);
            g.key.source_id = format!("s{i}");
            g
        })
        .collect();
    for units in [RdaeUnits::QualityKbps, RdaeUnits::Gigabits] {
        let r = rdae(&groups, units).unwrap();
        assert!((r.rdae - (r.upc_mean + r.ocp_mean)).abs() < 1e-12);
    }
    println!(
        "criterion 07: identical-curve rdae = {:.1e}; constant-gap upc = {upc}; \
         triangles = ({u}, {o}); identity holds on 20-group suite",
        report.rdae
    );
}

#[test]
fn acceptance_08_rdae_monotonicity() {
    let mut rng = stream(8, "acceptance.rdae.monotone");
    let mut checked = 0;
    for i in 0..50 {
        let n_points = rng.random_range(3..=6);
        let mut b = rng.random_range(300.0..800.0);
        let pts: Vec<(f64, f64, f64)> = (0..n_points)
            .map(|_| {
                b += rng.random_range(200.0..900.0);
                (b, rng.random::<f64>(), rng.random::<f64>())
            })
            .collect();
        let mut g = rd_group(&pts);
        g.key.source_id = format!("s{i}");
        let (upc, ocp) = upc_ocp(&g);
        for eps in [0.05, 0.1, 0.2] {
            let lowered = RdGroup {
                key: g.key.clone(),
                points: g
                    .points
                    .iter()
                    .map(|p| RdPoint {
                        bitrate_kbps: p.bitrate_kbps,
                        s: p.s,
                        s_hat: p.s_hat - eps,
                    })
                    .collect(),
                duration_s: g.duration_s,
            };
            let (u2, o2) = upc_ocp(&lowered);
            assert!(u2 >= upc - 1e-12, "UPC decreased: {upc} -> {u2}");
            assert!(o2 <= ocp + 1e-12, "OCP increased: {ocp} -> {o2}");
            checked += 1;
        }
    }
    println!("criterion 08: UPC/OCP monotone under metric lowering in {checked} cases");
}

#[test]
fn acceptance_09_fisher_z() {
    let corr = |r: f64, n: usize| CorrelationResult {
        r,
        n,
        kind: CorrKind::Srcc,
    };
    // identical r across groups
    let agg = fisher_aggregate(&[corr(0.62, 11), corr(0.62, 47), corr(0.62, 8)]).unwrap();
    assert!((agg.r_agg - 0.62).abs() < 1e-12);

    // two-group hand-computed case
    let two = fisher_aggregate(&[corr(0.8, 103), corr(0.2, 13)]).unwrap();
    let z = (100.0 * 0.8f64.atanh() + 10.0 * 0.2f64.atanh()) / 110.0;
    assert!((two.r_agg - z.tanh()).abs() < 1e-10);

    // single group passthrough with the closed-form CI
    let one = fisher_aggregate(&[corr(0.5, 30)]).unwrap();
    let half = 1.96 / 27f64.sqrt();
    assert!((one.r_agg - 0.5).abs() < 1e-12);
    assert!((one.ci_lo - (0.5f64.atanh() - half).tanh()).abs() < 1e-12);
    assert!((one.ci_hi - (0.5f64.atanh() + half).tanh()).abs() < 1e-12);
    println!(
        "criterion 09: fixed point ok; two-group r_agg = {:.10}; single-group ci = ({:.4}, {:.4})",
        two.r_agg, one.ci_lo, one.ci_hi
    );
}

#[test]
fn acceptance_10_consistency_analyses() {
    // Noise-free simulation: both medians exactly 1.
    let clean = SimConfig {
        n_items: 20,
        n_observers: 8,
        observer_bias_sd: 0.0,
        rating_noise_sd: 0.0,
        rng_seed: 10,
        ..Default::default()
    };
    let ratings = simulate_ratings(&clean).unwrap();
    let split = split_half_consistency(&ratings, 100, 10).unwrap();
    let intra = intra_subject_consistency(&ratings);
    assert_eq!(split.median_srcc, 1.0);
    assert_eq!(intra.median_srcc, 1.0);

    // Crowd-scale low-noise protocol shape.
    let crowd = SimConfig {
        n_items: 40,
        n_observers: 1500,
        observer_bias_sd: 0.2,
        rating_noise_sd: 0.4,
        rng_seed: 11,
        ..Default::default()
    };
    let ratings = simulate_ratings(&crowd).unwrap();
    let report = split_half_consistency(&ratings, 100, 11).unwrap();
    assert!(
        report.median_srcc >= 0.98,
        "median = {}",
        report.median_srcc
    );
    println!(
        "criterion 10: noise-free medians = (1.0, 1.0); crowd-scale split-half median = {:.4} (>= 0.98)",
        report.median_srcc
    );
}

#[test]
fn acceptance_11_elo_properties() {
    let header = "group_id,item_a,item_b,outcome,observer_id\n";

    // determinism: byte-identical serialized scores across two runs
    let rows: Vec<String> = (0..30)
        .map(|k| format!("g,v1,v2,{},u{k}", if k % 4 == 0 { "b" } else { "a" }))
        .collect();
    let set = parse_votes(format!("{header}{}", rows.join("\n")).as_bytes()).unwrap();
    let cfg = EloConfig {
        n_bootstrap: 300,
        rng_seed: 17,
        ..Default::default()
    };
    let a = serde_json::to_string(&elo_bootstrap(&set, "g", &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&elo_bootstrap(&set, "g", &cfg).unwrap()).unwrap();
    assert_eq!(a, b);

    // total dominance holds for any seed
    let rows: Vec<String> = (0..20).map(|k| format!("g,v1,v2,a,u{k}")).collect();
    let dom = parse_votes(format!("{header}{}", rows.join("\n")).as_bytes()).unwrap();
    for seed in 0..10u64 {
        let cfg = EloConfig {
            n_bootstrap: 200,
            rng_seed: seed,
            ..Default::default()
        };
        let s = elo_bootstrap(&dom, "g", &cfg).unwrap();
        assert!(s.q("v1").unwrap() > s.q("v2").unwrap(), "seed {seed}");
    }

    // a tie at equal ratings changes nothing
    let tie = parse_votes(format!("{header}g,v1,v2,tie,u1").as_bytes()).unwrap();
    let s = vqbench_core::elo_run(&tie, "g", &EloConfig::default(), &[0]).unwrap();
    assert_eq!(s.q("v1").unwrap(), 1000.0);
    assert_eq!(s.q("v2").unwrap(), 1000.0);
    println!("criterion 11: determinism, dominance over 10 seeds, tie no-op all hold");
}

#[test]
fn acceptance_12_si_ti() {
    // constant luma
    let flat = FrameSequence {
        width: 16,
        height: 12,
        frames: vec![vec![90u8; 192], vec![90u8; 192]],
    };
    let f = compute_si_ti(&flat);
    assert_eq!((f.si, f.ti), (0.0, 0.0));

    // step edge vs a direct convolution oracle
    let width = 16;
    let height = 12;
    let frame: Vec<u8> = (0..width * height)
        .map(|i| if i % width < width / 2 { 25 } else { 210 })
        .collect();
    let seq = FrameSequence {
        width,
        height,
        frames: vec![frame.clone()],
    };
    let got = compute_si_ti(&seq).si;
    let mut mags = Vec::new();
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let p = |dx: i32, dy: i32| {
                frame[((y as i32 + dy) as usize) * width + (x as i32 + dx) as usize] as f64
            };
            let gx = -p(-1, -1) + p(1, -1) - 2.0 * p(-1, 0) + 2.0 * p(1, 0) - p(-1, 1) + p(1, 1);
            let gy = -p(-1, -1) - 2.0 * p(0, -1) - p(1, -1) + p(-1, 1) + 2.0 * p(0, 1) + p(1, 1);
            mags.push((gx * gx + gy * gy).sqrt());
        }
    }
    let n = mags.len() as f64;
    let mean = mags.iter().sum::<f64>() / n;
    let oracle = (mags.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    assert!((got - oracle).abs() < 1e-9, "si {got} vs oracle {oracle}");

    // y4m round-trip of frame counts and dimensions
    let lumas = vec![vec![3u8; 64], vec![200u8; 64], vec![90u8; 64]];
    let bytes = write_y4m(8, 8, &lumas);
    let parsed = parse_y4m_luma(&bytes).unwrap();
    assert_eq!((parsed.width, parsed.height, parsed.frame_count()), (8, 8, 3));
    assert_eq!(parsed.frames, lumas);
    println!(
        "criterion 12: constant-luma (0,0); step-edge si = {got:.6} matches oracle to 1e-9; y4m round-trip ok"
    );
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vqbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_same_file(a: &Path, b: &Path) {
    let fa = std::fs::read(a).unwrap();
    let fb = std::fs::read(b).unwrap();
    assert_eq!(fa, fb, "{} differs from {}", a.display(), b.display());
}

#[test]
fn acceptance_13_end_to_end_determinism() {
    let root = tempfile::tempdir().unwrap();
    let root = root.path();

    // simulate twice with the same seed: byte-identical emitted data
    for run in ["sim1", "sim2"] {
        let out = root.join(run);
        let status = run_cli(&["simulate", "--seed", "5", "--out", out.to_str().unwrap()]);
        assert!(status.status.success(), "simulate failed: {status:?}");
    }
    for file in ["votes.csv", "ratings.csv", "items.csv", "qtrue_metric.csv", "recovery.json"] {
        assert_same_file(&root.join("sim1").join(file), &root.join("sim2").join(file));
    }

    // fuse twice from the same inputs
    let sim = root.join("sim1");
    for run in ["fuse1", "fuse2"] {
        let out = root.join(run);
        let status = run_cli(&[
            "fuse",
            "--votes",
            sim.join("votes.csv").to_str().unwrap(),
            "--ratings",
            sim.join("ratings.csv").to_str().unwrap(),
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "fuse failed: {status:?}");
    }
    assert_same_file(&root.join("fuse1/fused.json"), &root.join("fuse2/fused.json"));

    // identity metric: the fused scores themselves
    let fused: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("fuse1/fused.json")).unwrap())
            .unwrap();
    assert_eq!(fused["converged"], serde_json::Value::Bool(true));
    let metrics_dir = root.join("metrics");
    std::fs::create_dir(&metrics_dir).unwrap();
    let mut csv = String::from("item_id,score\n");
    for entry in fused["entries"].as_array().unwrap() {
        // full-precision float round trip
        csv.push_str(&format!(
            "{},{}\n",
            entry["item_id"].as_str().unwrap(),
            entry["q"].as_f64().unwrap()
        ));
    }
    std::fs::write(metrics_dir.join("identity.csv"), csv).unwrap();

    for run in ["bench1", "bench2"] {
        let out = root.join(run);
        let status = run_cli(&[
            "bench",
            "--items",
            sim.join("items.csv").to_str().unwrap(),
            "--subjective",
            root.join("fuse1/fused.json").to_str().unwrap(),
            "--metrics",
            metrics_dir.to_str().unwrap(),
            "--basis",
            "fused",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "bench failed: {status:?}");
    }
    assert_same_file(&root.join("bench1/bench.json"), &root.join("bench2/bench.json"));

    let bench: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("bench1/bench.json")).unwrap())
            .unwrap();
    let identity = &bench["per_metric"]["identity"];
    let rdae_value = identity["rdae"]["rdae"].as_f64().unwrap();
    let srcc = identity["srcc_global"]["r"].as_f64().unwrap();
    assert_eq!(rdae_value, 0.0, "identity metric rdae");
    assert_eq!(srcc, 1.0, "identity metric srcc");
    println!(
        "criterion 13: simulate/fuse/bench byte-identical across reruns; identity metric rdae = {rdae_value}, srcc = {srcc}"
    );
}
