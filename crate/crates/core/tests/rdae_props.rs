//! Property suites for the rate-distortion alignment error and the
//! quantile-matching calibration.

use std::collections::BTreeMap;

use rand::Rng;
use vqbench_core::catalog::parse_items;
use vqbench_core::rdae::{GroupKey, RdGroup, RdPoint};
use vqbench_core::rng::stream;
use vqbench_core::score::{QualityScores, ScoreEntry, ScoreMethod};
use vqbench_core::{align_scales, build_rd_groups, rdae, upc_ocp, RdaeUnits};

fn random_group(rng: &mut impl Rng, idx: usize) -> RdGroup {
    let n_points = rng.random_range(3..=7);
    let mut bitrate = rng.random_range(300.0..800.0);
    let mut points = Vec::new();
    for _ in 0..n_points {
        points.push(RdPoint {
            bitrate_kbps: bitrate,
            s: rng.random_range(0.0..1.0),
            s_hat: rng.random_range(0.0..1.0),
        });
        bitrate += rng.random_range(200.0..900.0);
    }
    RdGroup {
        key: GroupKey {
            source_id: format!("src{idx}"),
            codec: "c".into(),
            preset: "p".into(),
        },
        points,
        duration_s: rng.random_range(5.0..30.0),
    }
}

#[test]
fn lowering_metric_curve_shifts_cost_monotonically() {
    let mut rng = stream(41, "rdae.props.monotone");
    let groups: Vec<RdGroup> = (0..50).map(|i| random_group(&mut rng, i)).collect();
    for eps in [0.05, 0.1, 0.2] {
        for g in &groups {
            let (upc, ocp) = upc_ocp(g);
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
            let (upc2, ocp2) = upc_ocp(&lowered);
            assert!(
                upc2 >= upc - 1e-12,
                "UPC decreased under lowered metric: {upc} -> {upc2}"
            );
            assert!(
                ocp2 <= ocp + 1e-12,
                "OCP increased under lowered metric: {ocp} -> {ocp2}"
            );
        }
    }
}

#[test]
fn report_identity_holds_on_random_suite() {
    let mut rng = stream(42, "rdae.props.identity");
    let groups: Vec<RdGroup> = (0..50).map(|i| random_group(&mut rng, i)).collect();
    for units in [RdaeUnits::QualityKbps, RdaeUnits::Gigabits] {
        let report = rdae(&groups, units).unwrap();
        assert!((report.rdae - (report.upc_mean + report.ocp_mean)).abs() < 1e-12);
        for g in &report.per_group {
            assert!(g.upc >= 0.0 && g.ocp >= 0.0);
        }
    }
}

#[test]
fn quantile_map_inverts_monotone_transform_on_random_draws() {
    let mut rng = stream(43, "rdae.props.align");
    for _ in 0..100 {
        let n = rng.random_range(4..40);
        let subjective: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let metric: Vec<f64> = subjective.iter().map(|s| s.exp()).collect();
        let map = align_scales(&metric, &subjective).unwrap();
        for (m, s) in metric.iter().zip(&subjective) {
            assert!(
                (map.apply(*m) - s).abs() < 1e-9,
                "T(exp(s)) = {} but s = {s}",
                map.apply(*m)
            );
        }
    }
}

fn catalog_fixture() -> vqbench_core::ItemCatalog {
    let csv = "item_id,source_id,codec,preset,target_bitrate_kbps,actual_bitrate_kbps,duration_s,is_reference\n\
        v1,src,x264,fast,1000,1000,10,false\n\
        v2,src,x264,fast,2000,2000,10,false\n\
        v3,src,x264,fast,4000,4000,10,false\n\
        w1,src,x264,slow,1000,1100,10,false\n\
        w2,src,x264,slow,2000,2050,10,false\n\
        w3,src,x264,slow,4000,4100,10,false\n";
    parse_items(csv.as_bytes()).unwrap()
}

fn scores_of(pairs: &[(&str, f64)]) -> QualityScores {
    let mut s = QualityScores::new(ScoreMethod::Fused);
    for &(id, q) in pairs {
        s.insert(id, ScoreEntry::point(q));
    }
    s
}

#[test]
fn group_building_partitions_and_drops() {
    let catalog = catalog_fixture();
    let subjective = scores_of(&[
        ("v1", 0.1),
        ("v2", 0.5),
        ("v3", 0.9),
        ("w1", 0.2),
        ("w2", 0.6),
        ("w3", 1.0),
    ]);
    let all: BTreeMap<String, f64> = subjective
        .entries
        .iter()
        .map(|(k, e)| (k.clone(), e.q))
        .collect();

    // Both presets fully scored: two disjoint groups.
    let build = build_rd_groups(&catalog, &subjective, &all, true).unwrap();
    assert_eq!(build.groups.len(), 2);
    assert!(build.dropped.is_empty());
    assert_eq!(build.groups[0].points.len(), 3);

    // Remove one metric score: that group falls under 3 points and is
    // dropped, with the drop recorded.
    let mut partial = all.clone();
    partial.remove("w2");
    let build = build_rd_groups(&catalog, &subjective, &partial, true).unwrap();
    assert_eq!(build.groups.len(), 1);
    assert_eq!(build.dropped.len(), 1);
    assert_eq!(build.dropped[0].key.preset, "slow");
}

#[test]
fn identity_metric_has_zero_rdae_after_calibration() {
    let catalog = catalog_fixture();
    let subjective = scores_of(&[
        ("v1", -0.4),
        ("v2", 0.3),
        ("v3", 1.2),
        ("w1", -0.2),
        ("w2", 0.5),
        ("w3", 1.4),
    ]);
    let table: BTreeMap<String, f64> = subjective
        .entries
        .iter()
        .map(|(k, e)| (k.clone(), e.q))
        .collect();
    let build = build_rd_groups(&catalog, &subjective, &table, true).unwrap();
    let report = rdae(&build.groups, RdaeUnits::QualityKbps).unwrap();
    assert_eq!(report.rdae, 0.0);
}
