//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use vqbench_core::bt::{bt_fit, BtFitOptions, RankError};
use vqbench_core::comparison::{build_comparison_matrix, ComparisonMatrix, TiePolicy};
use vqbench_core::consistency::{intra_subject_consistency, split_half_consistency};
use vqbench_core::elo::{elo_bootstrap, EloConfig, EloError};
use vqbench_core::fusion::{fuse, FuseOptions, FusionError, PriorVariance};
use vqbench_core::kmeans::{kmeans, sample_per_cluster, KmeansError};
use vqbench_core::leaderboard::{leaderboard, BenchError, LeaderboardOptions, SubjectiveBasis};
use vqbench_core::rdae::{build_rd_groups, rdae, DroppedGroup, RdaeError, RdaeReport, RdaeUnits};
use vqbench_core::score::{QualityScores, ScoreMethod, ScoreRow, ScoresDoc};
use vqbench_core::simulate::{
    recovery_experiment, simulate_catalog, simulate_pairwise, simulate_ratings, RecoveryReport,
    SimConfig, SimError,
};
use vqbench_core::siti::{compute_si_ti_pooled, Pooling};
use vqbench_core::y4m::parse_y4m_luma;
use vqbench_core::{parse_items, parse_ratings, parse_votes, BetaScale, SCHEMA_VERSION};

use crate::manifest::ManifestBuilder;
use crate::{
    sanitize, BasisArg, BenchArgs, ConsistencyArgs, DiversityArgs, Format, FuseArgs, PoolingArg,
    RankArgs, RankMethod, RdaeArgs, SimulateArgs, TiePolicyArg, UnitsArg,
};

/// Input/usage failures exit 2, numerical failures exit 3.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
}

impl From<RankError> for CliError {
    fn from(e: RankError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<EloError> for CliError {
    fn from(e: EloError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        match e {
            FusionError::BadParams(_) => CliError::Input(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RdaeError> for CliError {
    fn from(e: RdaeError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::BadConfig(_) => CliError::Input(e.to_string()),
            SimError::Estimator(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<KmeansError> for CliError {
    fn from(e: KmeansError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn read_votes(path: &Path) -> Result<vqbench_core::ComparisonSet, CliError> {
    let file = fs::File::open(path).map_err(|e| input_err(path, e))?;
    parse_votes(file).map_err(|e| input_err(path, e))
}

fn read_ratings(path: &Path) -> Result<vqbench_core::RatingSet, CliError> {
    let file = fs::File::open(path).map_err(|e| input_err(path, e))?;
    parse_ratings(file).map_err(|e| input_err(path, e))
}

fn read_catalog(path: &Path) -> Result<vqbench_core::ItemCatalog, CliError> {
    let file = fs::File::open(path).map_err(|e| input_err(path, e))?;
    parse_items(file).map_err(|e| input_err(path, e))
}

fn read_scores(path: &Path) -> Result<QualityScores, CliError> {
    let text = fs::read_to_string(path).map_err(|e| input_err(path, e))?;
    let doc: ScoresDoc = serde_json::from_str(&text).map_err(|e| input_err(path, e))?;
    Ok(doc.into_scores())
}

/// Metric table CSV: columns item_id,score.
fn read_metric_table(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let file = fs::File::open(path).map_err(|e| input_err(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr.headers().map_err(|e| input_err(path, e))?.clone();
    let id_col = headers
        .iter()
        .position(|h| h.trim() == "item_id")
        .ok_or_else(|| input_err(path, "missing column 'item_id'"))?;
    let score_col = headers
        .iter()
        .position(|h| h.trim() == "score")
        .ok_or_else(|| input_err(path, "missing column 'score'"))?;
    let mut table = BTreeMap::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| input_err(path, e))?;
        let id = record.get(id_col).unwrap_or("").trim().to_string();
        let raw = record.get(score_col).unwrap_or("").trim();
        let value: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| {
                input_err(path, format!("row {}: bad score '{raw}'", idx + 1))
            })?;
        table.insert(id, value);
    }
    Ok(table)
}

fn beta_of(flag: Option<f64>) -> Result<BetaScale, CliError> {
    match flag {
        None => Ok(BetaScale::default()),
        Some(v) => {
            BetaScale::new(v).ok_or_else(|| CliError::Input(format!("beta must be > 0, got {v}")))
        }
    }
}

fn tie_policy_of(arg: TiePolicyArg) -> TiePolicy {
    match arg {
        TiePolicyArg::HalfWin => TiePolicy::HalfWin,
        TiePolicyArg::Drop => TiePolicy::Drop,
    }
}

fn units_of(arg: UnitsArg) -> RdaeUnits {
    match arg {
        UnitsArg::QualityKbps => RdaeUnits::QualityKbps,
        UnitsArg::Gigabits => RdaeUnits::Gigabits,
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn check_items_known(
    set: &vqbench_core::ComparisonSet,
    catalog: &vqbench_core::ItemCatalog,
) -> Result<(), CliError> {
    let known = catalog.index();
    for vote in &set.votes {
        for id in [&vote.item_a, &vote.item_b] {
            if !known.contains_key(id.as_str()) {
                return Err(CliError::Input(format!(
                    "vote references item '{id}' missing from the catalog"
                )));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

pub fn cmd_rank(args: &RankArgs) -> Result<(), CliError> {
    let seed = args.common.effective_seed();
    let beta = beta_of(args.beta)?;
    let tie = tie_policy_of(args.tie_policy);
    let config = json!({
        "votes": args.votes.display().to_string(),
        "method": format!("{:?}", args.method).to_lowercase(),
        "tie_policy": tie.as_str(),
        "beta": beta.get(),
        "reg": args.reg,
        "tol": args.tol,
        "k_factor": args.k_factor,
        "initial_rating": args.initial_rating,
        "elo_scale": args.elo_scale,
        "n_bootstrap": args.n_bootstrap,
        "early_stop": args.early_stop,
        "seed": seed,
    });
    let mut mb = ManifestBuilder::new("rank", config.clone(), &args.common.out)?;
    mb.record_input(&args.votes)?;
    let set = read_votes(&args.votes)?;
    if let Some(items_path) = &args.items {
        mb.record_input(items_path)?;
        let catalog = read_catalog(items_path)?;
        check_items_known(&set, &catalog)?;
    }
    let groups = set.group_ids();
    if groups.is_empty() {
        return Err(CliError::Input("votes file contains no votes".into()));
    }

    let method = match args.method {
        RankMethod::Bt => ScoreMethod::Bt,
        RankMethod::Elo => ScoreMethod::Elo,
    };
    let mut combined = QualityScores::new(method);
    let mut group_of: BTreeMap<String, String> = BTreeMap::new();
    for group in &groups {
        let scores = match args.method {
            RankMethod::Bt => {
                let matrix = build_comparison_matrix(&set, group, tie)
                    .map_err(|e| CliError::Input(e.to_string()))?;
                bt_fit(
                    &matrix,
                    &BtFitOptions {
                        beta,
                        reg: args.reg,
                        tol: args.tol,
                        ..Default::default()
                    },
                )?
            }
            RankMethod::Elo => elo_bootstrap(
                &set,
                group,
                &EloConfig {
                    k_factor: args.k_factor,
                    initial_rating: args.initial_rating,
                    scale: args.elo_scale,
                    n_bootstrap: args.n_bootstrap,
                    rng_seed: seed,
                    early_stop: args.early_stop,
                },
            )?,
        };
        let doc = ScoresDoc::from_scores(&scores, Some(config.clone()));
        mb.write_output(&format!("scores_{}.json", sanitize(group)), &json_bytes(&doc)?)?;
        for (id, entry) in scores.entries {
            group_of.insert(id.clone(), group.to_string());
            combined.entries.insert(id, entry);
        }
        combined.scale_note = scores.scale_note;
    }
    combined.scale_note = format!("{} [scores anchored per group]", combined.scale_note);
    let doc = ScoresDoc::from_scores(&combined, Some(config));
    mb.write_output("scores_combined.json", &json_bytes(&doc)?)?;

    if args.common.format == Format::Csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["item_id", "group_id", "q", "ci_lo", "ci_hi"])
            .map_err(|e| CliError::Input(e.to_string()))?;
        for (id, e) in &combined.entries {
            w.write_record([
                id.as_str(),
                group_of.get(id).map(String::as_str).unwrap_or(""),
                &e.q.to_string(),
                &e.ci_lo.map_or(String::new(), |v| v.to_string()),
                &e.ci_hi.map_or(String::new(), |v| v.to_string()),
            ])
            .map_err(|e| CliError::Input(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
        mb.write_output("scores_combined.csv", &bytes)?;
    }
    mb.finish()
}

// ---------------------------------------------------------------------------
// fuse
// ---------------------------------------------------------------------------

fn parse_freeze_link(raw: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Input(format!(
            "--freeze-link expects 'a,b,c', got '{raw}'"
        )));
    }
    let vals: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("bad --freeze-link component '{p}'")))
        })
        .collect::<Result<_, _>>()?;
    Ok((vals[0], vals[1], vals[2]))
}

pub fn cmd_fuse(args: &FuseArgs) -> Result<(), CliError> {
    let beta = beta_of(args.beta)?;
    let tie = tie_policy_of(args.tie_policy);
    let freeze = args
        .freeze_link
        .as_deref()
        .map(parse_freeze_link)
        .transpose()?;
    let config = json!({
        "votes": args.votes.display().to_string(),
        "ratings": args.ratings.as_ref().map(|p| p.display().to_string()),
        "tie_policy": tie.as_str(),
        "beta": beta.get(),
        "sigma": args.sigma,
        "plain_variance": args.plain_variance,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "freeze_link": args.freeze_link,
        "seed": args.common.effective_seed(),
    });
    let mut mb = ManifestBuilder::new("fuse", config.clone(), &args.common.out)?;
    mb.record_input(&args.votes)?;
    let set = read_votes(&args.votes)?;
    let ratings = match &args.ratings {
        Some(path) => {
            mb.record_input(path)?;
            read_ratings(path)?
        }
        None => vqbench_core::RatingSet::default(),
    };
    if let Some(items_path) = &args.items {
        mb.record_input(items_path)?;
        let catalog = read_catalog(items_path)?;
        check_items_known(&set, &catalog)?;
    }

    let matrices: Vec<ComparisonMatrix> = set
        .group_ids()
        .iter()
        .map(|g| build_comparison_matrix(&set, g, tie))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(e.to_string()))?;
    if matrices.is_empty() && ratings.is_empty() {
        return Err(CliError::Input("no votes and no ratings to fuse".into()));
    }

    let opts = FuseOptions {
        beta,
        sigma: args.sigma,
        variance_mode: if args.plain_variance {
            PriorVariance::Plain
        } else {
            PriorVariance::ScaledByN
        },
        freeze_link: freeze,
        tol: args.tol,
        max_iter: args.max_iter,
        ..Default::default()
    };
    let fused = fuse(&matrices, &ratings, &opts)?;
    if !fused.converged {
        eprintln!(
            "warning: fusion did not reach the convergence threshold after {} iterations; result written with converged=false",
            fused.iterations
        );
    }

    // Top-level entries/params/loglik/converged; also parseable as a plain
    // scores document by the downstream subcommands.
    #[derive(Serialize)]
    struct FusedDoc<'a> {
        schema_version: u32,
        method: ScoreMethod,
        scale_note: &'a str,
        params: &'a vqbench_core::FusionParams,
        loglik: f64,
        converged: bool,
        iterations: usize,
        config: serde_json::Value,
        entries: Vec<ScoreRow>,
    }
    let doc = FusedDoc {
        schema_version: SCHEMA_VERSION,
        method: ScoreMethod::Fused,
        scale_note: &fused.scores.scale_note,
        params: &fused.params,
        loglik: fused.loglik,
        converged: fused.converged,
        iterations: fused.iterations,
        config,
        entries: fused
            .scores
            .entries
            .iter()
            .map(|(id, e)| ScoreRow {
                item_id: id.clone(),
                q: e.q,
                ci_lo: e.ci_lo,
                ci_hi: e.ci_hi,
            })
            .collect(),
    };
    mb.write_output("fused.json", &json_bytes(&doc)?)?;

    if args.common.format == Format::Csv {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["item_id", "q"])
            .map_err(|e| CliError::Input(e.to_string()))?;
        for (id, e) in &fused.scores.entries {
            w.write_record([id.as_str(), &e.q.to_string()])
                .map_err(|e| CliError::Input(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
        mb.write_output("fused.csv", &bytes)?;
    }
    mb.finish()
}

// ---------------------------------------------------------------------------
// rdae
// ---------------------------------------------------------------------------

pub fn cmd_rdae(args: &RdaeArgs) -> Result<(), CliError> {
    let units = units_of(args.units);
    let config = json!({
        "items": args.items.display().to_string(),
        "subjective": args.subjective.display().to_string(),
        "metric": args.metric.display().to_string(),
        "units": units,
        "calibrate": !args.no_calibrate,
        "seed": args.common.effective_seed(),
    });
    let mut mb = ManifestBuilder::new("rdae", config, &args.common.out)?;
    mb.record_input(&args.items)?;
    mb.record_input(&args.subjective)?;
    mb.record_input(&args.metric)?;

    let catalog = read_catalog(&args.items)?;
    let subjective = read_scores(&args.subjective)?;
    let metric = read_metric_table(&args.metric)?;

    let build = build_rd_groups(&catalog, &subjective, &metric, !args.no_calibrate)?;
    let report = rdae(&build.groups, units)?;

    #[derive(Serialize)]
    struct RdaeDoc {
        schema_version: u32,
        calibrated: bool,
        subjective_range: (f64, f64),
        dropped: Vec<DroppedGroup>,
        #[serde(flatten)]
        report: RdaeReport,
    }
    let doc = RdaeDoc {
        schema_version: SCHEMA_VERSION,
        calibrated: build.calibrated,
        subjective_range: build.subjective_range,
        dropped: build.dropped,
        report: report.clone(),
    };
    mb.write_output("rdae.json", &json_bytes(&doc)?)?;

    if args.common.format == Format::Csv {
        let mut bytes = Vec::new();
        report
            .to_csv(&mut bytes)
            .map_err(|e| CliError::Input(e.to_string()))?;
        mb.write_output("rdae.csv", &bytes)?;
    }
    mb.finish()
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

pub fn cmd_bench(args: &BenchArgs) -> Result<(), CliError> {
    let basis = match args.basis {
        BasisArg::Mos => SubjectiveBasis::Mos,
        BasisArg::Dmos => SubjectiveBasis::Dmos,
        BasisArg::Bt => SubjectiveBasis::Bt,
        BasisArg::Elo => SubjectiveBasis::Elo,
        BasisArg::Fused => SubjectiveBasis::Fused,
    };
    let units = units_of(args.units);
    let fr_metrics = crate::parse_fr_set(&args.fr);
    let config = json!({
        "items": args.items.display().to_string(),
        "subjective": args.subjective.display().to_string(),
        "metrics": args.metrics.display().to_string(),
        "basis": basis.as_str(),
        "units": units,
        "calibrate": !args.no_calibrate,
        "fr": fr_metrics,
        "seed": args.common.effective_seed(),
    });
    let mut mb = ManifestBuilder::new("bench", config, &args.common.out)?;
    mb.record_input(&args.items)?;
    mb.record_input(&args.subjective)?;

    let catalog = read_catalog(&args.items)?;
    let subjective = read_scores(&args.subjective)?;

    let expected_method = match basis {
        SubjectiveBasis::Dmos => ScoreMethod::Mos,
        SubjectiveBasis::Mos => ScoreMethod::Mos,
        SubjectiveBasis::Bt => ScoreMethod::Bt,
        SubjectiveBasis::Elo => ScoreMethod::Elo,
        SubjectiveBasis::Fused => ScoreMethod::Fused,
    };
    if subjective.method != expected_method {
        eprintln!(
            "warning: subjective scores are method '{}' but the basis '{}' expects '{}'",
            subjective.method.as_str(),
            basis.as_str(),
            expected_method.as_str()
        );
    }

    let mut entries: Vec<_> = fs::read_dir(&args.metrics)
        .map_err(|e| input_err(&args.metrics, e))?
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| input_err(&args.metrics, e))?;
    entries.sort_by_key(|e| e.path());
    let mut tables = BTreeMap::new();
    for entry in entries {
        let path = entry.path();
        if path.extension().and_then(|s| s.to_str()) != Some("csv") {
            continue;
        }
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("metric")
            .to_string();
        mb.record_input(&path)?;
        tables.insert(name, read_metric_table(&path)?);
    }
    if tables.is_empty() {
        return Err(CliError::Input(format!(
            "no metric tables (*.csv) found in '{}'",
            args.metrics.display()
        )));
    }

    let options = LeaderboardOptions {
        basis,
        units,
        calibrate: !args.no_calibrate,
        fr_metrics,
        ..Default::default()
    };
    let report = leaderboard(&tables, &subjective, &catalog, &options)?;
    for (metric, reason) in &report.skipped_metrics {
        eprintln!("warning: metric '{metric}' skipped: {reason}");
    }
    mb.write_output("bench.json", &json_bytes(&report)?)?;

    if args.common.format == Format::Csv {
        let mut bytes = Vec::new();
        report
            .to_csv(&mut bytes)
            .map_err(|e| CliError::Input(e.to_string()))?;
        mb.write_output("bench.csv", &bytes)?;
    }
    mb.finish()
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| input_err(path, e))?;
            serde_json::from_str::<SimConfig>(&text).map_err(|e| input_err(path, e))?
        }
        None => SimConfig::default(),
    };
    if let Some(seed) = args.common.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;

    let config_echo =
        serde_json::to_value(&cfg).map_err(|e| CliError::Input(e.to_string()))?;
    let mut mb = ManifestBuilder::new("simulate", config_echo.clone(), &args.common.out)?;
    if let Some(path) = &args.config {
        mb.record_input(path)?;
    }

    let votes = simulate_pairwise(&cfg)?;
    let ratings = simulate_ratings(&cfg)?;
    let catalog = simulate_catalog(&cfg)?;
    let q_true = cfg.q_true_values();

    let mut buf = Vec::new();
    votes
        .to_csv(&mut buf)
        .map_err(|e| CliError::Input(e.to_string()))?;
    mb.write_output("votes.csv", &buf)?;

    let mut buf = Vec::new();
    ratings
        .to_csv(&mut buf)
        .map_err(|e| CliError::Input(e.to_string()))?;
    mb.write_output("ratings.csv", &buf)?;

    let mut buf = Vec::new();
    catalog
        .to_csv(&mut buf)
        .map_err(|e| CliError::Input(e.to_string()))?;
    mb.write_output("items.csv", &buf)?;

    // Ground truth in the metric-table schema, so the benchmark loop can be
    // closed at the file level.
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["item_id", "score"])
        .map_err(|e| CliError::Input(e.to_string()))?;
    for (i, q) in q_true.iter().enumerate() {
        w.write_record([cfg.item_id(i).as_str(), &q.to_string()])
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    mb.write_output("qtrue_metric.csv", &bytes)?;

    let report = recovery_experiment(&cfg)?;

    #[derive(Serialize)]
    struct RecoveryDoc {
        schema_version: u32,
        config: serde_json::Value,
        report: RecoveryReport,
    }
    let doc = RecoveryDoc {
        schema_version: SCHEMA_VERSION,
        config: config_echo,
        report,
    };
    mb.write_output("recovery.json", &json_bytes(&doc)?)?;
    mb.finish()
}

// ---------------------------------------------------------------------------
// diversity
// ---------------------------------------------------------------------------

pub fn cmd_diversity(args: &DiversityArgs) -> Result<(), CliError> {
    let seed = args.common.effective_seed();
    let pooling = match args.pooling {
        PoolingArg::Max => Pooling::Max,
        PoolingArg::Mean => Pooling::Mean,
    };
    let config = json!({
        "y4m": args.y4m.as_ref().map(|p| p.display().to_string()),
        "features": args.features.as_ref().map(|p| p.display().to_string()),
        "k": args.k,
        "per_cluster": args.per_cluster,
        "pooling": pooling,
        "max_iter": args.max_iter,
        "seed": seed,
    });
    let mut mb = ManifestBuilder::new("diversity", config, &args.common.out)?;

    let (ids, columns, points): (Vec<String>, Vec<String>, Vec<Vec<f64>>) =
        match (&args.y4m, &args.features) {
            (Some(dir), None) => {
                let mut paths: Vec<_> = fs::read_dir(dir)
                    .map_err(|e| input_err(dir, e))?
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| input_err(dir, e))?
                    .into_iter()
                    .map(|e| e.path())
                    .filter(|p| p.extension().and_then(|s| s.to_str()) == Some("y4m"))
                    .collect();
                paths.sort();
                if paths.is_empty() {
                    return Err(CliError::Input(format!(
                        "no .y4m files in '{}'",
                        dir.display()
                    )));
                }
                let mut ids = Vec::new();
                let mut points = Vec::new();
                for path in &paths {
                    mb.record_input(path)?;
                    let bytes = fs::read(path).map_err(|e| input_err(path, e))?;
                    let fs_ = parse_y4m_luma(&bytes).map_err(|e| input_err(path, e))?;
                    let f = compute_si_ti_pooled(&fs_, pooling);
                    ids.push(
                        path.file_stem()
                            .and_then(|s| s.to_str())
                            .unwrap_or("clip")
                            .to_string(),
                    );
                    points.push(vec![f.si, f.ti]);
                }
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["video_id", "si", "ti"])
                    .map_err(|e| CliError::Input(e.to_string()))?;
                for (id, p) in ids.iter().zip(&points) {
                    w.write_record([id.as_str(), &p[0].to_string(), &p[1].to_string()])
                        .map_err(|e| CliError::Input(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
                mb.write_output("features.csv", &bytes)?;
                (ids, vec!["si".into(), "ti".into()], points)
            }
            (None, Some(file)) => {
                mb.record_input(file)?;
                let fh = fs::File::open(file).map_err(|e| input_err(file, e))?;
                let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(fh);
                let headers = rdr.headers().map_err(|e| input_err(file, e))?.clone();
                if headers.is_empty() || headers.get(0).map(str::trim) != Some("video_id") {
                    return Err(input_err(file, "first column must be 'video_id'"));
                }
                let columns: Vec<String> =
                    headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
                if columns.is_empty() {
                    return Err(input_err(file, "no feature columns after video_id"));
                }
                let mut ids = Vec::new();
                let mut points = Vec::new();
                for (idx, record) in rdr.records().enumerate() {
                    let record = record.map_err(|e| input_err(file, e))?;
                    ids.push(record.get(0).unwrap_or("").trim().to_string());
                    let row: Vec<f64> = (1..headers.len())
                        .map(|c| {
                            record
                                .get(c)
                                .unwrap_or("")
                                .trim()
                                .parse::<f64>()
                                .ok()
                                .filter(|v| v.is_finite())
                                .ok_or_else(|| {
                                    input_err(
                                        file,
                                        format!("row {}: bad feature value", idx + 1),
                                    )
                                })
                        })
                        .collect::<Result<_, _>>()?;
                    points.push(row);
                }
                if points.is_empty() {
                    return Err(input_err(file, "no feature rows"));
                }
                (ids, columns, points)
            }
            _ => {
                return Err(CliError::Input(
                    "exactly one of --y4m or --features is required".into(),
                ))
            }
        };

    if let Some(k) = args.k {
        let result = kmeans(&points, k, seed, args.max_iter)?;
        let samples_idx = sample_per_cluster(&result.assignments, args.per_cluster, seed);
        let samples: Vec<Vec<&str>> = samples_idx
            .iter()
            .map(|cluster| cluster.iter().map(|&i| ids[i].as_str()).collect())
            .collect();
        let assignments: BTreeMap<&str, usize> = ids
            .iter()
            .map(String::as_str)
            .zip(result.assignments.iter().copied())
            .collect();
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "k": k,
            "seed": seed,
            "columns": columns,
            "assignments": assignments,
            "centroids_standardized": result.centroids,
            "feature_mean": result.feature_mean,
            "feature_std": result.feature_std,
            "inertia": result.inertia,
            "samples": samples,
        });
        mb.write_output("clusters.json", &json_bytes(&doc)?)?;
    }
    mb.finish()
}

// ---------------------------------------------------------------------------
// consistency
// ---------------------------------------------------------------------------

pub fn cmd_consistency(args: &ConsistencyArgs) -> Result<(), CliError> {
    let seed = args.common.effective_seed();
    let config = json!({
        "ratings": args.ratings.display().to_string(),
        "n_iter": args.n_iter,
        "seed": seed,
    });
    let mut mb = ManifestBuilder::new("consistency", config, &args.common.out)?;
    mb.record_input(&args.ratings)?;
    let ratings = read_ratings(&args.ratings)?;

    let split = split_half_consistency(&ratings, args.n_iter, seed).map_err(|e| match e {
        vqbench_core::consistency::ConsistencyError::InsufficientRatings { .. } => {
            CliError::Input(e.to_string())
        }
        vqbench_core::consistency::ConsistencyError::Correlation(_) => {
            CliError::Numeric(e.to_string())
        }
    })?;
    let intra = intra_subject_consistency(&ratings);

    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "split_half": split,
        "intra_subject": intra,
    });
    mb.write_output("consistency.json", &json_bytes(&doc)?)?;
    mb.finish()
}
