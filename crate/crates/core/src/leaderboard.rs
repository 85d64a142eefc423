//! Metric leaderboard: RDAE plus correlation columns per metric, against a
//! chosen subjective basis.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ItemCatalog;
use crate::correlate::{fisher_aggregate, plcc, srcc, CorrelationResult, FisherAggregate};
use crate::rdae::{build_rd_groups, rdae, RdGroup, RdaeError, RdaeReport, RdaeUnits};
use crate::score::{QualityScores, ScoreEntry, ScoreMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectiveBasis {
    Mos,
    Dmos,
    Bt,
    Elo,
    Fused,
}

impl SubjectiveBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            SubjectiveBasis::Mos => "mos",
            SubjectiveBasis::Dmos => "dmos",
            SubjectiveBasis::Bt => "bt",
            SubjectiveBasis::Elo => "elo",
            SubjectiveBasis::Fused => "fused",
        }
    }

    /// Ranking bases produce per-group scores that are only comparable
    /// within a group, so their correlations are grouped and Fisher-pooled.
    pub fn is_grouped(self) -> bool {
        matches!(self, SubjectiveBasis::Bt | SubjectiveBasis::Elo)
    }
}

/// How codec-family RDAE columns aggregate when a family spans several
/// codecs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyPooling {
    /// Mean over all groups of the family.
    #[default]
    PooledGroups,
    /// Mean of the per-codec RDAE values of the family.
    MeanOfCodecs,
}

#[derive(Debug, Clone, Serialize)]
pub struct LeaderboardOptions {
    pub basis: SubjectiveBasis,
    pub units: RdaeUnits,
    /// Calibrate metric scores by quantile matching before building RD
    /// curves.
    pub calibrate: bool,
    /// Names of full-reference metrics; under the MOS basis their
    /// correlations are computed against DMOS instead.
    pub fr_metrics: BTreeSet<String>,
    /// Optional codec -> family mapping for the RDAE subset columns;
    /// unmapped codecs form their own family.
    pub codec_families: BTreeMap<String, String>,
    pub family_pooling: FamilyPooling,
}

impl Default for LeaderboardOptions {
    fn default() -> Self {
        Self {
            basis: SubjectiveBasis::Mos,
            units: RdaeUnits::default(),
            calibrate: true,
            fr_metrics: BTreeSet::new(),
            codec_families: BTreeMap::new(),
            family_pooling: FamilyPooling::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no metric produced a valid benchmark entry")]
    EmptyInput,
    #[error("source '{0}' has no scored reference item")]
    MissingReference(String),
    #[error(transparent)]
    Rdae(#[from] RdaeError),
}

/// Differential MOS: `dmos(item) = mos(reference of item's source) -
/// mos(item)`. References score 0 by construction. Higher DMOS means worse
/// quality.
pub fn dmos(ratings_mos: &QualityScores, catalog: &ItemCatalog) -> Result<QualityScores, BenchError> {
    let mut out = QualityScores::new(ScoreMethod::Dmos);
    out.scale_note = "reference MOS minus item MOS (higher = worse)".into();
    for item in &catalog.items {
        let Some(m) = ratings_mos.q(&item.item_id) else {
            continue;
        };
        let reference = catalog
            .reference_of(&item.source_id)
            .and_then(|r| ratings_mos.q(&r.item_id))
            .ok_or_else(|| BenchError::MissingReference(item.source_id.clone()))?;
        out.insert(item.item_id.clone(), ScoreEntry::point(reference - m));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct MetricReport {
    pub rdae: RdaeReport,
    /// RDAE over codec-family subsets of the retained groups.
    pub rdae_by_family: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub srcc_global: Option<CorrelationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plcc_global: Option<CorrelationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub srcc_grouped: Option<FisherAggregate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plcc_grouped: Option<FisherAggregate>,
    /// Correlation basis actually used ("dmos" for FR metrics under MOS).
    pub correlation_basis: String,
    pub is_fr: bool,
    pub rd_groups_used: usize,
    pub rd_groups_dropped: usize,
    pub correlation_groups_used: usize,
    pub correlation_groups_skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub subjective_basis: SubjectiveBasis,
    pub units: RdaeUnits,
    pub calibrated: bool,
    /// DMOS values are negated wherever they enter a correlation or an RD
    /// curve, so that "higher = better" holds for every basis.
    pub dmos_quality_oriented: bool,
    pub per_metric: BTreeMap<String, MetricReport>,
    /// Metric names sorted by overall RDAE ascending.
    pub ranking: Vec<String>,
    pub skipped_metrics: BTreeMap<String, String>,
}

fn grouped_correlations(
    catalog: &ItemCatalog,
    basis: &BTreeMap<&str, f64>,
    metric: &BTreeMap<String, f64>,
) -> (Option<FisherAggregate>, Option<FisherAggregate>, usize, usize) {
    // Correlation groups follow the collection protocol: one group per
    // (source, preset).
    let mut groups: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for item in &catalog.items {
        if item.is_reference {
            continue;
        }
        if let (Some(&s), Some(&m)) = (basis.get(item.item_id.as_str()), metric.get(&item.item_id))
        {
            groups
                .entry((item.source_id.clone(), item.preset.clone()))
                .or_default()
                .push((m, s));
        }
    }
    let mut srccs = Vec::new();
    let mut plccs = Vec::new();
    let mut skipped = 0;
    for pts in groups.values() {
        if pts.len() < 4 {
            skipped += 1;
            continue;
        }
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        match (srcc(&xs, &ys), plcc(&xs, &ys)) {
            (Ok(s), Ok(p)) => {
                srccs.push(s);
                plccs.push(p);
            }
            _ => skipped += 1,
        }
    }
    let used = srccs.len();
    (
        fisher_aggregate(&srccs).ok(),
        fisher_aggregate(&plccs).ok(),
        used,
        skipped,
    )
}

fn family_rdae(
    groups: &[RdGroup],
    options: &LeaderboardOptions,
) -> Result<BTreeMap<String, f64>, RdaeError> {
    let mut by_family: BTreeMap<String, Vec<RdGroup>> = BTreeMap::new();
    for g in groups {
        let family = options
            .codec_families
            .get(&g.key.codec)
            .cloned()
            .unwrap_or_else(|| g.key.codec.clone());
        by_family.entry(family).or_default().push(g.clone());
    }
    let mut out = BTreeMap::new();
    for (family, members) in by_family {
        let value = match options.family_pooling {
            FamilyPooling::PooledGroups => rdae(&members, options.units)?.rdae,
            FamilyPooling::MeanOfCodecs => {
                let mut by_codec: BTreeMap<&str, Vec<RdGroup>> = BTreeMap::new();
                for g in &members {
                    by_codec.entry(g.key.codec.as_str()).or_default().push(g.clone());
                }
                let vals: Vec<f64> = by_codec
                    .values()
                    .map(|gs| rdae(gs, options.units).map(|r| r.rdae))
                    .collect::<Result<_, _>>()?;
                vals.iter().sum::<f64>() / vals.len() as f64
            }
        };
        out.insert(family, value);
    }
    Ok(out)
}

/// Assembles the benchmark report: per metric an RDAE breakdown plus either
/// a global or a grouped (Fisher-pooled) correlation entry, sorted by RDAE
/// ascending.
pub fn leaderboard(
    metric_tables: &BTreeMap<String, BTreeMap<String, f64>>,
    subjective: &QualityScores,
    catalog: &ItemCatalog,
    options: &LeaderboardOptions,
) -> Result<BenchReport, BenchError> {
    // Resolve the basis to per-item values, on a higher-is-better scale.
    let dmos_scores = match options.basis {
        SubjectiveBasis::Dmos => Some(dmos(subjective, catalog)?),
        SubjectiveBasis::Mos if !options.fr_metrics.is_empty() => {
            Some(dmos(subjective, catalog)?)
        }
        _ => None,
    };
    let basis_values: BTreeMap<&str, f64> = match options.basis {
        SubjectiveBasis::Dmos => dmos_scores
            .as_ref()
            .unwrap()
            .entries
            .iter()
            .map(|(k, e)| (k.as_str(), -e.q))
            .collect(),
        _ => subjective
            .entries
            .iter()
            .map(|(k, e)| (k.as_str(), e.q))
            .collect(),
    };
    let dmos_values: Option<BTreeMap<&str, f64>> = dmos_scores.as_ref().map(|d| {
        d.entries
            .iter()
            .map(|(k, e)| (k.as_str(), -e.q))
            .collect()
    });
    let rd_subjective = {
        let mut s = QualityScores::new(subjective.method);
        for (id, &v) in &basis_values {
            s.insert(id.to_string(), ScoreEntry::point(v));
        }
        s
    };

    let mut per_metric = BTreeMap::new();
    let mut skipped_metrics = BTreeMap::new();

    for (name, table) in metric_tables {
        let is_fr = options.fr_metrics.contains(name);
        let build = match build_rd_groups(catalog, &rd_subjective, table, options.calibrate) {
            Ok(b) => b,
            Err(e) => {
                skipped_metrics.insert(name.clone(), e.to_string());
                continue;
            }
        };
        let rdae_report = match rdae(&build.groups, options.units) {
            Ok(r) => r,
            Err(e) => {
                skipped_metrics.insert(name.clone(), e.to_string());
                continue;
            }
        };
        let rdae_by_family = match family_rdae(&build.groups, options) {
            Ok(f) => f,
            Err(e) => {
                skipped_metrics.insert(name.clone(), e.to_string());
                continue;
            }
        };

        // Correlation basis: FR metrics fall back to (negated) DMOS under
        // the MOS basis.
        let (corr_values, correlation_basis) = if options.basis == SubjectiveBasis::Mos && is_fr {
            (
                dmos_values.as_ref().expect("dmos computed for fr metrics"),
                "dmos".to_string(),
            )
        } else {
            (&basis_values, options.basis.as_str().to_string())
        };

        let mut report = MetricReport {
            rdae: rdae_report,
            rdae_by_family,
            srcc_global: None,
            plcc_global: None,
            srcc_grouped: None,
            plcc_grouped: None,
            correlation_basis,
            is_fr,
            rd_groups_used: build.groups.len(),
            rd_groups_dropped: build.dropped.len(),
            correlation_groups_used: 0,
            correlation_groups_skipped: 0,
        };

        if options.basis.is_grouped() {
            let (s, p, used, skipped) = grouped_correlations(catalog, corr_values, table);
            report.srcc_grouped = s;
            report.plcc_grouped = p;
            report.correlation_groups_used = used;
            report.correlation_groups_skipped = skipped;
            if report.srcc_grouped.is_none() {
                skipped_metrics.insert(
                    name.clone(),
                    "no correlation group with >= 4 scored items".into(),
                );
                continue;
            }
        } else {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (id, &v) in corr_values {
                if let Some(&m) = table.get(*id) {
                    xs.push(m);
                    ys.push(v);
                }
            }
            match (srcc(&xs, &ys), plcc(&xs, &ys)) {
                (Ok(s), Ok(p)) => {
                    report.srcc_global = Some(s);
                    report.plcc_global = Some(p);
                }
                (Err(e), _) | (_, Err(e)) => {
                    skipped_metrics.insert(name.clone(), e.to_string());
                    continue;
                }
            }
        }
        per_metric.insert(name.clone(), report);
    }

    if per_metric.is_empty() {
        return Err(BenchError::EmptyInput);
    }

    let mut ranking: Vec<String> = per_metric.keys().cloned().collect();
    ranking.sort_by(|a, b| {
        per_metric[a]
            .rdae
            .rdae
            .partial_cmp(&per_metric[b].rdae.rdae)
            .unwrap()
            .then_with(|| a.cmp(b))
    });

    Ok(BenchReport {
        schema_version: crate::SCHEMA_VERSION,
        subjective_basis: options.basis,
        units: options.units,
        calibrated: options.calibrate,
        dmos_quality_oriented: true,
        per_metric,
        ranking,
        skipped_metrics,
    })
}

impl BenchReport {
    /// CSV table in ranking order: metric, type, overall RDAE, one RDAE
    /// column per codec family, then the correlation columns.
    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<(), std::io::Error> {
        let families: BTreeSet<&str> = self
            .per_metric
            .values()
            .flat_map(|m| m.rdae_by_family.keys().map(String::as_str))
            .collect();
        let mut header = vec!["metric".to_string(), "type".to_string(), "rdae".to_string()];
        header.extend(families.iter().map(|f| format!("rdae_{f}")));
        header.extend([
            "srcc".to_string(),
            "plcc".to_string(),
            "correlation_basis".to_string(),
        ]);

        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&header).map_err(std::io::Error::other)?;
        for name in &self.ranking {
            let m = &self.per_metric[name];
            let mut row = vec![
                name.clone(),
                if m.is_fr { "fr" } else { "nr" }.to_string(),
                m.rdae.rdae.to_string(),
            ];
            for f in &families {
                row.push(
                    m.rdae_by_family
                        .get(*f)
                        .map_or(String::new(), |v| v.to_string()),
                );
            }
            let (s, p) = match (m.srcc_global, m.srcc_grouped) {
                (Some(s), _) => (Some(s.r), m.plcc_global.map(|p| p.r)),
                (None, Some(s)) => (Some(s.r_agg), m.plcc_grouped.map(|p| p.r_agg)),
                _ => (None, None),
            };
            row.push(s.map_or(String::new(), |v| v.to_string()));
            row.push(p.map_or(String::new(), |v| v.to_string()));
            row.push(m.correlation_basis.clone());
            w.write_record(&row).map_err(std::io::Error::other)?;
        }
        w.flush()?;
        Ok(())
    }
}
