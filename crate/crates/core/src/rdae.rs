//! Rate-Distortion Alignment Error.
//!
//! For each (source, codec, preset) group, the subjective quality curve
//! `s(b)` and the metric curve `s_hat(b)` are piecewise-linear in bitrate.
//! The under-prediction cost (UPC) integrates `s - s_hat` where the metric
//! underrates quality; the over-compression penalty (OCP) integrates
//! `s_hat - s` where it overrates. The integrals are exact: trapezoids with
//! breakpoints inserted at every sign change, no quadrature.
//!
//! Metric and subjective values live on different scales; they are aligned
//! by monotone quantile matching (the closed-form 1-D optimal transport map
//! between the two empirical distributions) before curves are built, and
//! both sides are min-max normalized to [0, 1] over the dataset's
//! subjective scores.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ItemCatalog;
use crate::score::QualityScores;

#[derive(Debug, Error)]
pub enum RdaeError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("no valid rate-distortion groups ({0} dropped)")]
    NoValidGroups(usize),
    #[error("group '{0:?}' violates invariants: {1}")]
    BadGroup(GroupKey, String),
}

/// Monotone piecewise-linear map fitted by quantile matching: the p-quantile
/// of the metric sample is sent to the p-quantile of the subjective sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMap {
    /// Strictly increasing knot abscissae (metric values).
    xs: Vec<f64>,
    /// Nondecreasing knot ordinates (subjective values).
    ys: Vec<f64>,
}

impl CalibrationMap {
    /// Applies the map; clamped to the end knots outside the fitted range.
    pub fn apply(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let idx = self.xs.partition_point(|&v| v < x);
        if self.xs[idx] == x {
            return self.ys[idx];
        }
        let (x0, x1) = (self.xs[idx - 1], self.xs[idx]);
        let (y0, y1) = (self.ys[idx - 1], self.ys[idx]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }
}

/// Linear-interpolation quantile of a sorted sample at plotting positions
/// `(j - 0.5) / n`.
fn sample_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = p * n as f64 - 0.5;
    if h <= 0.0 {
        return sorted[0];
    }
    if h >= (n - 1) as f64 {
        return sorted[n - 1];
    }
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac
}

/// Fits the nondecreasing quantile-matching map from the metric sample onto
/// the subjective sample. With samples of equal length the i-th metric
/// order statistic maps exactly onto the i-th subjective order statistic.
pub fn align_scales(
    metric_values: &[f64],
    subjective_values: &[f64],
) -> Result<CalibrationMap, RdaeError> {
    let mut mx: Vec<f64> = metric_values.to_vec();
    let mut sy: Vec<f64> = subjective_values.to_vec();
    if mx.iter().chain(sy.iter()).any(|v| !v.is_finite()) {
        return Err(RdaeError::DegenerateInput("non-finite sample value".into()));
    }
    mx.sort_by(|a, b| a.partial_cmp(b).unwrap());
    sy.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if mx.len() < 2 || mx.first() == mx.last() {
        return Err(RdaeError::DegenerateInput(
            "metric sample needs >= 2 distinct values".into(),
        ));
    }
    if sy.len() < 2 || sy.first() == sy.last() {
        return Err(RdaeError::DegenerateInput(
            "subjective sample needs >= 2 distinct values".into(),
        ));
    }

    let n = mx.len() as f64;
    let mut xs: Vec<f64> = Vec::with_capacity(mx.len());
    let mut ys: Vec<f64> = Vec::with_capacity(mx.len());
    let mut i = 0;
    while i < mx.len() {
        // Tied metric values collapse onto the mean of their targets, which
        // keeps the knot abscissae strictly increasing and the map monotone.
        let mut j = i;
        let mut target_sum = 0.0;
        while j < mx.len() && mx[j] == mx[i] {
            target_sum += sample_quantile(&sy, (j as f64 + 0.5) / n);
            j += 1;
        }
        xs.push(mx[i]);
        ys.push(target_sum / (j - i) as f64);
        i = j;
    }
    Ok(CalibrationMap { xs, ys })
}

/// Grouping key of one rate-distortion curve.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub source_id: String,
    pub codec: String,
    pub preset: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub bitrate_kbps: f64,
    /// Subjective quality, calibrated and dimensionless.
    pub s: f64,
    /// Metric quality on the same scale.
    pub s_hat: f64,
}

/// One rate-distortion curve pair over at least three strictly increasing
/// bitrates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdGroup {
    pub key: GroupKey,
    pub points: Vec<RdPoint>,
    pub duration_s: f64,
}

impl RdGroup {
    pub fn validate(&self) -> Result<(), RdaeError> {
        if self.points.len() < 3 {
            return Err(RdaeError::BadGroup(
                self.key.clone(),
                format!("{} bitrate points, need >= 3", self.points.len()),
            ));
        }
        for w in self.points.windows(2) {
            if !(w[1].bitrate_kbps > w[0].bitrate_kbps) {
                return Err(RdaeError::BadGroup(
                    self.key.clone(),
                    "bitrates are not strictly increasing".into(),
                ));
            }
        }
        if !(self.duration_s > 0.0) {
            return Err(RdaeError::BadGroup(
                self.key.clone(),
                "non-positive duration".into(),
            ));
        }
        Ok(())
    }
}

/// Exact integrals of the positive and negative parts of `s - s_hat` over
/// the group's bitrate span, in quality x kbps.
pub fn upc_ocp(group: &RdGroup) -> (f64, f64) {
    let mut upc = 0.0;
    let mut ocp = 0.0;
    for w in group.points.windows(2) {
        let db = w[1].bitrate_kbps - w[0].bitrate_kbps;
        let d0 = w[0].s - w[0].s_hat;
        let d1 = w[1].s - w[1].s_hat;
        if d0 >= 0.0 && d1 >= 0.0 {
            upc += 0.5 * (d0 + d1) * db;
        } else if d0 <= 0.0 && d1 <= 0.0 {
            ocp += -0.5 * (d0 + d1) * db;
        } else {
            // One sign change inside the segment; split at the crossing.
            let t = db * d0 / (d0 - d1);
            if d0 > 0.0 {
                upc += 0.5 * d0 * t;
                ocp += -0.5 * d1 * (db - t);
            } else {
                ocp += -0.5 * d0 * t;
                upc += 0.5 * d1 * (db - t);
            }
        }
    }
    (upc.max(0.0), ocp.max(0.0))
}

/// Why a candidate group was left out of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedGroup {
    pub key: GroupKey,
    pub reason: String,
}

/// Output of [`build_rd_groups`]: retained groups plus an account of every
/// dropped one.
#[derive(Debug, Clone, Serialize)]
pub struct RdGroupBuild {
    pub groups: Vec<RdGroup>,
    pub dropped: Vec<DroppedGroup>,
    /// Min-max bounds of the subjective scores used for normalization.
    pub subjective_range: (f64, f64),
    pub calibrated: bool,
}

/// Partitions the catalog into (source, codec, preset) groups over items
/// holding both a subjective and a metric score.
///
/// Reference items are excluded (they are not rate-distortion points).
/// When `calibrate` is set the metric scores first pass through
/// [`align_scales`] fitted on the full dataset; both sides are then min-max
/// normalized by the subjective range. Groups with fewer than three scored
/// bitrate points are dropped and reported.
pub fn build_rd_groups(
    catalog: &ItemCatalog,
    subjective: &QualityScores,
    metric: &BTreeMap<String, f64>,
    calibrate: bool,
) -> Result<RdGroupBuild, RdaeError> {
    // Paired samples over items carrying both scores.
    let mut pairs: Vec<(&str, f64, f64)> = Vec::new(); // (item, subj, metric)
    for item in &catalog.items {
        if item.is_reference {
            continue;
        }
        if let (Some(s), Some(&m)) = (subjective.q(&item.item_id), metric.get(&item.item_id)) {
            pairs.push((&item.item_id, s, m));
        }
    }
    if pairs.is_empty() {
        return Err(RdaeError::NoValidGroups(0));
    }

    let subj_sample: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let metric_sample: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let cal = if calibrate {
        Some(align_scales(&metric_sample, &subj_sample)?)
    } else {
        None
    };

    let s_min = subj_sample.iter().cloned().fold(f64::INFINITY, f64::min);
    let s_max = subj_sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(s_max > s_min) {
        return Err(RdaeError::DegenerateInput(
            "subjective scores are constant; cannot normalize".into(),
        ));
    }
    let norm = |v: f64| (v - s_min) / (s_max - s_min);

    let scored: BTreeMap<&str, (f64, f64)> = pairs
        .iter()
        .map(|&(id, s, m)| {
            let m_cal = cal.as_ref().map_or(m, |c| c.apply(m));
            (id, (norm(s), norm(m_cal)))
        })
        .collect();

    let mut by_key: BTreeMap<GroupKey, Vec<(f64, f64, f64, f64)>> = BTreeMap::new();
    for item in &catalog.items {
        if item.is_reference {
            continue;
        }
        if let Some(&(s, s_hat)) = scored.get(item.item_id.as_str()) {
            by_key
                .entry(GroupKey {
                    source_id: item.source_id.clone(),
                    codec: item.codec.clone(),
                    preset: item.preset.clone(),
                })
                .or_default()
                .push((item.actual_bitrate_kbps, s, s_hat, item.duration_s));
        }
    }

    let mut groups = Vec::new();
    let mut dropped = Vec::new();
    for (key, mut pts) in by_key {
        if pts.len() < 3 {
            dropped.push(DroppedGroup {
                key,
                reason: format!("{} scored bitrate points, need >= 3", pts.len()),
            });
            continue;
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if pts.windows(2).any(|w| w[1].0 == w[0].0) {
            dropped.push(DroppedGroup {
                key,
                reason: "duplicate actual bitrate within group".into(),
            });
            continue;
        }
        let duration = pts.iter().map(|p| p.3).sum::<f64>() / pts.len() as f64;
        let group = RdGroup {
            key,
            points: pts
                .into_iter()
                .map(|(b, s, s_hat, _)| RdPoint {
                    bitrate_kbps: b,
                    s,
                    s_hat,
                })
                .collect(),
            duration_s: duration,
        };
        group.validate()?;
        groups.push(group);
    }
    if groups.is_empty() {
        return Err(RdaeError::NoValidGroups(dropped.len()));
    }
    Ok(RdGroupBuild {
        groups,
        dropped,
        subjective_range: (s_min, s_max),
        calibrated: calibrate,
    })
}

/// Units of the reported UPC/OCP/RDAE values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RdaeUnits {
    /// quality x kbps, integrating over the bitrate axis directly.
    #[default]
    QualityKbps,
    /// quality x gigabits: per-group values are multiplied by the clip
    /// duration and divided by 1e6 before averaging.
    Gigabits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRdae {
    pub key: GroupKey,
    pub upc: f64,
    pub ocp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdaeReport {
    pub per_group: Vec<GroupRdae>,
    pub upc_mean: f64,
    pub ocp_mean: f64,
    /// `upc_mean + ocp_mean`.
    pub rdae: f64,
    pub units: RdaeUnits,
    pub alignment_note: String,
}

/// Averages per-group UPC/OCP across groups; RDAE is their sum.
pub fn rdae(groups: &[RdGroup], units: RdaeUnits) -> Result<RdaeReport, RdaeError> {
    if groups.is_empty() {
        return Err(RdaeError::NoValidGroups(0));
    }
    let mut per_group = Vec::with_capacity(groups.len());
    for g in groups {
        g.validate()?;
        let (mut upc, mut ocp) = upc_ocp(g);
        if units == RdaeUnits::Gigabits {
            // quality*kbps * s -> quality*kbit -> quality*Gbit
            upc = upc * g.duration_s / 1e6;
            ocp = ocp * g.duration_s / 1e6;
        }
        per_group.push(GroupRdae {
            key: g.key.clone(),
            upc,
            ocp,
        });
    }
    per_group.sort_by(|a, b| a.key.cmp(&b.key));
    let n = per_group.len() as f64;
    let upc_mean = per_group.iter().map(|g| g.upc).sum::<f64>() / n;
    let ocp_mean = per_group.iter().map(|g| g.ocp).sum::<f64>() / n;
    Ok(RdaeReport {
        per_group,
        upc_mean,
        ocp_mean,
        rdae: upc_mean + ocp_mean,
        units,
        alignment_note:
            "scales aligned by monotone quantile matching (closed-form 1-D optimal transport)"
                .into(),
    })
}

impl RdaeReport {
    /// CSV rendering: `source_id,codec,preset,upc,ocp`.
    pub fn to_csv<W: std::io::Write>(&self, writer: W) -> Result<(), std::io::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["source_id", "codec", "preset", "upc", "ocp"])
            .map_err(std::io::Error::other)?;
        for g in &self.per_group {
            w.write_record([
                g.key.source_id.as_str(),
                g.key.codec.as_str(),
                g.key.preset.as_str(),
                &g.upc.to_string(),
                &g.ocp.to_string(),
            ])
            .map_err(std::io::Error::other)?;
        }
        w.flush()?;
        Ok(())
    }
}
