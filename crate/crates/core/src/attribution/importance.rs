use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{AttributionMethod, AttributionVector};
use crate::{Error, Result};

/// Dataset-level feature importance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<AttributionMethod>,
    pub feature_names: Vec<String>,
    /// Mean absolute attribution per feature.
    pub raw_scores: Vec<f64>,
    /// `raw / max(raw)`; all zero when every raw score is zero.
    pub normalized_scores: Vec<f64>,
    /// Feature names by normalized score, highest first; ties keep schema order.
    pub ranking: Vec<String>,
}

impl ImportanceReport {
    pub fn from_raw_scores(
        feature_names: Vec<String>,
        raw_scores: Vec<f64>,
        method: Option<AttributionMethod>,
    ) -> Result<Self> {
        if feature_names.len() != raw_scores.len() {
            return Err(Error::LengthMismatch {
                left: feature_names.len(),
                right: raw_scores.len(),
            });
        }
        if raw_scores.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidArgument(
                "raw importance scores must be finite and nonnegative".into(),
            ));
        }
        let max = raw_scores.iter().copied().fold(0.0, f64::max);
        let normalized_scores: Vec<f64> = if max > 0.0 {
            raw_scores.iter().map(|s| s / max).collect()
        } else {
            vec![0.0; raw_scores.len()]
        };
        let mut order: Vec<usize> = (0..feature_names.len()).collect();
        order.sort_by(|&a, &b| normalized_scores[b].total_cmp(&normalized_scores[a]));
        let ranking = order.iter().map(|&i| feature_names[i].clone()).collect();
        Ok(Self {
            method,
            feature_names,
            raw_scores,
            normalized_scores,
            ranking,
        })
    }

    pub fn normalized_score(&self, feature: &str) -> Option<f64> {
        self.feature_names
            .iter()
            .position(|f| f == feature)
            .map(|i| self.normalized_scores[i])
    }

    /// Two-column CSV `feature,normalized_score` in rank order.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feature", "normalized_score"])?;
        for name in &self.ranking {
            let score = self.normalized_score(name).expect("ranking names come from the report");
            w.write_record([name.as_str(), &score.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn top_k(&self, k: usize) -> &[String] {
        &self.ranking[..k.min(self.ranking.len())]
    }
}

/// Reduces per-instance attributions to mean absolute attribution per
/// feature, then normalizes by the largest score.
pub fn global_importance(
    attributions: &[AttributionVector],
    feature_names: &[String],
) -> Result<ImportanceReport> {
    let first = attributions.first().ok_or(Error::Empty)?;
    let p = feature_names.len();
    if attributions.iter().any(|a| a.values.len() != p) {
        return Err(Error::InconsistentWidth);
    }
    let mut raw = vec![0.0; p];
    for a in attributions {
        for (acc, v) in raw.iter_mut().zip(&a.values) {
            *acc += v.abs();
        }
    }
    let n = attributions.len() as f64;
    raw.iter_mut().for_each(|r| *r /= n);
    let method = attributions
        .iter()
        .all(|a| a.method == first.method)
        .then_some(first.method);
    ImportanceReport::from_raw_scores(feature_names.to_vec(), raw, method)
}

/// Agreement between two importance rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingComparison {
    pub k: usize,
    pub top_k_overlap: usize,
    /// Kendall rank correlation over the full rankings; absent when the two
    /// reports do not rank the same features.
    pub kendall_tau: Option<f64>,
    /// Features in both top-k lists, in the first report's order.
    pub common_top_k: Vec<String>,
    /// Set when the reports rank different feature sets.
    #[serde(default)]
    pub disjoint_schema: bool,
}

fn check_k(k: usize, a: &ImportanceReport, b: &ImportanceReport) -> Result<()> {
    let p = a.ranking.len().min(b.ranking.len());
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("k must lie in 1..={p}, got {k}")));
    }
    Ok(())
}

fn top_k_intersection(a: &ImportanceReport, b: &ImportanceReport, k: usize) -> Vec<String> {
    let in_b: HashSet<&String> = b.top_k(k).iter().collect();
    a.top_k(k).iter().filter(|n| in_b.contains(n)).cloned().collect()
}

fn same_feature_set(a: &ImportanceReport, b: &ImportanceReport) -> bool {
    let sa: HashSet<&String> = a.ranking.iter().collect();
    let sb: HashSet<&String> = b.ranking.iter().collect();
    sa == sb && a.ranking.len() == b.ranking.len()
}

/// Kendall tau between two rankings of the same items (no ties possible).
fn kendall_tau(a: &[String], b: &[String]) -> f64 {
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let pos_b: std::collections::HashMap<&String, usize> =
        b.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let rb: Vec<usize> = a.iter().map(|name| pos_b[name]).collect();
    let mut score: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            // in `a`, item i precedes item j
            score += if rb[i] < rb[j] { 1 } else { -1 };
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}

/// Top-k overlap and Kendall tau of two reports over the same features.
pub fn compare_rankings(
    a: &ImportanceReport,
    b: &ImportanceReport,
    k: usize,
) -> Result<RankingComparison> {
    if !same_feature_set(a, b) {
        return Err(Error::SchemaMismatch(
            "reports rank different feature sets".into(),
        ));
    }
    check_k(k, a, b)?;
    let common = top_k_intersection(a, b, k);
    Ok(RankingComparison {
        k,
        top_k_overlap: common.len(),
        kendall_tau: Some(kendall_tau(&a.ranking, &b.ranking)),
        common_top_k: common,
        disjoint_schema: false,
    })
}

/// Like [`compare_rankings`], but reports with different feature sets yield
/// only the top-k intersection, with `disjoint_schema` set and no tau.
pub fn compare_rankings_lenient(
    a: &ImportanceReport,
    b: &ImportanceReport,
    k: usize,
) -> Result<RankingComparison> {
    if same_feature_set(a, b) {
        return compare_rankings(a, b, k);
    }
    check_k(k, a, b)?;
    let common = top_k_intersection(a, b, k);
    Ok(RankingComparison {
        k,
        top_k_overlap: common.len(),
        kendall_tau: None,
        common_top_k: common,
        disjoint_schema: true,
    })
}
