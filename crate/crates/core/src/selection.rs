//! Univariate relevance scoring and top-k union feature selection.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::features::FeatureMatrix;
use crate::ingest::FactualityLabel;
use crate::{Error, Result};

pub const DEFAULT_TOP_K: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Anova,
    Pearson,
    Spearman,
}

impl SelectionMethod {
    pub const ALL: [SelectionMethod; 3] = [Self::Anova, Self::Pearson, Self::Spearman];

    /// Key used for ranking: F by value, correlations by magnitude.
    fn rank_key(self, score: f64) -> f64 {
        match self {
            Self::Anova => score,
            Self::Pearson | Self::Spearman => score.abs(),
        }
    }
}

/// One-way ANOVA F statistic of `x` grouped by `labels`.
///
/// Zero within-group variance yields `+inf` when the group means differ
/// and 0 when they do not.
pub fn anova_f(x: &[f64], labels: &[FactualityLabel]) -> Result<f64> {
    if x.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} values for {} labels",
            x.len(),
            labels.len()
        )));
    }
    let mut n = [0usize; 3];
    let mut sum = [0.0f64; 3];
    for (&v, &l) in x.iter().zip(labels) {
        n[l.ordinal()] += 1;
        sum[l.ordinal()] += v;
    }
    let k = n.iter().filter(|&&c| c > 0).count();
    if k < 2 {
        return Err(Error::SingleClass);
    }
    let total = x.len();
    let grand = sum.iter().sum::<f64>() / total as f64;
    let mean: Vec<f64> = (0..3)
        .map(|c| if n[c] > 0 { sum[c] / n[c] as f64 } else { 0.0 })
        .collect();
    let ss_between: f64 = (0..3).map(|c| n[c] as f64 * (mean[c] - grand).powi(2)).sum();
    let ss_within: f64 = x
        .iter()
        .zip(labels)
        .map(|(&v, &l)| (v - mean[l.ordinal()]).powi(2))
        .sum();
    // Treat round-off from identical values as exact zeros.
    let scale = x.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let eps = 1e-12 * scale;
    let ss_between = if ss_between <= eps { 0.0 } else { ss_between };
    let ss_within = if ss_within <= eps { 0.0 } else { ss_within };
    if ss_between == 0.0 {
        return Ok(0.0);
    }
    if ss_within == 0.0 || total == k {
        return Ok(f64::INFINITY);
    }
    let ms_between = ss_between / (k - 1) as f64;
    let ms_within = ss_within / (total - k) as f64;
    Ok(ms_between / ms_within)
}

/// Sample Pearson correlation; 0 if either side has no variance.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("correlation needs at least two samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 1e-300 || syy <= 1e-300 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson on average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    pearson_r(&average_ranks(x), &average_ranks(y))
}

/// Serializes `+inf` as the string `"inf"` since JSON has no infinity.
mod score_serde {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad score {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFeature {
    pub name: String,
    #[serde(with = "score_serde")]
    pub score: f64,
}

/// Ranked scores per method (best first, top-k only) and the union of the
/// selected names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub k: usize,
    pub anova: Vec<ScoredFeature>,
    pub pearson: Vec<ScoredFeature>,
    pub spearman: Vec<ScoredFeature>,
    /// In source dictionary order.
    pub selected: Vec<String>,
}

impl SelectionReport {
    pub fn top(&self, method: SelectionMethod) -> &[ScoredFeature] {
        match method {
            SelectionMethod::Anova => &self.anova,
            SelectionMethod::Pearson => &self.pearson,
            SelectionMethod::Spearman => &self.spearman,
        }
    }
}

/// Scores every column with all three methods and keeps the union of the
/// per-method top `k`. Ranking is by F value or |correlation|, ties broken
/// by feature name. Fit on training rows only.
pub fn select_top_union(matrix: &FeatureMatrix, labels: &[FactualityLabel], k: usize) -> Result<SelectionReport> {
    if matrix.n_rows() != labels.len() {
        return Err(Error::invalid(format!(
            "{} rows for {} labels",
            matrix.n_rows(),
            labels.len()
        )));
    }
    let y: Vec<f64> = labels.iter().map(|l| l.ordinal() as f64).collect();
    let scores: Vec<[f64; 3]> = (0..matrix.n_cols())
        .into_par_iter()
        .map(|j| {
            let col = matrix.matrix().column(j);
            Ok([anova_f(&col, labels)?, pearson_r(&col, &y)?, spearman_rho(&col, &y)?])
        })
        .collect::<Result<_>>()?;

    let names = matrix.dictionary().names();
    let mut selected = BTreeSet::new();
    let mut tops: Vec<Vec<ScoredFeature>> = Vec::with_capacity(3);
    for (m, method) in SelectionMethod::ALL.into_iter().enumerate() {
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| {
            let (ka, kb) = (method.rank_key(scores[a][m]), method.rank_key(scores[b][m]));
            kb.partial_cmp(&ka)
                .unwrap_or(Ordering::Equal)
                .then_with(|| names[a].cmp(&names[b]))
        });
        order.truncate(k);
        selected.extend(order.iter().copied());
        tops.push(
            order
                .into_iter()
                .map(|j| ScoredFeature {
                    name: names[j].clone(),
                    score: scores[j][m],
                })
                .collect(),
        );
    }
    let spearman = tops.pop().unwrap_or_default();
    let pearson = tops.pop().unwrap_or_default();
    let anova = tops.pop().unwrap_or_default();
    Ok(SelectionReport {
        k,
        anova,
        pearson,
        spearman,
        selected: selected.into_iter().map(|j| names[j].clone()).collect(),
    })
}
