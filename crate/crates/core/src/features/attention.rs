//! Video-level attention-cycle features.
//!
//! Notation in comments: `UA(h)` is the cumulative count by the end of hour
//! `h` (with `UA(0) = 0`), `UA_d(i) = UA(24 i)` the count by the end of day
//! `i`, and `inc(h) = UA(h) - UA(h - 1)` the count added during hour `h`.
//! Every ratio goes through [`safediv`], so zero denominators give 0.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{FeatureDictionary, FeatureVector};
use crate::ingest::{ActionKind, HourlyCumulativeSeries, VideoObservation, DAYS, EMBEDDING_DIM, HOURS};
use crate::{safediv, Error, Result};

pub const MAJORITY_SHARES: [f64; 3] = [0.5, 0.7, 0.9];
pub const PERIOD_COUNT: usize = 6;

pub const DAILY_BLOCK_LEN: usize = 27;
pub const HOURLY_BLOCK_LEN: usize = HOURS - 1;
pub const SHAPE_BLOCK_LEN: usize = 6;
pub const FIRST_DAY_BLOCK_LEN: usize = 3 * PERIOD_COUNT;
pub const PER_ACTION_LEN: usize = DAILY_BLOCK_LEN + HOURLY_BLOCK_LEN + SHAPE_BLOCK_LEN + FIRST_DAY_BLOCK_LEN;
pub const PER_RATIO_LEN: usize = DAYS + (DAYS - 1) + PERIOD_COUNT;
pub const RATIO_BLOCK_LEN: usize = 4 * PER_RATIO_LEN;
pub const ATTENTION_LEN: usize = 4 * PER_ACTION_LEN + RATIO_BLOCK_LEN;
pub const TEXT_LEN: usize = 2 * EMBEDDING_DIM;

/// Attention feature count the original write-up reports. The dictionary
/// here has [`ATTENTION_LEN`] (= 948) features; the four-feature gap has no
/// documented source.
pub const REPORTED_ATTENTION_LEN: usize = 952;

/// Six consecutive `(start, end]` hour intervals covering the first day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct FirstDayPeriods([(usize, usize); PERIOD_COUNT]);

impl Default for FirstDayPeriods {
    fn default() -> Self {
        Self([(0, 1), (1, 3), (3, 6), (6, 12), (12, 18), (18, 24)])
    }
}

impl FirstDayPeriods {
    pub fn new(bounds: [(usize, usize); PERIOD_COUNT]) -> Result<Self> {
        let mut expected_start = 0;
        for &(start, end) in &bounds {
            if start != expected_start || end <= start {
                return Err(Error::Config(format!(
                    "first-day periods must be consecutive non-empty intervals from hour 0: {bounds:?}"
                )));
            }
            expected_start = end;
        }
        if expected_start != 24 {
            return Err(Error::Config(format!(
                "first-day periods must end at hour 24: {bounds:?}"
            )));
        }
        Ok(Self(bounds))
    }

    pub fn bounds(&self) -> &[(usize, usize); PERIOD_COUNT] {
        &self.0
    }
}

impl TryFrom<Vec<(usize, usize)>> for FirstDayPeriods {
    type Error = Error;
    fn try_from(v: Vec<(usize, usize)>) -> Result<Self> {
        let arr: [(usize, usize); PERIOD_COUNT] = v
            .try_into()
            .map_err(|v: Vec<_>| Error::Config(format!("expected {PERIOD_COUNT} periods, got {}", v.len())))?;
        Self::new(arr)
    }
}

impl From<FirstDayPeriods> for Vec<(usize, usize)> {
    fn from(p: FirstDayPeriods) -> Self {
        p.0.to_vec()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttentionConfig {
    pub periods: FirstDayPeriods,
    /// Let hour 1 compete for the peak in PDI and PS. Off by default, which
    /// restricts both to hours 2..=168.
    pub include_first_hour: bool,
}

impl AttentionConfig {
    fn version(&self) -> String {
        let periods: Vec<String> = self.periods.0.iter().map(|(a, b)| format!("{a}-{b}")).collect();
        format!(
            "attention-v1;periods={};first_hour={}",
            periods.join(","),
            self.include_first_hour
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioKind {
    /// likes / views
    Positive,
    /// dislikes / views
    Negative,
    /// comments / views
    Engagement,
    /// likes / (likes + dislikes)
    Controversiality,
}

impl RatioKind {
    pub const ALL: [RatioKind; 4] = [Self::Positive, Self::Negative, Self::Engagement, Self::Controversiality];

    pub fn key(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Engagement => "engagement",
            Self::Controversiality => "controversiality",
        }
    }

    /// Numerator and denominator from the four action amounts (views,
    /// likes, dislikes, comments) over the same span.
    fn parts(self, a: [f64; 4]) -> (f64, f64) {
        let [views, likes, dislikes, comments] = a;
        match self {
            Self::Positive => (likes, views),
            Self::Negative => (dislikes, views),
            Self::Engagement => (comments, views),
            Self::Controversiality => (likes, likes + dislikes),
        }
    }

    pub fn ratio(self, amounts: [f64; 4]) -> f64 {
        let (n, d) = self.parts(amounts);
        safediv(n, d)
    }
}

/// Daily shares `D`, cumulative shares `DC`, day-over-day increases `DI`
/// (days 2..=7) and average hourly increase per day `AHI`.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyBlock {
    pub d: [f64; DAYS],
    pub dc: [f64; DAYS],
    pub di: [f64; DAYS - 1],
    pub ahi: [f64; DAYS],
}

impl DailyBlock {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(DAILY_BLOCK_LEN);
        v.extend_from_slice(&self.d);
        v.extend_from_slice(&self.dc);
        v.extend_from_slice(&self.di);
        v.extend_from_slice(&self.ahi);
        v
    }
}

pub fn daily_block(series: &HourlyCumulativeSeries) -> DailyBlock {
    daily_block_with(series, &hourly_increases(series))
}

fn daily_block_with(series: &HourlyCumulativeSeries, hi: &[f64]) -> DailyBlock {
    let total = series.at_day(DAYS);
    let mut block = DailyBlock {
        d: [0.0; DAYS],
        dc: [0.0; DAYS],
        di: [0.0; DAYS - 1],
        ahi: [0.0; DAYS],
    };
    for i in 1..=DAYS {
        let cur = series.at_day(i);
        let prev = series.at_day(i - 1);
        block.d[i - 1] = safediv(cur - prev, total);
        block.dc[i - 1] = safediv(cur, total);
        if i >= 2 {
            block.di[i - 2] = safediv(cur - prev, prev);
        }
        block.ahi[i - 1] = mean_hi(hi, (i - 1) * 24 + 1, i * 24);
    }
    block
}

/// `HI(h) = inc(h) / UA(h - 1)` for h in 2..=168; element 0 is `HI(2)`.
pub fn hourly_increases(series: &HourlyCumulativeSeries) -> Vec<f64> {
    (2..=HOURS)
        .map(|h| safediv(series.at_hour(h) - series.at_hour(h - 1), series.at_hour(h - 1)))
        .collect()
}

/// Mean of `HI(h)` over the hours `first..=last` that have one (h >= 2);
/// 0 when none do.
fn mean_hi(hi: &[f64], first: usize, last: usize) -> f64 {
    let first = first.max(2);
    if first > last {
        return 0.0;
    }
    let terms = &hi[first - 2..=last - 2];
    terms.iter().sum::<f64>() / terms.len() as f64
}

/// Majority intervals, peak delay, alive interval and peak share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeFeatures {
    /// Shortest window holding 50/70/90% of the week's actions, in hours.
    pub mi: [f64; 3],
    /// Hour with the largest increment; 0 when no hour in range has one.
    pub pdi: f64,
    /// Last hour with a positive increment; 0 for an empty series.
    pub ai: f64,
    /// Largest single-hour increment as a share of the week's total.
    pub ps: f64,
}

impl ShapeFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.mi[0], self.mi[1], self.mi[2], self.pdi, self.ai, self.ps]
    }
}

pub fn shape_features(series: &HourlyCumulativeSeries, include_first_hour: bool) -> ShapeFeatures {
    let total = series.total();
    if total == 0.0 {
        return ShapeFeatures {
            mi: [0.0; 3],
            pdi: 0.0,
            ai: 0.0,
            ps: 0.0,
        };
    }
    let mi = MAJORITY_SHARES.map(|t| majority_interval(series, t) as f64);

    let first = if include_first_hour { 1 } else { 2 };
    let mut best_hour = 0usize;
    let mut best_inc = 0.0;
    for h in first..=HOURS {
        let inc = series.at_hour(h) - series.at_hour(h - 1);
        if inc > best_inc {
            best_inc = inc;
            best_hour = h;
        }
    }
    let ai = (1..=HOURS)
        .rev()
        .find(|&h| series.at_hour(h) > series.at_hour(h - 1))
        .unwrap_or(0);
    ShapeFeatures {
        mi,
        pdi: best_hour as f64,
        ai: ai as f64,
        ps: safediv(best_inc, total),
    }
}

/// Smallest `j - i` over `0 <= i < j <= 168` with
/// `UA(j) - UA(i) >= share * UA(168)`; 0 for an empty series.
///
/// Because `UA` is non-decreasing, the best start for each end moves right
/// monotonically, so a two-pointer sweep suffices.
pub fn majority_interval(series: &HourlyCumulativeSeries, share: f64) -> usize {
    let total = series.total();
    if total == 0.0 {
        return 0;
    }
    let need = share * total;
    let mut best = HOURS;
    let mut start = 0usize;
    for end in 1..=HOURS {
        let ua_end = series.at_hour(end);
        while start + 1 < end && ua_end - series.at_hour(start + 1) >= need {
            start += 1;
        }
        if ua_end - series.at_hour(start) >= need {
            best = best.min(end - start);
        }
    }
    best
}

/// Per first-day period: share of the week's total, increase over the
/// previous period, and average hourly increase.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstDayBlock {
    pub share: [f64; PERIOD_COUNT],
    pub increase: [f64; PERIOD_COUNT],
    pub ahi: [f64; PERIOD_COUNT],
}

impl FirstDayBlock {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(FIRST_DAY_BLOCK_LEN);
        v.extend_from_slice(&self.share);
        v.extend_from_slice(&self.increase);
        v.extend_from_slice(&self.ahi);
        v
    }
}

pub fn first_day_block(series: &HourlyCumulativeSeries, periods: &FirstDayPeriods) -> FirstDayBlock {
    first_day_block_with(series, periods, &hourly_increases(series))
}

fn first_day_block_with(series: &HourlyCumulativeSeries, periods: &FirstDayPeriods, hi: &[f64]) -> FirstDayBlock {
    let total = series.total();
    let mut block = FirstDayBlock {
        share: [0.0; PERIOD_COUNT],
        increase: [0.0; PERIOD_COUNT],
        ahi: [0.0; PERIOD_COUNT],
    };
    let mut prev_inc = 0.0;
    for (p, &(start, end)) in periods.bounds().iter().enumerate() {
        let inc = series.at_hour(end) - series.at_hour(start);
        block.share[p] = safediv(inc, total);
        block.increase[p] = safediv(inc, prev_inc);
        block.ahi[p] = mean_hi(hi, start + 1, end);
        prev_inc = inc;
    }
    block
}

/// Per ratio kind: ratio of daily increments (7), ratio of cumulative
/// counts through days 1..=6 (6), ratio of first-day period increments (6).
/// Rows follow [`RatioKind::ALL`].
pub fn ratio_block(video: &VideoObservation, periods: &FirstDayPeriods) -> [[f64; PER_RATIO_LEN]; 4] {
    let at_hour = |h: usize| ActionKind::ALL.map(|a| video.series(a).at_hour(h));
    let span = |from: usize, to: usize| -> [f64; 4] {
        let (a, b) = (at_hour(from), at_hour(to));
        [b[0] - a[0], b[1] - a[1], b[2] - a[2], b[3] - a[3]]
    };
    RatioKind::ALL.map(|kind| {
        let mut row = [0.0; PER_RATIO_LEN];
        let mut k = 0;
        for day in 1..=DAYS {
            row[k] = kind.ratio(span((day - 1) * 24, day * 24));
            k += 1;
        }
        for day in 1..DAYS {
            row[k] = kind.ratio(at_hour(day * 24));
            k += 1;
        }
        for &(start, end) in periods.bounds() {
            row[k] = kind.ratio(span(start, end));
            k += 1;
        }
        row
    })
}

fn action_names(action: ActionKind, names: &mut Vec<String>) {
    let a = action.key();
    names.extend((1..=DAYS).map(|i| format!("{a}.D.d{i}")));
    names.extend((1..=DAYS).map(|i| format!("{a}.DC.d{i}")));
    names.extend((2..=DAYS).map(|i| format!("{a}.DI.d{i}")));
    names.extend((1..=DAYS).map(|i| format!("{a}.AHI.d{i}")));
    names.extend((2..=HOURS).map(|h| format!("{a}.HI.h{h}")));
    names.extend(MAJORITY_SHARES.iter().map(|t| format!("{a}.MI.{t}")));
    names.push(format!("{a}.PDI"));
    names.push(format!("{a}.AI"));
    names.push(format!("{a}.PS"));
    for stat in ["share", "increase", "AHI"] {
        names.extend((1..=PERIOD_COUNT).map(|p| format!("{a}.period.{stat}.{p}")));
    }
}

fn ratio_names(kind: RatioKind, names: &mut Vec<String>) {
    let r = kind.key();
    names.extend((1..=DAYS).map(|i| format!("ratio.{r}.daily.d{i}")));
    names.extend((1..DAYS).map(|i| format!("ratio.{r}.cum.d{i}")));
    names.extend((1..=PERIOD_COUNT).map(|p| format!("ratio.{r}.period.{p}")));
}

/// Prefix shared by every feature derived from one action kind alone.
pub fn action_prefix(action: ActionKind) -> String {
    format!("{}.", action.key())
}

/// Prefix shared by every feature of one ratio kind.
pub fn ratio_prefix(kind: RatioKind) -> String {
    format!("ratio.{}.", kind.key())
}

pub fn text_names() -> Vec<String> {
    let mut names = Vec::with_capacity(TEXT_LEN);
    names.extend((0..EMBEDDING_DIM).map(|k| format!("text.title.{k}")));
    names.extend((0..EMBEDDING_DIM).map(|k| format!("text.desc.{k}")));
    names
}

/// Computes attention (and optionally text) vectors against frozen
/// dictionaries.
#[derive(Debug, Clone)]
pub struct AttentionExtractor {
    config: AttentionConfig,
    attention: Arc<FeatureDictionary>,
    text: Arc<FeatureDictionary>,
    full: Arc<FeatureDictionary>,
}

impl Default for AttentionExtractor {
    fn default() -> Self {
        Self::new(AttentionConfig::default())
    }
}

impl AttentionExtractor {
    pub fn new(config: AttentionConfig) -> Self {
        let mut names = Vec::with_capacity(ATTENTION_LEN);
        for a in ActionKind::ALL {
            action_names(a, &mut names);
        }
        for r in RatioKind::ALL {
            ratio_names(r, &mut names);
        }
        let attention = FeatureDictionary::new(config.version(), names).expect("attention names are unique");
        let text = FeatureDictionary::new("text-v1", text_names()).expect("text names are unique");
        let full = attention.concat(&text).expect("text and attention names are disjoint");
        Self {
            config,
            attention: Arc::new(attention),
            text: Arc::new(text),
            full: Arc::new(full),
        }
    }

    pub fn config(&self) -> &AttentionConfig {
        &self.config
    }

    pub fn attention_dictionary(&self) -> &Arc<FeatureDictionary> {
        &self.attention
    }

    pub fn text_dictionary(&self) -> &Arc<FeatureDictionary> {
        &self.text
    }

    pub fn full_dictionary(&self) -> &Arc<FeatureDictionary> {
        &self.full
    }

    /// The 218 features of one action kind.
    pub fn action_block(&self, series: &HourlyCumulativeSeries) -> Vec<f64> {
        let hi = hourly_increases(series);
        let mut v = Vec::with_capacity(PER_ACTION_LEN);
        v.extend(daily_block_with(series, &hi).to_vec());
        v.extend_from_slice(&hi);
        v.extend(shape_features(series, self.config.include_first_hour).to_vec());
        v.extend(first_day_block_with(series, &self.config.periods, &hi).to_vec());
        v
    }

    fn attention_values(&self, video: &VideoObservation) -> Vec<f64> {
        let mut v = Vec::with_capacity(ATTENTION_LEN + TEXT_LEN);
        for a in ActionKind::ALL {
            v.extend(self.action_block(video.series(a)));
        }
        for row in ratio_block(video, &self.config.periods) {
            v.extend_from_slice(&row);
        }
        v
    }

    pub fn attention(&self, video: &VideoObservation) -> FeatureVector {
        FeatureVector::new(self.attention.clone(), self.attention_values(video))
            .expect("attention features are finite by construction")
    }

    /// Title then description embedding; both must be present.
    pub fn text(&self, video: &VideoObservation) -> Result<FeatureVector> {
        let (Some(title), Some(desc)) = (&video.title_embedding, &video.description_embedding) else {
            return Err(Error::invalid(format!(
                "video {} lacks text embeddings",
                video.video_id
            )));
        };
        let mut v = Vec::with_capacity(TEXT_LEN);
        for emb in [title, desc] {
            if emb.len() != EMBEDDING_DIM {
                return Err(Error::EmbeddingLength {
                    id: video.video_id.clone(),
                    len: emb.len(),
                    expected: EMBEDDING_DIM,
                });
            }
            v.extend(emb.iter().map(|&x| f64::from(x)));
        }
        FeatureVector::new(self.text.clone(), v)
    }

    /// Attention features followed by the text dimensions when the video has
    /// both embeddings; attention alone when it has neither.
    pub fn full(&self, video: &VideoObservation) -> Result<FeatureVector> {
        match (&video.title_embedding, &video.description_embedding) {
            (None, None) => Ok(self.attention(video)),
            (Some(_), Some(_)) => {
                let mut v = self.attention_values(video);
                v.extend(self.text(video)?.into_values());
                FeatureVector::new(self.full.clone(), v)
            }
            _ => Err(Error::invalid(format!(
                "video {} has only one of its two text embeddings",
                video.video_id
            ))),
        }
    }
}

/// Attention features under the default configuration.
pub fn extract_video_attention_vector(video: &VideoObservation) -> FeatureVector {
    AttentionExtractor::default().attention(video)
}

/// Attention plus text features under the default configuration.
pub fn extract_video_full_vector(video: &VideoObservation) -> Result<FeatureVector> {
    AttentionExtractor::default().full(video)
}
