//! Channel-level representations: YouTube-style statistics, averaged video
//! features and aggregated video-classifier predictions.

use std::sync::Arc;

use crate::features::{FeatureDictionary, FeatureMatrix, FeatureVector};
use crate::ingest::{ActionKind, ChannelRecord, FactualityLabel};
use crate::learners::PredictionDistribution;
use crate::{safediv, Error, Result};

pub const STATS_LEN: usize = 13;
pub const AGG_LEN: usize = 9;

const MIN_SPAN_HOURS: f64 = 7.0 * 24.0;

pub fn stats_names() -> Vec<String> {
    [
        "stats.subscribers",
        "stats.views.hourly",
        "stats.views.daily",
        "stats.views.weekly",
        "stats.comments.hourly",
        "stats.comments.daily",
        "stats.comments.weekly",
        "stats.videos.count",
        "stats.videos.hourly",
        "stats.videos.daily",
        "stats.videos.weekly",
        "stats.videos.per_subscriber",
        "stats.views.gini",
    ]
    .map(String::from)
    .to_vec()
}

pub fn stats_dictionary() -> FeatureDictionary {
    FeatureDictionary::new("stats-v1", stats_names()).expect("static names are unique")
}

/// Observation span of a channel in hours: from its first publication to
/// seven days after its last, never shorter than seven days.
pub fn observation_span_hours(channel: &ChannelRecord) -> f64 {
    let first = channel.videos.iter().map(|v| v.published_at).min();
    let last = channel.videos.iter().map(|v| v.published_at).max();
    match (first, last) {
        (Some(first), Some(last)) => {
            let secs = (last - first).num_seconds() as f64 + MIN_SPAN_HOURS * 3600.0;
            (secs / 3600.0).max(MIN_SPAN_HOURS)
        }
        _ => MIN_SPAN_HOURS,
    }
}

/// Popularity (7), activity (5) and view concentration (1), in
/// [`stats_names`] order.
pub fn channel_statistics(channel: &ChannelRecord) -> Result<[f64; STATS_LEN]> {
    if channel.videos.is_empty() {
        return Err(Error::invalid(format!("channel {} has no videos", channel.channel_id)));
    }
    let hours = observation_span_hours(channel);
    let days = hours / 24.0;
    let weeks = days / 7.0;
    let final_views: Vec<f64> = channel
        .videos
        .iter()
        .map(|v| v.series(ActionKind::Views).total())
        .collect();
    let views: f64 = final_views.iter().sum();
    let comments: f64 = channel
        .videos
        .iter()
        .map(|v| v.series(ActionKind::Comments).total())
        .sum();
    let count = channel.videos.len() as f64;
    let subs = channel.subscriber_count as f64;
    Ok([
        subs,
        views / hours,
        views / days,
        views / weeks,
        comments / hours,
        comments / days,
        comments / weeks,
        count,
        count / hours,
        count / days,
        count / weeks,
        safediv(count, subs),
        gini(&final_views),
    ])
}

/// Gini index of non-negative values: after sorting ascending,
/// `2 * sum(k * x_k) / (n * sum(x)) - (n + 1) / n` with 1-based `k`.
/// Empty or all-zero input gives 0.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    let total: f64 = values.iter().sum();
    if n == 0 || total <= 0.0 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let weighted: f64 = sorted.iter().enumerate().map(|(k, x)| (k + 1) as f64 * x).sum();
    let n = n as f64;
    (2.0 * weighted / (n * total) - (n + 1.0) / n).max(0.0)
}

/// Mean of each column over the rows of `videos`, under a dictionary whose
/// names carry the `avg.` prefix.
pub fn average_video_features(videos: &FeatureMatrix, avg_dict: &Arc<FeatureDictionary>) -> Result<FeatureVector> {
    if videos.n_rows() == 0 {
        return Err(Error::invalid("cannot average zero videos"));
    }
    let expected = videos.dictionary().prefixed(AVG_PREFIX)?;
    if expected.fingerprint() != avg_dict.fingerprint() {
        return Err(Error::DictionaryMismatch(
            "averaged dictionary does not match the video dictionary".into(),
        ));
    }
    let mut sums = vec![0.0; videos.n_cols()];
    for row in videos.matrix().rows() {
        for (s, x) in sums.iter_mut().zip(row) {
            *s += x;
        }
    }
    let n = videos.n_rows() as f64;
    FeatureVector::new(avg_dict.clone(), sums.into_iter().map(|s| s / n).collect())
}

pub const AVG_PREFIX: &str = "avg.";

/// Names of the nine aggregate features for one prediction source, e.g.
/// `agg.attention.max.low`.
pub fn agg_names(source: &str) -> Vec<String> {
    let mut names = Vec::with_capacity(AGG_LEN);
    for stat in ["max", "mean", "share"] {
        for label in FactualityLabel::ALL {
            names.push(format!("agg.{source}.{stat}.{}", label.key()));
        }
    }
    names
}

/// Per class (Low, Mixed, High): maximum probability, mean probability,
/// and share of videos whose most likely class it is.
pub fn aggregate_predictions(dists: &[PredictionDistribution]) -> Result<[f64; AGG_LEN]> {
    if dists.is_empty() {
        return Err(Error::invalid("no video predictions to aggregate"));
    }
    let mut max = [0.0f64; 3];
    let mut sum = [0.0f64; 3];
    let mut votes = [0usize; 3];
    for d in dists {
        let p = d.as_array();
        for c in 0..3 {
            max[c] = max[c].max(p[c]);
            sum[c] += p[c];
        }
        votes[d.argmax().ordinal()] += 1;
    }
    let n = dists.len() as f64;
    let mut out = [0.0; AGG_LEN];
    for c in 0..3 {
        out[c] = max[c];
        out[3 + c] = sum[c] / n;
        out[6 + c] = votes[c] as f64 / n;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use chrono::{Duration, TimeZone, Utc};

    use super::*;
    use crate::ingest::{HourlyCumulativeSeries, VideoObservation, HOURS};
    use crate::Matrix;

    fn video(id: &str, day: i64, views: f64, comments: f64) -> VideoObservation {
        let t0 = Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap();
        let series = ActionKind::ALL.map(|a| {
            let total = match a {
                ActionKind::Views => views,
                ActionKind::Comments => comments,
                _ => 0.0,
            };
            HourlyCumulativeSeries::new(a, vec![total; HOURS]).unwrap()
        });
        VideoObservation::new(id, "c", t0 + Duration::days(day), series).unwrap()
    }

    fn dist(low: f64, mixed: f64, high: f64) -> PredictionDistribution {
        PredictionDistribution::new([low, mixed, high]).unwrap()
    }

    #[test]
    fn statistics_example() {
        // 7 days apart, so the span is 7 + 7 = 14 days
        let ch = ChannelRecord {
            channel_id: "c".into(),
            subscriber_count: 1000,
            label: FactualityLabel::High,
            videos: vec![video("a", 0, 100.0, 0.0), video("b", 7, 300.0, 14.0)],
        };
        let s = channel_statistics(&ch).unwrap();
        assert_eq!(s[0], 1000.0);
        assert!((s[3] - 200.0).abs() < 1e-9);
        assert!((s[2] - 400.0 / 14.0).abs() < 1e-9);
        assert!((s[1] - 400.0 / 336.0).abs() < 1e-9);
        assert!((s[5] - 1.0).abs() < 1e-12);
        assert_eq!(s[7], 2.0);
        assert!((s[11] - 0.002).abs() < 1e-15);
        assert!((s[12] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn statistics_single_video_zero_subscribers() {
        let ch = ChannelRecord {
            channel_id: "c".into(),
            subscriber_count: 0,
            label: FactualityLabel::Low,
            videos: vec![video("a", 0, 50.0, 1.0)],
        };
        let s = channel_statistics(&ch).unwrap();
        assert_eq!(s[7], 1.0);
        assert_eq!(s[11], 0.0);
        assert_eq!(s[12], 0.0);
        // span floored at one week
        assert!((s[3] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[5.0, 5.0, 5.0, 5.0]), 0.0);
        assert!((gini(&[0.0, 0.0, 0.0, 100.0]) - 0.75).abs() < 1e-15);
        assert_eq!(gini(&[100.0]), 0.0);
        assert_eq!(gini(&[0.0, 0.0]), 0.0);
        assert_eq!(gini(&[]), 0.0);
    }

    #[test]
    fn aggregate_example() {
        // given as (H, M, L) = (0.6, 0.3, 0.1) and (0.2, 0.5, 0.3)
        let a = aggregate_predictions(&[dist(0.1, 0.3, 0.6), dist(0.3, 0.5, 0.2)]).unwrap();
        let expect = [0.3, 0.5, 0.6, 0.2, 0.4, 0.4, 0.0, 0.5, 0.5];
        for (x, y) in a.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12, "{a:?}");
        }
    }

    #[test]
    fn aggregate_single_and_empty() {
        let d = dist(0.2, 0.7, 0.1);
        let a = aggregate_predictions(&[d, d, d]).unwrap();
        assert_eq!(&a[..3], &d.as_array());
        assert!((a[4] - 0.7).abs() < 1e-12);
        assert_eq!(&a[6..], &[0.0, 1.0, 0.0]);
        assert!(aggregate_predictions(&[]).is_err());
    }

    #[test]
    fn averaging() {
        let dict = Arc::new(FeatureDictionary::new("t", vec!["x".into(), "y".into()]).unwrap());
        let avg = Arc::new(dict.prefixed(AVG_PREFIX).unwrap());
        let m = FeatureMatrix::new(
            dict,
            vec!["a".into(), "b".into()],
            Matrix::new(2, 2, vec![0.2, 0.4, 0.6, 0.0]).unwrap(),
        )
        .unwrap();
        let v = average_video_features(&m, &avg).unwrap();
        assert!((v.get("avg.x").unwrap() - 0.4).abs() < 1e-15);
        assert!((v.get("avg.y").unwrap() - 0.2).abs() < 1e-15);
        let other = Arc::new(FeatureDictionary::new("t", vec!["avg.z".into(), "avg.y".into()]).unwrap());
        assert!(average_video_features(&m, &other).is_err());
    }
}
