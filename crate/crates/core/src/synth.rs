//! Synthetic channels whose attention cycles depend on the factuality
//! class, for exercising the pipeline without the real corpus.
//!
//! Each video's hourly increments follow a two-sided geometric profile
//! around a sampled peak hour: rising at `decay^rise` per hour before the
//! peak and falling at `decay` per hour after it, with multiplicative
//! per-hour noise. Low-factuality channels default to an early, steep peak
//! and High ones to a late, flat one.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::{
    ActionKind, ChannelRecord, FactualityLabel, HourlyCumulativeSeries, ManifestChannel, ManifestVideo,
    RawFactualityLabel, Snapshot, VideoObservation, HOURS, MAX_VIDEOS_PER_CHANNEL, MIN_VIDEOS_PER_CHANNEL,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthProfile {
    /// Median peak hour (1-based) and log-scale spread around it.
    pub peak_median_hour: f64,
    pub peak_log_sigma: f64,
    /// Per-hour decay after the peak, in (0, 1].
    pub decay: f64,
    /// Standard deviation of the per-video decay around `decay`.
    pub decay_jitter: f64,
    /// The rise before the peak is `rise` times steeper than the fall.
    pub rise: f64,
    /// Log-scale standard deviation of the per-hour multiplicative noise.
    pub hour_noise: f64,
    /// Weekly view totals are log-normal with these parameters.
    pub log_views_mu: f64,
    pub log_views_sigma: f64,
    /// Expected likes, dislikes and comments per view.
    pub like_rate: f64,
    pub dislike_rate: f64,
    pub comment_rate: f64,
    /// Log-scale spread of per-video rates.
    pub rate_log_sigma: f64,
    /// Extra log-scale spread on dislikes only.
    pub controversy_skew: f64,
}

impl SynthProfile {
    pub fn low() -> Self {
        Self {
            peak_median_hour: 2.0,
            peak_log_sigma: 0.3,
            decay: 0.5,
            decay_jitter: 0.08,
            rise: 2.0,
            hour_noise: 0.3,
            log_views_mu: 9.0,
            log_views_sigma: 1.0,
            like_rate: 0.05,
            dislike_rate: 0.006,
            comment_rate: 0.01,
            rate_log_sigma: 0.3,
            controversy_skew: 0.4,
        }
    }

    pub fn mixed() -> Self {
        Self {
            peak_median_hour: 4.0,
            peak_log_sigma: 0.5,
            decay: 0.8,
            decay_jitter: 0.05,
            like_rate: 0.04,
            dislike_rate: 0.003,
            comment_rate: 0.006,
            controversy_skew: 0.2,
            ..Self::low()
        }
    }

    pub fn high() -> Self {
        Self {
            peak_median_hour: 8.0,
            peak_log_sigma: 0.9,
            decay: 0.95,
            decay_jitter: 0.02,
            like_rate: 0.03,
            dislike_rate: 0.002,
            comment_rate: 0.004,
            controversy_skew: 0.1,
            ..Self::low()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            self.peak_log_sigma,
            self.decay_jitter,
            self.hour_noise,
            self.log_views_sigma,
            self.like_rate,
            self.dislike_rate,
            self.comment_rate,
            self.rate_log_sigma,
            self.controversy_skew,
        ];
        if nonneg.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(
                "profile rates and spreads must be finite and non-negative".into(),
            ));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Config(format!("decay {} outside (0, 1]", self.decay)));
        }
        if !(self.peak_median_hour >= 1.0 && self.rise > 0.0 && self.log_views_mu.is_finite()) {
            return Err(Error::Config("peak hour must be >= 1 and rise positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProfiles {
    pub low: SynthProfile,
    pub mixed: SynthProfile,
    pub high: SynthProfile,
    /// Inclusive range of videos per channel.
    pub videos_per_channel: (usize, usize),
}

impl Default for SynthProfiles {
    fn default() -> Self {
        Self {
            low: SynthProfile::low(),
            mixed: SynthProfile::mixed(),
            high: SynthProfile::high(),
            videos_per_channel: (20, 60),
        }
    }
}

impl SynthProfiles {
    pub fn for_label(&self, label: FactualityLabel) -> &SynthProfile {
        match label {
            FactualityLabel::Low => &self.low,
            FactualityLabel::Mixed => &self.mixed,
            FactualityLabel::High => &self.high,
        }
    }
}

fn log_normal(mu: f64, sigma: f64) -> LogNormal<f64> {
    LogNormal::new(mu, sigma).expect("validated spread")
}

fn cumulative_counts(weights: &[f64], total: u64) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            (total as f64 * (acc / sum).min(1.0)).round()
        })
        .collect()
}

fn generate_video(
    video_id: String,
    channel_id: &str,
    published_at: DateTime<Utc>,
    profile: &SynthProfile,
    channel_decay_shift: f64,
    rng: &mut ChaCha8Rng,
) -> Result<VideoObservation> {
    let peak = log_normal(profile.peak_median_hour.ln(), profile.peak_log_sigma)
        .sample(rng)
        .clamp(1.0, HOURS as f64);
    let jitter = Normal::new(0.0, profile.decay_jitter).expect("validated spread");
    let decay = (profile.decay + channel_decay_shift + jitter.sample(rng)).clamp(0.05, 1.0);
    let views_total = log_normal(profile.log_views_mu, profile.log_views_sigma)
        .sample(rng)
        .round() as u64;

    let shape: Vec<f64> = (1..=HOURS)
        .map(|h| {
            let dist = h as f64 - peak;
            if dist < 0.0 {
                decay.powf(-dist * profile.rise)
            } else {
                decay.powf(dist)
            }
        })
        .collect();
    let noise = log_normal(0.0, profile.hour_noise);
    let rates = [
        1.0,
        profile.like_rate * log_normal(0.0, profile.rate_log_sigma).sample(rng),
        profile.dislike_rate
            * log_normal(
                0.0,
                (profile.rate_log_sigma.powi(2) + profile.controversy_skew.powi(2)).sqrt(),
            )
            .sample(rng),
        profile.comment_rate * log_normal(0.0, profile.rate_log_sigma).sample(rng),
    ];
    let mut series = Vec::with_capacity(4);
    for (kind, rate) in ActionKind::ALL.into_iter().zip(rates) {
        let weights: Vec<f64> = shape.iter().map(|w| w * noise.sample(rng)).collect();
        let total = (views_total as f64 * rate).round() as u64;
        series.push(HourlyCumulativeSeries::new(kind, cumulative_counts(&weights, total))?);
    }
    let series: [HourlyCumulativeSeries; 4] = series.try_into().expect("four action kinds");
    VideoObservation::new(video_id, channel_id, published_at, series)
}

/// One synthetic channel with `n_videos` videos, deterministic in `seed`.
pub fn generate_channel(
    channel_id: &str,
    label: FactualityLabel,
    profile: &SynthProfile,
    n_videos: usize,
    seed: u64,
) -> Result<ChannelRecord> {
    if !(MIN_VIDEOS_PER_CHANNEL..=MAX_VIDEOS_PER_CHANNEL).contains(&n_videos) {
        return Err(Error::invalid(format!(
            "n_videos {n_videos} outside [{MIN_VIDEOS_PER_CHANNEL}, {MAX_VIDEOS_PER_CHANNEL}]"
        )));
    }
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channel_decay_shift = Normal::new(0.0, profile.decay_jitter / 2.0)
        .expect("validated spread")
        .sample(&mut rng);
    let subscriber_count = log_normal(11.5, 1.0).sample(&mut rng).round() as u64;
    let start = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap() + Duration::hours(rng.random_range(0..24 * 90));
    let mut published_at = start;
    let mut videos = Vec::with_capacity(n_videos);
    for i in 0..n_videos {
        published_at += Duration::minutes(rng.random_range(60..3 * 24 * 60));
        videos.push(generate_video(
            format!("{channel_id}-v{i:03}"),
            channel_id,
            published_at,
            profile,
            channel_decay_shift,
            &mut rng,
        )?);
    }
    videos.reverse();
    Ok(ChannelRecord {
        channel_id: channel_id.to_string(),
        subscriber_count,
        label,
        videos,
    })
}

/// `sizes[c]` channels of each class, ids `ch0000`, `ch0001`, ... in class
/// order. Every non-empty class needs at least 4 channels and at least two
/// classes must be present.
pub fn generate_dataset(sizes: [usize; 3], profiles: &SynthProfiles, seed: u64) -> Result<Vec<ChannelRecord>> {
    let present: Vec<usize> = sizes.iter().copied().filter(|&s| s > 0).collect();
    if present.len() < 2 || present.iter().any(|&s| s < 4) {
        return Err(Error::invalid(format!(
            "need at least two classes with at least 4 channels each, got {sizes:?}"
        )));
    }
    let (lo, hi) = profiles.videos_per_channel;
    if lo > hi {
        return Err(Error::Config(format!("empty videos_per_channel range ({lo}, {hi})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::new();
    for label in FactualityLabel::ALL {
        for _ in 0..sizes[label.ordinal()] {
            let n_videos = rng.random_range(lo..=hi);
            let channel_seed: u64 = rng.random();
            jobs.push((format!("ch{:04}", jobs.len()), label, n_videos, channel_seed));
        }
    }
    jobs.into_par_iter()
        .map(|(id, label, n, s)| generate_channel(&id, label, profiles.for_label(label), n, s))
        .collect()
}

fn raw_label(label: FactualityLabel) -> RawFactualityLabel {
    match label {
        FactualityLabel::Low => RawFactualityLabel::Low,
        FactualityLabel::Mixed => RawFactualityLabel::Mixed,
        FactualityLabel::High => RawFactualityLabel::High,
    }
}

/// Hourly snapshots (minutes 60, 120, ..., 10080) for every video.
pub fn snapshots_for(channel: &ChannelRecord) -> Vec<Snapshot> {
    let mut out = Vec::with_capacity(channel.videos.len() * HOURS);
    for v in &channel.videos {
        for h in 1..=HOURS {
            let c = |k: ActionKind| v.series(k).at_hour(h) as u64;
            out.push(Snapshot {
                video_id: v.video_id.clone(),
                observed_at: 60 * h as u32,
                views: c(ActionKind::Views),
                likes: c(ActionKind::Likes),
                dislikes: c(ActionKind::Dislikes),
                comments: c(ActionKind::Comments),
            });
        }
    }
    out
}

pub fn manifest_for(channel: &ChannelRecord) -> ManifestChannel {
    ManifestChannel {
        channel_id: channel.channel_id.clone(),
        subscriber_count: channel.subscriber_count,
        raw_factuality: raw_label(channel.label),
        videos: channel
            .videos
            .iter()
            .map(|v| ManifestVideo {
                video_id: v.video_id.clone(),
                published_at: v.published_at,
                title_embedding: None,
                description_embedding: None,
            })
            .collect(),
    }
}

/// Writes `snapshots.jsonl` and `manifest.jsonl` into `dir`, in the formats
/// the ingest loaders read.
pub fn write_corpus(channels: &[ChannelRecord], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let snap_path = dir.join("snapshots.jsonl");
    let man_path = dir.join("manifest.jsonl");
    let mut snaps = BufWriter::new(File::create(&snap_path).map_err(|e| Error::io(&snap_path, e))?);
    let mut man = BufWriter::new(File::create(&man_path).map_err(|e| Error::io(&man_path, e))?);
    for c in channels {
        for s in snapshots_for(c) {
            serde_json::to_writer(&mut snaps, &s)?;
            snaps.write_all(b"\n").map_err(|e| Error::io(&snap_path, e))?;
        }
        serde_json::to_writer(&mut man, &manifest_for(c))?;
        man.write_all(b"\n").map_err(|e| Error::io(&man_path, e))?;
    }
    snaps.flush().map_err(|e| Error::io(&snap_path, e))?;
    man.flush().map_err(|e| Error::io(&man_path, e))
}
