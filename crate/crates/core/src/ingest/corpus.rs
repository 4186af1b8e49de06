use std::collections::HashMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    build_hourly_series, ActionKind, FactualityLabel, HourlyCumulativeSeries, Interpolation, RawFactualityLabel,
    Snapshot, EMBEDDING_DIM, MAX_VIDEOS_PER_CHANNEL, MIN_VIDEOS_PER_CHANNEL,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoObservation {
    pub video_id: String,
    pub channel_id: String,
    pub published_at: DateTime<Utc>,
    /// One series per action kind, in [`ActionKind::ALL`] order.
    pub series: [HourlyCumulativeSeries; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_embedding: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description_embedding: Option<Vec<f32>>,
    #[serde(default)]
    pub distant_label: Option<FactualityLabel>,
}

impl VideoObservation {
    pub fn new(
        video_id: impl Into<String>,
        channel_id: impl Into<String>,
        published_at: DateTime<Utc>,
        series: [HourlyCumulativeSeries; 4],
    ) -> Result<Self> {
        for (kind, s) in ActionKind::ALL.iter().zip(&series) {
            if s.action() != *kind {
                return Err(Error::invalid(format!(
                    "series slot {kind} holds {} counts",
                    s.action()
                )));
            }
        }
        Ok(Self {
            video_id: video_id.into(),
            channel_id: channel_id.into(),
            published_at,
            series,
            title_embedding: None,
            description_embedding: None,
            distant_label: None,
        })
    }

    pub fn series(&self, action: ActionKind) -> &HourlyCumulativeSeries {
        &self.series[action as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub channel_id: String,
    pub subscriber_count: u64,
    pub label: FactualityLabel,
    pub videos: Vec<VideoObservation>,
}

/// One line of the channel manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestChannel {
    pub channel_id: String,
    pub subscriber_count: u64,
    pub raw_factuality: RawFactualityLabel,
    pub videos: Vec<ManifestVideo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestVideo {
    pub video_id: String,
    pub published_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_embedding: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description_embedding: Option<PathBuf>,
}

#[derive(Deserialize)]
struct RawManifestChannel {
    channel_id: String,
    subscriber_count: u64,
    raw_factuality: Option<String>,
    #[serde(default)]
    videos: Vec<ManifestVideo>,
}

/// Parses the JSONL channel manifest. Unlike the snapshot log this is
/// strict: a channel without a rating is a load error.
pub fn parse_manifest<R: BufRead>(reader: R) -> Result<Vec<ManifestChannel>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawManifestChannel = serde_json::from_str(&line).map_err(|e| Error::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        let Some(rating) = raw.raw_factuality else {
            return Err(Error::Line {
                line: line_no,
                message: format!("channel {} has no factuality rating", raw.channel_id),
            });
        };
        let raw_factuality = rating.parse().map_err(|e: Error| Error::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(ManifestChannel {
            channel_id: raw.channel_id,
            subscriber_count: raw.subscriber_count,
            raw_factuality,
            videos: raw.videos,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    /// A JSON array of numbers.
    #[default]
    Json,
    /// Raw little-endian 32-bit floats.
    F32le,
}

impl std::str::FromStr for EmbeddingFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "f32le" => Ok(Self::F32le),
            _ => Err(Error::invalid(format!("unknown embedding format {s:?}"))),
        }
    }
}

pub fn load_embedding(path: &Path, format: EmbeddingFormat) -> Result<Vec<f32>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let values: Vec<f32> = match format {
        EmbeddingFormat::Json => serde_json::from_slice(&bytes)?,
        EmbeddingFormat::F32le => {
            if bytes.len() % 4 != 0 {
                return Err(Error::invalid(format!(
                    "{}: {} bytes is not a whole number of f32 values",
                    path.display(),
                    bytes.len()
                )));
            }
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect()
        }
    };
    if values.len() != EMBEDDING_DIM {
        return Err(Error::EmbeddingLength {
            id: path.display().to_string(),
            len: values.len(),
            expected: EMBEDDING_DIM,
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{}: non-finite embedding value",
            path.display()
        )));
    }
    Ok(values)
}

pub fn write_embedding(path: &Path, values: &[f32], format: EmbeddingFormat) -> Result<()> {
    let bytes = match format {
        EmbeddingFormat::Json => serde_json::to_vec(values)?,
        EmbeddingFormat::F32le => values.iter().flat_map(|v| v.to_le_bytes()).collect(),
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Where embedding files referenced by the manifest live.
#[derive(Debug, Clone)]
pub struct EmbeddingSource {
    pub dir: PathBuf,
    pub format: EmbeddingFormat,
}

#[derive(Debug, Default, Clone, Serialize)]
pub struct AssemblyReport {
    /// Manifest videos with no snapshot at all.
    pub missing_snapshots: Vec<String>,
    /// Snapshots whose video is not in the manifest.
    pub orphan_snapshots: usize,
}

/// Joins the manifest with the snapshot log and reconstructs every video's
/// four hourly series. Labels are merged here; filtering and distant
/// labelling are separate steps.
pub fn assemble_corpus(
    manifest: &[ManifestChannel],
    snapshots: &[Snapshot],
    embeddings: Option<&EmbeddingSource>,
    interpolation: Interpolation,
) -> Result<(Vec<ChannelRecord>, AssemblyReport)> {
    let mut by_video: HashMap<&str, Vec<Snapshot>> = HashMap::new();
    for s in snapshots {
        by_video.entry(s.video_id.as_str()).or_default().push(s.clone());
    }

    let mut report = AssemblyReport::default();
    let mut used = 0usize;
    let mut channels = Vec::with_capacity(manifest.len());
    for mc in manifest {
        let mut videos = Vec::with_capacity(mc.videos.len());
        for mv in &mc.videos {
            let Some(snaps) = by_video.get(mv.video_id.as_str()) else {
                report.missing_snapshots.push(mv.video_id.clone());
                continue;
            };
            used += snaps.len();
            let series = [
                build_hourly_series(snaps, ActionKind::Views, interpolation)?,
                build_hourly_series(snaps, ActionKind::Likes, interpolation)?,
                build_hourly_series(snaps, ActionKind::Dislikes, interpolation)?,
                build_hourly_series(snaps, ActionKind::Comments, interpolation)?,
            ];
            let mut video = VideoObservation::new(&mv.video_id, &mc.channel_id, mv.published_at, series)?;
            if let Some(src) = embeddings {
                let load = |p: &Option<PathBuf>| -> Result<Option<Vec<f32>>> {
                    p.as_ref()
                        .map(|p| load_embedding(&src.dir.join(p), src.format))
                        .transpose()
                };
                video.title_embedding = load(&mv.title_embedding)?;
                video.description_embedding = load(&mv.description_embedding)?;
            }
            videos.push(video);
        }
        channels.push(ChannelRecord {
            channel_id: mc.channel_id.clone(),
            subscriber_count: mc.subscriber_count,
            label: mc.raw_factuality.merged(),
            videos,
        });
    }
    report.orphan_snapshots = snapshots.len() - used;
    if !report.missing_snapshots.is_empty() {
        log::warn!(
            "{} manifest videos have no snapshots and were skipped",
            report.missing_snapshots.len()
        );
    }
    Ok((channels, report))
}

/// Drops channels with fewer than 20 videos and keeps only the 100 most
/// recently published videos of larger ones. Videos end up ordered newest
/// first (ties broken by video id).
pub fn filter_and_cap_channels(channels: Vec<ChannelRecord>) -> Vec<ChannelRecord> {
    channels
        .into_iter()
        .filter(|c| c.videos.len() >= MIN_VIDEOS_PER_CHANNEL)
        .map(|mut c| {
            c.videos.sort_by(|a, b| {
                b.published_at
                    .cmp(&a.published_at)
                    .then_with(|| a.video_id.cmp(&b.video_id))
            });
            c.videos.truncate(MAX_VIDEOS_PER_CHANNEL);
            c
        })
        .collect()
}

/// Labels every video with its channel's factuality.
pub fn assign_distant_labels(mut channels: Vec<ChannelRecord>) -> Vec<ChannelRecord> {
    for c in channels.iter_mut() {
        for v in c.videos.iter_mut() {
            v.distant_label = Some(c.label);
        }
    }
    channels
}

#[cfg(test)]
mod tests {
    use chrono::{Duration, TimeZone};

    use super::*;

    fn video(id: &str, channel: &str, hours_after: i64) -> VideoObservation {
        let t0 = Utc.with_ymd_and_hms(2020, 2, 1, 0, 0, 0).unwrap();
        let series = ActionKind::ALL.map(HourlyCumulativeSeries::zeros);
        VideoObservation::new(id, channel, t0 + Duration::hours(hours_after), series).unwrap()
    }

    fn channel(id: &str, n: usize, label: FactualityLabel) -> ChannelRecord {
        ChannelRecord {
            channel_id: id.into(),
            subscriber_count: 10,
            label,
            videos: (0..n).map(|i| video(&format!("{id}-{i}"), id, i as i64)).collect(),
        }
    }

    #[test]
    fn cap_keeps_newest_hundred() {
        let out = filter_and_cap_channels(vec![channel("c", 150, FactualityLabel::High)]);
        assert_eq!(out[0].videos.len(), 100);
        // newest are indices 149..=50
        assert_eq!(out[0].videos[0].video_id, "c-149");
        assert_eq!(out[0].videos[99].video_id, "c-50");
    }

    #[test]
    fn filter_boundaries() {
        let out = filter_and_cap_channels(vec![
            channel("small", 19, FactualityLabel::Low),
            channel("edge", 20, FactualityLabel::Low),
        ]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].channel_id, "edge");
        assert_eq!(out[0].videos.len(), 20);
    }

    #[test]
    fn distant_labels_follow_owner() {
        let chans = assign_distant_labels(vec![
            channel("a", 3, FactualityLabel::High),
            channel("b", 2, FactualityLabel::Low),
            channel("empty", 0, FactualityLabel::Mixed),
        ]);
        assert!(chans[0]
            .videos
            .iter()
            .all(|v| v.distant_label == Some(FactualityLabel::High)));
        assert!(chans[1]
            .videos
            .iter()
            .all(|v| v.distant_label == Some(FactualityLabel::Low)));
        assert!(chans[2].videos.is_empty());
    }

    #[test]
    fn manifest_requires_rating() {
        let good = r#"{"channel_id":"c","subscriber_count":5,"raw_factuality":"Mostly Factual","videos":[{"video_id":"v","published_at":"2020-02-01T00:00:00Z"}]}"#;
        let parsed = parse_manifest(good.as_bytes()).unwrap();
        assert_eq!(parsed[0].raw_factuality, RawFactualityLabel::MostlyFactual);
        assert_eq!(parsed[0].videos.len(), 1);

        let missing = r#"{"channel_id":"c","subscriber_count":5,"videos":[]}"#;
        let err = parse_manifest(missing.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("no factuality rating"));
    }

    #[test]
    fn embedding_formats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let values: Vec<f32> = (0..EMBEDDING_DIM).map(|i| i as f32 * 0.25).collect();
        for format in [EmbeddingFormat::Json, EmbeddingFormat::F32le] {
            let p = dir.path().join("e.bin");
            write_embedding(&p, &values, format).unwrap();
            assert_eq!(load_embedding(&p, format).unwrap(), values);
        }
        let p = dir.path().join("short.json");
        std::fs::write(&p, "[1.0, 2.0]").unwrap();
        assert!(matches!(
            load_embedding(&p, EmbeddingFormat::Json),
            Err(Error::EmbeddingLength { len: 2, .. })
        ));
    }

    #[test]
    fn assemble_joins_snapshots() {
        let t0 = Utc.with_ymd_and_hms(2020, 2, 1, 0, 0, 0).unwrap();
        let manifest = vec![ManifestChannel {
            channel_id: "c".into(),
            subscriber_count: 1,
            raw_factuality: RawFactualityLabel::VeryLow,
            videos: vec![
                ManifestVideo {
                    video_id: "v1".into(),
                    published_at: t0,
                    title_embedding: None,
                    description_embedding: None,
                },
                ManifestVideo {
                    video_id: "v2".into(),
                    published_at: t0,
                    title_embedding: None,
                    description_embedding: None,
                },
            ],
        }];
        let snaps = vec![
            Snapshot {
                video_id: "v1".into(),
                observed_at: 60,
                views: 4,
                likes: 2,
                dislikes: 1,
                comments: 0,
            },
            Snapshot {
                video_id: "zz".into(),
                observed_at: 60,
                views: 4,
                likes: 2,
                dislikes: 1,
                comments: 0,
            },
        ];
        let (chans, report) = assemble_corpus(&manifest, &snaps, None, Interpolation::Locf).unwrap();
        assert_eq!(chans[0].label, FactualityLabel::Low);
        assert_eq!(chans[0].videos.len(), 1);
        assert_eq!(chans[0].videos[0].series(ActionKind::Likes).total(), 2.0);
        assert_eq!(report.missing_snapshots, vec!["v2".to_string()]);
        assert_eq!(report.orphan_snapshots, 1);
    }
}
