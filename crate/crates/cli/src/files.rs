//! Stage file names and (de)serialisation helpers. All writes go through a
//! temporary file and a rename so readers never see partial output.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use attention_cycles::eval::VideoSource;
use attention_cycles::features::{read_feature_matrix, sidecar_path, MatrixFormat};
use attention_cycles::ingest::ChannelRecord;
use attention_cycles::{FeatureMatrix, PredictionDistribution};

use crate::commands::CliError;

pub const CORPUS: &str = "corpus.jsonl";
pub const SPLIT: &str = "split.json";
pub const PREPARE_REPORT: &str = "prepare.json";
pub const SELECTION: &str = "selection.json";
pub const CHANNEL_MODEL: &str = "channel.model.json";
pub const CHANNEL_PREDICTIONS: &str = "channel.predictions.jsonl";
pub const CHANNEL_SUMMARY: &str = "channel.summary.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const ABLATION_JSON: &str = "ablation.json";
pub const ABLATION_TXT: &str = "ablation.txt";

pub fn features_path(out: &Path, set: &str, format: MatrixFormat) -> PathBuf {
    let ext = match format {
        MatrixFormat::Csv => "csv",
        MatrixFormat::Jsonl => "jsonl",
    };
    out.join(format!("features.{set}.{ext}"))
}

pub fn channel_features_path(out: &Path, format: MatrixFormat) -> PathBuf {
    features_path(out, "channel", format)
}

pub fn video_model(out: &Path, s: VideoSource) -> PathBuf {
    out.join(format!("video.{}.model.json", s.key()))
}

pub fn video_predictions(out: &Path, s: VideoSource) -> PathBuf {
    out.join(format!("video.{}.predictions.jsonl", s.key()))
}

pub fn video_summary(out: &Path, s: VideoSource) -> PathBuf {
    out.join(format!("video.{}.summary.json", s.key()))
}

/// Finds `features.{set}.csv` or `.jsonl`.
pub fn find_features(out: &Path, set: &str) -> Option<(PathBuf, MatrixFormat)> {
    [MatrixFormat::Csv, MatrixFormat::Jsonl]
        .into_iter()
        .map(|f| (features_path(out, set, f), f))
        .find(|(p, _)| p.is_file() && sidecar_path(p).is_file())
}

pub fn read_features(out: &Path, set: &str) -> Result<Option<FeatureMatrix>, CliError> {
    match find_features(out, set) {
        Some((p, f)) => Ok(Some(read_feature_matrix(&p, f)?)),
        None => Ok(None),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
    f.sync_all().map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut buf, &r).map_err(|e| CliError::Runtime(e.to_string()))?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    crate::config::require_file(path)?;
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    crate::config::require_file(path)?;
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn read_corpus(out: &Path) -> Result<Vec<ChannelRecord>, CliError> {
    read_jsonl(&out.join(CORPUS))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionRow {
    pub id: String,
    pub distribution: PredictionDistribution,
}
