//! Snapshot collection. The API client itself is out of scope; anything
//! implementing [`SnapshotSource`] can be polled on a schedule and written
//! to an append-only JSONL log that [`crate::ingest::parse_snapshot_log`]
//! reads back.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::ingest::Snapshot;
use crate::{Error, Result};

pub trait SnapshotSource {
    /// Counts for `video_id` as of `minute` minutes after publication, or
    /// `None` if the source has nothing for it.
    fn fetch(&mut self, video_id: &str, minute: u32) -> Result<Option<Snapshot>>;
}

/// Serves pre-recorded snapshots; the latest one at or before the requested
/// minute is returned.
#[derive(Debug, Default, Clone)]
pub struct InMemorySource {
    by_video: HashMap<String, Vec<Snapshot>>,
}

impl InMemorySource {
    pub fn new(snapshots: impl IntoIterator<Item = Snapshot>) -> Self {
        let mut by_video: HashMap<String, Vec<Snapshot>> = HashMap::new();
        for s in snapshots {
            by_video.entry(s.video_id.clone()).or_default().push(s);
        }
        for v in by_video.values_mut() {
            v.sort_by_key(|s| s.observed_at);
        }
        Self { by_video }
    }
}

impl SnapshotSource for InMemorySource {
    fn fetch(&mut self, video_id: &str, minute: u32) -> Result<Option<Snapshot>> {
        let Some(snaps) = self.by_video.get(video_id) else {
            return Ok(None);
        };
        let idx = snaps.partition_point(|s| s.observed_at <= minute);
        Ok(idx.checked_sub(1).map(|i| Snapshot {
            observed_at: minute,
            ..snaps[i].clone()
        }))
    }
}

pub struct SnapshotWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl SnapshotWriter {
    /// Opens `path` for appending, creating it if needed.
    pub fn append(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    pub fn write(&mut self, s: &Snapshot) -> Result<()> {
        serde_json::to_writer(&mut self.out, s)?;
        self.out.write_all(b"\n").map_err(|e| Error::io(&self.path, e))
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Polls every video at every scheduled minute and logs what comes back.
/// Returns the number of snapshots written.
pub fn collect<S: SnapshotSource>(
    source: &mut S,
    video_ids: &[String],
    schedule: &[u32],
    writer: &mut SnapshotWriter,
) -> Result<usize> {
    let mut written = 0;
    for &minute in schedule {
        for id in video_ids {
            if let Some(s) = source.fetch(id, minute)? {
                writer.write(&s)?;
                written += 1;
            }
        }
    }
    writer.flush()?;
    Ok(written)
}
