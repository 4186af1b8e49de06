use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{ActionKind, OBSERVATION_MINUTES};

/// One poll of a video's cumulative counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub video_id: String,
    /// Minutes since publication.
    pub observed_at: u32,
    pub views: u64,
    pub likes: u64,
    pub dislikes: u64,
    pub comments: u64,
}

impl Snapshot {
    pub fn count(&self, action: ActionKind) -> u64 {
        match action {
            ActionKind::Views => self.views,
            ActionKind::Likes => self.likes,
            ActionKind::Dislikes => self.dislikes,
            ActionKind::Comments => self.comments,
        }
    }
}

// Signed fields so a negative count is reported as such instead of as a
// generic type error.
#[derive(Deserialize)]
struct RawSnapshot {
    video_id: String,
    observed_at: i64,
    views: i64,
    likes: i64,
    dislikes: i64,
    comments: i64,
}

impl TryFrom<RawSnapshot> for Snapshot {
    type Error = String;

    fn try_from(raw: RawSnapshot) -> Result<Self, String> {
        if raw.observed_at < 0 || raw.observed_at > i64::from(OBSERVATION_MINUTES) {
            return Err(format!(
                "observed_at {} outside [0, {OBSERVATION_MINUTES}]",
                raw.observed_at
            ));
        }
        let count = |name: &str, v: i64| -> Result<u64, String> {
            u64::try_from(v).map_err(|_| format!("negative {name} count {v}"))
        };
        Ok(Snapshot {
            video_id: raw.video_id,
            observed_at: raw.observed_at as u32,
            views: count("views", raw.views)?,
            likes: count("likes", raw.likes)?,
            dislikes: count("dislikes", raw.dislikes)?,
            comments: count("comments", raw.comments)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Default, Clone)]
pub struct SnapshotLog {
    pub snapshots: Vec<Snapshot>,
    pub errors: Vec<LineError>,
}

/// Parses a JSONL snapshot log. Bad lines are collected in
/// [`SnapshotLog::errors`] and parsing continues; blank lines are skipped.
pub fn parse_snapshot_log<R: BufRead>(reader: R) -> SnapshotLog {
    let mut log = SnapshotLog::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                log.errors.push(LineError {
                    line: line_no,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawSnapshot>(&line)
            .map_err(|e| e.to_string())
            .and_then(Snapshot::try_from);
        match parsed {
            Ok(s) => log.snapshots.push(s),
            Err(message) => log.errors.push(LineError { line: line_no, message }),
        }
    }
    log
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_line() {
        let input = r#"{"video_id":"a","observed_at":30,"views":10,"likes":1,"dislikes":0,"comments":0}"#;
        let log = parse_snapshot_log(input.as_bytes());
        assert!(log.errors.is_empty());
        assert_eq!(
            log.snapshots,
            vec![Snapshot {
                video_id: "a".into(),
                observed_at: 30,
                views: 10,
                likes: 1,
                dislikes: 0,
                comments: 0
            }]
        );
    }

    #[test]
    fn negative_count_is_reported_and_parsing_continues() {
        let input = concat!(
            r#"{"video_id":"a","observed_at":30,"views":-1,"likes":1,"dislikes":0,"comments":0}"#,
            "\n",
            "not json\n",
            r#"{"video_id":"b","observed_at":60,"views":5,"likes":1,"dislikes":0,"comments":2}"#,
            "\n"
        );
        let log = parse_snapshot_log(input.as_bytes());
        assert_eq!(log.snapshots.len(), 1);
        assert_eq!(log.snapshots[0].video_id, "b");
        assert_eq!(log.errors.len(), 2);
        assert_eq!(log.errors[0].line, 1);
        assert!(log.errors[0].message.contains("negative views"));
        assert_eq!(log.errors[1].line, 2);
    }

    #[test]
    fn observation_past_window_is_rejected() {
        let input = r#"{"video_id":"a","observed_at":10081,"views":1,"likes":0,"dislikes":0,"comments":0}"#;
        let log = parse_snapshot_log(input.as_bytes());
        assert!(log.snapshots.is_empty());
        assert_eq!(log.errors.len(), 1);
    }

    #[test]
    fn empty_stream() {
        let log = parse_snapshot_log("".as_bytes());
        assert!(log.snapshots.is_empty());
        assert!(log.errors.is_empty());
    }
}
