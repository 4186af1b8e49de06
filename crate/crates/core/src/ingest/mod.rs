//! Raw snapshot logs and channel manifests to labelled, filtered,
//! split channel corpora.

mod corpus;
mod labels;
mod series;
mod snapshot;
mod split;

pub use corpus::{
    assemble_corpus, assign_distant_labels, filter_and_cap_channels, load_embedding, parse_manifest, write_embedding,
    AssemblyReport, ChannelRecord, EmbeddingFormat, EmbeddingSource, ManifestChannel, ManifestVideo, VideoObservation,
};
pub use labels::{merge_factuality_labels, FactualityLabel, RawFactualityLabel};
pub use series::{build_hourly_series, ActionKind, HourlyCumulativeSeries, Interpolation};
pub use snapshot::{parse_snapshot_log, LineError, Snapshot, SnapshotLog};
pub use split::{apportion, split_dataset, DatasetSplit, SplitPart, SplitRatios};

/// Hours in the observation window.
pub const HOURS: usize = 168;
/// Days in the observation window.
pub const DAYS: usize = 7;
pub const OBSERVATION_MINUTES: u32 = 7 * 24 * 60;
/// Length of one sentence embedding.
pub const EMBEDDING_DIM: usize = 768;
pub const MIN_VIDEOS_PER_CHANNEL: usize = 20;
pub const MAX_VIDEOS_PER_CHANNEL: usize = 100;
