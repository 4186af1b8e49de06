use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{AGG_LEN, STATS_LEN};
use crate::features::attention::{action_prefix, ratio_prefix};
use crate::features::{AttentionConfig, RatioKind, TEXT_LEN};
use crate::ingest::{ActionKind, SplitRatios};
use crate::learners::{LearnerConfig, SmoteConfig};
use crate::selection::DEFAULT_TOP_K;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Video,
    #[default]
    Channel,
}

/// Video-level representation a video classifier is trained on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VideoSource {
    #[default]
    Attention,
    Text,
}

impl VideoSource {
    pub fn key(self) -> &'static str {
        match self {
            VideoSource::Attention => "attention",
            VideoSource::Text => "text",
        }
    }
}

/// Blocks a channel representation can be assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelGroup {
    /// Mean title and description embeddings.
    TextAvg,
    /// Aggregated predictions of the text video model.
    TextAggPred,
    /// Mean of the selected attention features.
    AttentionAvg,
    /// Channel statistics.
    AttentionStats,
    /// Aggregated predictions of the attention video model.
    AttentionAggPred,
}

impl ChannelGroup {
    /// Canonical column order of a channel representation.
    pub const ALL: [ChannelGroup; 5] = [
        Self::TextAvg,
        Self::TextAggPred,
        Self::AttentionAvg,
        Self::AttentionStats,
        Self::AttentionAggPred,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Self::TextAvg => "text_avg",
            Self::TextAggPred => "text_agg_pred",
            Self::AttentionAvg => "attention_avg",
            Self::AttentionStats => "attention_stats",
            Self::AttentionAggPred => "attention_agg_pred",
        }
    }

    /// Video stage this group depends on, if any.
    pub fn video_source(self) -> Option<VideoSource> {
        match self {
            Self::TextAggPred => Some(VideoSource::Text),
            Self::AttentionAvg | Self::AttentionAggPred => Some(VideoSource::Attention),
            Self::TextAvg | Self::AttentionStats => None,
        }
    }

    /// Width of the group given the number of selected attention features.
    pub fn dims(self, n_selected_attention: usize) -> usize {
        match self {
            Self::TextAvg => TEXT_LEN,
            Self::TextAggPred | Self::AttentionAggPred => AGG_LEN,
            Self::AttentionAvg => n_selected_attention,
            Self::AttentionStats => STATS_LEN,
        }
    }
}

/// Width of a channel representation built from `groups`.
pub fn channel_dims(groups: &[ChannelGroup], n_selected_attention: usize) -> usize {
    groups.iter().map(|g| g.dims(n_selected_attention)).sum()
}

/// A named slice of the attention dictionary: one action kind's block or
/// one ratio's block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    Views,
    Likes,
    Dislikes,
    Comments,
    Positive,
    Negative,
    Engagement,
    Controversiality,
}

impl FeatureFamily {
    pub fn prefix(self) -> String {
        match self {
            Self::Views => action_prefix(ActionKind::Views),
            Self::Likes => action_prefix(ActionKind::Likes),
            Self::Dislikes => action_prefix(ActionKind::Dislikes),
            Self::Comments => action_prefix(ActionKind::Comments),
            Self::Positive => ratio_prefix(RatioKind::Positive),
            Self::Negative => ratio_prefix(RatioKind::Negative),
            Self::Engagement => ratio_prefix(RatioKind::Engagement),
            Self::Controversiality => ratio_prefix(RatioKind::Controversiality),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageSmote {
    pub video: bool,
    pub channel: bool,
    pub k_neighbors: usize,
}

impl Default for StageSmote {
    fn default() -> Self {
        Self {
            video: true,
            channel: true,
            k_neighbors: SmoteConfig::default().k_neighbors,
        }
    }
}

/// Everything that determines one experiment run, given the corpus and
/// its split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub stage: Stage,
    /// Video representation evaluated when `stage` is `video`.
    pub video_source: VideoSource,
    /// Channel representation; used when `stage` is `channel`.
    pub groups: Vec<ChannelGroup>,
    /// Restricts attention features to these families before selection.
    /// Empty means every family.
    pub families: Vec<FeatureFamily>,
    pub video_learner: LearnerConfig,
    pub channel_learner: LearnerConfig,
    pub smote: StageSmote,
    /// Features kept per selection method.
    pub top_k: usize,
    pub seed: u64,
    pub split: SplitRatios,
    /// Predict training videos out of fold with this many channel folds
    /// instead of with the final model.
    pub oof: Option<usize>,
    pub attention: AttentionConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            name: "attention_all".into(),
            stage: Stage::Channel,
            video_source: VideoSource::Attention,
            groups: vec![
                ChannelGroup::AttentionAvg,
                ChannelGroup::AttentionStats,
                ChannelGroup::AttentionAggPred,
            ],
            families: Vec::new(),
            video_learner: LearnerConfig::default(),
            channel_learner: LearnerConfig::default(),
            smote: StageSmote::default(),
            top_k: DEFAULT_TOP_K,
            seed: 0,
            split: SplitRatios::default(),
            oof: None,
            attention: AttentionConfig::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        if self.stage == Stage::Channel && self.groups.is_empty() {
            return Err(Error::Config(format!(
                "experiment {:?} has no channel groups",
                self.name
            )));
        }
        let mut groups = self.groups.clone();
        groups.sort();
        groups.dedup();
        if groups.len() != self.groups.len() {
            return Err(Error::Config(format!(
                "experiment {:?} repeats a channel group",
                self.name
            )));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if self.smote.k_neighbors == 0 {
            return Err(Error::Config("smote.k_neighbors must be at least 1".into()));
        }
        if self.oof.is_some_and(|k| k < 2) {
            return Err(Error::Config("oof needs at least 2 folds".into()));
        }
        Ok(())
    }

    /// Groups in canonical column order.
    pub fn ordered_groups(&self) -> Vec<ChannelGroup> {
        ChannelGroup::ALL
            .into_iter()
            .filter(|g| self.groups.contains(g))
            .collect()
    }

    /// Video stages the spec needs, in a fixed order.
    pub fn video_sources(&self) -> Vec<VideoSource> {
        match self.stage {
            Stage::Video => vec![self.video_source],
            Stage::Channel => {
                let mut s: Vec<VideoSource> = self.groups.iter().filter_map(|g| g.video_source()).collect();
                s.sort();
                s.dedup();
                s
            }
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a `.json` or `.toml` spec, chosen by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::GbdtConfig;

    #[test]
    fn toml_round_trip() {
        let spec = ExperimentSpec::from_toml_str(
            r#"
            name = "bert_all"
            groups = ["text_avg", "text_agg_pred"]
            seed = 7
            [video_learner]
            kind = "logistic"
            l2 = 0.01
            [channel_learner]
            kind = "gbdt"
            n_rounds = 50
            [smote]
            channel = false
            "#,
        )
        .unwrap();
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.video_sources(), [VideoSource::Text]);
        assert!(matches!(spec.video_learner, LearnerConfig::Logistic(c) if c.l2 == 0.01 && c.max_iter == 5000));
        assert_eq!(
            spec.channel_learner,
            LearnerConfig::Gbdt(GbdtConfig {
                n_rounds: 50,
                ..Default::default()
            })
        );
        assert!(spec.smote.video && !spec.smote.channel);
        let back = ExperimentSpec::from_toml_str(&toml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ExperimentSpec::from_toml_str("groups = []").is_err());
        assert!(ExperimentSpec::from_toml_str(r#"groups = ["attention_avg", "attention_avg"]"#).is_err());
        assert!(ExperimentSpec::from_toml_str(r#"groups = ["nope"]"#).is_err());
        assert!(ExperimentSpec::from_toml_str("top_k = 0").is_err());
        assert!(ExperimentSpec::from_toml_str("unknown = 1").is_err());
    }

    #[test]
    fn group_dims() {
        use ChannelGroup::*;
        assert_eq!(channel_dims(&[TextAvg, TextAggPred], 124), 1545);
        assert_eq!(
            channel_dims(&[AttentionAvg, AttentionStats, AttentionAggPred], 124),
            146
        );
        assert_eq!(channel_dims(&[TextAvg, TextAggPred, AttentionAvg], 124), 1669);
    }
}
