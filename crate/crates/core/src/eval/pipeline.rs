use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{EvaluationReport, SplitSizes};
use super::spec::{ChannelGroup, ExperimentSpec, Stage, VideoSource};
use crate::channel::{
    agg_names, aggregate_predictions, average_video_features, channel_statistics, stats_dictionary, AVG_PREFIX,
};
use crate::features::{AttentionConfig, AttentionExtractor, FeatureDictionary, FeatureMatrix, FeatureSet};
use crate::ingest::{ChannelRecord, DatasetSplit, FactualityLabel, SplitPart};
use crate::learners::{smote_oversample, LearnerConfig, PredictionDistribution, SmoteConfig, TrainedModel};
use crate::selection::{select_top_union, SelectionReport};
use crate::{Error, Matrix, Result};

/// Channel ids whose data reached one fitting step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub step: String,
    pub channels: Vec<String>,
}

/// Record of which channels fed every fit (selection, oversampling, model
/// training). [`LeakageAudit::check`] fails if any of them is outside the
/// training split.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub entries: Vec<AuditEntry>,
}

impl LeakageAudit {
    pub fn record<I, S>(&mut self, step: impl Into<String>, channels: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let channels: BTreeSet<String> = channels.into_iter().map(Into::into).collect();
        self.entries.push(AuditEntry {
            step: step.into(),
            channels: channels.into_iter().collect(),
        });
    }

    pub fn extend(&mut self, other: &LeakageAudit) {
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn check(&self, split: &DatasetSplit) -> Result<()> {
        for e in &self.entries {
            for id in &e.channels {
                match split.part_of(id) {
                    Some(SplitPart::Train) => {}
                    Some(part) => {
                        return Err(Error::Leakage(format!("{} used {part:?} channel {id}", e.step)));
                    }
                    None => return Err(Error::Leakage(format!("{} used unknown channel {id}", e.step))),
                }
            }
        }
        Ok(())
    }
}

/// Corpus, split and extracted video features shared by every run on the
/// same data.
pub struct Workspace<'a> {
    channels: &'a [ChannelRecord],
    split: &'a DatasetSplit,
    channel_parts: Vec<SplitPart>,
    /// Video row indices per channel.
    channel_rows: Vec<Vec<usize>>,
    video_channel: Vec<usize>,
    video_index: HashMap<String, usize>,
    labels: Vec<FactualityLabel>,
    attention: FeatureMatrix,
    text: Option<FeatureMatrix>,
}

impl<'a> Workspace<'a> {
    /// Extracts attention features for every video, and text features when
    /// every video has both embeddings.
    pub fn new(channels: &'a [ChannelRecord], split: &'a DatasetSplit, config: &AttentionConfig) -> Result<Self> {
        let extractor = AttentionExtractor::new(config.clone());
        let videos = || channels.iter().flat_map(|c| &c.videos);
        let attention = extractor.matrix(videos(), FeatureSet::Attention)?;
        let text = if videos().all(|v| v.title_embedding.is_some() && v.description_embedding.is_some()) {
            Some(extractor.matrix(videos(), FeatureSet::Text)?)
        } else {
            None
        };
        Self::with_features(channels, split, attention, text)
    }

    /// Uses precomputed video features, whose rows must list every video
    /// in corpus order.
    pub fn with_features(
        channels: &'a [ChannelRecord],
        split: &'a DatasetSplit,
        attention: FeatureMatrix,
        text: Option<FeatureMatrix>,
    ) -> Result<Self> {
        split.validate(channels)?;
        let mut channel_parts = Vec::with_capacity(channels.len());
        let mut channel_rows = Vec::with_capacity(channels.len());
        let mut video_channel = Vec::new();
        let mut video_index = HashMap::new();
        let mut labels = Vec::new();
        for (ci, c) in channels.iter().enumerate() {
            if c.videos.is_empty() {
                return Err(Error::invalid(format!("channel {} has no videos", c.channel_id)));
            }
            channel_parts.push(split.part_of(&c.channel_id).expect("validated split"));
            let mut rows = Vec::with_capacity(c.videos.len());
            for v in &c.videos {
                rows.push(video_channel.len());
                if video_index.insert(v.video_id.clone(), video_channel.len()).is_some() {
                    return Err(Error::invalid(format!("duplicate video id {}", v.video_id)));
                }
                video_channel.push(ci);
                labels.push(v.distant_label.unwrap_or(c.label));
            }
            channel_rows.push(rows);
        }
        for m in std::iter::once(&attention).chain(&text) {
            let aligned = m.row_ids().len() == video_channel.len()
                && m.row_ids().iter().all(|id| video_index.contains_key(id))
                && m.row_ids().iter().enumerate().all(|(i, id)| video_index[id] == i);
            if !aligned {
                return Err(Error::DictionaryMismatch(
                    "feature matrix rows do not follow the corpus video order".into(),
                ));
            }
        }
        Ok(Self {
            channels,
            split,
            channel_parts,
            channel_rows,
            video_channel,
            video_index,
            labels,
            attention,
            text,
        })
    }

    pub fn channels(&self) -> &[ChannelRecord] {
        self.channels
    }

    pub fn split(&self) -> &DatasetSplit {
        self.split
    }

    pub fn attention(&self) -> &FeatureMatrix {
        &self.attention
    }

    pub fn text(&self) -> Option<&FeatureMatrix> {
        self.text.as_ref()
    }

    /// Distant label of every video row.
    pub fn video_labels(&self) -> &[FactualityLabel] {
        &self.labels
    }

    pub fn video_rows(&self, part: SplitPart) -> Vec<usize> {
        (0..self.video_channel.len())
            .filter(|&r| self.channel_parts[self.video_channel[r]] == part)
            .collect()
    }

    pub fn channel_indices(&self, part: SplitPart) -> Vec<usize> {
        (0..self.channels.len())
            .filter(|&c| self.channel_parts[c] == part)
            .collect()
    }

    fn video_split_sizes(&self) -> SplitSizes {
        SplitSizes {
            train: self.video_rows(SplitPart::Train).len(),
            dev: self.video_rows(SplitPart::Dev).len(),
            test: self.video_rows(SplitPart::Test).len(),
        }
    }

    fn channel_split_sizes(&self) -> SplitSizes {
        SplitSizes {
            train: self.split.train.len(),
            dev: self.split.dev.len(),
            test: self.split.test.len(),
        }
    }

    /// Channels owning the rows of a video-level matrix.
    fn channels_of_videos(&self, m: &FeatureMatrix) -> Result<Vec<String>> {
        m.row_ids()
            .iter()
            .map(|id| {
                self.video_index
                    .get(id)
                    .map(|&r| self.channels[self.video_channel[r]].channel_id.clone())
                    .ok_or_else(|| Error::invalid(format!("unknown video row {id}")))
            })
            .collect()
    }

    /// Full video representation for one source, restricted to the spec's
    /// feature families for attention.
    pub fn base_matrix(&self, source: VideoSource, spec: &ExperimentSpec) -> Result<FeatureMatrix> {
        match source {
            VideoSource::Attention => {
                if spec.families.is_empty() {
                    return Ok(self.attention.clone());
                }
                let prefixes: Vec<String> = spec.families.iter().map(|f| f.prefix()).collect();
                let names: Vec<&String> = self
                    .attention
                    .dictionary()
                    .names()
                    .iter()
                    .filter(|n| prefixes.iter().any(|p| n.starts_with(p.as_str())))
                    .collect();
                self.attention.select_columns(&names)
            }
            VideoSource::Text => self.text_matrix().cloned(),
        }
    }

    fn text_matrix(&self) -> Result<&FeatureMatrix> {
        self.text
            .as_ref()
            .ok_or_else(|| Error::invalid("text features requested but some videos lack embeddings"))
    }
}

fn pick<T: Copy>(values: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| values[i]).collect()
}

/// Independent seed per pipeline step.
fn step_seed(seed: u64, step: u64) -> u64 {
    seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Oversamples (optionally) and trains, recording both steps in the audit.
fn fit_model(
    learner: &LearnerConfig,
    x: &FeatureMatrix,
    y: &[FactualityLabel],
    smote: Option<(usize, u64)>,
    channels: Vec<String>,
    step: &str,
    audit: &mut LeakageAudit,
) -> Result<TrainedModel> {
    let Some((k_neighbors, seed)) = smote else {
        audit.record(format!("{step}.model"), channels);
        return TrainedModel::train(learner, x, y);
    };
    audit.record(format!("{step}.smote"), channels.clone());
    let cfg = SmoteConfig {
        k_neighbors,
        target: None,
    };
    let (m, y2) = smote_oversample(x.matrix(), y, &cfg, seed)?;
    let mut ids = x.row_ids().to_vec();
    ids.extend((x.n_rows()..m.n_rows()).map(|i| format!("synthetic.{i}")));
    let balanced = FeatureMatrix::new(x.dictionary().clone(), ids, m)?;
    audit.record(format!("{step}.model"), channels);
    TrainedModel::train(learner, &balanced, &y2)
}

fn report_for(
    rows: &[usize],
    truth: &[FactualityLabel],
    predictions: &[PredictionDistribution],
    sizes: SplitSizes,
) -> Result<Option<EvaluationReport>> {
    if rows.is_empty() {
        return Ok(None);
    }
    let t = pick(truth, rows);
    let p: Vec<FactualityLabel> = rows.iter().map(|&r| predictions[r].argmax()).collect();
    EvaluationReport::new(&t, &p, sizes).map(Some)
}

pub struct VideoStageOutput {
    pub source: VideoSource,
    pub selection: Option<SelectionReport>,
    /// Model inputs for every video, in corpus order.
    pub features: FeatureMatrix,
    pub model: TrainedModel,
    /// One distribution per video, in corpus order.
    pub predictions: Vec<PredictionDistribution>,
    pub test: EvaluationReport,
    pub dev: Option<EvaluationReport>,
    pub baseline: EvaluationReport,
    pub audit: LeakageAudit,
}

/// Selects features (attention only) and trains a video classifier on the
/// training channels' videos, then predicts every video.
pub fn run_video_stage(ws: &Workspace, spec: &ExperimentSpec, source: VideoSource) -> Result<VideoStageOutput> {
    let selection = match source {
        VideoSource::Attention => Some(fit_selection(ws, spec)?),
        VideoSource::Text => None,
    };
    run_video_stage_with(ws, spec, source, selection)
}

/// Fits attention feature selection on the training videos.
pub fn fit_selection(ws: &Workspace, spec: &ExperimentSpec) -> Result<(SelectionReport, LeakageAudit)> {
    let base = ws.base_matrix(VideoSource::Attention, spec)?;
    let train = ws.video_rows(SplitPart::Train);
    let fit = base.select_rows(&train);
    let mut audit = LeakageAudit::default();
    audit.record("video.attention.selection", ws.channels_of_videos(&fit)?);
    let sel = select_top_union(&fit, &pick(&ws.labels, &train), spec.top_k)?;
    Ok((sel, audit))
}

/// Like [`run_video_stage`] with an already fitted selection (required for
/// attention, ignored for text) and the audit of its fit.
pub fn run_video_stage_with(
    ws: &Workspace,
    spec: &ExperimentSpec,
    source: VideoSource,
    selection: Option<(SelectionReport, LeakageAudit)>,
) -> Result<VideoStageOutput> {
    let mut audit = LeakageAudit::default();
    let step = format!("video.{}", source.key());
    let base = ws.base_matrix(source, spec)?;
    let train = ws.video_rows(SplitPart::Train);
    let y_train = pick(&ws.labels, &train);

    let (selection, features) = match (source, selection) {
        (VideoSource::Attention, Some((sel, sel_audit))) => {
            audit.extend(&sel_audit);
            let features = base.select_columns(&sel.selected)?;
            (Some(sel), features)
        }
        (VideoSource::Attention, None) => {
            return Err(Error::invalid("attention video stage needs a feature selection"));
        }
        (VideoSource::Text, _) => (None, base),
    };

    let source_tag = source as u64 * 16;
    let smote = |tag: u64| {
        spec.smote
            .video
            .then_some((spec.smote.k_neighbors, step_seed(spec.seed, source_tag + tag)))
    };
    let x_train = features.select_rows(&train);
    let channels = ws.channels_of_videos(&x_train)?;
    let model = fit_model(
        &spec.video_learner,
        &x_train,
        &y_train,
        smote(1),
        channels,
        &step,
        &mut audit,
    )?;
    let mut predictions = model.predict_matrix(&features)?;

    if let Some(k) = spec.oof {
        let mut train_channels = ws.channel_indices(SplitPart::Train);
        train_channels.shuffle(&mut ChaCha8Rng::seed_from_u64(step_seed(spec.seed, source_tag + 2)));
        let mut fold_of = vec![usize::MAX; ws.channels.len()];
        for (pos, &c) in train_channels.iter().enumerate() {
            fold_of[c] = pos % k;
        }
        for fold in 0..k {
            let (held, fit): (Vec<usize>, Vec<usize>) =
                train.iter().partition(|&&r| fold_of[ws.video_channel[r]] == fold);
            if held.is_empty() {
                continue;
            }
            let x_fit = features.select_rows(&fit);
            let channels = ws.channels_of_videos(&x_fit)?;
            let fold_model = fit_model(
                &spec.video_learner,
                &x_fit,
                &pick(&ws.labels, &fit),
                smote(3 + fold as u64),
                channels,
                &format!("{step}.oof{fold}"),
                &mut audit,
            )?;
            for (r, p) in held
                .iter()
                .zip(fold_model.predict_matrix(&features.select_rows(&held))?)
            {
                predictions[*r] = p;
            }
        }
    }

    let sizes = ws.video_split_sizes();
    let test_rows = ws.video_rows(SplitPart::Test);
    let test = report_for(&test_rows, &ws.labels, &predictions, sizes)?
        .ok_or_else(|| Error::invalid("test split has no videos"))?;
    let dev = report_for(&ws.video_rows(SplitPart::Dev), &ws.labels, &predictions, sizes)?;
    let baseline = EvaluationReport::majority_baseline(&y_train, &pick(&ws.labels, &test_rows), sizes)?;
    Ok(VideoStageOutput {
        source,
        selection,
        features,
        model,
        predictions,
        test,
        dev,
        baseline,
        audit,
    })
}

impl VideoStageOutput {
    pub fn upstream(&self) -> VideoPredictions<'_> {
        VideoPredictions {
            source: self.source,
            features: &self.features,
            predictions: &self.predictions,
        }
    }

    pub fn summary(&self) -> VideoStageSummary {
        VideoStageSummary {
            source: self.source,
            n_features: self.features.n_cols(),
            selection: self.selection.clone(),
            test: self.test.clone(),
            dev: self.dev.clone(),
            baseline: self.baseline.clone(),
            audit: self.audit.clone(),
        }
    }
}

/// What the channel stage needs from a video stage: its model inputs and
/// per-video predictions, both in corpus order.
#[derive(Clone, Copy)]
pub struct VideoPredictions<'a> {
    pub source: VideoSource,
    pub features: &'a FeatureMatrix,
    pub predictions: &'a [PredictionDistribution],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupDims {
    pub group: ChannelGroup,
    pub dims: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPrediction {
    pub channel_id: String,
    pub truth: FactualityLabel,
    pub predicted: FactualityLabel,
    pub distribution: PredictionDistribution,
}

pub struct ChannelStageOutput {
    /// One row per channel, in corpus order.
    pub features: FeatureMatrix,
    pub group_dims: Vec<GroupDims>,
    pub model: TrainedModel,
    pub predictions: Vec<PredictionDistribution>,
    pub test: EvaluationReport,
    pub dev: Option<EvaluationReport>,
    pub baseline: EvaluationReport,
    pub audit: LeakageAudit,
}

impl ChannelStageOutput {
    pub fn predictions_for(&self, ws: &Workspace, part: SplitPart) -> Vec<ChannelPrediction> {
        ws.channel_indices(part)
            .into_iter()
            .map(|c| ChannelPrediction {
                channel_id: ws.channels[c].channel_id.clone(),
                truth: ws.channels[c].label,
                predicted: self.predictions[c].argmax(),
                distribution: self.predictions[c],
            })
            .collect()
    }

    pub fn summary(&self, ws: &Workspace) -> ChannelStageSummary {
        ChannelStageSummary {
            dims: self.features.n_cols(),
            groups: self.group_dims.clone(),
            test: self.test.clone(),
            dev: self.dev.clone(),
            baseline: self.baseline.clone(),
            test_predictions: self.predictions_for(ws, SplitPart::Test),
            audit: self.audit.clone(),
        }
    }
}

fn averaged_block(ws: &Workspace, videos: &FeatureMatrix) -> Result<FeatureMatrix> {
    let dict = Arc::new(videos.dictionary().prefixed(AVG_PREFIX)?);
    let rows: Vec<Vec<f64>> = ws
        .channel_rows
        .iter()
        .map(|rows| Ok(average_video_features(&videos.select_rows(rows), &dict)?.into_values()))
        .collect::<Result<_>>()?;
    channel_matrix(ws, dict, &rows)
}

fn channel_matrix(ws: &Workspace, dict: Arc<FeatureDictionary>, rows: &[Vec<f64>]) -> Result<FeatureMatrix> {
    let m = Matrix::from_rows(rows, dict.len())?;
    FeatureMatrix::new(dict, ws.channels.iter().map(|c| c.channel_id.clone()).collect(), m)
}

/// Builds one group's channel-level columns.
pub fn channel_block(ws: &Workspace, group: ChannelGroup, videos: &[VideoPredictions]) -> Result<FeatureMatrix> {
    let upstream = |source: VideoSource| {
        videos
            .iter()
            .find(|v| v.source == source)
            .ok_or_else(|| Error::invalid(format!("{} needs {} video predictions", group.key(), source.key())))
    };
    match group {
        ChannelGroup::TextAvg => averaged_block(ws, ws.text_matrix()?),
        ChannelGroup::AttentionAvg => averaged_block(ws, upstream(VideoSource::Attention)?.features),
        ChannelGroup::AttentionStats => {
            let rows: Vec<Vec<f64>> = ws
                .channels
                .iter()
                .map(|c| channel_statistics(c).map(|s| s.to_vec()))
                .collect::<Result<_>>()?;
            channel_matrix(ws, Arc::new(stats_dictionary()), &rows)
        }
        ChannelGroup::TextAggPred | ChannelGroup::AttentionAggPred => {
            let source = group.video_source().expect("prediction groups have a source");
            let out = upstream(source)?;
            let rows: Vec<Vec<f64>> = ws
                .channel_rows
                .iter()
                .map(|rows| aggregate_predictions(&pick(out.predictions, rows)).map(|a| a.to_vec()))
                .collect::<Result<_>>()?;
            let dict = FeatureDictionary::new(format!("agg-v1;{}", source.key()), agg_names(source.key()))?;
            channel_matrix(ws, Arc::new(dict), &rows)
        }
    }
}

/// Assembles the channel representation from the spec's groups, trains the
/// channel classifier on training channels and evaluates it.
pub fn run_channel_stage(
    ws: &Workspace,
    spec: &ExperimentSpec,
    videos: &[VideoPredictions],
) -> Result<ChannelStageOutput> {
    let groups = spec.ordered_groups();
    let (first, rest) = groups
        .split_first()
        .ok_or_else(|| Error::Config("channel stage needs at least one group".into()))?;
    let mut group_dims = Vec::with_capacity(groups.len());
    let mut features = channel_block(ws, *first, videos)?;
    group_dims.push(GroupDims {
        group: *first,
        dims: features.n_cols(),
    });
    for g in rest {
        let block = channel_block(ws, *g, videos)?;
        group_dims.push(GroupDims {
            group: *g,
            dims: block.n_cols(),
        });
        features = features.hstack(&block)?;
    }

    let mut audit = LeakageAudit::default();
    let labels: Vec<FactualityLabel> = ws.channels.iter().map(|c| c.label).collect();
    let train = ws.channel_indices(SplitPart::Train);
    let y_train = pick(&labels, &train);
    let x_train = features.select_rows(&train);
    let smote = spec
        .smote
        .channel
        .then_some((spec.smote.k_neighbors, step_seed(spec.seed, 1000)));
    let model = fit_model(
        &spec.channel_learner,
        &x_train,
        &y_train,
        smote,
        x_train.row_ids().to_vec(),
        "channel",
        &mut audit,
    )?;
    let predictions = model.predict_matrix(&features)?;

    let sizes = ws.channel_split_sizes();
    let test_rows = ws.channel_indices(SplitPart::Test);
    let test = report_for(&test_rows, &labels, &predictions, sizes)?
        .ok_or_else(|| Error::invalid("test split has no channels"))?;
    let dev = report_for(&ws.channel_indices(SplitPart::Dev), &labels, &predictions, sizes)?;
    let baseline = EvaluationReport::majority_baseline(&y_train, &pick(&labels, &test_rows), sizes)?;
    Ok(ChannelStageOutput {
        features,
        group_dims,
        model,
        predictions,
        test,
        dev,
        baseline,
        audit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoStageSummary {
    pub source: VideoSource,
    pub n_features: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionReport>,
    pub test: EvaluationReport,
    pub dev: Option<EvaluationReport>,
    pub baseline: EvaluationReport,
    pub audit: LeakageAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStageSummary {
    pub dims: usize,
    pub groups: Vec<GroupDims>,
    pub test: EvaluationReport,
    pub dev: Option<EvaluationReport>,
    pub baseline: EvaluationReport,
    pub test_predictions: Vec<ChannelPrediction>,
    pub audit: LeakageAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub stage: Stage,
    pub seed: u64,
    pub video_stages: Vec<VideoStageSummary>,
    pub channel_stage: Option<ChannelStageSummary>,
}

impl ExperimentReport {
    /// Test-set report of the stage the experiment targets, with its
    /// majority baseline.
    pub fn headline(&self) -> (&EvaluationReport, &EvaluationReport) {
        match (&self.channel_stage, self.video_stages.first()) {
            (Some(c), _) => (&c.test, &c.baseline),
            (None, Some(v)) => (&v.test, &v.baseline),
            (None, None) => unreachable!("every experiment runs at least one stage"),
        }
    }

    pub fn dev(&self) -> Option<&EvaluationReport> {
        match &self.channel_stage {
            Some(c) => c.dev.as_ref(),
            None => self.video_stages.first().and_then(|v| v.dev.as_ref()),
        }
    }

    pub fn dims(&self) -> usize {
        match &self.channel_stage {
            Some(c) => c.dims,
            None => self.video_stages.first().map_or(0, |v| v.n_features),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Collates stage summaries and checks the combined leakage audit.
    pub fn assemble(
        spec: &ExperimentSpec,
        video_stages: Vec<VideoStageSummary>,
        channel_stage: Option<ChannelStageSummary>,
        split: &DatasetSplit,
    ) -> Result<Self> {
        if video_stages.is_empty() && channel_stage.is_none() {
            return Err(Error::invalid("an experiment report needs at least one stage"));
        }
        let mut audit = LeakageAudit::default();
        for v in &video_stages {
            audit.extend(&v.audit);
        }
        if let Some(c) = &channel_stage {
            audit.extend(&c.audit);
        }
        audit.check(split)?;
        Ok(Self {
            name: spec.name.clone(),
            stage: spec.stage,
            seed: spec.seed,
            video_stages,
            channel_stage,
        })
    }
}

/// Every model an experiment trained, for serialisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub video: Vec<(VideoSource, TrainedModel)>,
    pub channel: Option<TrainedModel>,
}

pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub videos: Vec<VideoStageOutput>,
    pub channel: Option<ChannelStageOutput>,
}

impl ExperimentRun {
    pub fn models(&self) -> ModelBundle {
        ModelBundle {
            video: self.videos.iter().map(|v| (v.source, v.model.clone())).collect(),
            channel: self.channel.as_ref().map(|c| c.model.clone()),
        }
    }
}

/// Runs every stage the spec needs and fails if the leakage audit finds a
/// non-training channel in any fit.
pub fn run_experiment(ws: &Workspace, spec: &ExperimentSpec) -> Result<ExperimentRun> {
    spec.validate()?;
    let expected = AttentionExtractor::new(spec.attention.clone());
    if expected.attention_dictionary().fingerprint() != ws.attention.dictionary().fingerprint() {
        return Err(Error::DictionaryMismatch(
            "workspace features were extracted with a different attention config".into(),
        ));
    }
    let videos = spec
        .video_sources()
        .into_iter()
        .map(|s| run_video_stage(ws, spec, s))
        .collect::<Result<Vec<_>>>()?;
    let channel = match spec.stage {
        Stage::Channel => {
            let upstream: Vec<VideoPredictions> = videos.iter().map(|v| v.upstream()).collect();
            Some(run_channel_stage(ws, spec, &upstream)?)
        }
        Stage::Video => None,
    };
    let report = ExperimentReport::assemble(
        spec,
        videos.iter().map(|v| v.summary()).collect(),
        channel.as_ref().map(|c| c.summary(ws)),
        ws.split,
    )?;
    Ok(ExperimentRun {
        report,
        videos,
        channel,
    })
}

/// Index of the report with the lowest dev MAE (ties: higher dev accuracy,
/// then earlier). Reports without a dev evaluation are skipped.
pub fn select_by_dev(reports: &[ExperimentReport]) -> Option<usize> {
    reports
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.dev().map(|d| (i, d)))
        .min_by(|(i, a), (j, b)| {
            a.mae
                .total_cmp(&b.mae)
                .then(b.accuracy.total_cmp(&a.accuracy))
                .then(i.cmp(j))
        })
        .map(|(i, _)| i)
}
