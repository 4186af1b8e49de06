//! Metrics, experiment specs, the two-stage pipeline, ensembles and
//! ablation tables.

mod ablation;
mod ensemble;
mod metrics;
mod pipeline;
mod spec;
mod table;

pub use ablation::{run_ablation, AblationGrid, AblationResult, AblationRow, AblationTable};
pub use ensemble::{ensemble_combine, EnsembleMode};
pub use metrics::{
    accuracy, balanced_accuracy, confusion_matrix, mae, majority_label, per_class_recall, EvaluationReport, SplitSizes,
};
pub use pipeline::{
    channel_block, fit_selection, run_channel_stage, run_experiment, run_video_stage, run_video_stage_with,
    select_by_dev, AuditEntry, ChannelPrediction, ChannelStageOutput, ChannelStageSummary, ExperimentReport,
    ExperimentRun, GroupDims, LeakageAudit, ModelBundle, VideoPredictions, VideoStageOutput, VideoStageSummary,
    Workspace,
};
pub use spec::{channel_dims, ChannelGroup, ExperimentSpec, FeatureFamily, Stage, StageSmote, VideoSource};
pub use table::{render_experiment, render_reports, render_table};

use crate::ingest::FactualityLabel;
use crate::learners::PredictionDistribution;
use crate::{Error, Result};

/// Combines several runs' channel predictions item by item and scores the
/// ensemble. `runs[m][i]` is model `m`'s distribution for item `i`.
pub fn ensemble_report(
    runs: &[Vec<PredictionDistribution>],
    truth: &[FactualityLabel],
    mode: EnsembleMode,
    split_sizes: SplitSizes,
) -> Result<EvaluationReport> {
    if runs.is_empty() {
        return Err(Error::invalid("ensemble needs at least one run"));
    }
    if runs.iter().any(|r| r.len() != truth.len()) {
        return Err(Error::invalid("every run must predict every item"));
    }
    let pred = (0..truth.len())
        .map(|i| {
            let per_model: Vec<PredictionDistribution> = runs.iter().map(|r| r[i]).collect();
            ensemble_combine(&per_model, mode).map(|d| d.argmax())
        })
        .collect::<Result<Vec<_>>>()?;
    EvaluationReport::new(truth, &pred, split_sizes)
}
