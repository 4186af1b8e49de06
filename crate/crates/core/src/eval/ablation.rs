use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::EvaluationReport;
use super::pipeline::{run_experiment, Workspace};
use super::spec::{ChannelGroup, ExperimentSpec, FeatureFamily, Stage};
use super::table::render_table;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationRow {
    pub label: String,
    pub groups: Vec<ChannelGroup>,
    /// Attention families the row's video stage may use; empty means all.
    #[serde(default)]
    pub families: Vec<FeatureFamily>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationGrid {
    pub rows: Vec<AblationRow>,
}

impl AblationGrid {
    /// Per-action and per-ratio subsets of the combined attention channel
    /// model, then statistics alone, aggregated predictions alone, and the
    /// full model.
    pub fn standard() -> Self {
        use ChannelGroup::*;
        use FeatureFamily::*;
        let video = vec![AttentionAvg, AttentionAggPred];
        let family_row = |label: &str, families: Vec<FeatureFamily>| AblationRow {
            label: label.into(),
            groups: video.clone(),
            families,
        };
        Self {
            rows: vec![
                family_row("V", vec![Views]),
                family_row("D", vec![Dislikes]),
                family_row("C", vec![Comments]),
                family_row("L", vec![Likes]),
                family_row("V+L+C", vec![Views, Likes, Comments]),
                family_row("V+L+D+C", vec![Views, Likes, Dislikes, Comments]),
                family_row("Engagement", vec![Engagement]),
                family_row("Controversiality", vec![Controversiality]),
                family_row("Positive", vec![Positive]),
                family_row("Contr+Eng", vec![Controversiality, Engagement]),
                family_row("Contr+Pos", vec![Controversiality, Positive]),
                family_row("Pos+Eng", vec![Positive, Engagement]),
                AblationRow {
                    label: "Channel statistics".into(),
                    groups: vec![AttentionStats],
                    families: vec![],
                },
                AblationRow {
                    label: "Aggregated".into(),
                    groups: vec![AttentionAggPred],
                    families: vec![],
                },
                AblationRow {
                    label: "All".into(),
                    groups: vec![AttentionAvg, AttentionStats, AttentionAggPred],
                    families: vec![],
                },
            ],
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let grid: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        if grid.rows.is_empty() {
            return Err(Error::Config("ablation grid has no rows".into()));
        }
        Ok(grid)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub label: String,
    pub dims: usize,
    pub report: EvaluationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub baseline: EvaluationReport,
    pub rows: Vec<AblationResult>,
}

impl AblationTable {
    pub fn render(&self) -> String {
        let mut rows = vec![("Majority class", None, &self.baseline)];
        rows.extend(self.rows.iter().map(|r| (r.label.as_str(), Some(r.dims), &r.report)));
        render_table(&rows)
    }
}

/// Runs the base spec once per grid row, with the row's groups and
/// families, and reports each on the test channels. Rows run in parallel.
pub fn run_ablation(ws: &Workspace, base: &ExperimentSpec, grid: &AblationGrid) -> Result<AblationTable> {
    if grid.rows.is_empty() {
        return Err(Error::Config("ablation grid has no rows".into()));
    }
    let rows: Vec<(AblationResult, EvaluationReport)> = grid
        .rows
        .par_iter()
        .map(|row| {
            let spec = ExperimentSpec {
                name: row.label.clone(),
                stage: Stage::Channel,
                groups: row.groups.clone(),
                families: row.families.clone(),
                ..base.clone()
            };
            let run = run_experiment(ws, &spec)?;
            let (test, baseline) = run.report.headline();
            Ok((
                AblationResult {
                    label: row.label.clone(),
                    dims: run.report.dims(),
                    report: test.clone(),
                },
                baseline.clone(),
            ))
        })
        .collect::<Result<_>>()?;
    let baseline = rows[0].1.clone();
    Ok(AblationTable {
        baseline,
        rows: rows.into_iter().map(|(r, _)| r).collect(),
    })
}
