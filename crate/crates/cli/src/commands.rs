use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use attention_cycles::eval::{
    fit_selection, render_experiment, run_ablation, run_channel_stage, run_video_stage_with, AblationGrid,
    AblationTable, ChannelStageSummary, ExperimentReport, LeakageAudit, Stage, VideoPredictions, VideoSource,
    VideoStageSummary, Workspace,
};
use attention_cycles::features::{write_feature_matrix, AttentionExtractor, FeatureSet};
use attention_cycles::ingest::{
    assemble_corpus, assign_distant_labels, filter_and_cap_channels, parse_manifest, parse_snapshot_log, split_dataset,
    ChannelRecord, DatasetSplit, EmbeddingSource, LineError, SplitRatios,
};
use attention_cycles::selection::SelectionReport;
use attention_cycles::synth::{generate_dataset, write_corpus, SynthProfiles};
use attention_cycles::{Error, FeatureMatrix};

use crate::config::{require_dir, require_file, resolve, CliConfig, Resolved};
use crate::files::{self, PredictionRow};
use crate::{Cli, Command, Common, EXIT_RUNTIME, EXIT_VALIDATION};

#[derive(Debug)]
pub enum CliError {
    /// Bad input, config or flags.
    Validation(String),
    /// Failure while running a stage.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Leakage(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    if let Some(n) = cli.jobs.or(cfg.jobs) {
        if n == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let resolve_common = |c: &Common| resolve(&cfg, c.out.as_deref(), c.experiment.as_deref(), cli.seed);
    match &cli.command {
        Command::Prepare {
            common,
            snapshots,
            manifest,
            embeddings,
            embedding_format,
            interpolation,
            split,
        } => {
            let snapshots = snapshots
                .clone()
                .or_else(|| cfg.snapshots.clone())
                .ok_or_else(|| CliError::Validation("no snapshot log: pass --snapshots".into()))?;
            let manifest = manifest
                .clone()
                .or_else(|| cfg.manifest.clone())
                .ok_or_else(|| CliError::Validation("no manifest: pass --manifest".into()))?;
            require_file(&manifest)?;
            require_file(&snapshots)?;
            let embeddings = embeddings.clone().or_else(|| cfg.embeddings.clone());
            if let Some(dir) = &embeddings {
                require_dir(dir)?;
            }
            let r = resolve_common(common)?;
            let source = embeddings.map(|dir| EmbeddingSource {
                dir,
                format: embedding_format.or(cfg.embedding_format).unwrap_or_default(),
            });
            let ratios = split.or(cfg.split).unwrap_or(r.spec.split);
            prepare(
                &r,
                &snapshots,
                &manifest,
                source.as_ref(),
                interpolation.or(cfg.interpolation).unwrap_or_default(),
                ratios,
            )
        }
        Command::Extract {
            common,
            features,
            format,
        } => {
            let r = resolve_common(common)?;
            extract(&r, *features, format.or(cfg.matrix_format).unwrap_or_default())
        }
        Command::Select { common, k } => {
            let mut r = resolve_common(common)?;
            if let Some(k) = k {
                r.spec.top_k = *k;
                r.spec.validate()?;
            }
            select(&r)
        }
        Command::TrainVideo { common, source } => {
            let r = resolve_common(common)?;
            let sources = match source {
                Some(s) => vec![VideoSource::from(*s)],
                None => r.spec.video_sources(),
            };
            train_video(&r, &sources)
        }
        Command::TrainChannel { common, format } => {
            let r = resolve_common(common)?;
            train_channel(&r, format.or(cfg.matrix_format).unwrap_or_default())
        }
        Command::Evaluate { common } => evaluate(&resolve_common(common)?),
        Command::Ablate { common, grid } => {
            let r = resolve_common(common)?;
            let grid = match grid.clone().or_else(|| cfg.grid.clone()) {
                Some(p) => {
                    require_file(&p)?;
                    AblationGrid::load(&p)?
                }
                None => AblationGrid::standard(),
            };
            ablate(&r, &grid)
        }
        Command::Synth {
            common,
            sizes,
            min_videos,
            max_videos,
        } => {
            let r = resolve_common(common)?;
            let mut profiles = SynthProfiles::default();
            let (lo, hi) = profiles.videos_per_channel;
            profiles.videos_per_channel = (min_videos.unwrap_or(lo), max_videos.unwrap_or(hi));
            synth(&r, &parse_sizes(sizes)?, &profiles)
        }
        Command::Report { input } => {
            print!("{}", render_file(input)?);
            Ok(())
        }
    }
}

fn parse_sizes(s: &str) -> Result<[usize; 3]> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Validation(format!("bad --sizes {s:?}: {e}")))?;
    parts
        .try_into()
        .map_err(|_| CliError::Validation(format!("--sizes needs three counts (low,mixed,high), got {s:?}")))
}

fn create_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))
}

#[derive(Serialize)]
struct PrepareReport<'a> {
    manifest_channels: usize,
    kept_channels: usize,
    videos: usize,
    label_counts: [usize; 3],
    split_sizes: [usize; 3],
    seed: u64,
    ratios: SplitRatios,
    missing_snapshots: &'a [String],
    orphan_snapshots: usize,
    snapshot_line_errors: &'a [LineError],
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn prepare(
    r: &Resolved,
    snapshots: &Path,
    manifest: &Path,
    embeddings: Option<&EmbeddingSource>,
    interpolation: attention_cycles::ingest::Interpolation,
    ratios: SplitRatios,
) -> Result<()> {
    ratios.validate()?;
    let manifest = parse_manifest(open(manifest)?)?;
    let log = parse_snapshot_log(open(snapshots)?);
    for e in log.errors.iter().take(5) {
        log::warn!("{}: line {}: {}", snapshots.display(), e.line, e.message);
    }
    if log.errors.len() > 5 {
        log::warn!("{} more bad snapshot lines", log.errors.len() - 5);
    }
    let (channels, assembly) = assemble_corpus(&manifest, &log.snapshots, embeddings, interpolation)?;
    let channels = assign_distant_labels(filter_and_cap_channels(channels));
    if channels.is_empty() {
        return Err(CliError::Validation(
            "no channel has enough videos with snapshots".into(),
        ));
    }
    let split = split_dataset(&channels, ratios, r.seed)?;
    let mut label_counts = [0; 3];
    for c in &channels {
        label_counts[c.label.ordinal()] += 1;
    }
    create_out(&r.out)?;
    files::write_jsonl(&r.out.join(files::CORPUS), &channels)?;
    files::write_json(&r.out.join(files::SPLIT), &split)?;
    files::write_json(
        &r.out.join(files::PREPARE_REPORT),
        &PrepareReport {
            manifest_channels: manifest.len(),
            kept_channels: channels.len(),
            videos: channels.iter().map(|c| c.videos.len()).sum(),
            label_counts,
            split_sizes: [split.train.len(), split.dev.len(), split.test.len()],
            seed: r.seed,
            ratios,
            missing_snapshots: &assembly.missing_snapshots,
            orphan_snapshots: assembly.orphan_snapshots,
            snapshot_line_errors: &log.errors,
        },
    )?;
    log::info!("prepared {} channels into {}", channels.len(), r.out.display());
    Ok(())
}

fn set_key(set: FeatureSet) -> &'static str {
    match set {
        FeatureSet::Attention => "attention",
        FeatureSet::Text => "text",
        FeatureSet::All => "all",
    }
}

fn extract(r: &Resolved, set: FeatureSet, format: attention_cycles::features::MatrixFormat) -> Result<()> {
    require_file(&r.out.join(files::CORPUS))?;
    let channels = files::read_corpus(&r.out)?;
    let extractor = AttentionExtractor::new(r.spec.attention.clone());
    let m = extractor.matrix(channels.iter().flat_map(|c| &c.videos), set)?;
    let path = files::features_path(&r.out, set_key(set), format);
    write_feature_matrix(&path, &m, format)?;
    log::info!("wrote {} x {} features to {}", m.n_rows(), m.n_cols(), path.display());
    Ok(())
}

/// Reads `features.{set}` or carves it out of `features.all`, under the
/// extractor's canonical dictionary.
fn load_video_features(out: &Path, extractor: &AttentionExtractor, set: FeatureSet) -> Result<Option<FeatureMatrix>> {
    let dict = extractor.dictionary_for(set);
    if let Some(m) = files::read_features(out, set_key(set))? {
        if m.dictionary().fingerprint() != dict.fingerprint() {
            return Err(CliError::Validation(format!(
                "features.{} was extracted with a different configuration",
                set_key(set)
            )));
        }
        return Ok(Some(m));
    }
    let Some(all) = files::read_features(out, "all")? else {
        return Ok(None);
    };
    let cols: Vec<usize> = dict
        .names()
        .iter()
        .map(|n| all.dictionary().position(n))
        .collect::<Option<_>>()
        .ok_or_else(|| CliError::Validation("features.all lacks expected columns".into()))?;
    let m = FeatureMatrix::new(dict.clone(), all.row_ids().to_vec(), all.matrix().select_columns(&cols))?;
    Ok(Some(m))
}

/// Everything a training stage reads from a prepared and extracted output
/// directory.
struct Inputs {
    channels: Vec<ChannelRecord>,
    split: DatasetSplit,
    attention: FeatureMatrix,
    text: Option<FeatureMatrix>,
}

impl Inputs {
    fn load(r: &Resolved) -> Result<Self> {
        require_file(&r.out.join(files::CORPUS))?;
        require_file(&r.out.join(files::SPLIT))?;
        let extractor = AttentionExtractor::new(r.spec.attention.clone());
        let attention = load_video_features(&r.out, &extractor, FeatureSet::Attention)?.ok_or_else(|| {
            CliError::Validation(format!(
                "no attention features in {}: run `extract --features attention` first",
                r.out.display()
            ))
        })?;
        let text = load_video_features(&r.out, &extractor, FeatureSet::Text)?;
        Ok(Self {
            channels: files::read_corpus(&r.out)?,
            split: files::read_json(&r.out.join(files::SPLIT))?,
            attention,
            text,
        })
    }

    fn workspace(&self) -> Result<Workspace<'_>> {
        Ok(Workspace::with_features(
            &self.channels,
            &self.split,
            self.attention.clone(),
            self.text.clone(),
        )?)
    }
}

#[derive(Serialize, Deserialize)]
struct SelectionFile {
    selection: SelectionReport,
    audit: LeakageAudit,
}

fn select(r: &Resolved) -> Result<()> {
    let inputs = Inputs::load(r)?;
    let ws = inputs.workspace()?;
    let (selection, audit) = fit_selection(&ws, &r.spec)?;
    log::info!("selected {} attention features", selection.selected.len());
    files::write_json(&r.out.join(files::SELECTION), &SelectionFile { selection, audit })
}

fn read_selection(out: &Path) -> Result<(SelectionReport, LeakageAudit)> {
    let path = out.join(files::SELECTION);
    if !path.is_file() {
        return Err(CliError::Validation(format!(
            "missing input file {}: run `select` first",
            path.display()
        )));
    }
    let f: SelectionFile = files::read_json(&path)?;
    Ok((f.selection, f.audit))
}

fn train_video(r: &Resolved, sources: &[VideoSource]) -> Result<()> {
    if sources.is_empty() {
        return Err(CliError::Validation(format!(
            "experiment {:?} needs no video stage",
            r.spec.name
        )));
    }
    let inputs = Inputs::load(r)?;
    let ws = inputs.workspace()?;
    for &source in sources {
        let selection = match source {
            VideoSource::Attention => Some(read_selection(&r.out)?),
            VideoSource::Text => None,
        };
        let out = run_video_stage_with(&ws, &r.spec, source, selection)?;
        let model = out.model.to_json()?;
        files::write_atomic(&files::video_model(&r.out, source), model.as_bytes())?;
        files::write_jsonl(
            &files::video_predictions(&r.out, source),
            out.features
                .row_ids()
                .iter()
                .zip(&out.predictions)
                .map(|(id, d)| PredictionRow {
                    id: id.clone(),
                    distribution: *d,
                }),
        )?;
        files::write_json(&files::video_summary(&r.out, source), &out.summary())?;
        log::info!(
            "{} video model: test accuracy {:.4}, MAE {:.4}",
            source.key(),
            out.test.accuracy,
            out.test.mae
        );
    }
    Ok(())
}

/// Predictions from a video stage's file, reordered to match `ids`.
fn read_video_predictions(
    out: &Path,
    source: VideoSource,
    ids: &[String],
) -> Result<Vec<attention_cycles::PredictionDistribution>> {
    let path = files::video_predictions(out, source);
    if !path.is_file() {
        return Err(CliError::Validation(format!(
            "missing input file {}: run `train-video` first",
            path.display()
        )));
    }
    let rows: Vec<PredictionRow> = files::read_jsonl(&path)?;
    let by_id: HashMap<String, attention_cycles::PredictionDistribution> =
        rows.into_iter().map(|r| (r.id, r.distribution)).collect();
    ids.iter()
        .map(|id| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| CliError::Validation(format!("{} has no prediction for video {id}", path.display())))
        })
        .collect()
}

fn train_channel(r: &Resolved, format: attention_cycles::features::MatrixFormat) -> Result<()> {
    if r.spec.stage != Stage::Channel {
        return Err(CliError::Validation(format!(
            "experiment {:?} has no channel stage",
            r.spec.name
        )));
    }
    let inputs = Inputs::load(r)?;
    let ws = inputs.workspace()?;
    let mut upstream_data = Vec::new();
    for source in r.spec.video_sources() {
        let features = match source {
            VideoSource::Attention => {
                let (selection, _) = read_selection(&r.out)?;
                ws.base_matrix(source, &r.spec)?.select_columns(&selection.selected)?
            }
            VideoSource::Text => ws.base_matrix(source, &r.spec)?,
        };
        let predictions = read_video_predictions(&r.out, source, features.row_ids())?;
        upstream_data.push((source, features, predictions));
    }
    let upstream: Vec<VideoPredictions> = upstream_data
        .iter()
        .map(|(source, features, predictions)| VideoPredictions {
            source: *source,
            features,
            predictions,
        })
        .collect();
    let out = run_channel_stage(&ws, &r.spec, &upstream)?;
    let model = out.model.to_json()?;
    files::write_atomic(&r.out.join(files::CHANNEL_MODEL), model.as_bytes())?;
    files::write_jsonl(
        &r.out.join(files::CHANNEL_PREDICTIONS),
        out.features
            .row_ids()
            .iter()
            .zip(&out.predictions)
            .map(|(id, d)| PredictionRow {
                id: id.clone(),
                distribution: *d,
            }),
    )?;
    write_feature_matrix(&files::channel_features_path(&r.out, format), &out.features, format)?;
    files::write_json(&r.out.join(files::CHANNEL_SUMMARY), &out.summary(&ws))?;
    log::info!(
        "channel model ({} features): test accuracy {:.4}, MAE {:.4}",
        out.features.n_cols(),
        out.test.accuracy,
        out.test.mae
    );
    Ok(())
}

fn evaluate(r: &Resolved) -> Result<()> {
    let split: DatasetSplit = files::read_json(&r.out.join(files::SPLIT))?;
    let mut video = Vec::new();
    for source in r.spec.video_sources() {
        let path = files::video_summary(&r.out, source);
        if !path.is_file() {
            return Err(CliError::Validation(format!(
                "missing input file {}: run `train-video` first",
                path.display()
            )));
        }
        video.push(files::read_json::<VideoStageSummary>(&path)?);
    }
    let channel = match r.spec.stage {
        Stage::Channel => {
            let path = r.out.join(files::CHANNEL_SUMMARY);
            if !path.is_file() {
                return Err(CliError::Validation(format!(
                    "missing input file {}: run `train-channel` first",
                    path.display()
                )));
            }
            Some(files::read_json::<ChannelStageSummary>(&path)?)
        }
        Stage::Video => None,
    };
    let report = ExperimentReport::assemble(&r.spec, video, channel, &split)?;
    let text = render_experiment(&report);
    files::write_json(&r.out.join(files::REPORT_JSON), &report)?;
    files::write_atomic(&r.out.join(files::REPORT_TXT), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn ablate(r: &Resolved, grid: &AblationGrid) -> Result<()> {
    let inputs = Inputs::load(r)?;
    let ws = inputs.workspace()?;
    let table = run_ablation(&ws, &r.spec, grid)?;
    let text = table.render();
    files::write_json(&r.out.join(files::ABLATION_JSON), &table)?;
    files::write_atomic(&r.out.join(files::ABLATION_TXT), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn synth(r: &Resolved, sizes: &[usize; 3], profiles: &SynthProfiles) -> Result<()> {
    let channels = generate_dataset(*sizes, profiles, r.seed)?;
    write_corpus(&channels, &r.out)?;
    let videos: usize = channels.iter().map(|c| c.videos.len()).sum();
    log::info!(
        "wrote {} channels ({} videos) to {}",
        channels.len(),
        videos,
        r.out.display()
    );
    Ok(())
}

fn render_file(path: &Path) -> Result<String> {
    let value: serde_json::Value = files::read_json(path)?;
    let invalid = |e: serde_json::Error| CliError::Validation(format!("{}: {e}", path.display()));
    if value.get("rows").is_some() {
        let table: AblationTable = serde_json::from_value(value).map_err(invalid)?;
        Ok(table.render())
    } else {
        let report: ExperimentReport = serde_json::from_value(value).map_err(invalid)?;
        Ok(render_experiment(&report))
    }
}
