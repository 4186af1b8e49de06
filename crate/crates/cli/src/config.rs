use std::path::{Path, PathBuf};

use serde::Deserialize;

use attention_cycles::eval::ExperimentSpec;
use attention_cycles::features::MatrixFormat;
use attention_cycles::ingest::{EmbeddingFormat, Interpolation, SplitRatios};

use crate::commands::CliError;

/// Defaults read from `--config`. Flags override every field.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub snapshots: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub embedding_format: Option<EmbeddingFormat>,
    pub interpolation: Option<Interpolation>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub split: Option<SplitRatios>,
    pub experiment: Option<PathBuf>,
    pub grid: Option<PathBuf>,
    pub matrix_format: Option<MatrixFormat>,
    pub jobs: Option<usize>,
}

impl CliConfig {
    /// Relative paths in the file are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: CliConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.snapshots,
            &mut cfg.manifest,
            &mut cfg.embeddings,
            &mut cfg.out_dir,
            &mut cfg.experiment,
            &mut cfg.grid,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(split) = &cfg.split {
            split.validate()?;
        }
        Ok(cfg)
    }
}

/// Settings shared by every subcommand after merging flags and config.
pub struct Resolved {
    pub out: PathBuf,
    pub seed: u64,
    pub spec: ExperimentSpec,
}

/// Output directory, seed and experiment spec. The global seed, when
/// given, replaces the spec's.
pub fn resolve(
    cfg: &CliConfig,
    out: Option<&Path>,
    experiment: Option<&Path>,
    seed: Option<u64>,
) -> Result<Resolved, CliError> {
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out_dir.clone())
        .ok_or_else(|| CliError::Validation("no output directory: pass --out or set out_dir in the config".into()))?;
    let experiment = experiment.map(Path::to_path_buf).or_else(|| cfg.experiment.clone());
    let mut spec = match &experiment {
        Some(p) => {
            require_file(p)?;
            ExperimentSpec::load(p)?
        }
        None => ExperimentSpec::default(),
    };
    let seed = seed.or(cfg.seed).unwrap_or(spec.seed);
    spec.seed = seed;
    if let Some(split) = cfg.split {
        spec.split = split;
    }
    Ok(Resolved { out, seed, spec })
}

pub fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("missing input file {}", path.display())))
    }
}

pub fn require_dir(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("missing directory {}", path.display())))
    }
}
