//! Named feature vectors and the video-level attention feature extractor.

pub mod attention;
mod dictionary;
mod export;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use attention::{
    daily_block, extract_video_attention_vector, extract_video_full_vector, first_day_block, hourly_increases,
    majority_interval, ratio_block, shape_features, AttentionConfig, AttentionExtractor, FirstDayPeriods, RatioKind,
    ATTENTION_LEN, PER_ACTION_LEN, REPORTED_ATTENTION_LEN, TEXT_LEN,
};
pub use dictionary::{FeatureDictionary, FeatureMatrix, FeatureVector};
pub use export::{read_feature_matrix, sidecar_path, write_feature_matrix, MatrixFormat};

use crate::ingest::VideoObservation;
use crate::{Error, Matrix, Result};

/// Which video features to materialise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    #[default]
    Attention,
    Text,
    All,
}

impl std::str::FromStr for FeatureSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "attention" => Ok(Self::Attention),
            "text" => Ok(Self::Text),
            "all" => Ok(Self::All),
            _ => Err(Error::Config(format!("unknown feature set {s:?}"))),
        }
    }
}

impl AttentionExtractor {
    pub fn dictionary_for(&self, set: FeatureSet) -> &Arc<FeatureDictionary> {
        match set {
            FeatureSet::Attention => self.attention_dictionary(),
            FeatureSet::Text => self.text_dictionary(),
            FeatureSet::All => self.full_dictionary(),
        }
    }

    /// One row per video, in input order, computed in parallel.
    pub fn matrix<'a, I>(&self, videos: I, set: FeatureSet) -> Result<FeatureMatrix>
    where
        I: IntoIterator<Item = &'a VideoObservation>,
    {
        let videos: Vec<&VideoObservation> = videos.into_iter().collect();
        let rows: Vec<Vec<f64>> = videos
            .par_iter()
            .map(|v| match set {
                FeatureSet::Attention => Ok(self.attention(v).into_values()),
                FeatureSet::Text => Ok(self.text(v)?.into_values()),
                FeatureSet::All => {
                    let f = self.full(v)?;
                    if f.len() != self.full_dictionary().len() {
                        return Err(Error::invalid(format!("video {} lacks text embeddings", v.video_id)));
                    }
                    Ok(f.into_values())
                }
            })
            .collect::<Result<_>>()?;
        let dict = self.dictionary_for(set).clone();
        let matrix = Matrix::from_rows(&rows, dict.len())?;
        FeatureMatrix::new(dict, videos.iter().map(|v| v.video_id.clone()).collect(), matrix)
    }
}
