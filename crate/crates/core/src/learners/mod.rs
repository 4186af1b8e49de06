//! Classifiers over factuality labels and the SMOTE oversampler.
//!
//! All learners are trained on a [`FeatureMatrix`] through [`TrainedModel`],
//! which remembers the dictionary fingerprint and refuses to predict on
//! rows built from a different dictionary.

mod distribution;
pub mod gbdt;
pub mod logistic;
pub mod optim;
pub mod ordinal;
pub mod smote;
mod standardize;

use serde::{Deserialize, Serialize};

pub use distribution::{PredictionDistribution, SIMPLEX_TOLERANCE};
pub use gbdt::{gbdt_train, gbdt_train_with_validation, GbdtConfig, GbdtModel, TreeNode};
pub use logistic::{logistic_train, LogisticConfig, LogisticModel};
pub use ordinal::{ordinal_logistic_train, OrdinalConfig, OrdinalModel};
pub use smote::{smote_oversample, SmoteConfig};
pub use standardize::Standardizer;

use crate::features::{FeatureMatrix, FeatureVector};
use crate::ingest::FactualityLabel;
use crate::{Error, Matrix, Result};

/// Number of classes.
pub const K: usize = FactualityLabel::COUNT;

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub(crate) fn class_counts(y: &[FactualityLabel]) -> [usize; K] {
    let mut c = [0; K];
    for l in y {
        c[l.ordinal()] += 1;
    }
    c
}

pub(crate) fn check_training_data(x: &Matrix, y: &[FactualityLabel]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if x.n_cols() == 0 {
        return Err(Error::invalid("training matrix has no columns"));
    }
    if class_counts(y).iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::SingleClass);
    }
    x.check_finite()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerConfig {
    Gbdt(GbdtConfig),
    Logistic(LogisticConfig),
    OrdinalLogistic(OrdinalConfig),
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig::Gbdt(GbdtConfig::default())
    }
}

impl LearnerConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            LearnerConfig::Gbdt(_) => "gbdt",
            LearnerConfig::Logistic(_) => "logistic",
            LearnerConfig::OrdinalLogistic(_) => "ordinal_logistic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ModelParams {
    Gbdt(GbdtModel),
    Logistic(LogisticModel),
    OrdinalLogistic(OrdinalModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    /// Fingerprint of the dictionary the model was trained on.
    pub fingerprint: String,
    pub feature_names: Vec<String>,
    pub config: LearnerConfig,
    pub model: ModelParams,
}

impl TrainedModel {
    pub fn train(config: &LearnerConfig, x: &FeatureMatrix, y: &[FactualityLabel]) -> Result<Self> {
        let m = x.matrix();
        let model = match config {
            LearnerConfig::Gbdt(c) => ModelParams::Gbdt(gbdt_train(m, y, c)?),
            LearnerConfig::Logistic(c) => ModelParams::Logistic(logistic_train(m, y, c)?),
            LearnerConfig::OrdinalLogistic(c) => ModelParams::OrdinalLogistic(ordinal_logistic_train(m, y, c)?),
        };
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            fingerprint: x.dictionary().fingerprint().to_string(),
            feature_names: x.dictionary().names().to_vec(),
            config: *config,
            model,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn check_fingerprint(&self, found: &str) -> Result<()> {
        if found != self.fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: self.fingerprint.clone(),
                found: found.to_string(),
            });
        }
        Ok(())
    }

    fn predict_row(&self, row: &[f64]) -> Result<PredictionDistribution> {
        let p = match &self.model {
            ModelParams::Gbdt(m) => m.predict(row),
            ModelParams::Logistic(m) => m.predict(row),
            ModelParams::OrdinalLogistic(m) => m.predict(row),
        };
        PredictionDistribution::normalized(p.map(|v| v.max(0.0)))
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<PredictionDistribution> {
        self.check_fingerprint(x.dictionary().fingerprint())?;
        self.predict_row(x.values())
    }

    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<PredictionDistribution>> {
        self.check_fingerprint(x.dictionary().fingerprint())?;
        x.matrix().rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                m.format_version
            )));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::FeatureDictionary;
    use FactualityLabel::*;

    fn toy() -> (FeatureMatrix, Vec<FactualityLabel>) {
        let dict = Arc::new(FeatureDictionary::new("t", vec!["a".into(), "b".into()]).unwrap());
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let l = FactualityLabel::ALL[i % 3];
            rows.push([l.ordinal() as f64 * 3.0 + (i as f64 * 0.37).sin(), (i as f64).cos()]);
            y.push(l);
        }
        let ids = (0..30).map(|i| format!("v{i}")).collect();
        (
            FeatureMatrix::new(dict, ids, Matrix::from_rows(&rows, 2).unwrap()).unwrap(),
            y,
        )
    }

    #[test]
    fn json_round_trip_for_every_learner() {
        let (x, y) = toy();
        for cfg in [
            LearnerConfig::Gbdt(GbdtConfig {
                n_rounds: 10,
                ..Default::default()
            }),
            LearnerConfig::Logistic(Default::default()),
            LearnerConfig::OrdinalLogistic(Default::default()),
        ] {
            let m = TrainedModel::train(&cfg, &x, &y).unwrap();
            let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(
                m.predict_matrix(&x).unwrap(),
                back.predict_matrix(&x).unwrap(),
                "{}",
                cfg.kind()
            );
        }
    }

    #[test]
    fn fingerprint_mismatch_rejected() {
        let (x, y) = toy();
        let m = TrainedModel::train(&LearnerConfig::Logistic(Default::default()), &x, &y).unwrap();
        let other = Arc::new(FeatureDictionary::new("t", vec!["a".into(), "c".into()]).unwrap());
        let v = FeatureVector::new(other, vec![0.0, 0.0]).unwrap();
        assert!(matches!(m.predict_proba(&v), Err(Error::FingerprintMismatch { .. })));
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[[1.0], [2.0]], 1).unwrap();
        assert!(matches!(
            gbdt_train(&x, &[High, High], &Default::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn non_finite_rejected() {
        let x = Matrix::from_rows(&[[1.0], [f64::NAN]], 1).unwrap();
        assert!(gbdt_train(&x, &[High, Low], &Default::default()).is_err());
    }
}
