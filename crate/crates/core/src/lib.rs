//! Attention-cycle features for news-media video channels and a two-stage
//! (video, then channel) factuality classifier built on top of them.
//!
//! The pipeline runs in this order:
//!
//! 1. [`ingest`] turns raw count snapshots and a channel manifest into
//!    labelled channels with 168-hour cumulative series per action kind.
//! 2. [`features`] derives the per-video attention vector (948 named
//!    features) and, when available, appends title/description embeddings.
//! 3. [`selection`] scores features on the training split and keeps the
//!    union of the per-method top-k lists.
//! 4. [`learners`] provide gradient boosted trees, multinomial and ordinal
//!    logistic regression, and SMOTE oversampling.
//! 5. [`channel`] aggregates videos into channel representations, and
//!    [`eval`] runs whole experiments, ensembles and ablations.
//!
//! [`synth`] generates corpora with class-dependent attention shapes so
//! every stage can be exercised without the real dataset.

pub mod channel;
pub mod error;
pub mod eval;
pub mod features;
pub mod fetch;
pub mod ingest;
pub mod learners;
pub mod matrix;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureDictionary, FeatureMatrix, FeatureVector};
pub use ingest::{ActionKind, ChannelRecord, FactualityLabel, HourlyCumulativeSeries, VideoObservation};
pub use learners::PredictionDistribution;
pub use matrix::Matrix;

/// `a / b`, or 0 when `b` is zero.
#[inline]
pub fn safediv(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}
