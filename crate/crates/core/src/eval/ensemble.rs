use serde::{Deserialize, Serialize};

use crate::learners::PredictionDistribution;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMode {
    Mean,
    Max,
    Min,
}

impl std::str::FromStr for EnsembleMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "max" => Ok(Self::Max),
            "min" => Ok(Self::Min),
            _ => Err(Error::Config(format!("unknown ensemble mode {s:?}"))),
        }
    }
}

/// Componentwise mean, max or min of several models' distributions for one
/// item, renormalised onto the simplex.
pub fn ensemble_combine(models: &[PredictionDistribution], mode: EnsembleMode) -> Result<PredictionDistribution> {
    let (first, rest) = models
        .split_first()
        .ok_or_else(|| Error::invalid("ensemble needs at least one model"))?;
    let mut acc = first.as_array();
    for d in rest {
        let p = d.as_array();
        for c in 0..3 {
            acc[c] = match mode {
                EnsembleMode::Mean => acc[c] + p[c],
                EnsembleMode::Max => acc[c].max(p[c]),
                EnsembleMode::Min => acc[c].min(p[c]),
            };
        }
    }
    PredictionDistribution::normalized(acc)
}
