use serde::{Deserialize, Serialize};

use crate::ingest::FactualityLabel;
use crate::{Error, Result};

/// Probabilities over Low, Mixed, High (ordinal order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub struct PredictionDistribution([f64; 3]);

#[derive(Serialize, Deserialize)]
struct DistRepr {
    low: f64,
    mixed: f64,
    high: f64,
}

impl TryFrom<DistRepr> for PredictionDistribution {
    type Error = Error;
    fn try_from(r: DistRepr) -> Result<Self> {
        PredictionDistribution::new([r.low, r.mixed, r.high])
    }
}

impl From<PredictionDistribution> for DistRepr {
    fn from(d: PredictionDistribution) -> Self {
        DistRepr {
            low: d.0[0],
            mixed: d.0[1],
            high: d.0[2],
        }
    }
}

pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

impl PredictionDistribution {
    /// Validates that `p` lies on the probability simplex.
    pub fn new(p: [f64; 3]) -> Result<Self> {
        if p.iter()
            .any(|x| !x.is_finite() || *x < -SIMPLEX_TOLERANCE || *x > 1.0 + SIMPLEX_TOLERANCE)
        {
            return Err(Error::invalid(format!("probabilities out of range: {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!("probabilities sum to {sum}: {p:?}")));
        }
        Ok(Self(p.map(|x| x.clamp(0.0, 1.0))))
    }

    /// Scales non-negative weights onto the simplex; all-zero weights give
    /// the uniform distribution.
    pub fn normalized(w: [f64; 3]) -> Result<Self> {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid(format!(
                "weights must be finite and non-negative: {w:?}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if sum == 0.0 {
            return Ok(Self::uniform());
        }
        Ok(Self(w.map(|x| x / sum)))
    }

    pub fn uniform() -> Self {
        Self([1.0 / 3.0; 3])
    }

    /// Point mass on one class.
    pub fn certain(label: FactualityLabel) -> Self {
        let mut p = [0.0; 3];
        p[label.ordinal()] = 1.0;
        Self(p)
    }

    pub fn prob(&self, label: FactualityLabel) -> f64 {
        self.0[label.ordinal()]
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    /// Most likely class; ties go to the lower ordinal class.
    pub fn argmax(&self) -> FactualityLabel {
        let mut best = 0;
        for c in 1..3 {
            if self.0[c] > self.0[best] {
                best = c;
            }
        }
        FactualityLabel::ALL[best]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PredictionDistribution::new([0.2, 0.3, 0.5]).is_ok());
        assert!(PredictionDistribution::new([0.2, 0.3, 0.6]).is_err());
        assert!(PredictionDistribution::new([-0.1, 0.6, 0.5]).is_err());
        assert!(PredictionDistribution::new([f64::NAN, 0.5, 0.5]).is_err());
    }

    #[test]
    fn argmax_ties_prefer_lower_class() {
        let d = PredictionDistribution::new([0.4, 0.4, 0.2]).unwrap();
        assert_eq!(d.argmax(), FactualityLabel::Low);
        let d = PredictionDistribution::new([0.2, 0.4, 0.4]).unwrap();
        assert_eq!(d.argmax(), FactualityLabel::Mixed);
        assert_eq!(PredictionDistribution::uniform().argmax(), FactualityLabel::Low);
    }

    #[test]
    fn serde_shape() {
        let d = PredictionDistribution::new([0.25, 0.25, 0.5]).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"low":0.25,"mixed":0.25,"high":0.5}"#);
        assert!(serde_json::from_str::<PredictionDistribution>(r#"{"low":0.5,"mixed":0.5,"high":0.5}"#).is_err());
    }
}
