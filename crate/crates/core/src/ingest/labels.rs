use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Merged three-level factuality scale. The discriminant is the ordinal
/// encoding used by MAE and by the correlation-based selectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FactualityLabel {
    Low = 0,
    Mixed = 1,
    High = 2,
}

impl FactualityLabel {
    pub const ALL: [FactualityLabel; 3] = [Self::Low, Self::Mixed, Self::High];
    pub const COUNT: usize = 3;

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        Self::ALL.get(ordinal).copied()
    }

    /// Lower-case name used in feature names and reports.
    pub fn key(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Mixed => "mixed",
            Self::High => "high",
        }
    }

    /// Ordinal distance, the per-item MAE contribution.
    pub fn distance(self, other: Self) -> usize {
        self.ordinal().abs_diff(other.ordinal())
    }
}

impl fmt::Display for FactualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Low => "Low",
            Self::Mixed => "Mixed",
            Self::High => "High",
        };
        f.write_str(s)
    }
}

/// The six-value rating scale before merging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RawFactualityLabel {
    VeryHigh,
    High,
    MostlyFactual,
    Mixed,
    Low,
    VeryLow,
}

impl RawFactualityLabel {
    pub const ALL: [RawFactualityLabel; 6] = [
        Self::VeryHigh,
        Self::High,
        Self::MostlyFactual,
        Self::Mixed,
        Self::Low,
        Self::VeryLow,
    ];

    pub fn merged(self) -> FactualityLabel {
        merge_factuality_labels(self)
    }
}

/// Collapses the six-value scale onto three classes.
pub fn merge_factuality_labels(raw: RawFactualityLabel) -> FactualityLabel {
    match raw {
        RawFactualityLabel::VeryHigh | RawFactualityLabel::High => FactualityLabel::High,
        RawFactualityLabel::MostlyFactual | RawFactualityLabel::Mixed => FactualityLabel::Mixed,
        RawFactualityLabel::Low | RawFactualityLabel::VeryLow => FactualityLabel::Low,
    }
}

impl FromStr for RawFactualityLabel {
    type Err = Error;

    /// Accepts "Very High", "very-high", "VERY_HIGH", "VeryHigh", ...
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match norm.as_str() {
            "veryhigh" => Ok(Self::VeryHigh),
            "high" => Ok(Self::High),
            "mostlyfactual" => Ok(Self::MostlyFactual),
            "mixed" => Ok(Self::Mixed),
            "low" => Ok(Self::Low),
            "verylow" => Ok(Self::VeryLow),
            _ => Err(Error::invalid(format!("unknown factuality rating {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_examples() {
        assert_eq!(
            merge_factuality_labels(RawFactualityLabel::VeryHigh),
            FactualityLabel::High
        );
        assert_eq!(
            merge_factuality_labels(RawFactualityLabel::MostlyFactual),
            FactualityLabel::Mixed
        );
        assert_eq!(merge_factuality_labels(RawFactualityLabel::Low), FactualityLabel::Low);
        assert_eq!(
            merge_factuality_labels(RawFactualityLabel::VeryLow),
            FactualityLabel::Low
        );
    }

    #[test]
    fn merge_is_surjective() {
        let mut hit = [false; 3];
        for raw in RawFactualityLabel::ALL {
            hit[raw.merged().ordinal()] = true;
        }
        assert_eq!(hit, [true; 3]);
    }

    #[test]
    fn parse_spellings() {
        assert_eq!(
            "Very High".parse::<RawFactualityLabel>().unwrap(),
            RawFactualityLabel::VeryHigh
        );
        assert_eq!(
            "mostly-factual".parse::<RawFactualityLabel>().unwrap(),
            RawFactualityLabel::MostlyFactual
        );
        assert_eq!(
            "VERY_LOW".parse::<RawFactualityLabel>().unwrap(),
            RawFactualityLabel::VeryLow
        );
        assert!("satire".parse::<RawFactualityLabel>().is_err());
    }

    #[test]
    fn ordering_and_distance() {
        assert!(FactualityLabel::Low < FactualityLabel::Mixed);
        assert!(FactualityLabel::Mixed < FactualityLabel::High);
        assert_eq!(FactualityLabel::Low.distance(FactualityLabel::High), 2);
        assert_eq!(FactualityLabel::from_ordinal(1), Some(FactualityLabel::Mixed));
        assert_eq!(FactualityLabel::from_ordinal(3), None);
    }
}
