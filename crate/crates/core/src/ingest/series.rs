use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Snapshot, HOURS};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Views,
    Likes,
    Dislikes,
    Comments,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [Self::Views, Self::Likes, Self::Dislikes, Self::Comments];

    pub fn key(self) -> &'static str {
        match self {
            Self::Views => "views",
            Self::Likes => "likes",
            Self::Dislikes => "dislikes",
            Self::Comments => "comments",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Cumulative action count at the end of each of the first 168 hours after
/// publication: `values[j]` is the count by the end of hour `j + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SeriesRepr", into = "SeriesRepr")]
pub struct HourlyCumulativeSeries {
    action: ActionKind,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    action: ActionKind,
    values: Vec<f64>,
}

impl TryFrom<SeriesRepr> for HourlyCumulativeSeries {
    type Error = Error;
    fn try_from(r: SeriesRepr) -> Result<Self> {
        HourlyCumulativeSeries::new(r.action, r.values)
    }
}

impl From<HourlyCumulativeSeries> for SeriesRepr {
    fn from(s: HourlyCumulativeSeries) -> Self {
        SeriesRepr {
            action: s.action,
            values: s.values,
        }
    }
}

impl HourlyCumulativeSeries {
    /// Validates length, finiteness, non-negativity and monotonicity.
    pub fn new(action: ActionKind, values: Vec<f64>) -> Result<Self> {
        if values.len() != HOURS {
            return Err(Error::invalid(format!(
                "{action} series has {} values, expected {HOURS}",
                values.len()
            )));
        }
        let mut prev = 0.0;
        for (j, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("{action} series value {v} at hour {}", j + 1)));
            }
            if v < prev {
                return Err(Error::invalid(format!(
                    "{action} series decreases at hour {} ({prev} -> {v})",
                    j + 1
                )));
            }
            prev = v;
        }
        Ok(Self { action, values })
    }

    /// Builds a series from per-hour increments (prefix sums).
    pub fn from_increments(action: ActionKind, increments: &[f64]) -> Result<Self> {
        let mut acc = 0.0;
        let values = increments
            .iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect();
        Self::new(action, values)
    }

    pub fn zeros(action: ActionKind) -> Self {
        Self {
            action,
            values: vec![0.0; HOURS],
        }
    }

    pub fn action(&self) -> ActionKind {
        self.action
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cumulative count by the end of `hour`, with hour 0 mapping to 0.
    pub fn at_hour(&self, hour: usize) -> f64 {
        if hour == 0 {
            0.0
        } else {
            self.values[hour - 1]
        }
    }

    /// Cumulative count by the end of `day` (1..=7), day 0 mapping to 0.
    pub fn at_day(&self, day: usize) -> f64 {
        self.at_hour(day * 24)
    }

    pub fn total(&self) -> f64 {
        self.values[HOURS - 1]
    }

    /// Same series with every count multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            action: self.action,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// How counts between two snapshots are assigned to hour boundaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Last observation carried forward.
    #[default]
    Locf,
    /// Linear between neighbouring snapshots, starting from (0 min, 0).
    Linear,
}

impl std::str::FromStr for Interpolation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "locf" => Ok(Self::Locf),
            "linear" => Ok(Self::Linear),
            _ => Err(Error::Config(format!("unknown interpolation {s:?}"))),
        }
    }
}

/// Reconstructs the hourly cumulative series of one action kind from the
/// snapshots of a single video.
///
/// Hour `j + 1` ends at minute `60 * (j + 1)`. Hours before the first
/// snapshot are 0, hours after the last one keep its value, and count
/// regressions are repaired with a running maximum.
pub fn build_hourly_series(
    snapshots: &[Snapshot],
    action: ActionKind,
    interpolation: Interpolation,
) -> Result<HourlyCumulativeSeries> {
    if snapshots.is_empty() {
        return Err(Error::EmptySnapshots);
    }
    // Order by time, then count, so duplicates at the same minute resolve
    // identically regardless of input order.
    let mut points: Vec<(u32, u64)> = snapshots.iter().map(|s| (s.observed_at, s.count(action))).collect();
    points.sort_unstable();

    // Running maximum makes the observations monotone before sampling.
    let mut max = 0u64;
    for p in points.iter_mut() {
        max = max.max(p.1);
        p.1 = max;
    }

    let mut values = Vec::with_capacity(HOURS);
    let mut next = 0usize;
    for j in 0..HOURS {
        let boundary = 60 * (j as u32 + 1);
        while next < points.len() && points[next].0 <= boundary {
            next += 1;
        }
        let v = match interpolation {
            Interpolation::Locf => {
                if next == 0 {
                    0.0
                } else {
                    points[next - 1].1 as f64
                }
            }
            Interpolation::Linear => {
                let (t0, c0) = if next == 0 { (0, 0) } else { points[next - 1] };
                match points.get(next) {
                    Some(&(t1, c1)) => {
                        let frac = f64::from(boundary - t0) / f64::from(t1 - t0);
                        c0 as f64 + frac * (c1 as f64 - c0 as f64)
                    }
                    None => c0 as f64,
                }
            }
        };
        values.push(v);
    }
    HourlyCumulativeSeries::new(action, values)
}
