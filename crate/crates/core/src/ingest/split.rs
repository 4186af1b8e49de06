use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ChannelRecord, FactualityLabel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Dev,
    Test,
}

impl SplitPart {
    pub const ALL: [SplitPart; 3] = [Self::Train, Self::Dev, Self::Test];
}

/// Channel-level train/dev/test partition. Id lists are sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

impl DatasetSplit {
    pub fn ids(&self, part: SplitPart) -> &[String] {
        match part {
            SplitPart::Train => &self.train,
            SplitPart::Dev => &self.dev,
            SplitPart::Test => &self.test,
        }
    }

    pub fn part_of(&self, channel_id: &str) -> Option<SplitPart> {
        SplitPart::ALL
            .into_iter()
            .find(|&p| self.ids(p).binary_search_by(|id| id.as_str().cmp(channel_id)).is_ok())
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks disjointness and that the split covers exactly `channels`.
    pub fn validate(&self, channels: &[ChannelRecord]) -> Result<()> {
        let mut seen = HashSet::new();
        for id in self.train.iter().chain(&self.dev).chain(&self.test) {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("channel {id} appears in more than one split")));
            }
        }
        for c in channels {
            if !seen.remove(c.channel_id.as_str()) {
                return Err(Error::invalid(format!(
                    "channel {} is not assigned to a split",
                    c.channel_id
                )));
            }
        }
        if let Some(extra) = seen.into_iter().next() {
            return Err(Error::invalid(format!("split names unknown channel {extra}")));
        }
        Ok(())
    }

    fn sort(&mut self) {
        self.train.sort();
        self.dev.sort();
        self.test.sort();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            dev: 0.15,
            test: 0.15,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self> {
        let r = Self { train, dev, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = self.as_array();
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::Config(format!("split ratios must be non-negative: {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::Config(format!("split ratios sum to {sum}, expected 1")));
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.dev, self.test]
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = Error;
    /// "0.7,0.15,0.15"
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad split ratios {s:?}: {e}")))?;
        match parts.as_slice() {
            [a, b, c] => Self::new(*a, *b, *c),
            _ => Err(Error::Config(format!("expected three split ratios, got {s:?}"))),
        }
    }
}

/// Largest-remainder apportionment of `n` items over `ratios`. Leftover
/// items go to the largest fractional parts; ties favour earlier parts.
pub fn apportion(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let quotas = ratios.map(|r| r * n as f64);
    // Tolerance so that e.g. 0.7 * 10 does not floor to 6.
    let mut counts = quotas.map(|q| (q + 1e-9).floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - counts[a] as f64;
        let fb = quotas[b] - counts[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Seeded split stratified by label. Within each class the channel ids are
/// sorted, shuffled, and cut according to [`apportion`].
pub fn split_dataset(channels: &[ChannelRecord], ratios: SplitRatios, seed: u64) -> Result<DatasetSplit> {
    ratios.validate()?;
    let mut by_class: BTreeMap<FactualityLabel, Vec<&str>> = BTreeMap::new();
    for c in channels {
        by_class.entry(c.label).or_default().push(c.channel_id.as_str());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = DatasetSplit::default();
    for (_, mut ids) in by_class {
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let [n_train, n_dev, _] = apportion(ids.len(), &ratios.as_array());
        for (i, id) in ids.into_iter().enumerate() {
            let bucket = if i < n_train {
                &mut split.train
            } else if i < n_train + n_dev {
                &mut split.dev
            } else {
                &mut split.test
            };
            bucket.push(id.to_string());
        }
    }
    split.sort();
    split.validate(channels)?;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channels(counts: [usize; 3]) -> Vec<ChannelRecord> {
        let mut out = Vec::new();
        for (label, n) in FactualityLabel::ALL.into_iter().zip(counts) {
            for i in 0..n {
                out.push(ChannelRecord {
                    channel_id: format!("{}-{i:03}", label.key()),
                    subscriber_count: 0,
                    label,
                    videos: Vec::new(),
                });
            }
        }
        out
    }

    #[test]
    fn apportion_table_counts() {
        let r = [0.70, 0.15, 0.15];
        assert_eq!(apportion(308, &r), [216, 46, 46]);
        assert_eq!(apportion(153, &r), [107, 23, 23]);
        assert_eq!(apportion(28, &r), [20, 4, 4]);
    }

    #[test]
    fn apportion_small_class_fills_train_first() {
        let r = [0.70, 0.15, 0.15];
        assert_eq!(apportion(1, &r), [1, 0, 0]);
        assert_eq!(apportion(2, &r), [2, 0, 0]);
        assert_eq!(apportion(0, &r), [0, 0, 0]);
    }

    #[test]
    fn split_full_corpus() {
        // Low, Mixed, High = 28, 153, 308
        let chans = channels([28, 153, 308]);
        let split = split_dataset(&chans, SplitRatios::default(), 42).unwrap();
        assert_eq!(split.train.len(), 216 + 107 + 20);
        assert_eq!(split.dev.len(), 46 + 23 + 4);
        assert_eq!(split.test.len(), 46 + 23 + 4);
        let test_low = split.test.iter().filter(|id| id.starts_with("low")).count();
        assert_eq!(test_low, 4);
    }

    #[test]
    fn split_is_deterministic() {
        let chans = channels([10, 20, 30]);
        let a = split_dataset(&chans, SplitRatios::default(), 9).unwrap();
        let b = split_dataset(&chans, SplitRatios::default(), 9).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(&chans, SplitRatios::default(), 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_ratios() {
        let chans = channels([3, 4, 5]);
        let split = split_dataset(&chans, SplitRatios::new(1.0, 0.0, 0.0).unwrap(), 1).unwrap();
        assert_eq!(split.train.len(), 12);
        assert!(split.dev.is_empty() && split.test.is_empty());
    }

    #[test]
    fn part_lookup() {
        let chans = channels([4, 4, 4]);
        let split = split_dataset(&chans, SplitRatios::default(), 3).unwrap();
        for c in &chans {
            assert!(split.part_of(&c.channel_id).is_some());
        }
        assert_eq!(split.part_of("nope"), None);
    }

    #[test]
    fn ratio_parsing() {
        let r: SplitRatios = "0.8, 0.1, 0.1".parse().unwrap();
        assert_eq!(r.train, 0.8);
        assert!("0.5,0.5".parse::<SplitRatios>().is_err());
        assert!("0.5,0.6,0.1".parse::<SplitRatios>().is_err());
    }

    #[test]
    fn validate_catches_overlap() {
        let chans = channels([1, 1, 1]);
        let bad = DatasetSplit {
            train: vec!["high-000".into(), "low-000".into()],
            dev: vec!["low-000".into()],
            test: vec!["mixed-000".into()],
        };
        assert!(bad.validate(&chans).is_err());
    }
}
