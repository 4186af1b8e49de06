//! SMOTE: synthetic minority oversampling by interpolation between
//! same-class nearest neighbours.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{class_counts, K};
use crate::ingest::FactualityLabel;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    /// Desired per-class counts. `None` raises every present class to the
    /// majority count. Classes already at or above their target are left alone.
    pub target: Option<[usize; K]>,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            target: None,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices (into `members`) of the `k` nearest other members of each member,
/// ties broken by index.
fn neighbours(x: &Matrix, members: &[usize], k: usize) -> Vec<Vec<usize>> {
    members
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            let mut d: Vec<(f64, usize)> = members
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(b, &j)| (sq_dist(x.row(i), x.row(j)), b))
                .collect();
            d.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
            d.truncate(k);
            d.into_iter().map(|(_, b)| b).collect()
        })
        .collect()
}

/// Returns the original rows followed by synthetic rows, appended class by
/// class in ordinal order.
pub fn smote_oversample(
    x: &Matrix,
    y: &[FactualityLabel],
    config: &SmoteConfig,
    seed: u64,
) -> Result<(Matrix, Vec<FactualityLabel>)> {
    if x.n_rows() != y.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.n_rows(), y.len())));
    }
    if config.k_neighbors == 0 {
        return Err(Error::invalid("k_neighbors must be at least 1"));
    }
    let counts = class_counts(y);
    let majority = counts.iter().copied().max().unwrap_or(0);
    let target = config
        .target
        .unwrap_or(counts.map(|c| if c > 0 { majority } else { 0 }));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = x.clone();
    let mut labels = y.to_vec();
    for class in FactualityLabel::ALL {
        let c = class.ordinal();
        if target[c] <= counts[c] {
            continue;
        }
        if counts[c] < 2 {
            return Err(Error::InsufficientMinority {
                class,
                count: counts[c],
            });
        }
        let members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        let nn = neighbours(x, &members, config.k_neighbors.min(members.len() - 1));
        let mut row = vec![0.0; x.n_cols()];
        for _ in counts[c]..target[c] {
            let a = rng.random_range(0..members.len());
            let b = nn[a][rng.random_range(0..nn[a].len())];
            let u = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            };
            let (xi, xn) = (x.row(members[a]), x.row(members[b]));
            for ((r, p), q) in row.iter_mut().zip(xi).zip(xn) {
                *r = p + u * (q - p);
            }
            out.push_row(&row)?;
            labels.push(class);
        }
    }
    Ok((out, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use FactualityLabel::*;

    #[test]
    fn synthetic_point_on_open_segment() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [5.0, 5.0], [6.0, 5.0], [7.0, 5.0]], 2).unwrap();
        let y = [Low, Low, High, High, High];
        let cfg = SmoteConfig {
            k_neighbors: 1,
            target: Some([3, 0, 3]),
        };
        let (x2, y2) = smote_oversample(&x, &y, &cfg, 9).unwrap();
        assert_eq!(x2.n_rows(), 6);
        assert_eq!(y2[5], Low);
        let p = x2.row(5);
        assert_eq!(p[0], p[1]);
        assert!(p[0] > 0.0 && p[0] < 1.0);
    }

    #[test]
    fn target_equal_to_counts_is_noop() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]], 1).unwrap();
        let y = [Low, High, High];
        let cfg = SmoteConfig {
            target: Some([1, 0, 2]),
            ..Default::default()
        };
        let (x2, y2) = smote_oversample(&x, &y, &cfg, 1).unwrap();
        assert_eq!(x2, x);
        assert_eq!(y2, y);
    }

    #[test]
    fn default_balances_to_majority_and_keeps_prefix() {
        let rows: Vec<[f64; 2]> = (0..12).map(|i| [i as f64, (i * i) as f64]).collect();
        let x = Matrix::from_rows(&rows, 2).unwrap();
        let y = [Low, Low, Low, Mixed, Mixed, High, High, High, High, High, High, High];
        let (x2, y2) = smote_oversample(&x, &y, &Default::default(), 3).unwrap();
        assert_eq!(class_counts(&y2), [7, 7, 7]);
        assert_eq!(&x2.data()[..x.data().len()], x.data());
        assert_eq!(&y2[..12], &y);
        let again = smote_oversample(&x, &y, &Default::default(), 3).unwrap();
        assert_eq!(again.0, x2);
    }

    #[test]
    fn single_sample_minority_is_an_error() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]], 1).unwrap();
        let err = smote_oversample(&x, &[Low, High, High], &Default::default(), 0).unwrap_err();
        assert!(matches!(err, Error::InsufficientMinority { class: Low, count: 1 }));
    }
}
