use serde::{Deserialize, Serialize};

use crate::ingest::FactualityLabel;
use crate::{Error, Result};

fn check_lengths(truth: &[FactualityLabel], pred: &[FactualityLabel]) -> Result<()> {
    if truth.is_empty() {
        return Err(Error::invalid("cannot score an empty prediction set"));
    }
    if truth.len() != pred.len() {
        return Err(Error::invalid(format!(
            "{} labels but {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    Ok(())
}

/// Rows are true classes, columns predicted classes.
pub fn confusion_matrix(truth: &[FactualityLabel], pred: &[FactualityLabel]) -> Result<[[usize; 3]; 3]> {
    check_lengths(truth, pred)?;
    let mut m = [[0; 3]; 3];
    for (t, p) in truth.iter().zip(pred) {
        m[t.ordinal()][p.ordinal()] += 1;
    }
    Ok(m)
}

pub fn accuracy(truth: &[FactualityLabel], pred: &[FactualityLabel]) -> Result<f64> {
    check_lengths(truth, pred)?;
    let hits = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Mean per-class recall. Every class must occur in `truth`.
pub fn balanced_accuracy(truth: &[FactualityLabel], pred: &[FactualityLabel]) -> Result<f64> {
    let recalls = per_class_recall(&confusion_matrix(truth, pred)?);
    let mut sum = 0.0;
    for (label, r) in FactualityLabel::ALL.into_iter().zip(recalls) {
        sum += r.ok_or(Error::MissingClass(label))?;
    }
    Ok(sum / 3.0)
}

/// Mean absolute ordinal distance.
pub fn mae(truth: &[FactualityLabel], pred: &[FactualityLabel]) -> Result<f64> {
    check_lengths(truth, pred)?;
    let total: usize = truth.iter().zip(pred).map(|(t, p)| t.distance(*p)).sum();
    Ok(total as f64 / truth.len() as f64)
}

/// `None` for classes absent from the truth.
pub fn per_class_recall(confusion: &[[usize; 3]; 3]) -> [Option<f64>; 3] {
    std::array::from_fn(|c| {
        let support: usize = confusion[c].iter().sum();
        (support > 0).then(|| confusion[c][c] as f64 / support as f64)
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub accuracy: f64,
    /// Mean recall over the classes present in the evaluated set.
    pub balanced_accuracy: f64,
    pub mae: f64,
    pub confusion: [[usize; 3]; 3],
    pub per_class_recall: [Option<f64>; 3],
    pub split_sizes: SplitSizes,
}

impl EvaluationReport {
    pub fn new(truth: &[FactualityLabel], pred: &[FactualityLabel], split_sizes: SplitSizes) -> Result<Self> {
        let confusion = confusion_matrix(truth, pred)?;
        let per_class_recall = per_class_recall(&confusion);
        let present: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
        Ok(Self {
            n: truth.len(),
            accuracy: accuracy(truth, pred)?,
            balanced_accuracy: present.iter().sum::<f64>() / present.len() as f64,
            mae: mae(truth, pred)?,
            confusion,
            per_class_recall,
            split_sizes,
        })
    }

    /// Predicts the most frequent training label (ties to the lower class)
    /// for every evaluated item.
    pub fn majority_baseline(
        train: &[FactualityLabel],
        truth: &[FactualityLabel],
        split_sizes: SplitSizes,
    ) -> Result<Self> {
        let label = majority_label(train)?;
        Self::new(truth, &vec![label; truth.len()], split_sizes)
    }
}

pub fn majority_label(labels: &[FactualityLabel]) -> Result<FactualityLabel> {
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l.ordinal()] += 1;
    }
    let best = (0..3)
        .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
        .expect("three classes");
    if counts[best] == 0 {
        return Err(Error::invalid("no labels to take a majority over"));
    }
    Ok(FactualityLabel::ALL[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use FactualityLabel::*;

    #[test]
    fn hand_counted_examples() {
        let truth = [High, High, Mixed];
        let pred = [High, Mixed, Low];
        assert!((accuracy(&truth, &pred).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((mae(&truth, &pred).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(accuracy(&truth, &truth).unwrap(), 1.0);
        assert_eq!(mae(&truth, &truth).unwrap(), 0.0);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn balanced_accuracy_from_recalls() {
        // recalls 1.0, 0.5, 0.0
        let truth = [Low, Low, Mixed, Mixed, High];
        let pred = [Low, Low, Mixed, Low, Low];
        assert!((balanced_accuracy(&truth, &pred).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            balanced_accuracy(&[Low, High], &[Low, High]),
            Err(Error::MissingClass(Mixed))
        ));
    }

    #[test]
    fn majority_predictor_balanced_accuracy_is_a_third() {
        let truth = [Low, Mixed, Mixed, High, High, High];
        let pred = [High; 6];
        assert!((balanced_accuracy(&truth, &pred).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn report_is_consistent_with_confusion() {
        let truth = [Low, Mixed, High, High, Mixed];
        let pred = [Mixed, Mixed, High, Low, High];
        let r = EvaluationReport::new(&truth, &pred, SplitSizes::default()).unwrap();
        let trace: usize = (0..3).map(|c| r.confusion[c][c]).sum();
        assert_eq!(r.accuracy, trace as f64 / r.n as f64);
        let mut dist = 0;
        for t in 0..3 {
            for p in 0..3 {
                dist += r.confusion[t][p] * t.abs_diff(p);
            }
        }
        assert_eq!(r.mae, dist as f64 / r.n as f64);
    }

    #[test]
    fn majority_label_ties_go_low() {
        assert_eq!(majority_label(&[High, Low]).unwrap(), Low);
        assert_eq!(majority_label(&[High, High, Low]).unwrap(), High);
    }
}
