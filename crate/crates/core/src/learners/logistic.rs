//! Multinomial logistic regression with an L2 penalty on the weights.

use serde::{Deserialize, Serialize};

use super::optim::{minimize, DescentConfig};
use super::standardize::Standardizer;
use super::{check_training_data, class_counts, K};
use crate::ingest::FactualityLabel;
use crate::{Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    pub l2: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    /// Centre and scale features before fitting; weights are stored in the
    /// scaled space together with the scaler.
    pub standardize: bool,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            max_iter: 5_000,
            grad_tol: 1e-6,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// `K x d`, row per class in ordinal order.
    pub weights: Vec<Vec<f64>>,
    pub intercepts: [f64; K],
    pub scaler: Standardizer,
    pub iterations: usize,
    pub converged: bool,
    pub objective_history: Vec<f64>,
}

/// Parameter layout: `K * d` weights (class-major), then `K` intercepts.
pub fn n_params(d: usize) -> usize {
    K * d + K
}

pub(crate) fn softmax(z: [f64; K]) -> [f64; K] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// Mean cross-entropy plus `l2 / 2 * ||W||^2`, and its gradient.
pub fn objective_and_gradient(params: &[f64], x: &Matrix, y: &[FactualityLabel], l2: f64, grad: &mut [f64]) -> f64 {
    let d = x.n_cols();
    let n = x.n_rows() as f64;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let (w, b) = params.split_at(K * d);
    let mut loss = 0.0;
    for (row, label) in x.rows().zip(y) {
        let mut z = [0.0; K];
        for k in 0..K {
            z[k] = b[k] + w[k * d..(k + 1) * d].iter().zip(row).map(|(a, v)| a * v).sum::<f64>();
        }
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        let t = label.ordinal();
        loss += lse - z[t];
        for k in 0..K {
            let r = (z[k] - lse).exp() - if k == t { 1.0 } else { 0.0 };
            let gk = &mut grad[k * d..(k + 1) * d];
            for (g, v) in gk.iter_mut().zip(row) {
                *g += r * v;
            }
            grad[K * d + k] += r;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    let mut penalty = 0.0;
    for (g, wv) in grad[..K * d].iter_mut().zip(w) {
        *g += l2 * wv;
        penalty += wv * wv;
    }
    loss / n + 0.5 * l2 * penalty
}

pub fn logistic_train(x: &Matrix, y: &[FactualityLabel], config: &LogisticConfig) -> Result<LogisticModel> {
    check_training_data(x, y)?;
    let scaler = if config.standardize {
        Standardizer::fit(x)
    } else {
        Standardizer::identity(x.n_cols())
    };
    let xs = scaler.apply(x);
    let d = x.n_cols();

    let counts = class_counts(y);
    let n = y.len() as f64;
    let mut x0 = vec![0.0; n_params(d)];
    for k in 0..K {
        // log prior, floored for absent classes
        x0[K * d + k] = (counts[k] as f64 / n).max(1e-6).ln();
    }
    // Curvature bounds of the loss: 1/4 per standardised coordinate.
    let mut precond = vec![1.0 / (0.25 + config.l2); K * d];
    precond.extend([4.0; K]);

    let out = minimize(
        |p, g| objective_and_gradient(p, &xs, y, config.l2, g),
        x0,
        &precond,
        DescentConfig {
            max_iter: config.max_iter,
            grad_tol: config.grad_tol,
        },
    );
    let (w, b) = out.params.split_at(K * d);
    Ok(LogisticModel {
        weights: (0..K).map(|k| w[k * d..(k + 1) * d].to_vec()).collect(),
        intercepts: [b[0], b[1], b[2]],
        scaler,
        iterations: out.iterations,
        converged: out.converged,
        objective_history: out.history,
    })
}

impl LogisticModel {
    pub fn predict(&self, row: &[f64]) -> [f64; K] {
        let mut xs = vec![0.0; row.len()];
        self.scaler.apply_row(row, &mut xs);
        let mut z = self.intercepts;
        for (k, zk) in z.iter_mut().enumerate() {
            *zk += self.weights[k].iter().zip(&xs).map(|(a, v)| a * v).sum::<f64>();
        }
        softmax(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use FactualityLabel::*;

    #[test]
    fn separable_two_class() {
        let x = Matrix::from_rows(
            &[[0.0, 0.0], [0.5, 0.2], [0.2, 0.4], [3.0, 3.0], [3.5, 2.8], [2.9, 3.4]],
            2,
        )
        .unwrap();
        let y = [Low, Low, Low, High, High, High];
        let m = logistic_train(&x, &y, &LogisticConfig::default()).unwrap();
        for (row, label) in x.rows().zip(&y) {
            let p = m.predict(row);
            let best = (0..K).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
            assert_eq!(best, label.ordinal());
        }
        assert!(m.objective_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn heavy_penalty_recovers_prior() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0], [5.0]], 1).unwrap();
        let y = [Low, Mixed, Mixed, High, High];
        let cfg = LogisticConfig {
            l2: 1e8,
            ..Default::default()
        };
        let m = logistic_train(&x, &y, &cfg).unwrap();
        assert!(m.weights.iter().flatten().all(|w| w.abs() < 1e-6));
        let p = m.predict(&[2.5]);
        for (pk, prior) in p.iter().zip([0.2, 0.4, 0.4]) {
            assert!((pk - prior).abs() < 1e-5, "{p:?}");
        }
    }

    #[test]
    fn zero_weights_give_uniform() {
        let m = LogisticModel {
            weights: vec![vec![0.0; 2]; 3],
            intercepts: [0.0; 3],
            scaler: Standardizer::identity(2),
            iterations: 0,
            converged: true,
            objective_history: vec![],
        };
        let p = m.predict(&[5.0, -2.0]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }
}
