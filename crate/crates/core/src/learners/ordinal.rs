//! Proportional-odds (cumulative logit) model:
//! `P(y <= c | x) = sigmoid(theta_c - w . x)` for c in {Low, Mixed}, with
//! `theta_1 = theta_0 + exp(delta)` so the thresholds stay ordered.

use serde::{Deserialize, Serialize};

use super::optim::{minimize, sigmoid, softplus, DescentConfig};
use super::standardize::Standardizer;
use super::{check_training_data, class_counts, K};
use crate::ingest::FactualityLabel;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrdinalConfig {
    /// Penalty on `w` only; 0 gives plain maximum likelihood.
    pub l2: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub standardize: bool,
}

impl Default for OrdinalConfig {
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
pub struct OrdinalModel {
    pub weights: Vec<f64>,
    /// Strictly increasing.
    pub thresholds: [f64; 2],
    pub scaler: Standardizer,
    pub iterations: usize,
    pub converged: bool,
    /// Penalised negative log-likelihood per accepted step (non-increasing).
    pub objective_history: Vec<f64>,
}

/// Parameter layout: `d` weights, `theta_0`, `delta`.
pub fn n_params(d: usize) -> usize {
    d + 2
}

/// Mean negative log-likelihood plus `l2 / 2 * ||w||^2`, and its gradient.
pub fn objective_and_gradient(params: &[f64], x: &Matrix, y: &[FactualityLabel], l2: f64, grad: &mut [f64]) -> f64 {
    let d = x.n_cols();
    let n = x.n_rows() as f64;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let w = &params[..d];
    let theta0 = params[d];
    let gap = params[d + 1].exp();
    let theta1 = theta0 + gap;
    let mut loss = 0.0;
    let (mut g_theta0, mut g_theta1, mut g_gap) = (0.0, 0.0, 0.0);
    for (row, label) in x.rows().zip(y) {
        let eta: f64 = w.iter().zip(row).map(|(a, v)| a * v).sum();
        let d_eta = match label {
            FactualityLabel::Low => {
                loss += softplus(eta - theta0);
                let s = sigmoid(eta - theta0);
                g_theta0 -= s;
                s
            }
            FactualityLabel::High => {
                loss += softplus(theta1 - eta);
                let s = sigmoid(theta1 - eta);
                g_theta1 += s;
                -s
            }
            FactualityLabel::Mixed => {
                // p = sigmoid(a) - sigmoid(b) = sigmoid(a) sigmoid(-b) (1 - exp(-(a - b)))
                let a = theta1 - eta;
                let b = theta0 - eta;
                loss += softplus(-a) + softplus(b) - (-(-gap).exp_m1()).ln();
                let sa = sigmoid(-a);
                let sb = sigmoid(b);
                g_theta1 -= sa;
                g_theta0 += sb;
                g_gap -= 1.0 / gap.exp_m1();
                sa - sb
            }
        };
        for (g, v) in grad[..d].iter_mut().zip(row) {
            *g += d_eta * v;
        }
    }
    let mut penalty = 0.0;
    for (g, wv) in grad[..d].iter_mut().zip(w) {
        *g = *g / n + l2 * wv;
        penalty += wv * wv;
    }
    // theta_1 = theta_0 + gap, gap = exp(delta)
    grad[d] = (g_theta0 + g_theta1) / n;
    grad[d + 1] = (g_theta1 + g_gap) * gap / n;
    loss / n + 0.5 * l2 * penalty
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn ordinal_logistic_train(x: &Matrix, y: &[FactualityLabel], config: &OrdinalConfig) -> Result<OrdinalModel> {
    check_training_data(x, y)?;
    let counts = class_counts(y);
    if let Some(missing) = FactualityLabel::ALL.into_iter().find(|l| counts[l.ordinal()] == 0) {
        return Err(Error::MissingClass(missing));
    }
    let scaler = if config.standardize {
        Standardizer::fit(x)
    } else {
        Standardizer::identity(x.n_cols())
    };
    let xs = scaler.apply(x);
    let d = x.n_cols();
    let n = y.len() as f64;
    let cum0 = counts[0] as f64 / n;
    let cum1 = (counts[0] + counts[1]) as f64 / n;
    let mut x0 = vec![0.0; n_params(d)];
    x0[d] = logit(cum0);
    x0[d + 1] = (logit(cum1) - logit(cum0)).ln();

    let mut precond = vec![1.0 / (0.25 + config.l2); d];
    precond.extend([4.0, 1.0]);
    let out = minimize(
        |p, g| objective_and_gradient(p, &xs, y, config.l2, g),
        x0,
        &precond,
        DescentConfig {
            max_iter: config.max_iter,
            grad_tol: config.grad_tol,
        },
    );
    let theta0 = out.params[d];
    let theta1 = theta0 + out.params[d + 1].exp();
    Ok(OrdinalModel {
        weights: out.params[..d].to_vec(),
        thresholds: [theta0, theta1],
        scaler,
        iterations: out.iterations,
        converged: out.converged,
        objective_history: out.history,
    })
}

impl OrdinalModel {
    /// `[P(y <= Low), P(y <= Mixed)]`
    pub fn cumulative(&self, row: &[f64]) -> [f64; 2] {
        let mut xs = vec![0.0; row.len()];
        self.scaler.apply_row(row, &mut xs);
        let eta: f64 = self.weights.iter().zip(&xs).map(|(a, v)| a * v).sum();
        let c0 = sigmoid(self.thresholds[0] - eta);
        let c1 = sigmoid(self.thresholds[1] - eta).max(c0);
        [c0, c1]
    }

    pub fn predict(&self, row: &[f64]) -> [f64; K] {
        let [c0, c1] = self.cumulative(row);
        [c0, c1 - c0, 1.0 - c1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use FactualityLabel::*;

    fn blobs() -> (Matrix, Vec<FactualityLabel>) {
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for (label, centre) in [(Low, 0.0), (Mixed, 5.0), (High, 10.0)] {
            for k in 0..10 {
                rows.push([centre + (k as f64 - 4.5) * 0.2]);
                y.push(label);
            }
        }
        (Matrix::from_rows(&rows, 1).unwrap(), y)
    }

    #[test]
    fn ordinal_separable_fit() {
        let (x, y) = blobs();
        let m = ordinal_logistic_train(&x, &y, &OrdinalConfig::default()).unwrap();
        assert!(m.thresholds[0] < m.thresholds[1]);
        for (row, label) in x.rows().zip(&y) {
            let p = m.predict(row);
            let best = (0..K).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
            assert_eq!(best, label.ordinal());
        }
        assert!(m.objective_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn missing_class_rejected() {
        let x = Matrix::from_rows(&[[0.0], [1.0]], 1).unwrap();
        assert!(matches!(
            ordinal_logistic_train(&x, &[Low, High], &OrdinalConfig::default()),
            Err(Error::MissingClass(Mixed))
        ));
    }

    #[test]
    fn zero_weights_ignore_features() {
        let m = OrdinalModel {
            weights: vec![0.0],
            thresholds: [-0.5, 1.0],
            scaler: Standardizer::identity(1),
            iterations: 0,
            converged: true,
            objective_history: vec![],
        };
        assert_eq!(m.predict(&[-100.0]), m.predict(&[42.0]));
    }
}
