//! Preconditioned gradient descent with Armijo backtracking.

/// Convergence controls.
#[derive(Debug, Clone, Copy)]
pub struct DescentConfig {
    pub max_iter: usize,
    /// Stop once the gradient's infinity norm falls below this.
    pub grad_tol: f64,
}

#[derive(Debug, Clone)]
pub struct DescentOutcome {
    pub params: Vec<f64>,
    /// Objective before the first step and after every accepted step.
    pub history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Minimises `objective`, which returns the value and writes the gradient.
/// Each step moves along `-precond * grad`; the step length grows after an
/// accepted step and halves until the Armijo condition holds, so the
/// recorded objective never increases.
pub fn minimize<F>(mut objective: F, x0: Vec<f64>, precond: &[f64], config: DescentConfig) -> DescentOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    debug_assert_eq!(precond.len(), n);
    let mut x = x0;
    let mut grad = vec![0.0; n];
    let mut value = objective(&x, &mut grad);
    let mut history = vec![value];
    let mut step = 1.0;
    let mut trial = vec![0.0; n];
    let mut trial_grad = vec![0.0; n];

    for iter in 0..config.max_iter {
        let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if gmax < config.grad_tol {
            return DescentOutcome {
                params: x,
                history,
                iterations: iter,
                converged: true,
            };
        }
        // directional derivative along d = -P g
        let slope: f64 = -grad.iter().zip(precond).map(|(g, p)| p * g * g).sum::<f64>();
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                trial[i] = x[i] - step * precond[i] * grad[i];
            }
            let v = objective(&trial, &mut trial_grad);
            if v.is_finite() && v <= value + ARMIJO_C * step * slope {
                std::mem::swap(&mut x, &mut trial);
                std::mem::swap(&mut grad, &mut trial_grad);
                value = v;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No decrease representable at this precision.
            return DescentOutcome {
                params: x,
                history,
                iterations: iter,
                converged: false,
            };
        }
        history.push(value);
        step = (step * 2.0).min(1e6);
    }
    let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    DescentOutcome {
        params: x,
        history,
        iterations: config.max_iter,
        converged: gmax < config.grad_tol,
    }
}

/// `log(1 + exp(z))` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        // f = (x - 3)^2 + 10 (y + 1)^2
        let out = minimize(
            |p, g| {
                g[0] = 2.0 * (p[0] - 3.0);
                g[1] = 20.0 * (p[1] + 1.0);
                (p[0] - 3.0).powi(2) + 10.0 * (p[1] + 1.0).powi(2)
            },
            vec![0.0, 0.0],
            &[0.5, 0.05],
            DescentConfig {
                max_iter: 1000,
                grad_tol: 1e-10,
            },
        );
        assert!(out.converged);
        assert!((out.params[0] - 3.0).abs() < 1e-9);
        assert!((out.params[1] + 1.0).abs() < 1e-9);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn stable_helpers() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
    }
}
