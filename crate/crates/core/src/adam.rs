//! Adam with bias-corrected first and second moment estimates.

use serde::{Deserialize, Serialize};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Zero moments for `len` parameters, standard constants.
    pub fn new(len: usize) -> Self {
        Self { step: 0, first_moment: vec![0.0; len], second_moment: vec![0.0; len], beta1: BETA1, beta2: BETA2, epsilon: EPSILON }
    }

    /// Applies one update to `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], learning_rate: f64) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient length mismatch");
        assert_eq!(params.len(), self.first_moment.len(), "optimizer state length mismatch");
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(self.first_moment.iter_mut()).zip(self.second_moment.iter_mut()) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Functional form: returns the advanced state and updated parameters.
pub fn adam_step(state: &AdamState, params: &[f64], grads: &[f64], learning_rate: f64) -> (AdamState, Vec<f64>) {
    let mut next = state.clone();
    let mut updated = params.to_vec();
    next.step(&mut updated, grads, learning_rate);
    (next, updated)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate_against_gradient_sign() {
        let lr = 1e-3;
        let grads = [1e-3, -2.5, 0.7, -1e-3, 40.0];
        let params = [0.5; 5];
        let (_, updated) = adam_step(&AdamState::new(5), &params, &grads, lr);
        for ((u, p), g) in updated.iter().zip(&params).zip(&grads) {
            let delta = u - p;
            assert!((delta + lr * g.signum()).abs() < 1e-6, "g={g} delta={delta}");
        }
    }

    #[test]
    fn first_step_closed_form() {
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        let lr = 1e-3;
        let g = 0.25;
        let (_, p) = adam_step(&AdamState::new(1), &[0.0], &[g], lr);
        let expected = -lr * g / (g.abs() + EPSILON);
        assert!((p[0] - expected).abs() < 1e-18);
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let (state, p) = adam_step(&AdamState::new(3), &[1.0, -2.0, 3.0], &[0.0; 3], 1e-3);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn identical_runs_are_identical() {
        let run = || {
            let mut s = AdamState::new(2);
            let mut p = vec![0.1, 0.2];
            for i in 0..20 {
                let g = [(i as f64).sin(), (i as f64 * 0.3).cos()];
                s.step(&mut p, &g, 1e-3);
            }
            (s, p)
        };
        assert_eq!(run(), run());
    }
}
