//! Adaptive moment estimation optimizer.

use crate::autodiff::{no_grad, GradientMap};
use crate::nets::Param;
use crate::Real;

/// Serializable optimizer state: first/second moments per parameter, in
/// parameter order, plus the shared step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<Real>>,
    pub v: Vec<Vec<Real>>,
}

impl AdamState {
    fn new(params: &[Param]) -> AdamState {
        AdamState {
            step: 0,
            m: params.iter().map(|p| vec![0.0; p.tensor.numel()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.tensor.numel()]).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: Real,
    pub beta1: Real,
    pub beta2: Real,
    pub eps: Real,
    state: AdamState,
}

impl Adam {
    pub fn new(lr: Real, beta1: Real, beta2: Real, eps: Real, params: &[Param]) -> Adam {
        Adam { lr, beta1, beta2, eps, state: AdamState::new(params) }
    }

    pub fn state(&self) -> &AdamState {
        &self.state
    }

    pub fn restore_state(&mut self, state: AdamState) {
        assert_eq!(state.m.len(), self.state.m.len(), "optimizer state arity");
        self.state = state;
    }

    /// Applies one update to `params` (same order as at construction).
    pub fn step(&mut self, params: &[Param], grads: &GradientMap) {
        assert_eq!(params.len(), self.state.m.len());
        self.state.step += 1;
        let t = self.state.step as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        no_grad(|| {
            for (i, p) in params.iter().enumerate() {
                let g = grads.get(&p.tensor);
                let mut data = p.tensor.to_vec();
                g.with_data(|gd| {
                    let m = &mut self.state.m[i];
                    let v = &mut self.state.v[i];
                    for j in 0..data.len() {
                        m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gd[j];
                        v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gd[j] * gd[j];
                        let m_hat = m[j] / bias1;
                        let v_hat = v[j] / bias2;
                        data[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                    }
                });
                p.tensor.set_data(&data);
            }
        });
    }
}
