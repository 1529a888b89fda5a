//! Motion quality assessment network.
//!
//! A recurrent stack runs over the pose sequence; a learned scoring vector
//! turns each step's output into an attention logit, the softmax-weighted
//! outputs are pooled, and a sigmoid head maps the pooled vector to the
//! probability that the sequence is a real human motion.

use super::{fan_in_init, prefixed, GruStack, Linear, Param};
use crate::autodiff::{concat, Tensor};
use crate::rng::Rng;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct QualityConfig {
    pub pose_dim: usize,
    pub hidden: usize,
    pub layers: usize,
}

impl Default for QualityConfig {
    fn default() -> QualityConfig {
        QualityConfig { pose_dim: 75, hidden: 128, layers: 2 }
    }
}

/// Forward products: the probability and the attention weights behind it.
#[derive(Debug, Clone)]
pub struct QualityForward {
    /// [batch, 1] probability in (0, 1).
    pub prob: Tensor,
    /// [batch, steps]; each row sums to 1.
    pub attention: Tensor,
}

#[derive(Debug, Clone)]
pub struct QualityParams {
    pub cfg: QualityConfig,
    gru: GruStack,
    attn: Tensor, // [hidden, 1] scoring vector
    head: Linear,
}

impl QualityParams {
    pub fn new(cfg: QualityConfig, rng: &mut Rng) -> QualityParams {
        assert!(cfg.layers >= 1 && cfg.hidden >= 1 && cfg.pose_dim >= 1);
        let gru = GruStack::new(cfg.pose_dim, cfg.hidden, cfg.layers, rng);
        let attn = fan_in_init(cfg.hidden, 1, 1.0, rng);
        // Zero head: a fresh quality network outputs exactly 0.5.
        let head = Linear::zeroed(cfg.hidden, 1, true);
        QualityParams { cfg, gru, attn, head }
    }

    /// Scores a sequence given as per-step [batch, pose_dim] tensors.
    pub fn forward(&self, seq: &[Tensor]) -> Result<QualityForward> {
        assert!(!seq.is_empty(), "quality network needs at least one step");
        let batch = seq[0].shape()[0];
        let mut states = self.gru.zero_states(batch);
        let mut outputs = Vec::with_capacity(seq.len());
        for pose in seq {
            assert_eq!(pose.shape(), &[batch, self.cfg.pose_dim], "pose shape");
            outputs.push(self.gru.step(pose, &mut states));
        }

        let scores: Vec<Tensor> = outputs.iter().map(|o| o.matmul(&self.attn)).collect();
        let score_refs: Vec<&Tensor> = scores.iter().collect();
        let attention = concat(&score_refs, 1).softmax(); // [batch, steps]

        let mut pooled = Tensor::zeros(&[batch, self.cfg.hidden]);
        for (t, o) in outputs.iter().enumerate() {
            pooled = pooled.add(&o.mul_col(&attention.slice(1, t, 1)));
        }
        let prob = self.head.forward(&pooled).sigmoid();
        Ok(QualityForward { prob, attention })
    }

    pub fn params(&self) -> Vec<Param> {
        let mut out = prefixed("quality", self.gru.params("gru"));
        out.push(Param::new("quality.attn", self.attn.clone()));
        out.extend(prefixed("quality", self.head.params("head")));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::gradcheck::check_param_gradient;
    use crate::Real;

    fn tiny() -> QualityParams {
        QualityParams::new(QualityConfig { pose_dim: 4, hidden: 5, layers: 2 }, &mut Rng::new(3))
    }

    fn seq(steps: usize, batch: usize, dim: usize, seed: u64) -> Vec<Tensor> {
        let mut rng = Rng::new(seed);
        (0..steps)
            .map(|_| {
                Tensor::from_vec((0..batch * dim).map(|_| rng.uniform(-1.0, 1.0)).collect(), &[batch, dim])
            })
            .collect()
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let q = tiny();
        let out = q.forward(&seq(7, 3, 4, 1)).unwrap();
        assert_eq!(out.attention.shape(), &[3, 7]);
        for row in 0..3 {
            let s: Real = out.attention.to_vec()[row * 7..(row + 1) * 7].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fresh_network_outputs_half_and_stays_in_interval() {
        let q = tiny();
        let out = q.forward(&seq(5, 2, 4, 2)).unwrap();
        for v in out.prob.to_vec() {
            assert_eq!(v, 0.5);
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = Rng::new(9);
        let q = tiny();
        // Move the head off zero so gradients reach the attention path.
        for p in q.params() {
            if p.name.contains("head") {
                let data: Vec<Real> = (0..p.tensor.numel()).map(|_| rng.uniform(-0.5, 0.5)).collect();
                p.tensor.set_data(&data);
            }
        }
        let s = seq(4, 2, 4, 10);
        let qc = q.clone();
        let f = move || qc.forward(&s).unwrap().prob.sum();
        for p in q.params() {
            let report = check_param_gradient(&f, &p.tensor, 1e-5, 1e-4).unwrap();
            assert!(report.passed, "{}: {}", p.name, report.max_rel_err);
        }
    }
}
