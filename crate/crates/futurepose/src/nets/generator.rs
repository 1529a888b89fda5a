//! Sequence-to-sequence generator with latent injection.
//!
//! The encoder GRU consumes the observed prior poses. A latent vector z is
//! linearly mapped into each encoder layer's final state, and the summed
//! states seed the decoder. The decoder's first input is the encoder's last
//! output; after that it feeds its own (projected) predicted pose back in,
//! emitting one pose per step for any requested horizon.

use super::{prefixed, GruStack, Linear, Param};
use crate::autodiff::Tensor;
use crate::rng::Rng;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Flattened pose width: joints * 3.
    pub pose_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub z_dim: usize,
    /// Init scale of the z projections. Small values make the latent's
    /// initial influence gentle; the diversity loss grows it as needed.
    pub z_proj_gain: Real,
}

impl Default for GeneratorConfig {
    fn default() -> GeneratorConfig {
        GeneratorConfig { pose_dim: 75, hidden: 256, layers: 2, z_dim: 128, z_proj_gain: 0.1 }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorParams {
    pub cfg: GeneratorConfig,
    in_proj: Linear,
    encoder: GruStack,
    decoder: GruStack,
    z_proj: Vec<Linear>, // one per layer, no bias
    out_proj: Linear,
}

impl GeneratorParams {
    pub fn new(cfg: GeneratorConfig, rng: &mut Rng) -> GeneratorParams {
        assert!(cfg.layers >= 1 && cfg.hidden >= 1 && cfg.pose_dim >= 1 && cfg.z_dim >= 1);
        let in_proj = Linear::new(cfg.pose_dim, cfg.hidden, true, rng);
        let encoder = GruStack::new(cfg.hidden, cfg.hidden, cfg.layers, rng);
        let decoder = GruStack::new(cfg.hidden, cfg.hidden, cfg.layers, rng);
        let z_proj = (0..cfg.layers)
            .map(|_| Linear::with_gain(cfg.z_dim, cfg.hidden, false, cfg.z_proj_gain, rng))
            .collect();
        let out_proj = Linear::new(cfg.hidden, cfg.pose_dim, true, rng);
        GeneratorParams { cfg, in_proj, encoder, decoder, z_proj, out_proj }
    }

    /// Predicts `horizon` poses from the prior. Each element of `prior` and
    /// of the output is one time step, shaped [batch, pose_dim].
    pub fn forward(&self, prior: &[Tensor], z: &Tensor, horizon: usize) -> Result<Vec<Tensor>> {
        if prior.is_empty() {
            return Err(Error::EmptyPrior);
        }
        assert!(horizon >= 1);
        let batch = prior[0].shape()[0];
        assert_eq!(z.shape(), &[batch, self.cfg.z_dim], "latent shape");

        let mut states = self.encoder.zero_states(batch);
        let mut enc_out = Tensor::zeros(&[batch, self.cfg.hidden]);
        for pose in prior {
            assert_eq!(pose.shape(), &[batch, self.cfg.pose_dim], "prior pose shape");
            let x = self.in_proj.forward(pose);
            enc_out = self.encoder.step(&x, &mut states);
        }

        let mut dec_states: Vec<Tensor> = states
            .iter()
            .zip(&self.z_proj)
            .map(|(h, proj)| h.add(&proj.forward(z)))
            .collect();

        let mut input = enc_out;
        let mut out = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let top = self.decoder.step(&input, &mut dec_states);
            let pose = self.out_proj.forward(&top);
            input = self.in_proj.forward(&pose);
            out.push(pose);
        }
        Ok(out)
    }

    pub fn params(&self) -> Vec<Param> {
        let mut out = prefixed("gen", self.in_proj.params("in_proj"));
        out.extend(prefixed("gen", self.encoder.params("encoder")));
        out.extend(prefixed("gen", self.decoder.params("decoder")));
        for (i, p) in self.z_proj.iter().enumerate() {
            out.extend(prefixed("gen", p.params(&format!("z_proj{i}"))));
        }
        out.extend(prefixed("gen", self.out_proj.params("out_proj")));
        out
    }
}
