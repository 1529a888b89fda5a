//! Fully connected discriminator with skip connections.
//!
//! The trunk scores a flattened prior-and-future pose sequence. Two heads
//! sit on top: a scalar GAN head (probability that the sequence is real)
//! and an optional two-layer classification head added for the supervised
//! phase. The trunk features in front of the heads are what transfers.

use super::{prefixed, Linear, Param};
use crate::autodiff::Tensor;
use crate::rng::Rng;
use crate::{Error, Real, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorConfig {
    /// Flattened input width: (m + n) * joints * 3.
    pub input_dim: usize,
    pub width: usize,
    /// Number of fully connected trunk layers (>= 1). An additive skip
    /// connection bridges every two layers.
    pub depth: usize,
    pub leak: Real,
}

impl Default for DiscriminatorConfig {
    fn default() -> DiscriminatorConfig {
        DiscriminatorConfig { input_dim: 30 * 75, width: 512, depth: 6, leak: 0.2 }
    }
}

#[derive(Debug, Clone)]
pub struct DiscriminatorParams {
    pub cfg: DiscriminatorConfig,
    layers: Vec<Linear>,
    gan_head: Linear,
    class_head: Option<(Linear, Linear)>,
}

impl DiscriminatorParams {
    pub fn new(cfg: DiscriminatorConfig, rng: &mut Rng) -> DiscriminatorParams {
        assert!(cfg.depth >= 1 && cfg.width >= 1 && cfg.input_dim >= 1);
        let mut layers = Vec::with_capacity(cfg.depth);
        layers.push(Linear::new(cfg.input_dim, cfg.width, true, rng));
        for _ in 1..cfg.depth {
            layers.push(Linear::new(cfg.width, cfg.width, true, rng));
        }
        // Zero-initialized head: a fresh discriminator outputs exactly 0.5.
        let gan_head = Linear::zeroed(cfg.width, 1, true);
        DiscriminatorParams { cfg, layers, gan_head, class_head: None }
    }

    /// Shared trunk: leaky-relu MLP with an additive skip every two layers.
    fn trunk(&self, x: &Tensor) -> Result<Tensor> {
        let batch = x.shape()[0];
        if x.shape() != [batch, self.cfg.input_dim] {
            return Err(Error::ShapeMismatch(format!(
                "discriminator expects [batch, {}], got {:?}",
                self.cfg.input_dim,
                x.shape()
            )));
        }
        let mut h = self.layers[0].forward(x).leaky_relu(self.cfg.leak);
        let mut skip = h.clone();
        for (i, layer) in self.layers.iter().enumerate().skip(1) {
            h = layer.forward(&h).leaky_relu(self.cfg.leak);
            if (i + 1) % 2 == 0 {
                h = h.add(&skip);
                skip = h.clone();
            }
        }
        Ok(h)
    }

    /// Probability in (0, 1) that the sequence is real, plus the trunk
    /// feature vector it was computed from.
    pub fn forward(&self, seq: &Tensor) -> Result<(Tensor, Tensor)> {
        let features = self.trunk(seq)?;
        let prob = self.gan_head.forward(&features).sigmoid();
        Ok((prob, features))
    }

    /// Installs a fresh two-layer classification head. The final layer is
    /// zero-initialized, so initial class scores are uniform.
    pub fn init_class_head(&mut self, hidden: usize, classes: usize, rng: &mut Rng) {
        let first = Linear::new(self.cfg.width, hidden, true, rng);
        let last = Linear::zeroed(hidden, classes, true);
        self.class_head = Some((first, last));
    }

    pub fn class_count(&self) -> Option<usize> {
        self.class_head.as_ref().map(|(_, last)| last.weight.shape()[1])
    }

    /// Unnormalized class scores [batch, classes].
    pub fn classify(&self, seq: &Tensor) -> Result<Tensor> {
        let (first, last) = self.class_head.as_ref().ok_or(Error::HeadUninitialized)?;
        let features = self.trunk(seq)?;
        Ok(last.forward(&first.forward(&features).leaky_relu(self.cfg.leak)))
    }

    /// Copies trunk weights (not heads) from another discriminator with the
    /// same configuration. This is the transfer-learning path.
    pub fn copy_trunk_from(&mut self, source: &DiscriminatorParams) {
        assert_eq!(self.cfg, source.cfg, "trunk transfer requires identical configs");
        for (dst, src) in self.layers.iter().zip(&source.layers) {
            dst.weight.set_data(&src.weight.to_vec());
            if let (Some(db), Some(sb)) = (&dst.bias, &src.bias) {
                db.set_data(&sb.to_vec());
            }
        }
    }

    /// Trunk and GAN-head parameters (the GAN-phase learnable set).
    pub fn params(&self) -> Vec<Param> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            out.extend(prefixed("disc", layer.params(&format!("trunk{i}"))));
        }
        out.extend(prefixed("disc", self.gan_head.params("gan_head")));
        out
    }

    /// Trunk and classification-head parameters (the supervised-phase set).
    pub fn classifier_params(&self) -> Vec<Param> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            out.extend(prefixed("disc", layer.params(&format!("trunk{i}"))));
        }
        if let Some((first, last)) = &self.class_head {
            out.extend(prefixed("disc", first.params("class_head0")));
            out.extend(prefixed("disc", last.params("class_head1")));
        }
        out
    }
}
