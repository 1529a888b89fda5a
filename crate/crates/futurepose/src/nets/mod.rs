//! The three parametric models: generator, discriminator, quality network.

mod discriminator;
mod generator;
mod gru;
mod linear;
mod quality;

pub use discriminator::{DiscriminatorConfig, DiscriminatorParams};
pub use generator::{GeneratorConfig, GeneratorParams};
pub use gru::{GruCell, GruStack};
pub use linear::Linear;
pub use quality::{QualityConfig, QualityForward, QualityParams};

use crate::autodiff::Tensor;
use crate::rng::Rng;
use crate::Real;

/// A named learnable tensor. The tensor handle is shared with the owning
/// network, so optimizer updates through it are visible to later forwards.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub tensor: Tensor,
}

impl Param {
    fn new(name: impl Into<String>, tensor: Tensor) -> Param {
        Param { name: name.into(), tensor }
    }
}

/// Collects parameters from a network part under a name prefix.
fn prefixed(prefix: &str, params: Vec<Param>) -> Vec<Param> {
    params
        .into_iter()
        .map(|p| Param::new(format!("{prefix}.{}", p.name), p.tensor))
        .collect()
}

/// Uniform fan-in initialization: U(-gain/sqrt(fan_in), gain/sqrt(fan_in)).
fn fan_in_init(rows: usize, cols: usize, gain: Real, rng: &mut Rng) -> Tensor {
    let bound = gain / (rows as Real).sqrt();
    let data = (0..rows * cols).map(|_| rng.uniform(-bound, bound)).collect();
    Tensor::param(data, &[rows, cols])
}

/// Latent vector specification.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSpec {
    pub dim: usize,
    pub dist: LatentDist,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LatentDist {
    Uniform { lo: Real, hi: Real },
    Gaussian { mean: Real, std: Real },
}

impl Default for LatentSpec {
    fn default() -> LatentSpec {
        LatentSpec { dim: 128, dist: LatentDist::Uniform { lo: -1.0, hi: 1.0 } }
    }
}

impl LatentSpec {
    pub fn sample(&self, batch: usize, rng: &mut Rng) -> Tensor {
        let data = (0..batch * self.dim)
            .map(|_| match self.dist {
                LatentDist::Uniform { lo, hi } => rng.uniform(lo, hi),
                LatentDist::Gaussian { mean, std } => mean + std * rng.gaussian(),
            })
            .collect();
        Tensor::from_vec(data, &[batch, self.dim])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_sample_shape_and_range() {
        let spec = LatentSpec { dim: 16, dist: LatentDist::Uniform { lo: -1.0, hi: 1.0 } };
        let z = spec.sample(4, &mut Rng::new(0));
        assert_eq!(z.shape(), &[4, 16]);
        assert!(z.to_vec().iter().all(|v| (-1.0..1.0).contains(v)));
    }
}
