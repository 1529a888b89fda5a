//! Fully connected layer.

use super::{fan_in_init, Param};
use crate::autodiff::Tensor;
use crate::rng::Rng;
use crate::Real;

#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor, // [in, out]
    pub bias: Option<Tensor>, // [out]
}

impl Linear {
    pub fn new(input: usize, output: usize, bias: bool, rng: &mut Rng) -> Linear {
        Linear {
            weight: fan_in_init(input, output, 1.0, rng),
            bias: bias.then(|| Tensor::param(vec![0.0; output], &[output])),
        }
    }

    /// Like [`Linear::new`] with the init bound scaled by `gain`.
    pub fn with_gain(input: usize, output: usize, bias: bool, gain: Real, rng: &mut Rng) -> Linear {
        Linear {
            weight: fan_in_init(input, output, gain, rng),
            bias: bias.then(|| Tensor::param(vec![0.0; output], &[output])),
        }
    }

    /// All-zero weights; used for output heads so fresh models emit
    /// probability 0.5.
    pub fn zeroed(input: usize, output: usize, bias: bool) -> Linear {
        Linear {
            weight: Tensor::param(vec![0.0; input * output], &[input, output]),
            bias: bias.then(|| Tensor::param(vec![0.0; output], &[output])),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let y = x.matmul(&self.weight);
        match &self.bias {
            Some(b) => y.add_row(b),
            None => y,
        }
    }

    pub fn params(&self, name: &str) -> Vec<Param> {
        let mut out = vec![Param::new(format!("{name}.w"), self.weight.clone())];
        if let Some(b) = &self.bias {
            out.push(Param::new(format!("{name}.b"), b.clone()));
        }
        out
    }
}
