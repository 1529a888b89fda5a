//! Gated recurrent units.
//!
//! Standard update/reset-gate cell:
//!   r = sigmoid(x Wxr + h Whr + br)
//!   z = sigmoid(x Wxz + h Whz + bz)
//!   n = tanh(x Wxn + r * (h Whn) + bn)
//!   h' = z * h + (1 - z) * n

use super::{fan_in_init, Param};
use crate::autodiff::Tensor;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct GruCell {
    w_xr: Tensor,
    w_hr: Tensor,
    b_r: Tensor,
    w_xz: Tensor,
    w_hz: Tensor,
    b_z: Tensor,
    w_xn: Tensor,
    w_hn: Tensor,
    b_n: Tensor,
    hidden: usize,
}

impl GruCell {
    pub fn new(input: usize, hidden: usize, rng: &mut Rng) -> GruCell {
        GruCell {
            w_xr: fan_in_init(input, hidden, 1.0, rng),
            w_hr: fan_in_init(hidden, hidden, 1.0, rng),
            b_r: Tensor::param(vec![0.0; hidden], &[hidden]),
            w_xz: fan_in_init(input, hidden, 1.0, rng),
            w_hz: fan_in_init(hidden, hidden, 1.0, rng),
            b_z: Tensor::param(vec![0.0; hidden], &[hidden]),
            w_xn: fan_in_init(input, hidden, 1.0, rng),
            w_hn: fan_in_init(hidden, hidden, 1.0, rng),
            b_n: Tensor::param(vec![0.0; hidden], &[hidden]),
            hidden,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    /// One time step: x [B, input], h [B, hidden] -> h' [B, hidden].
    pub fn step(&self, x: &Tensor, h: &Tensor) -> Tensor {
        let r = x.matmul(&self.w_xr).add(&h.matmul(&self.w_hr)).add_row(&self.b_r).sigmoid();
        let z = x.matmul(&self.w_xz).add(&h.matmul(&self.w_hz)).add_row(&self.b_z).sigmoid();
        let n = x
            .matmul(&self.w_xn)
            .add(&r.mul(&h.matmul(&self.w_hn)))
            .add_row(&self.b_n)
            .tanh();
        z.mul(h).add(&z.neg().add_scalar(1.0).mul(&n))
    }

    pub fn params(&self, name: &str) -> Vec<Param> {
        [
            ("w_xr", &self.w_xr),
            ("w_hr", &self.w_hr),
            ("b_r", &self.b_r),
            ("w_xz", &self.w_xz),
            ("w_hz", &self.w_hz),
            ("b_z", &self.b_z),
            ("w_xn", &self.w_xn),
            ("w_hn", &self.w_hn),
            ("b_n", &self.b_n),
        ]
        .into_iter()
        .map(|(field, t)| Param::new(format!("{name}.{field}"), t.clone()))
        .collect()
    }
}

/// A stack of GRU layers; layer i feeds layer i + 1.
#[derive(Debug, Clone)]
pub struct GruStack {
    cells: Vec<GruCell>,
    hidden: usize,
}

impl GruStack {
    pub fn new(input: usize, hidden: usize, layers: usize, rng: &mut Rng) -> GruStack {
        assert!(layers >= 1);
        let mut cells = Vec::with_capacity(layers);
        cells.push(GruCell::new(input, hidden, rng));
        for _ in 1..layers {
            cells.push(GruCell::new(hidden, hidden, rng));
        }
        GruStack { cells, hidden }
    }

    pub fn layer_count(&self) -> usize {
        self.cells.len()
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn zero_states(&self, batch: usize) -> Vec<Tensor> {
        self.cells.iter().map(|_| Tensor::zeros(&[batch, self.hidden])).collect()
    }

    /// Advances all layers one step; returns the top layer's new state.
    pub fn step(&self, x: &Tensor, states: &mut [Tensor]) -> Tensor {
        assert_eq!(states.len(), self.cells.len());
        let mut input = x.clone();
        for (cell, state) in self.cells.iter().zip(states.iter_mut()) {
            let new_state = cell.step(&input, state);
            *state = new_state.clone();
            input = new_state;
        }
        input
    }

    pub fn params(&self, name: &str) -> Vec<Param> {
        self.cells
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.params(&format!("{name}.l{i}")))
            .collect()
    }
}
