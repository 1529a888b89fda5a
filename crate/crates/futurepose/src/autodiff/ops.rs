//! Primitive operations: forward kernels and backward rules.
//!
//! Backward rules are expressed with the same tensor operations they
//! differentiate, so a rule evaluated while recording is itself a
//! differentiable graph. Piecewise-linear primitives (relu, leaky_relu, abs,
//! max_scalar) expose their local slope as a detached mask, which makes
//! their second derivative exactly zero everywhere, including the kink.

use super::Tensor;
use crate::Real;

/// Guard added under norm-style square roots so the derivative stays finite
/// at an exactly-zero argument. Negligible against the 1e-9 value tolerances
/// used throughout.
pub(crate) const NORM_EPS: Real = 1e-30;

#[derive(Debug, Clone)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Neg,
    Scale(Real),
    AddScalar(Real),
    MaxScalar(Real),
    PowScalar(Real),
    Matmul,
    Transpose,
    Concat { axis: usize },
    Slice { axis: usize, start: usize, len: usize },
    Pad { axis: usize, before: usize, after: usize },
    Reshape,
    AddRow,
    MulCol,
    RepeatCol { cols: usize },
    RepeatRow { rows: usize },
    Broadcast { shape: Vec<usize> },
    Relu,
    LeakyRelu(Real),
    Sigmoid,
    Tanh,
    Exp,
    Log,
    Abs,
    Square,
    Sqrt,
    Sum,
    Mean,
    SumAxis(usize),
    Softmax,
}

fn map1(t: &Tensor, f: impl Fn(Real) -> Real) -> Vec<Real> {
    t.with_data(|d| d.iter().map(|&v| f(v)).collect())
}

fn map2(a: &Tensor, b: &Tensor, f: impl Fn(Real, Real) -> Real) -> Vec<Real> {
    assert_eq!(
        a.shape(),
        b.shape(),
        "elementwise op on mismatched shapes {:?} vs {:?}",
        a.shape(),
        b.shape()
    );
    a.with_data(|da| b.with_data(|db| da.iter().zip(db).map(|(&x, &y)| f(x, y)).collect()))
}

fn sigmoid_scalar(x: Real) -> Real {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Splits a shape around `axis` into (outer, axis_len, inner) extents.
fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    assert!(axis < shape.len(), "axis {axis} out of range for {shape:?}");
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

impl Tensor {
    pub fn add(&self, other: &Tensor) -> Tensor {
        let data = map2(self, other, |a, b| a + b);
        Tensor::from_op(data, self.shape().to_vec(), Op::Add, vec![self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        let data = map2(self, other, |a, b| a - b);
        Tensor::from_op(data, self.shape().to_vec(), Op::Sub, vec![self.clone(), other.clone()])
    }

    pub fn mul(&self, other: &Tensor) -> Tensor {
        let data = map2(self, other, |a, b| a * b);
        Tensor::from_op(data, self.shape().to_vec(), Op::Mul, vec![self.clone(), other.clone()])
    }

    pub fn neg(&self) -> Tensor {
        let data = map1(self, |v| -v);
        Tensor::from_op(data, self.shape().to_vec(), Op::Neg, vec![self.clone()])
    }

    pub fn scale(&self, c: Real) -> Tensor {
        let data = map1(self, |v| v * c);
        Tensor::from_op(data, self.shape().to_vec(), Op::Scale(c), vec![self.clone()])
    }

    pub fn add_scalar(&self, c: Real) -> Tensor {
        let data = map1(self, |v| v + c);
        Tensor::from_op(data, self.shape().to_vec(), Op::AddScalar(c), vec![self.clone()])
    }

    /// Elementwise max(v, c); subgradient at v == c is taken as zero.
    pub fn max_scalar(&self, c: Real) -> Tensor {
        let data = map1(self, |v| v.max(c));
        Tensor::from_op(data, self.shape().to_vec(), Op::MaxScalar(c), vec![self.clone()])
    }

    /// Elementwise v^p. For non-integer p the domain is v >= 0.
    pub fn powf(&self, p: Real) -> Tensor {
        let data = map1(self, |v| v.powf(p));
        Tensor::from_op(data, self.shape().to_vec(), Op::PowScalar(p), vec![self.clone()])
    }

    pub fn matmul(&self, other: &Tensor) -> Tensor {
        let (a_shape, b_shape) = (self.shape(), other.shape());
        assert_eq!(a_shape.len(), 2, "matmul lhs must be 2-D, got {a_shape:?}");
        assert_eq!(b_shape.len(), 2, "matmul rhs must be 2-D, got {b_shape:?}");
        assert_eq!(a_shape[1], b_shape[0], "matmul {a_shape:?} x {b_shape:?}");
        let (r, k, c) = (a_shape[0], a_shape[1], b_shape[1]);
        let mut out = vec![0.0; r * c];
        self.with_data(|a| {
            other.with_data(|b| {
                for i in 0..r {
                    for l in 0..k {
                        let av = a[i * k + l];
                        if av == 0.0 {
                            continue;
                        }
                        let brow = &b[l * c..(l + 1) * c];
                        let orow = &mut out[i * c..(i + 1) * c];
                        for (o, &bv) in orow.iter_mut().zip(brow) {
                            *o += av * bv;
                        }
                    }
                }
            })
        });
        Tensor::from_op(out, vec![r, c], Op::Matmul, vec![self.clone(), other.clone()])
    }

    /// 2-D transpose.
    pub fn t(&self) -> Tensor {
        let shape = self.shape();
        assert_eq!(shape.len(), 2, "transpose needs a 2-D tensor");
        let (r, c) = (shape[0], shape[1]);
        let mut out = vec![0.0; r * c];
        self.with_data(|d| {
            for i in 0..r {
                for j in 0..c {
                    out[j * r + i] = d[i * c + j];
                }
            }
        });
        Tensor::from_op(out, vec![c, r], Op::Transpose, vec![self.clone()])
    }

    pub fn reshape(&self, shape: &[usize]) -> Tensor {
        assert_eq!(
            self.numel(),
            shape.iter().product::<usize>(),
            "reshape {:?} -> {shape:?}",
            self.shape()
        );
        Tensor::from_op(self.to_vec(), shape.to_vec(), Op::Reshape, vec![self.clone()])
    }

    pub fn slice(&self, axis: usize, start: usize, len: usize) -> Tensor {
        let (outer, axis_len, inner) = axis_split(self.shape(), axis);
        assert!(start + len <= axis_len, "slice out of bounds");
        let mut out = Vec::with_capacity(outer * len * inner);
        self.with_data(|d| {
            for o in 0..outer {
                let base = o * axis_len * inner + start * inner;
                out.extend_from_slice(&d[base..base + len * inner]);
            }
        });
        let mut shape = self.shape().to_vec();
        shape[axis] = len;
        Tensor::from_op(out, shape, Op::Slice { axis, start, len }, vec![self.clone()])
    }

    /// Zero padding along one axis.
    pub fn pad(&self, axis: usize, before: usize, after: usize) -> Tensor {
        let (outer, axis_len, inner) = axis_split(self.shape(), axis);
        let new_len = before + axis_len + after;
        let mut out = vec![0.0; outer * new_len * inner];
        self.with_data(|d| {
            for o in 0..outer {
                let src = o * axis_len * inner;
                let dst = o * new_len * inner + before * inner;
                out[dst..dst + axis_len * inner].copy_from_slice(&d[src..src + axis_len * inner]);
            }
        });
        let mut shape = self.shape().to_vec();
        shape[axis] = new_len;
        Tensor::from_op(out, shape, Op::Pad { axis, before, after }, vec![self.clone()])
    }

    /// Adds a row vector [c] to every row of a [r, c] matrix.
    pub fn add_row(&self, row: &Tensor) -> Tensor {
        let shape = self.shape();
        assert_eq!(shape.len(), 2);
        assert_eq!(row.shape(), &[shape[1]], "bias shape");
        let (r, c) = (shape[0], shape[1]);
        let mut out = Vec::with_capacity(r * c);
        self.with_data(|m| {
            row.with_data(|b| {
                for i in 0..r {
                    for j in 0..c {
                        out.push(m[i * c + j] + b[j]);
                    }
                }
            })
        });
        Tensor::from_op(out, vec![r, c], Op::AddRow, vec![self.clone(), row.clone()])
    }

    /// Scales every row i of a [r, c] matrix by col[i], col of shape [r, 1].
    pub fn mul_col(&self, col: &Tensor) -> Tensor {
        let shape = self.shape();
        assert_eq!(shape.len(), 2);
        assert_eq!(col.shape(), &[shape[0], 1], "column shape");
        let (r, c) = (shape[0], shape[1]);
        let mut out = Vec::with_capacity(r * c);
        self.with_data(|m| {
            col.with_data(|v| {
                for i in 0..r {
                    for j in 0..c {
                        out.push(m[i * c + j] * v[i]);
                    }
                }
            })
        });
        Tensor::from_op(out, vec![r, c], Op::MulCol, vec![self.clone(), col.clone()])
    }

    /// [r] or [r, 1] -> [r, cols], each value repeated along the row.
    pub fn repeat_col(&self, cols: usize) -> Tensor {
        let r = self.shape()[0];
        assert!(self.numel() == r, "repeat_col input must be [r] or [r,1]");
        let mut out = Vec::with_capacity(r * cols);
        self.with_data(|d| {
            for &v in d.iter() {
                out.extend(std::iter::repeat_n(v, cols));
            }
        });
        Tensor::from_op(out, vec![r, cols], Op::RepeatCol { cols }, vec![self.clone()])
    }

    /// [c] or [1, c] -> [rows, c], the vector repeated as every row.
    pub fn repeat_row(&self, rows: usize) -> Tensor {
        let c = self.numel();
        let mut out = Vec::with_capacity(rows * c);
        self.with_data(|d| {
            for _ in 0..rows {
                out.extend_from_slice(d);
            }
        });
        Tensor::from_op(out, vec![rows, c], Op::RepeatRow { rows }, vec![self.clone()])
    }

    /// Scalar -> arbitrary shape (every element equal).
    pub fn broadcast_to(&self, shape: &[usize]) -> Tensor {
        assert!(self.is_scalar(), "broadcast_to needs a scalar");
        let v = self.value();
        let n: usize = shape.iter().product();
        Tensor::from_op(
            vec![v; n],
            shape.to_vec(),
            Op::Broadcast { shape: shape.to_vec() },
            vec![self.clone()],
        )
    }

    pub fn relu(&self) -> Tensor {
        let data = map1(self, |v| v.max(0.0));
        Tensor::from_op(data, self.shape().to_vec(), Op::Relu, vec![self.clone()])
    }

    pub fn leaky_relu(&self, slope: Real) -> Tensor {
        let data = map1(self, |v| if v > 0.0 { v } else { slope * v });
        Tensor::from_op(data, self.shape().to_vec(), Op::LeakyRelu(slope), vec![self.clone()])
    }

    pub fn sigmoid(&self) -> Tensor {
        let data = map1(self, sigmoid_scalar);
        Tensor::from_op(data, self.shape().to_vec(), Op::Sigmoid, vec![self.clone()])
    }

    pub fn tanh(&self) -> Tensor {
        let data = map1(self, |v| v.tanh());
        Tensor::from_op(data, self.shape().to_vec(), Op::Tanh, vec![self.clone()])
    }

    pub fn exp(&self) -> Tensor {
        let data = map1(self, |v| v.exp());
        Tensor::from_op(data, self.shape().to_vec(), Op::Exp, vec![self.clone()])
    }

    pub fn log(&self) -> Tensor {
        let data = map1(self, |v| v.ln());
        Tensor::from_op(data, self.shape().to_vec(), Op::Log, vec![self.clone()])
    }

    pub fn abs(&self) -> Tensor {
        let data = map1(self, |v| v.abs());
        Tensor::from_op(data, self.shape().to_vec(), Op::Abs, vec![self.clone()])
    }

    pub fn square(&self) -> Tensor {
        let data = map1(self, |v| v * v);
        Tensor::from_op(data, self.shape().to_vec(), Op::Square, vec![self.clone()])
    }

    pub fn sqrt(&self) -> Tensor {
        let data = map1(self, |v| v.sqrt());
        Tensor::from_op(data, self.shape().to_vec(), Op::Sqrt, vec![self.clone()])
    }

    /// Sum of all elements -> scalar [1].
    pub fn sum(&self) -> Tensor {
        let v = self.with_data(|d| d.iter().sum());
        Tensor::from_op(vec![v], vec![1], Op::Sum, vec![self.clone()])
    }

    /// Mean of all elements -> scalar [1].
    pub fn mean(&self) -> Tensor {
        let n = self.numel() as Real;
        let v: Real = self.with_data(|d| d.iter().sum());
        Tensor::from_op(vec![v / n], vec![1], Op::Mean, vec![self.clone()])
    }

    /// Row sums (axis = 1) or column sums (axis = 0) of a 2-D tensor.
    pub fn sum_axis(&self, axis: usize) -> Tensor {
        let shape = self.shape();
        assert_eq!(shape.len(), 2, "sum_axis needs a 2-D tensor");
        let (r, c) = (shape[0], shape[1]);
        let out = self.with_data(|d| match axis {
            0 => {
                let mut out = vec![0.0; c];
                for i in 0..r {
                    for j in 0..c {
                        out[j] += d[i * c + j];
                    }
                }
                out
            }
            1 => {
                let mut out = vec![0.0; r];
                for i in 0..r {
                    out[i] = d[i * c..(i + 1) * c].iter().sum();
                }
                out
            }
            _ => panic!("sum_axis axis must be 0 or 1"),
        });
        let out_shape = if axis == 0 { vec![c] } else { vec![r] };
        Tensor::from_op(out, out_shape, Op::SumAxis(axis), vec![self.clone()])
    }

    /// L2 norm over all elements, returned as a scalar graph node.
    pub fn l2_norm(&self) -> Tensor {
        self.square().sum().add_scalar(NORM_EPS).sqrt()
    }

    /// Softmax over the last axis (1-D vector or rows of a 2-D tensor).
    pub fn softmax(&self) -> Tensor {
        match self.shape().len() {
            1 => {
                let n = self.numel();
                self.reshape(&[1, n]).softmax().reshape(&[n])
            }
            2 => {
                let (r, c) = (self.shape()[0], self.shape()[1]);
                let out = self.with_data(|d| {
                    let mut out = Vec::with_capacity(r * c);
                    for i in 0..r {
                        let row = &d[i * c..(i + 1) * c];
                        let m = row.iter().cloned().fold(Real::NEG_INFINITY, Real::max);
                        let exps: Vec<Real> = row.iter().map(|&v| (v - m).exp()).collect();
                        let z: Real = exps.iter().sum();
                        out.extend(exps.iter().map(|e| e / z));
                    }
                    out
                });
                Tensor::from_op(out, vec![r, c], Op::Softmax, vec![self.clone()])
            }
            _ => panic!("softmax supports 1-D and 2-D tensors"),
        }
    }
}

/// Concatenates tensors along `axis`. All other dimensions must agree.
pub fn concat(parts: &[&Tensor], axis: usize) -> Tensor {
    assert!(!parts.is_empty(), "concat of zero tensors");
    let rank = parts[0].shape().len();
    let mut shape = parts[0].shape().to_vec();
    let mut axis_total = 0;
    for p in parts {
        assert_eq!(p.shape().len(), rank);
        for (d, (a, b)) in p.shape().iter().zip(&shape).enumerate() {
            if d != axis {
                assert_eq!(a, b, "concat shape mismatch off-axis");
            }
        }
        axis_total += p.shape()[axis];
    }
    shape[axis] = axis_total;
    let (outer, _, inner) = axis_split(&shape, axis);
    let mut out = Vec::with_capacity(outer * axis_total * inner);
    for o in 0..outer {
        for p in parts {
            let p_axis = p.shape()[axis];
            p.with_data(|d| {
                let base = o * p_axis * inner;
                out.extend_from_slice(&d[base..base + p_axis * inner]);
            });
        }
    }
    Tensor::from_op(
        out,
        shape,
        Op::Concat { axis },
        parts.iter().map(|p| (*p).clone()).collect(),
    )
}

/// Chain-rule rule for one op: gradients of the root with respect to each
/// input, given the gradient with respect to the output.
pub(super) fn backward_rule(op: &Op, inputs: &[Tensor], output: &Tensor, g: &Tensor) -> Vec<Tensor> {
    match op {
        Op::Add => vec![g.clone(), g.clone()],
        Op::Sub => vec![g.clone(), g.neg()],
        Op::Mul => vec![g.mul(&inputs[1]), g.mul(&inputs[0])],
        Op::Neg => vec![g.neg()],
        Op::Scale(c) => vec![g.scale(*c)],
        Op::AddScalar(_) => vec![g.clone()],
        Op::MaxScalar(c) => {
            let mask = Tensor::from_vec(
                inputs[0].with_data(|d| d.iter().map(|&v| if v > *c { 1.0 } else { 0.0 }).collect()),
                inputs[0].shape(),
            );
            vec![g.mul(&mask)]
        }
        Op::PowScalar(p) => {
            if *p == 1.0 {
                vec![g.clone()]
            } else {
                vec![g.mul(&inputs[0].powf(p - 1.0).scale(*p))]
            }
        }
        Op::Matmul => vec![g.matmul(&inputs[1].t()), inputs[0].t().matmul(g)],
        Op::Transpose => vec![g.t()],
        Op::Concat { axis } => {
            let mut grads = Vec::with_capacity(inputs.len());
            let mut start = 0;
            for input in inputs {
                let len = input.shape()[*axis];
                grads.push(g.slice(*axis, start, len));
                start += len;
            }
            grads
        }
        Op::Slice { axis, start, len } => {
            let full = inputs[0].shape()[*axis];
            vec![g.pad(*axis, *start, full - start - len)]
        }
        Op::Pad { axis, before, .. } => {
            let orig = inputs[0].shape()[*axis];
            vec![g.slice(*axis, *before, orig)]
        }
        Op::Reshape => vec![g.reshape(inputs[0].shape())],
        Op::AddRow => vec![g.clone(), g.sum_axis(0)],
        Op::MulCol => {
            let r = inputs[0].shape()[0];
            vec![
                g.mul_col(&inputs[1]),
                g.mul(&inputs[0]).sum_axis(1).reshape(&[r, 1]),
            ]
        }
        Op::RepeatCol { .. } => {
            let in_shape = inputs[0].shape().to_vec();
            vec![g.sum_axis(1).reshape(&in_shape)]
        }
        Op::RepeatRow { .. } => {
            let in_shape = inputs[0].shape().to_vec();
            vec![g.sum_axis(0).reshape(&in_shape)]
        }
        Op::Broadcast { .. } => vec![g.sum().reshape(inputs[0].shape())],
        Op::Relu => {
            let mask = Tensor::from_vec(
                inputs[0].with_data(|d| d.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect()),
                inputs[0].shape(),
            );
            vec![g.mul(&mask)]
        }
        Op::LeakyRelu(slope) => {
            let s = *slope;
            let mask = Tensor::from_vec(
                inputs[0].with_data(|d| d.iter().map(|&v| if v > 0.0 { 1.0 } else { s }).collect()),
                inputs[0].shape(),
            );
            vec![g.mul(&mask)]
        }
        Op::Sigmoid => {
            let one_minus = output.neg().add_scalar(1.0);
            vec![g.mul(&output.mul(&one_minus))]
        }
        Op::Tanh => vec![g.mul(&output.square().neg().add_scalar(1.0))],
        Op::Exp => vec![g.mul(output)],
        Op::Log => vec![g.mul(&inputs[0].powf(-1.0))],
        Op::Abs => {
            let sign = Tensor::from_vec(
                inputs[0].with_data(|d| {
                    d.iter()
                        .map(|&v| {
                            if v > 0.0 {
                                1.0
                            } else if v < 0.0 {
                                -1.0
                            } else {
                                0.0
                            }
                        })
                        .collect()
                }),
                inputs[0].shape(),
            );
            vec![g.mul(&sign)]
        }
        Op::Square => vec![g.mul(&inputs[0].scale(2.0))],
        Op::Sqrt => vec![g.mul(&inputs[0].powf(-0.5).scale(0.5))],
        Op::Sum => vec![g.broadcast_to(inputs[0].shape())],
        Op::Mean => {
            let n = inputs[0].numel() as Real;
            vec![g.broadcast_to(inputs[0].shape()).scale(1.0 / n)]
        }
        Op::SumAxis(axis) => {
            let shape = inputs[0].shape();
            let (r, c) = (shape[0], shape[1]);
            match axis {
                0 => vec![g.repeat_row(r)],
                1 => vec![g.repeat_col(c)],
                _ => unreachable!(),
            }
        }
        Op::Softmax => {
            let c = output.shape()[1];
            let gy = g.mul(output);
            let row_dot = gy.sum_axis(1).repeat_col(c);
            vec![output.mul(&g.sub(&row_dot))]
        }
    }
}
