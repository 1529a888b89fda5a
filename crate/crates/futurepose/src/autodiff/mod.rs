//! Reverse-mode automatic differentiation over dense tensors.
//!
//! Tensors form a DAG: every operation records its inputs, and `backward`
//! walks the graph in reverse topological order applying chain-rule rules.
//! The rules themselves are written in terms of tensor operations, so running
//! them with graph recording enabled (`backward_with_graph`) yields gradients
//! that are differentiable again — the second-order path the gradient
//! penalty needs.
//!
//! Graphs are single-threaded (`Rc`-based). Detached tensors are plain
//! values. A graph is freed as soon as the last tensor referring to it is
//! dropped; gradients are returned in a separate [`GradientMap`] rather than
//! stored on nodes, so nothing keeps a graph alive past an optimizer step.

mod ops;

pub mod gradcheck;

pub use ops::{concat, Op};

use crate::{Error, Real, Result};
use std::cell::{Cell, RefCell};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

thread_local! {
    static NEXT_ID: Cell<u64> = const { Cell::new(1) };
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

fn fresh_id() -> u64 {
    NEXT_ID.with(|c| {
        let id = c.get();
        c.set(id + 1);
        id
    })
}

/// Runs `f` with graph recording disabled; operations inside produce plain
/// value tensors. Used by optimizer updates and first-order backward passes.
pub fn no_grad<T>(f: impl FnOnce() -> T) -> T {
    GRAD_ENABLED.with(|g| {
        let prev = g.replace(false);
        let out = f();
        g.set(prev);
        out
    })
}

pub(crate) fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

struct Record {
    op: Op,
    inputs: Vec<Tensor>,
}

struct Inner {
    id: u64,
    shape: Vec<usize>,
    data: RefCell<Vec<Real>>,
    record: Option<Record>,
    requires_grad: bool,
}

/// Dense n-dimensional value with an optional differentiation record.
#[derive(Clone)]
pub struct Tensor {
    inner: Rc<Inner>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("id", &self.inner.id)
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad)
            .finish()
    }
}

fn numel_of(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Tensor {
    fn new_leaf(data: Vec<Real>, shape: Vec<usize>, requires_grad: bool) -> Tensor {
        assert_eq!(
            data.len(),
            numel_of(&shape),
            "data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor {
            inner: Rc::new(Inner {
                id: fresh_id(),
                shape,
                data: RefCell::new(data),
                record: None,
                requires_grad,
            }),
        }
    }

    pub(crate) fn from_op(data: Vec<Real>, shape: Vec<usize>, op: Op, inputs: Vec<Tensor>) -> Tensor {
        let track = grad_enabled() && inputs.iter().any(|t| t.inner.requires_grad);
        if !track {
            return Tensor::new_leaf(data, shape, false);
        }
        assert_eq!(data.len(), numel_of(&shape));
        Tensor {
            inner: Rc::new(Inner {
                id: fresh_id(),
                shape,
                data: RefCell::new(data),
                record: Some(Record { op, inputs }),
                requires_grad: true,
            }),
        }
    }

    /// Constant value tensor (no gradient tracking).
    pub fn from_vec(data: Vec<Real>, shape: &[usize]) -> Tensor {
        Tensor::new_leaf(data, shape.to_vec(), false)
    }

    /// Leaf tensor that participates in differentiation.
    pub fn param(data: Vec<Real>, shape: &[usize]) -> Tensor {
        Tensor::new_leaf(data, shape.to_vec(), true)
    }

    pub fn scalar(v: Real) -> Tensor {
        Tensor::from_vec(vec![v], &[1])
    }

    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor::from_vec(vec![0.0; numel_of(shape)], shape)
    }

    pub fn ones(shape: &[usize]) -> Tensor {
        Tensor::from_vec(vec![1.0; numel_of(shape)], shape)
    }

    pub fn full(shape: &[usize], v: Real) -> Tensor {
        Tensor::from_vec(vec![v; numel_of(shape)], shape)
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn numel(&self) -> usize {
        numel_of(&self.inner.shape)
    }

    pub fn is_scalar(&self) -> bool {
        self.numel() == 1
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad
    }

    /// True when this tensor is attached to a computation graph.
    pub fn has_graph(&self) -> bool {
        self.inner.record.is_some()
    }

    pub fn to_vec(&self) -> Vec<Real> {
        self.inner.data.borrow().clone()
    }

    /// Scalar value; panics when numel != 1.
    pub fn value(&self) -> Real {
        let d = self.inner.data.borrow();
        assert_eq!(d.len(), 1, "value() on non-scalar tensor");
        d[0]
    }

    pub fn at(&self, i: usize) -> Real {
        self.inner.data.borrow()[i]
    }

    pub fn is_finite(&self) -> bool {
        self.inner.data.borrow().iter().all(|v| v.is_finite())
    }

    /// Copy of this tensor detached from any graph. Detached tensors yield
    /// zero gradients.
    pub fn detach(&self) -> Tensor {
        Tensor::new_leaf(self.to_vec(), self.inner.shape.clone(), false)
    }

    /// Overwrite the raw values of a leaf tensor. Used by optimizers and
    /// checkpoint loading; calling this on a graph node would corrupt the
    /// recorded forward pass, so it panics there.
    pub fn set_data(&self, values: &[Real]) {
        assert!(
            self.inner.record.is_none(),
            "set_data on a non-leaf tensor"
        );
        let mut d = self.inner.data.borrow_mut();
        assert_eq!(d.len(), values.len());
        d.copy_from_slice(values);
    }

    pub(crate) fn with_data<T>(&self, f: impl FnOnce(&[Real]) -> T) -> T {
        f(&self.inner.data.borrow())
    }
}

/// Gradients keyed by parameter identity.
///
/// Every requested tensor appears exactly once; tensors the root does not
/// depend on map to zeros of matching shape.
#[derive(Debug)]
pub struct GradientMap {
    grads: HashMap<u64, Tensor>,
}

impl GradientMap {
    pub fn get(&self, param: &Tensor) -> &Tensor {
        self.grads
            .get(&param.id())
            .expect("tensor was not in the wrt set of this backward pass")
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}

/// First-order gradients of a scalar `root` with respect to `wrt`.
/// The work done here is not itself recorded.
pub fn backward(root: &Tensor, wrt: &[&Tensor]) -> Result<GradientMap> {
    backward_impl(root, wrt, false)
}

/// Like [`backward`] but the gradient computation is recorded, so the
/// returned gradients can be differentiated again.
pub fn backward_with_graph(root: &Tensor, wrt: &[&Tensor]) -> Result<GradientMap> {
    backward_impl(root, wrt, true)
}

fn backward_impl(root: &Tensor, wrt: &[&Tensor], create_graph: bool) -> Result<GradientMap> {
    if !root.is_scalar() {
        return Err(Error::NonScalarRoot(root.shape().to_vec()));
    }
    let reached = flow_gradients(root, create_graph);
    let mut grads = HashMap::with_capacity(wrt.len());
    for p in wrt {
        let g = match reached.get(&p.id()) {
            Some(g) => g.clone(),
            None => Tensor::zeros(p.shape()),
        };
        debug_assert_eq!(g.shape(), p.shape());
        grads.insert(p.id(), g);
    }
    Ok(GradientMap { grads })
}

/// L2 norm of the gradient of `root` with respect to `wrt_input`, returned
/// as a graph node so it can appear inside another loss and be
/// differentiated with respect to upstream parameters.
pub fn grad_norm(root: &Tensor, wrt_input: &Tensor) -> Result<Tensor> {
    if !root.is_scalar() {
        return Err(Error::NonScalarRoot(root.shape().to_vec()));
    }
    let reached = flow_gradients(root, true);
    let g = reached
        .get(&wrt_input.id())
        .ok_or(Error::DisconnectedGradient)?;
    Ok(g.l2_norm())
}

/// Core reverse sweep. Returns the gradient reaching every node the root
/// depends on, keyed by tensor id.
fn flow_gradients(root: &Tensor, create_graph: bool) -> HashMap<u64, Tensor> {
    // Reverse topological order via iterative post-order DFS.
    let mut order: Vec<Tensor> = Vec::new();
    let mut visited: HashSet<u64> = HashSet::new();
    let mut stack: Vec<(Tensor, usize)> = vec![(root.clone(), 0)];
    visited.insert(root.id());
    while let Some((node, child)) = stack.pop() {
        let n_inputs = node.inner.record.as_ref().map_or(0, |r| r.inputs.len());
        if child < n_inputs {
            stack.push((node.clone(), child + 1));
            let input = node.inner.record.as_ref().unwrap().inputs[child].clone();
            if input.inner.requires_grad && visited.insert(input.id()) {
                stack.push((input, 0));
            }
        } else {
            order.push(node);
        }
    }

    let mut grads: HashMap<u64, Tensor> = HashMap::new();
    grads.insert(root.id(), Tensor::ones(root.shape()));

    let run = |f: &mut dyn FnMut()| {
        if create_graph {
            f()
        } else {
            no_grad(f)
        }
    };

    for node in order.iter().rev() {
        let Some(record) = node.inner.record.as_ref() else {
            continue;
        };
        let Some(grad_out) = grads.get(&node.id()).cloned() else {
            continue;
        };
        let mut input_grads: Vec<Tensor> = Vec::new();
        run(&mut || {
            input_grads = ops::backward_rule(&record.op, &record.inputs, node, &grad_out);
        });
        debug_assert_eq!(input_grads.len(), record.inputs.len());
        for (input, g) in record.inputs.iter().zip(input_grads) {
            if !input.inner.requires_grad {
                continue;
            }
            debug_assert_eq!(g.shape(), input.shape(), "op {:?}", record.op);
            match grads.remove(&input.id()) {
                Some(acc) => {
                    let mut summed = acc.clone();
                    run(&mut || summed = acc.add(&g));
                    grads.insert(input.id(), summed);
                }
                None => {
                    grads.insert(input.id(), g);
                }
            }
        }
    }
    grads
}

/// One entry of the differentiable-primitive catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpInfo {
    pub name: &'static str,
    /// Whether the primitive's backward pass is itself differentiable.
    /// Piecewise-linear primitives (relu, abs, max) count as supported with
    /// a second derivative of zero everywhere.
    pub double_backward: bool,
}

/// Catalog of differentiable primitives exposed by the engine.
pub fn op_catalog() -> Vec<OpInfo> {
    const ALL: &[&str] = &[
        "matmul",
        "transpose",
        "add",
        "sub",
        "mul",
        "neg",
        "scale",
        "add_scalar",
        "max_scalar",
        "pow_scalar",
        "concat",
        "slice",
        "pad",
        "reshape",
        "add_row",
        "mul_col",
        "repeat_col",
        "repeat_row",
        "broadcast",
        "sigmoid",
        "tanh",
        "relu",
        "leaky_relu",
        "square",
        "sqrt",
        "abs",
        "exp",
        "log",
        "sum",
        "mean",
        "sum_axis",
        "norm",
        "softmax",
    ];
    ALL.iter()
        .map(|name| OpInfo { name, double_backward: true })
        .collect()
}
