use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Handle to a tensor recorded in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

pub(crate) struct Node<T> {
    pub(crate) value: Tensor<T>,
    pub(crate) requires_grad: bool,
    pub(crate) op: Op<T>,
    /// Accumulated gradient; only leaves keep one.
    pub(crate) grad: Option<Tensor<T>>,
}

pub(crate) enum Op<T> {
    Leaf,
    /// Identity forward, severed backward.
    StopGradient,
    Conv2d {
        input: Var,
        kernel: Var,
        bias: Var,
    },
    BatchNorm {
        input: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<T>,
        inv_std: Vec<T>,
        batch_stats: bool,
    },
    Relu(Var),
    Sigmoid(Var),
    Pool {
        input: Var,
        axis: super::PoolAxis,
        kind: super::PoolKind,
        argmax: Vec<usize>,
    },
    Concat {
        a: Var,
        b: Var,
    },
    Add {
        a: Var,
        b: Var,
        b_index: Vec<usize>,
    },
    Mul {
        a: Var,
        b: Var,
        b_index: Vec<usize>,
    },
    Scale {
        input: Var,
        factor: T,
    },
    Cosine {
        a: Var,
        b: Var,
        norm_a: Vec<T>,
        norm_b: Vec<T>,
    },
    MaskedMean {
        input: Var,
        mask: Vec<bool>,
        count: usize,
    },
    Sum(Var),
}

/// Execution record of one forward pass.
///
/// Nodes are appended in execution order, so every node's inputs precede it.
pub struct Graph<T> {
    pub(crate) nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    /// Constant input; no gradient is tracked for it.
    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.push_leaf(value, false)
    }

    /// Trainable leaf; its gradient is accumulated by [`Graph::backward`].
    pub fn param(&mut self, value: Tensor<T>) -> Var {
        self.push_leaf(value, true)
    }

    fn push_leaf(&mut self, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, requires_grad, op: Op::Leaf, grad: None });
        Var(self.nodes.len() - 1)
    }

    pub(crate) fn push(&mut self, value: Tensor<T>, requires_grad: bool, op: Op<T>) -> Var {
        self.nodes.push(Node { value, requires_grad, op, grad: None });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient accumulated on a leaf, or `None` if nothing reached it.
    pub fn grad(&self, v: Var) -> Option<&Tensor<T>> {
        self.nodes[v.0].grad.as_ref()
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    /// Number of recorded nodes, leaves included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Back-propagates from a scalar `loss`, adding `d loss / d leaf` to every
    /// trainable leaf it reaches. Repeated calls accumulate.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let root = &self.nodes[loss.0];
        if !root.value.is_scalar() {
            return Err(Error::contract(
                "backward",
                format!("loss must be scalar, got shape {:?}", root.value.shape()),
            ));
        }
        if !root.requires_grad {
            return Ok(());
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(root.value.shape(), T::one()));
        let mut leaf_grads = Vec::new();

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            if matches!(self.nodes[i].op, Op::Leaf) {
                leaf_grads.push((i, g));
                continue;
            }
            for (v, contribution) in self.vjp(i, &g) {
                match &mut grads[v.0] {
                    Some(acc) => acc.add_assign(&contribution),
                    slot => *slot = Some(contribution),
                }
            }
        }

        for (i, g) in leaf_grads {
            let node = &mut self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            match &mut node.grad {
                Some(acc) => acc.add_assign(&g),
                slot => *slot = Some(g),
            }
        }
        Ok(())
    }

    pub(crate) fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }
}
