//! Reverse-mode differentiation on a tape of matrix operations.
//!
//! The tape records forward values; [`Tape::grad`] replays it backwards,
//! accumulating adjoints additively at shared nodes. Scope is deliberately
//! narrow: exactly the primitives needed to unroll the dynamics models
//! through a fixed-step integrator and a scalar loss. No higher-order
//! derivatives, no general user programs.

use crate::error::{DashError, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Abs,
    Exp,
    Log,
    Relu,
    Elu,
    HillSigma,
    HillPi,
    Recip,
}

impl UnaryFn {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            UnaryFn::Abs => x.abs(),
            UnaryFn::Exp => x.exp(),
            UnaryFn::Log => x.ln(),
            UnaryFn::Relu => x.max(0.0),
            UnaryFn::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp() - 1.0
                }
            }
            UnaryFn::HillSigma => (x - 0.5) / (1.0 + (x - 0.5).abs()),
            UnaryFn::HillPi => (UnaryFn::HillSigma.apply(x) + 1.0).ln(),
            UnaryFn::Recip => 1.0 / x,
        }
    }

    /// Local derivative at `x`. The Hill activations use the hand-derived
    /// piecewise forms; at the kink x = 0.5 the one-sided limits agree (1).
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            UnaryFn::Abs => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            UnaryFn::Exp => x.exp(),
            UnaryFn::Log => 1.0 / x,
            UnaryFn::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            UnaryFn::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            UnaryFn::HillSigma => {
                let d = 1.0 + (x - 0.5).abs();
                1.0 / (d * d)
            }
            UnaryFn::HillPi => {
                UnaryFn::HillSigma.derivative(x) / (UnaryFn::HillSigma.apply(x) + 1.0)
            }
            UnaryFn::Recip => -1.0 / (x * x),
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// a (m x b) + bias (m x 1), bias broadcast across columns
    AddColBroadcast(NodeId, NodeId),
    /// a (m x b) * v (m x 1), each column scaled elementwise by v
    MulColBroadcast(NodeId, NodeId),
    Scale(NodeId, f64),
    Unary(NodeId, UnaryFn),
    Sum(NodeId),
    /// mean over all entries of (a - b)^2, a 1x1 result
    MeanSqDiff(NodeId, NodeId),
}

struct Node {
    value: DenseMatrix,
    op: Op,
}

/// One gradient matrix per registered parameter, in registration order.
/// Parameters not on the path to the loss get exact zeros.
pub type GradientSet = Vec<DenseMatrix>;

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: Vec<NodeId>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: DenseMatrix, op: Op) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { value, op });
        id
    }

    pub fn value(&self, id: NodeId) -> &DenseMatrix {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value.get(0, 0)
    }

    pub fn constant(&mut self, value: DenseMatrix) -> NodeId {
        self.push(value, Op::Constant)
    }

    /// Register a differentiable leaf. Gradients come back in registration order.
    pub fn param(&mut self, value: DenseMatrix) -> NodeId {
        let id = self.push(value, Op::Param);
        self.params.push(id);
        id
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.matmul(&self.nodes[b.0].value)?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.add(&self.nodes[b.0].value)?;
        Ok(self.push(value, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.sub(&self.nodes[b.0].value)?;
        Ok(self.push(value, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.nodes[a.0].value.hadamard(&self.nodes[b.0].value)?;
        Ok(self.push(value, Op::Mul(a, b)))
    }

    pub fn add_col_broadcast(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (av, bv) = (&self.nodes[a.0].value, &self.nodes[bias.0].value);
        if bv.cols() != 1 || bv.rows() != av.rows() {
            return Err(DashError::Shape {
                op: "add_col_broadcast",
                left_rows: av.rows(),
                left_cols: av.cols(),
                right_rows: bv.rows(),
                right_cols: bv.cols(),
            });
        }
        let value = DenseMatrix::from_fn(av.rows(), av.cols(), |i, j| av.get(i, j) + bv.get(i, 0));
        Ok(self.push(value, Op::AddColBroadcast(a, bias)))
    }

    pub fn mul_col_broadcast(&mut self, a: NodeId, v: NodeId) -> Result<NodeId> {
        let (av, vv) = (&self.nodes[a.0].value, &self.nodes[v.0].value);
        if vv.cols() != 1 || vv.rows() != av.rows() {
            return Err(DashError::Shape {
                op: "mul_col_broadcast",
                left_rows: av.rows(),
                left_cols: av.cols(),
                right_rows: vv.rows(),
                right_cols: vv.cols(),
            });
        }
        let value = DenseMatrix::from_fn(av.rows(), av.cols(), |i, j| av.get(i, j) * vv.get(i, 0));
        Ok(self.push(value, Op::MulColBroadcast(a, v)))
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> NodeId {
        let value = self.nodes[a.0].value.scale(s);
        self.push(value, Op::Scale(a, s))
    }

    pub fn unary(&mut self, a: NodeId, f: UnaryFn) -> NodeId {
        let value = self.nodes[a.0].value.map(|x| f.apply(x));
        self.push(value, Op::Unary(a, f))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let value = DenseMatrix::new(1, 1, vec![self.nodes[a.0].value.sum()])
            .expect("sum of finite matrix");
        self.push(value, Op::Sum(a))
    }

    pub fn mean_sq_diff(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let diff = self.nodes[a.0].value.sub(&self.nodes[b.0].value)?;
        let n = diff.len() as f64;
        let mse = diff.data().iter().map(|d| d * d).sum::<f64>() / n;
        let value = DenseMatrix::new(1, 1, vec![mse])?;
        Ok(self.push(value, Op::MeanSqDiff(a, b)))
    }

    /// Reverse pass from a scalar loss; returns one gradient per parameter
    /// in registration order.
    pub fn grad(&self, loss: NodeId) -> Result<GradientSet> {
        let loss_val = &self.nodes[loss.0].value;
        if loss_val.rows() != 1 || loss_val.cols() != 1 {
            return Err(DashError::contract(format!(
                "grad requires a scalar loss, got {}x{}",
                loss_val.rows(),
                loss_val.cols()
            )));
        }
        let mut adj: Vec<Option<DenseMatrix>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(DenseMatrix::new(1, 1, vec![1.0]).expect("unit seed"));

        for idx in (0..=loss.0).rev() {
            let g = match adj[idx].take() {
                Some(g) => g,
                None => continue,
            };
            match &self.nodes[idx].op {
                Op::Constant | Op::Param => {
                    adj[idx] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let da = g.matmul(&self.nodes[b.0].value.transpose())?;
                    let db = self.nodes[a.0].value.transpose().matmul(&g)?;
                    accumulate(&mut adj, *a, da)?;
                    accumulate(&mut adj, *b, db)?;
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj, *a, g.clone())?;
                    accumulate(&mut adj, *b, g)?;
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj, *a, g.clone())?;
                    accumulate(&mut adj, *b, g.scale(-1.0))?;
                }
                Op::Mul(a, b) => {
                    let da = g.hadamard(&self.nodes[b.0].value)?;
                    let db = g.hadamard(&self.nodes[a.0].value)?;
                    accumulate(&mut adj, *a, da)?;
                    accumulate(&mut adj, *b, db)?;
                }
                Op::AddColBroadcast(a, bias) => {
                    let db = row_sums(&g);
                    accumulate(&mut adj, *a, g)?;
                    accumulate(&mut adj, *bias, db)?;
                }
                Op::MulColBroadcast(a, v) => {
                    let av = &self.nodes[a.0].value;
                    let vv = &self.nodes[v.0].value;
                    let da = DenseMatrix::from_fn(av.rows(), av.cols(), |i, j| {
                        g.get(i, j) * vv.get(i, 0)
                    });
                    let dv = DenseMatrix::from_fn(vv.rows(), 1, |i, _| {
                        (0..av.cols()).map(|j| g.get(i, j) * av.get(i, j)).sum()
                    });
                    accumulate(&mut adj, *a, da)?;
                    accumulate(&mut adj, *v, dv)?;
                }
                Op::Scale(a, s) => {
                    accumulate(&mut adj, *a, g.scale(*s))?;
                }
                Op::Unary(a, f) => {
                    let av = &self.nodes[a.0].value;
                    let da =
                        DenseMatrix::from_fn(av.rows(), av.cols(), |i, j| {
                            g.get(i, j) * f.derivative(av.get(i, j))
                        });
                    accumulate(&mut adj, *a, da)?;
                }
                Op::Sum(a) => {
                    let av = &self.nodes[a.0].value;
                    let s = g.get(0, 0);
                    let da = DenseMatrix::from_fn(av.rows(), av.cols(), |_, _| s);
                    accumulate(&mut adj, *a, da)?;
                }
                Op::MeanSqDiff(a, b) => {
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    let scale = 2.0 * g.get(0, 0) / av.len() as f64;
                    let da = DenseMatrix::from_fn(av.rows(), av.cols(), |i, j| {
                        scale * (av.get(i, j) - bv.get(i, j))
                    });
                    let db = da.scale(-1.0);
                    accumulate(&mut adj, *a, da)?;
                    accumulate(&mut adj, *b, db)?;
                }
            }
        }

        Ok(self
            .params
            .iter()
            .map(|p| {
                let v = &self.nodes[p.0].value;
                adj[p.0]
                    .clone()
                    .unwrap_or_else(|| DenseMatrix::zeros(v.rows(), v.cols()))
            })
            .collect())
    }
}

fn accumulate(adj: &mut [Option<DenseMatrix>], id: NodeId, delta: DenseMatrix) -> Result<()> {
    adj[id.0] = Some(match adj[id.0].take() {
        Some(existing) => existing.add(&delta)?,
        None => delta,
    });
    Ok(())
}

fn row_sums(g: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(g.rows(), 1, |i, _| (0..g.cols()).map(|j| g.get(i, j)).sum())
}
