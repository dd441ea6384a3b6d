//! Dynamics models: the Hill-activation architecture with two parallel
//! branches and gene-specific multipliers, plus a plain two-layer MLP
//! ablation. Both carry binary masks that zero pruned weights in every
//! forward pass.

use crate::autograd::{NodeId, Tape, UnaryFn};
use crate::error::{DashError, Result};
use crate::linalg::DenseMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Saturating Hill response for the additive branch, centered at 0.5.
/// Maps into (-1, 1).
pub fn hill_sigma(x: f64) -> f64 {
    UnaryFn::HillSigma.apply(x)
}

/// Log-space Hill response for the multiplicative branch:
/// `log(hill_sigma(x) + 1)`, finite since hill_sigma > -1.
pub fn hill_pi(x: f64) -> f64 {
    UnaryFn::HillPi.apply(x)
}

fn elu(x: f64) -> f64 {
    UnaryFn::Elu.apply(x)
}

/// Default hidden width for a `k`-gene system.
pub fn default_hidden_width(k: usize) -> usize {
    ((k as f64 / 9.0).round() as usize).max(10)
}

/// Parameters of the two-branch Hill-activation model.
///
/// Shapes: `w_sigma`, `w_pi` are m x k; `b_sigma`, `b_pi` are m x 1;
/// `u_sigma`, `u_pi` are r x m; `upsilon` is r x 1, with k = r = gene count.
/// Masks mirror the four weight matrices; biases and `upsilon` are never
/// pruned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhoenixParams {
    pub w_sigma: DenseMatrix,
    pub b_sigma: DenseMatrix,
    pub w_pi: DenseMatrix,
    pub b_pi: DenseMatrix,
    pub u_sigma: DenseMatrix,
    pub u_pi: DenseMatrix,
    pub upsilon: DenseMatrix,
    pub mask_w_sigma: DenseMatrix,
    pub mask_w_pi: DenseMatrix,
    pub mask_u_sigma: DenseMatrix,
    pub mask_u_pi: DenseMatrix,
}

/// Two-layer MLP ablation with ELU hidden activation; the model output is
/// `MLP(g) - g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub w1: DenseMatrix,
    pub b1: DenseMatrix,
    pub w2: DenseMatrix,
    pub b2: DenseMatrix,
    pub mask1: DenseMatrix,
    pub mask2: DenseMatrix,
}

fn scaled_normal(rng: &mut impl Rng, rows: usize, cols: usize, fan_in: usize) -> DenseMatrix {
    let normal = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).expect("valid stddev");
    DenseMatrix::from_fn(rows, cols, |_, _| normal.sample(rng))
}

fn ones(rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| 1.0)
}

impl PhoenixParams {
    /// Weights ~ N(0, 1/fan_in), biases 0, upsilon 1, all masks open.
    pub fn init(k: usize, m: usize, rng: &mut impl Rng) -> Self {
        PhoenixParams {
            w_sigma: scaled_normal(rng, m, k, k),
            b_sigma: DenseMatrix::zeros(m, 1),
            w_pi: scaled_normal(rng, m, k, k),
            b_pi: DenseMatrix::zeros(m, 1),
            u_sigma: scaled_normal(rng, k, m, m),
            u_pi: scaled_normal(rng, k, m, m),
            upsilon: ones(k, 1),
            mask_w_sigma: ones(m, k),
            mask_w_pi: ones(m, k),
            mask_u_sigma: ones(k, m),
            mask_u_pi: ones(k, m),
        }
    }

    pub fn genes(&self) -> usize {
        self.u_sigma.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w_sigma.rows()
    }
}

impl MlpParams {
    pub fn init(k: usize, m: usize, rng: &mut impl Rng) -> Self {
        MlpParams {
            w1: scaled_normal(rng, m, k, k),
            b1: DenseMatrix::zeros(m, 1),
            w2: scaled_normal(rng, k, m, m),
            b2: DenseMatrix::zeros(k, 1),
            mask1: ones(m, k),
            mask2: ones(k, m),
        }
    }

    pub fn genes(&self) -> usize {
        self.w2.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Phoenix(PhoenixParams),
    Mlp(MlpParams),
}

impl Model {
    pub fn genes(&self) -> usize {
        match self {
            Model::Phoenix(p) => p.genes(),
            Model::Mlp(p) => p.genes(),
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            Model::Phoenix(p) => p.hidden(),
            Model::Mlp(p) => p.hidden(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Phoenix(_) => "phoenix",
            Model::Mlp(_) => "mlp",
        }
    }

    /// Names of the prunable weight matrices, in a fixed order used by
    /// pruning, the optimizer, and serialization alike.
    pub fn weight_names(&self) -> &'static [&'static str] {
        match self {
            Model::Phoenix(_) => &["w_sigma", "w_pi", "u_sigma", "u_pi"],
            Model::Mlp(_) => &["w1", "w2"],
        }
    }

    pub fn weights(&self) -> Vec<&DenseMatrix> {
        match self {
            Model::Phoenix(p) => vec![&p.w_sigma, &p.w_pi, &p.u_sigma, &p.u_pi],
            Model::Mlp(p) => vec![&p.w1, &p.w2],
        }
    }

    pub fn masks(&self) -> Vec<&DenseMatrix> {
        match self {
            Model::Phoenix(p) => {
                vec![&p.mask_w_sigma, &p.mask_w_pi, &p.mask_u_sigma, &p.mask_u_pi]
            }
            Model::Mlp(p) => vec![&p.mask1, &p.mask2],
        }
    }

    pub fn masks_mut(&mut self) -> Vec<&mut DenseMatrix> {
        match self {
            Model::Phoenix(p) => vec![
                &mut p.mask_w_sigma,
                &mut p.mask_w_pi,
                &mut p.mask_u_sigma,
                &mut p.mask_u_pi,
            ],
            Model::Mlp(p) => vec![&mut p.mask1, &mut p.mask2],
        }
    }

    /// All trainable parameter matrices (weights, then biases and
    /// multipliers), paired with the mask that constrains each, `None` for
    /// never-pruned parameters. Order is fixed and shared with the optimizer.
    pub fn trainables(&self) -> Vec<(&DenseMatrix, Option<&DenseMatrix>)> {
        match self {
            Model::Phoenix(p) => vec![
                (&p.w_sigma, Some(&p.mask_w_sigma)),
                (&p.w_pi, Some(&p.mask_w_pi)),
                (&p.u_sigma, Some(&p.mask_u_sigma)),
                (&p.u_pi, Some(&p.mask_u_pi)),
                (&p.b_sigma, None),
                (&p.b_pi, None),
                (&p.upsilon, None),
            ],
            Model::Mlp(p) => vec![
                (&p.w1, Some(&p.mask1)),
                (&p.w2, Some(&p.mask2)),
                (&p.b1, None),
                (&p.b2, None),
            ],
        }
    }

    pub fn trainables_mut(&mut self) -> Vec<&mut DenseMatrix> {
        match self {
            Model::Phoenix(p) => vec![
                &mut p.w_sigma,
                &mut p.w_pi,
                &mut p.u_sigma,
                &mut p.u_pi,
                &mut p.b_sigma,
                &mut p.b_pi,
                &mut p.upsilon,
            ],
            Model::Mlp(p) => vec![&mut p.w1, &mut p.w2, &mut p.b1, &mut p.b2],
        }
    }

    /// Snapshot with masks multiplied into the weights, for fast repeated
    /// forward evaluation outside the tape.
    pub fn masked(&self) -> Result<MaskedModel> {
        Ok(match self {
            Model::Phoenix(p) => MaskedModel::Phoenix {
                w_sigma: p.w_sigma.hadamard(&p.mask_w_sigma)?,
                b_sigma: p.b_sigma.clone(),
                w_pi: p.w_pi.hadamard(&p.mask_w_pi)?,
                b_pi: p.b_pi.clone(),
                u_sigma: p.u_sigma.hadamard(&p.mask_u_sigma)?,
                u_pi: p.u_pi.hadamard(&p.mask_u_pi)?,
                relu_upsilon: p.upsilon.map(|v| v.max(0.0)),
            },
            Model::Mlp(p) => MaskedModel::Mlp {
                w1: p.w1.hadamard(&p.mask1)?,
                b1: p.b1.clone(),
                w2: p.w2.hadamard(&p.mask2)?,
                b2: p.b2.clone(),
            },
        })
    }

    /// Register parameters on a tape and build the masked forward graph up
    /// to (but not including) any state-dependent computation.
    pub fn tape_params(&self, tape: &mut Tape) -> Result<TapeModel> {
        Ok(match self {
            Model::Phoenix(p) => {
                let w_sigma = tape.param(p.w_sigma.clone());
                let w_pi = tape.param(p.w_pi.clone());
                let u_sigma = tape.param(p.u_sigma.clone());
                let u_pi = tape.param(p.u_pi.clone());
                let b_sigma = tape.param(p.b_sigma.clone());
                let b_pi = tape.param(p.b_pi.clone());
                let upsilon = tape.param(p.upsilon.clone());
                let m_ws = tape.constant(p.mask_w_sigma.clone());
                let m_wp = tape.constant(p.mask_w_pi.clone());
                let m_us = tape.constant(p.mask_u_sigma.clone());
                let m_up = tape.constant(p.mask_u_pi.clone());
                TapeModel::Phoenix {
                    w_sigma: tape.mul(w_sigma, m_ws)?,
                    w_pi: tape.mul(w_pi, m_wp)?,
                    u_sigma: tape.mul(u_sigma, m_us)?,
                    u_pi: tape.mul(u_pi, m_up)?,
                    b_sigma,
                    b_pi,
                    relu_upsilon: tape.unary(upsilon, UnaryFn::Relu),
                }
            }
            Model::Mlp(p) => {
                let w1 = tape.param(p.w1.clone());
                let w2 = tape.param(p.w2.clone());
                let b1 = tape.param(p.b1.clone());
                let b2 = tape.param(p.b2.clone());
                let m1 = tape.constant(p.mask1.clone());
                let m2 = tape.constant(p.mask2.clone());
                TapeModel::Mlp {
                    w1: tape.mul(w1, m1)?,
                    w2: tape.mul(w2, m2)?,
                    b1,
                    b2,
                }
            }
        })
    }

    /// Overwrite trainable values from a gradient-shaped update produced by
    /// the optimizer; order matches [`Model::trainables`].
    pub fn set_trainables(&mut self, values: &[DenseMatrix]) -> Result<()> {
        let mut targets = self.trainables_mut();
        if targets.len() != values.len() {
            return Err(DashError::contract("trainable count mismatch"));
        }
        for (t, v) in targets.iter_mut().zip(values) {
            **t = v.clone();
        }
        Ok(())
    }
}

/// Mask-applied parameter snapshot implementing the fast forward pass.
pub enum MaskedModel {
    Phoenix {
        w_sigma: DenseMatrix,
        b_sigma: DenseMatrix,
        w_pi: DenseMatrix,
        b_pi: DenseMatrix,
        u_sigma: DenseMatrix,
        u_pi: DenseMatrix,
        relu_upsilon: DenseMatrix,
    },
    Mlp {
        w1: DenseMatrix,
        b1: DenseMatrix,
        w2: DenseMatrix,
        b2: DenseMatrix,
    },
}

/// Anything that maps a batch of states (k x B) to velocities (k x B).
pub trait Dynamics {
    fn velocity(&self, states: &DenseMatrix) -> Result<DenseMatrix>;
}

fn add_bias(mut a: DenseMatrix, bias: &DenseMatrix) -> DenseMatrix {
    let cols = a.cols();
    for i in 0..a.rows() {
        let b = bias.get(i, 0);
        for j in 0..cols {
            a.set(i, j, a.get(i, j) + b);
        }
    }
    a
}

fn mul_col(mut a: DenseMatrix, v: &DenseMatrix) -> DenseMatrix {
    let cols = a.cols();
    for i in 0..a.rows() {
        let s = v.get(i, 0);
        for j in 0..cols {
            a.set(i, j, a.get(i, j) * s);
        }
    }
    a
}

impl Dynamics for MaskedModel {
    fn velocity(&self, states: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            MaskedModel::Phoenix {
                w_sigma,
                b_sigma,
                w_pi,
                b_pi,
                u_sigma,
                u_pi,
                relu_upsilon,
            } => {
                let c_sigma = add_bias(w_sigma.matmul(&states.map(hill_sigma))?, b_sigma);
                let c_pi = add_bias(w_pi.matmul(&states.map(hill_pi))?, b_pi).map(f64::exp);
                let combined = u_sigma.matmul(&c_sigma)?.add(&u_pi.matmul(&c_pi)?)?;
                Ok(mul_col(combined.sub(states)?, relu_upsilon))
            }
            MaskedModel::Mlp { w1, b1, w2, b2 } => {
                let hidden = add_bias(w1.matmul(states)?, b1).map(elu);
                let out = add_bias(w2.matmul(&hidden)?, b2);
                out.sub(states)
            }
        }
    }
}

/// Tape-side handles to the masked parameters; `velocity` extends the tape.
pub enum TapeModel {
    Phoenix {
        w_sigma: NodeId,
        b_sigma: NodeId,
        w_pi: NodeId,
        b_pi: NodeId,
        u_sigma: NodeId,
        u_pi: NodeId,
        relu_upsilon: NodeId,
    },
    Mlp {
        w1: NodeId,
        b1: NodeId,
        w2: NodeId,
        b2: NodeId,
    },
}

impl TapeModel {
    pub fn velocity(&self, tape: &mut Tape, states: NodeId) -> Result<NodeId> {
        match self {
            TapeModel::Phoenix {
                w_sigma,
                b_sigma,
                w_pi,
                b_pi,
                u_sigma,
                u_pi,
                relu_upsilon,
            } => {
                let hs = tape.unary(states, UnaryFn::HillSigma);
                let pre_sigma = tape.matmul(*w_sigma, hs)?;
                let c_sigma = tape.add_col_broadcast(pre_sigma, *b_sigma)?;
                let hp = tape.unary(states, UnaryFn::HillPi);
                let pre_pi = tape.matmul(*w_pi, hp)?;
                let log_pi = tape.add_col_broadcast(pre_pi, *b_pi)?;
                let c_pi = tape.unary(log_pi, UnaryFn::Exp);
                let us = tape.matmul(*u_sigma, c_sigma)?;
                let up = tape.matmul(*u_pi, c_pi)?;
                let combined = tape.add(us, up)?;
                let delta = tape.sub(combined, states)?;
                tape.mul_col_broadcast(delta, *relu_upsilon)
            }
            TapeModel::Mlp { w1, b1, w2, b2 } => {
                let pre = tape.matmul(*w1, states)?;
                let pre_b = tape.add_col_broadcast(pre, *b1)?;
                let hidden = tape.unary(pre_b, UnaryFn::Elu);
                let out = tape.matmul(*w2, hidden)?;
                let out_b = tape.add_col_broadcast(out, *b2)?;
                tape.sub(out_b, states)
            }
        }
    }
}

/// On-disk snapshot of a trained model: shape-annotated matrices plus run
/// metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub gene_names: Vec<String>,
    pub hidden: usize,
    pub seed: u64,
    pub model: Model,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| DashError::parse("checkpoint", e.to_string()))
    }
}
