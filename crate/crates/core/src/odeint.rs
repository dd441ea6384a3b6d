//! Fixed-step trajectory integration and the data-matching losses.
//!
//! Classical RK4 with `n_sub` equal substeps per observation interval,
//! both as a plain evaluator and unrolled onto the autograd tape so that
//! gradients flow through the integrator (discretize-then-optimize).

use crate::autograd::{NodeId, Tape};
use crate::error::{DashError, Result};
use crate::linalg::DenseMatrix;
use crate::model::{Dynamics, Model, TapeModel};
use serde::{Deserialize, Serialize};

pub const DEFAULT_N_SUB: usize = 20;

/// One expression trajectory: states in [0,1]^k observed at strictly
/// increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(DashError::contract("times and states length mismatch"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DashError::contract("times must be strictly increasing"));
        }
        if states
            .iter()
            .any(|s| s.iter().any(|v| !v.is_finite()))
        {
            return Err(DashError::NonFinite {
                context: "trajectory states",
            });
        }
        Ok(Trajectory { times, states })
    }

    pub fn genes(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }
}

/// A set of trajectories sharing the same time grid and gene panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDataset {
    pub trajectories: Vec<Trajectory>,
    pub gene_names: Vec<String>,
    pub split: String,
}

impl TrajectoryDataset {
    pub fn new(
        trajectories: Vec<Trajectory>,
        gene_names: Vec<String>,
        split: impl Into<String>,
    ) -> Result<Self> {
        let k = gene_names.len();
        if let Some(first) = trajectories.first() {
            for t in &trajectories {
                if t.times != first.times {
                    return Err(DashError::contract(
                        "all trajectories must share the same time grid",
                    ));
                }
                if t.genes() != k {
                    return Err(DashError::contract(format!(
                        "trajectory has {} genes, expected {}",
                        t.genes(),
                        k
                    )));
                }
            }
        }
        Ok(TrajectoryDataset {
            trajectories,
            gene_names,
            split: split.into(),
        })
    }

    pub fn genes(&self) -> usize {
        self.gene_names.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.trajectories[0].times
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Initial states of every trajectory as one k x N batch.
    pub fn initial_states(&self) -> DenseMatrix {
        let k = self.genes();
        DenseMatrix::from_fn(k, self.trajectories.len(), |i, j| {
            self.trajectories[j].states[0][i]
        })
    }

    /// Observed states at time index `t` as one k x N batch.
    pub fn states_at(&self, t: usize) -> DenseMatrix {
        let k = self.genes();
        DenseMatrix::from_fn(k, self.trajectories.len(), |i, j| {
            self.trajectories[j].states[t][i]
        })
    }
}

fn check_finite(state: &DenseMatrix, step: usize) -> Result<()> {
    if state.data().iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DashError::Divergence {
            step,
            detail: String::new(),
        })
    }
}

/// Integrate a batch of initial states (k x B) through the requested
/// times; output `i` is the state batch at `times[i]`, with output 0 equal
/// to the initial batch.
pub fn integrate(
    dynamics: &impl Dynamics,
    g0: &DenseMatrix,
    times: &[f64],
    n_sub: usize,
) -> Result<Vec<DenseMatrix>> {
    if times.is_empty() {
        return Err(DashError::contract("integrate needs at least one time"));
    }
    if n_sub == 0 {
        return Err(DashError::config("n_sub must be at least 1"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut state = g0.clone();
    out.push(state.clone());
    let mut step = 0usize;
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / n_sub as f64;
        for _ in 0..n_sub {
            state = rk4_step(dynamics, &state, h)?;
            step += 1;
            check_finite(&state, step)?;
        }
        out.push(state.clone());
    }
    Ok(out)
}

fn rk4_step(dynamics: &impl Dynamics, y: &DenseMatrix, h: f64) -> Result<DenseMatrix> {
    let k1 = dynamics.velocity(y)?;
    let k2 = dynamics.velocity(&y.add(&k1.scale(h / 2.0))?)?;
    let k3 = dynamics.velocity(&y.add(&k2.scale(h / 2.0))?)?;
    let k4 = dynamics.velocity(&y.add(&k3.scale(h))?)?;
    let incr = k1
        .add(&k2.scale(2.0))?
        .add(&k3.scale(2.0))?
        .add(&k4)?
        .scale(h / 6.0);
    y.add(&incr)
}

/// Mean squared error of the model's predictions over all trajectories,
/// non-initial time points, and genes.
pub fn trajectory_mse(model: &Model, dataset: &TrajectoryDataset) -> Result<f64> {
    trajectory_mse_with(model, dataset, DEFAULT_N_SUB)
}

/// Same as [`trajectory_mse`] with an explicit substep count.
pub fn trajectory_mse_with(
    model: &Model,
    dataset: &TrajectoryDataset,
    n_sub: usize,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(DashError::contract("trajectory_mse on empty dataset"));
    }
    let masked = model.masked()?;
    let preds = integrate(&masked, &dataset.initial_states(), dataset.times(), n_sub)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in 1..dataset.times().len() {
        let obs = dataset.states_at(t);
        let diff = preds[t].sub(&obs)?;
        sum += diff.data().iter().map(|d| d * d).sum::<f64>();
        count += diff.len();
    }
    Ok(sum / count as f64)
}

/// Combined loss `tau * data-MSE + (1 - tau) * prior-model penalty`,
/// where the penalty compares the model velocity at observed states with
/// the linear prior model `A*g - g`.
pub fn pinn_penalty(
    model: &Model,
    prior_adjacency: &DenseMatrix,
    dataset: &TrajectoryDataset,
    tau: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(DashError::contract(format!("tau {tau} outside [0, 1]")));
    }
    let k = dataset.genes();
    if prior_adjacency.rows() != k || prior_adjacency.cols() != k {
        return Err(DashError::config("prior adjacency shape mismatch"));
    }
    let data_term = if tau > 0.0 {
        trajectory_mse(model, dataset)?
    } else {
        0.0
    };
    let prior_term = if tau < 1.0 {
        let masked = model.masked()?;
        let mut sum = 0.0;
        let mut count = 0usize;
        for t in 0..dataset.times().len() {
            let obs = dataset.states_at(t);
            let vel = masked.velocity(&obs)?;
            let target = prior_adjacency.matmul(&obs)?.sub(&obs)?;
            let diff = vel.sub(&target)?;
            sum += diff.data().iter().map(|d| d * d).sum::<f64>();
            count += diff.len();
        }
        sum / count as f64
    } else {
        0.0
    };
    Ok(tau * data_term + (1.0 - tau) * prior_term)
}

/// Unroll the integrator on the tape and return the scalar training loss
/// node: `tau * data-MSE + (1 - tau) * prior penalty` (the penalty branch
/// is skipped entirely at tau = 1).
pub fn tape_loss(
    tape: &mut Tape,
    tape_model: &TapeModel,
    dataset: &TrajectoryDataset,
    n_sub: usize,
    tau: f64,
    prior_adjacency: Option<&DenseMatrix>,
) -> Result<NodeId> {
    if dataset.is_empty() {
        return Err(DashError::contract("tape_loss on empty dataset"));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(DashError::contract(format!("tau {tau} outside [0, 1]")));
    }
    let times = dataset.times().to_vec();
    let mut state = tape.constant(dataset.initial_states());
    let mut per_time = Vec::new();
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / n_sub as f64;
        for _ in 0..n_sub {
            state = tape_rk4_step(tape, tape_model, state, h)?;
        }
        per_time.push(state);
    }
    let mut data_loss: Option<NodeId> = None;
    for (idx, pred) in per_time.iter().enumerate() {
        let obs = tape.constant(dataset.states_at(idx + 1));
        let mse = tape.mean_sq_diff(*pred, obs)?;
        data_loss = Some(match data_loss {
            Some(acc) => tape.add(acc, mse)?,
            None => mse,
        });
    }
    let data_loss = tape.scale(data_loss.expect("at least one interval"), 1.0 / per_time.len() as f64);

    if tau >= 1.0 {
        return Ok(data_loss);
    }
    let adjacency = prior_adjacency.ok_or_else(|| {
        DashError::config("tau < 1 requires a prior adjacency matrix")
    })?;
    let mut prior_loss: Option<NodeId> = None;
    let n_times = times.len();
    for t in 0..n_times {
        let obs_mat = dataset.states_at(t);
        let target = adjacency.matmul(&obs_mat)?.sub(&obs_mat)?;
        let obs = tape.constant(obs_mat);
        let vel = tape_model.velocity(tape, obs)?;
        let target_node = tape.constant(target);
        let mse = tape.mean_sq_diff(vel, target_node)?;
        prior_loss = Some(match prior_loss {
            Some(acc) => tape.add(acc, mse)?,
            None => mse,
        });
    }
    let prior_loss = tape.scale(prior_loss.expect("nonempty times"), 1.0 / n_times as f64);

    let scaled_data = tape.scale(data_loss, tau);
    let scaled_prior = tape.scale(prior_loss, 1.0 - tau);
    tape.add(scaled_data, scaled_prior)
}

fn tape_rk4_step(
    tape: &mut Tape,
    tape_model: &TapeModel,
    y: NodeId,
    h: f64,
) -> Result<NodeId> {
    let k1 = tape_model.velocity(tape, y)?;
    let y2 = {
        let s = tape.scale(k1, h / 2.0);
        tape.add(y, s)?
    };
    let k2 = tape_model.velocity(tape, y2)?;
    let y3 = {
        let s = tape.scale(k2, h / 2.0);
        tape.add(y, s)?
    };
    let k3 = tape_model.velocity(tape, y3)?;
    let y4 = {
        let s = tape.scale(k3, h);
        tape.add(y, s)?
    };
    let k4 = tape_model.velocity(tape, y4)?;
    let k2x2 = tape.scale(k2, 2.0);
    let k3x2 = tape.scale(k3, 2.0);
    let sum12 = tape.add(k1, k2x2)?;
    let sum123 = tape.add(sum12, k3x2)?;
    let total = tape.add(sum123, k4)?;
    let incr = tape.scale(total, h / 6.0);
    tape.add(y, incr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhoenixParams;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    /// dg/dt = -g, closed form e^{-t}.
    struct Decay;
    impl Dynamics for Decay {
        fn velocity(&self, states: &DenseMatrix) -> Result<DenseMatrix> {
            Ok(states.scale(-1.0))
        }
    }

    struct Still;
    impl Dynamics for Still {
        fn velocity(&self, states: &DenseMatrix) -> Result<DenseMatrix> {
            Ok(DenseMatrix::zeros(states.rows(), states.cols()))
        }
    }

    #[test]
    fn zero_velocity_keeps_initial_state() {
        let g0 = DenseMatrix::column(&[0.3, 0.9]);
        let preds = integrate(&Still, &g0, &[0.0, 1.0, 2.5], 10).unwrap();
        for p in &preds {
            assert_eq!(*p, g0);
        }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let g0 = DenseMatrix::column(&[1.0]);
        let preds = integrate(&Decay, &g0, &[0.0, 1.0], DEFAULT_N_SUB).unwrap();
        assert_abs_diff_eq!(preds[1].get(0, 0), (-1.0f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn rk4_fourth_order_convergence() {
        let g0 = DenseMatrix::column(&[1.0]);
        let exact = (-1.0f64).exp();
        let err = |n_sub: usize| {
            let preds = integrate(&Decay, &g0, &[0.0, 1.0], n_sub).unwrap();
            (preds[1].get(0, 0) - exact).abs()
        };
        let ratio = err(5) / err(10);
        assert!(
            (12.0..=20.0).contains(&ratio),
            "error ratio {ratio} outside [12, 20]"
        );
    }

    #[test]
    fn integrate_is_deterministic() {
        let model = crate::model::Model::Phoenix(PhoenixParams::init(
            4,
            2,
            &mut rand_chacha::ChaCha8Rng::seed_from_u64(3),
        ));
        let masked = model.masked().unwrap();
        let g0 = DenseMatrix::column(&[0.1, 0.5, 0.6, 0.9]);
        let a = integrate(&masked, &g0, &[0.0, 2.0, 3.0], 8).unwrap();
        let b = integrate(&masked, &g0, &[0.0, 2.0, 3.0], 8).unwrap();
        assert_eq!(a, b);
    }

    fn toy_dataset() -> TrajectoryDataset {
        TrajectoryDataset::new(
            vec![
                Trajectory::new(
                    vec![0.0, 1.0],
                    vec![vec![0.4, 0.6], vec![0.5, 0.5]],
                )
                .unwrap(),
                Trajectory::new(
                    vec![0.0, 1.0],
                    vec![vec![0.2, 0.8], vec![0.3, 0.7]],
                )
                .unwrap(),
            ],
            vec!["g1".into(), "g2".into()],
            "train",
        )
        .unwrap()
    }

    #[test]
    fn mse_of_constant_prediction_hand_computed() {
        // zero-upsilon model predicts g(t) = g(0) for all t
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut p = PhoenixParams::init(2, 2, &mut rng);
        p.upsilon = DenseMatrix::zeros(2, 1);
        let model = crate::model::Model::Phoenix(p);
        let ds = toy_dataset();
        // residuals at t=1: (0.4-0.5), (0.6-0.5), (0.2-0.3), (0.8-0.7)
        let expected = (0.01 + 0.01 + 0.01 + 0.01) / 4.0;
        let mse = trajectory_mse(&model, &ds).unwrap();
        assert_abs_diff_eq!(mse, expected, epsilon = 1e-12);
    }

    #[test]
    fn mse_invariant_to_trajectory_order() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let model = crate::model::Model::Phoenix(PhoenixParams::init(2, 2, &mut rng));
        let ds = toy_dataset();
        let mut reversed = ds.clone();
        reversed.trajectories.reverse();
        let a = trajectory_mse(&model, &ds).unwrap();
        let b = trajectory_mse(&model, &reversed).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let model = crate::model::Model::Phoenix(PhoenixParams::init(2, 2, &mut rng));
        let ds = TrajectoryDataset::new(vec![], vec!["g1".into(), "g2".into()], "train").unwrap();
        assert!(trajectory_mse(&model, &ds).is_err());
    }

    #[test]
    fn pinn_penalty_tau_one_equals_mse() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let model = crate::model::Model::Phoenix(PhoenixParams::init(2, 2, &mut rng));
        let ds = toy_dataset();
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let combined = pinn_penalty(&model, &a, &ds, 1.0).unwrap();
        let mse = trajectory_mse(&model, &ds).unwrap();
        assert_abs_diff_eq!(combined, mse, epsilon = 1e-14);
    }

    #[test]
    fn pinn_penalty_zero_when_model_matches_prior() {
        // zero-weight model has velocity -g; prior A = 0 gives target -g
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut p = PhoenixParams::init(2, 2, &mut rng);
        p.w_sigma = DenseMatrix::zeros(2, 2);
        p.w_pi = DenseMatrix::zeros(2, 2);
        p.u_sigma = DenseMatrix::zeros(2, 2);
        p.u_pi = DenseMatrix::zeros(2, 2);
        let model = crate::model::Model::Phoenix(p);
        let ds = toy_dataset();
        let a = DenseMatrix::zeros(2, 2);
        let penalty = pinn_penalty(&model, &a, &ds, 0.0).unwrap();
        assert_abs_diff_eq!(penalty, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn pinn_penalty_toy_two_gene_hand_case() {
        // constant model (upsilon = 0): velocity = 0 everywhere, so the
        // prior term is the mean square of A*g - g over observed states
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut p = PhoenixParams::init(2, 2, &mut rng);
        p.upsilon = DenseMatrix::zeros(2, 1);
        let model = crate::model::Model::Phoenix(p);
        let ds = toy_dataset();
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let mut sum = 0.0;
        let mut count = 0;
        for traj in &ds.trajectories {
            for s in &traj.states {
                let target = [s[1] - s[0], -s[1]];
                sum += target[0] * target[0] + target[1] * target[1];
                count += 2;
            }
        }
        let expected = sum / count as f64;
        let penalty = pinn_penalty(&model, &a, &ds, 0.0).unwrap();
        assert_abs_diff_eq!(penalty, expected, epsilon = 1e-12);
    }

    #[test]
    fn pinn_penalty_rejects_bad_tau() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let model = crate::model::Model::Phoenix(PhoenixParams::init(2, 2, &mut rng));
        let ds = toy_dataset();
        let a = DenseMatrix::zeros(2, 2);
        assert!(pinn_penalty(&model, &a, &ds, 1.5).is_err());
    }

    #[test]
    fn tape_loss_matches_plain_mse() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let model = crate::model::Model::Phoenix(PhoenixParams::init(2, 3, &mut rng));
        let ds = toy_dataset();
        let mut tape = Tape::new();
        let tm = model.tape_params(&mut tape).unwrap();
        let loss = tape_loss(&mut tape, &tm, &ds, DEFAULT_N_SUB, 1.0, None).unwrap();
        let plain = trajectory_mse(&model, &ds).unwrap();
        assert_abs_diff_eq!(tape.scalar(loss), plain, epsilon = 1e-12);
    }

    #[test]
    fn gradient_through_integrator_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let model = crate::model::Model::Phoenix(PhoenixParams::init(3, 2, &mut rng));
        let ds = TrajectoryDataset::new(
            vec![Trajectory::new(
                vec![0.0, 0.5, 1.0],
                vec![
                    vec![0.2, 0.5, 0.8],
                    vec![0.3, 0.45, 0.7],
                    vec![0.35, 0.4, 0.6],
                ],
            )
            .unwrap()],
            vec!["a".into(), "b".into(), "c".into()],
            "train",
        )
        .unwrap();

        let eval = |m: &crate::model::Model| -> f64 {
            let mut tape = Tape::new();
            let tm = m.tape_params(&mut tape).unwrap();
            let loss = tape_loss(&mut tape, &tm, &ds, 4, 1.0, None).unwrap();
            tape.scalar(loss)
        };

        let mut tape = Tape::new();
        let tm = model.tape_params(&mut tape).unwrap();
        let loss = tape_loss(&mut tape, &tm, &ds, 4, 1.0, None).unwrap();
        let grads = tape.grad(loss).unwrap();

        let h = 1e-5;
        for (pi, (param, _)) in model.trainables().iter().enumerate() {
            for idx in 0..param.len() {
                let mut plus = model.clone();
                plus.trainables_mut()[pi].data_mut()[idx] += h;
                let mut minus = model.clone();
                minus.trainables_mut()[pi].data_mut()[idx] -= h;
                let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
                let an = grads[pi].data()[idx];
                let denom = fd.abs().max(an.abs()).max(1e-6);
                assert!(
                    ((an - fd) / denom).abs() < 1e-4,
                    "param {pi} entry {idx}: analytic {an} vs fd {fd}"
                );
            }
        }
    }
}
