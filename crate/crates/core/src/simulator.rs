//! Synthetic ground-truth regulatory systems: network generation, noisy
//! trajectory simulation under Hill-type kinetics, prior-matrix
//! construction with controllable corruption, and trajectory splits.

use crate::error::{DashError, Result};
use crate::linalg::DenseMatrix;
use crate::model::{hill_sigma, Dynamics};
use crate::odeint::{integrate, Trajectory, TrajectoryDataset, DEFAULT_N_SUB};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Decay rate of the ground-truth kinetics.
pub const KINETIC_GAMMA: f64 = 1.0;
/// Sigmoid slope of the ground-truth activation.
pub const KINETIC_SLOPE: f64 = 4.0;

/// A signed ground-truth regulatory network. `adjacency[i][j] != 0` means
/// gene j regulates gene i; entries are in {-1, 0, +1}, no self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthNetwork {
    pub gene_names: Vec<String>,
    pub adjacency: DenseMatrix,
}

impl GroundTruthNetwork {
    pub fn genes(&self) -> usize {
        self.gene_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.count_nonzero()
    }
}

/// Structural prior knowledge handed to pruning: an input-output prior P
/// (r x k) and an input-input prior C (k x k), both non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorKnowledge {
    pub p: DenseMatrix,
    pub c: DenseMatrix,
    pub corruption_pct: f64,
}

pub fn default_gene_names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("g{:03}", i + 1)).collect()
}

/// Sample a sparse signed network. Out-degrees follow a truncated power
/// law (exponent 2) rescaled to the requested mean; targets are uniform
/// among non-self positions; signs are +1 with probability
/// `sign_fraction`.
pub fn generate_network(
    k: usize,
    mean_out_degree: f64,
    sign_fraction: f64,
    seed: u64,
) -> Result<GroundTruthNetwork> {
    if k < 2 {
        return Err(DashError::contract("network needs at least 2 genes"));
    }
    if mean_out_degree < 1.0 || mean_out_degree > (k - 1) as f64 {
        return Err(DashError::config(format!(
            "mean out-degree {mean_out_degree} infeasible for {k} genes"
        )));
    }
    if !(0.0..=1.0).contains(&sign_fraction) {
        return Err(DashError::config("sign_fraction outside [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_deg = k - 1;
    // Truncated zeta-like sampler: P(d) proportional to d^-2 on 1..=max_deg.
    let weights: Vec<f64> = (1..=max_deg).map(|d| 1.0 / (d * d) as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut raw: Vec<f64> = (0..k)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            for (idx, w) in weights.iter().enumerate() {
                if u < *w {
                    return (idx + 1) as f64;
                }
                u -= w;
            }
            max_deg as f64
        })
        .collect();
    let raw_mean = raw.iter().sum::<f64>() / k as f64;
    let scale = mean_out_degree / raw_mean;
    for d in raw.iter_mut() {
        *d = (*d * scale).round().clamp(0.0, max_deg as f64);
    }
    let mut adjacency = DenseMatrix::zeros(k, k);
    for (j, d) in raw.iter().enumerate() {
        let mut targets: Vec<usize> = (0..k).filter(|&i| i != j).collect();
        targets.shuffle(&mut rng);
        for &i in targets.iter().take(*d as usize) {
            let sign = if rng.random::<f64>() < sign_fraction {
                1.0
            } else {
                -1.0
            };
            adjacency.set(i, j, sign);
        }
    }
    Ok(GroundTruthNetwork {
        gene_names: default_gene_names(k),
        adjacency,
    })
}

/// Ground-truth kinetics: dg_i/dt = gamma * (sigmoid(slope * sum_j A_ij *
/// h(g_j)) - g_i), with h the saturating response centered at 0.5. With no
/// regulators the basal point is sigmoid(0) = 0.5.
pub struct KineticDynamics<'a> {
    pub adjacency: &'a DenseMatrix,
    pub gamma: f64,
    pub slope: f64,
}

impl Dynamics for KineticDynamics<'_> {
    fn velocity(&self, states: &DenseMatrix) -> Result<DenseMatrix> {
        let drive = self.adjacency.matmul(&states.map(hill_sigma))?;
        let slope = self.slope;
        let act = drive.map(|x| 1.0 / (1.0 + (-slope * x).exp()));
        Ok(act.sub(states)?.scale(self.gamma))
    }
}

/// Simulate `n_traj` noisy trajectories observed at `times`. Initial
/// states are i.i.d. Uniform(0,1); Gaussian measurement noise N(0,
/// sigma^2) corrupts every non-initial observation, clipped to [0, 1].
/// Randomness is drawn from a per-trajectory stream so any subset is
/// reproducible in isolation.
pub fn simulate_dataset(
    net: &GroundTruthNetwork,
    n_traj: usize,
    times: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<TrajectoryDataset> {
    if times.first() != Some(&0.0) {
        return Err(DashError::contract("simulation times must start at 0"));
    }
    if noise_sigma < 0.0 {
        return Err(DashError::config("noise sigma must be non-negative"));
    }
    let k = net.genes();
    let dynamics = KineticDynamics {
        adjacency: &net.adjacency,
        gamma: KINETIC_GAMMA,
        slope: KINETIC_SLOPE,
    };
    let noise = if noise_sigma > 0.0 {
        Some(Normal::new(0.0, noise_sigma).expect("valid sigma"))
    } else {
        None
    };
    let mut trajectories = Vec::with_capacity(n_traj);
    for idx in 0..n_traj {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        let g0 = DenseMatrix::from_fn(k, 1, |_, _| rng.random::<f64>());
        let clean = integrate(&dynamics, &g0, times, DEFAULT_N_SUB).map_err(|e| match e {
            DashError::Divergence { step, .. } => DashError::Divergence {
                step,
                detail: format!("trajectory {idx}"),
            },
            other => other,
        })?;
        let states: Vec<Vec<f64>> = clean
            .iter()
            .enumerate()
            .map(|(t, batch)| {
                (0..k)
                    .map(|i| {
                        let v = batch.get(i, 0);
                        match (&noise, t) {
                            (Some(n), t) if t > 0 => (v + n.sample(&mut rng)).clamp(0.0, 1.0),
                            _ => v,
                        }
                    })
                    .collect()
            })
            .collect();
        trajectories.push(Trajectory::new(times.to_vec(), states)?);
    }
    TrajectoryDataset::new(trajectories, net.gene_names.clone(), "full")
}

/// Relocate ceil(sigma_pct% of |E|) edges of `mat` to uniformly random
/// unoccupied positions, preserving each edge's value and the total edge
/// count. `allow_diagonal` controls whether relocated edges may land on
/// the diagonal.
fn relocate_edges(
    mat: &DenseMatrix,
    sigma_pct: f64,
    allow_diagonal: bool,
    rng: &mut ChaCha8Rng,
) -> DenseMatrix {
    let mut out = mat.clone();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for i in 0..mat.rows() {
        for j in 0..mat.cols() {
            if mat.get(i, j) != 0.0 {
                edges.push((i, j));
            }
        }
    }
    let n_move = ((sigma_pct / 100.0) * edges.len() as f64).ceil() as usize;
    if n_move == 0 {
        return out;
    }
    edges.shuffle(rng);
    let moved: Vec<(usize, usize, f64)> = edges
        .iter()
        .take(n_move)
        .map(|&(i, j)| (i, j, out.get(i, j)))
        .collect();
    for &(i, j, _) in &moved {
        out.set(i, j, 0.0);
    }
    for &(_, _, value) in &moved {
        loop {
            let ni = rng.random_range(0..out.rows());
            let nj = rng.random_range(0..out.cols());
            if (!allow_diagonal && ni == nj) || out.get(ni, nj) != 0.0 {
                continue;
            }
            out.set(ni, nj, value);
            break;
        }
    }
    out
}


/// Shuffle sigma_pct% of the network's edges to random new positions.
pub fn corrupt_network(
    net: &GroundTruthNetwork,
    sigma_pct: f64,
    seed: u64,
) -> Result<GroundTruthNetwork> {
    if !(0.0..=100.0).contains(&sigma_pct) {
        return Err(DashError::config("corruption percentage outside [0, 100]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(GroundTruthNetwork {
        gene_names: net.gene_names.clone(),
        adjacency: relocate_edges(&net.adjacency, sigma_pct, false, &mut rng),
    })
}

/// Derive prior matrices from a (possibly corrupted) adjacency:
/// P = binary support of A; C = binary support of the regulator
/// co-regulation product P^T P, corrupted once more at the same level
/// from an independent stream of `seed`.
pub fn build_priors(
    corrupted: &GroundTruthNetwork,
    sigma_pct: f64,
    seed: u64,
) -> Result<PriorKnowledge> {
    if !(0.0..=100.0).contains(&sigma_pct) {
        return Err(DashError::config("corruption percentage outside [0, 100]"));
    }
    let p = corrupted.adjacency.map(|v| if v != 0.0 { 1.0 } else { 0.0 });
    // Input-by-input co-regulation: entry (j, j') counts targets shared by
    // regulators j and j', matching the orientation the first-layer score
    // recurrence aligns against.
    let c_raw = p.transpose().matmul(&p)?;
    let c_clean = c_raw.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let c = relocate_edges(&c_clean, sigma_pct, true, &mut rng);
    Ok(PriorKnowledge {
        p,
        c,
        corruption_pct: sigma_pct,
    })
}

/// Trajectory-level split into train/validation/test datasets.
pub fn split_dataset(
    ds: &TrajectoryDataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(TrajectoryDataset, TrajectoryDataset, TrajectoryDataset)> {
    let (f_train, f_val, f_test) = fractions;
    if f_train < 0.0 || f_val < 0.0 || f_test < 0.0 {
        return Err(DashError::contract("split fractions must be non-negative"));
    }
    if (f_train + f_val + f_test - 1.0).abs() > 1e-9 {
        return Err(DashError::contract("split fractions must sum to 1"));
    }
    let n = ds.len();
    let n_train = (f_train * n as f64).round() as usize;
    let n_val = (f_val * n as f64).round() as usize;
    if n_train + n_val > n {
        return Err(DashError::contract("split fractions overflow the dataset"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let pick = |range: &[usize], split: &str| -> Result<TrajectoryDataset> {
        TrajectoryDataset::new(
            range.iter().map(|&i| ds.trajectories[i].clone()).collect(),
            ds.gene_names.clone(),
            split,
        )
    };
    Ok((
        pick(&order[..n_train], "train")?,
        pick(&order[n_train..n_train + n_val], "validation")?,
        pick(&order[n_train + n_val..], "test")?,
    ))
}
