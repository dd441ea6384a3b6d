//! Prior-guided pruning scores, weight normalization, prune schedules,
//! mask updates, and the post-hoc magnitude-pruning baseline.

use crate::error::{DashError, Result};
use crate::linalg::{pinv_left, pinv_right, DenseMatrix};
use crate::model::{Model, PhoenixParams};
use crate::simulator::PriorKnowledge;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Per-matrix pruning scores for the two-branch model. `omega_*` score
/// the first-layer matrices (m x k), `psi_*` the second-layer matrices
/// (r x m). `prev_omega_*` carry the recurrence state consumed by the
/// next refresh.
#[derive(Debug, Clone, PartialEq)]
pub struct PruneScores {
    pub omega_sigma: DenseMatrix,
    pub omega_pi: DenseMatrix,
    pub psi_sigma: DenseMatrix,
    pub psi_pi: DenseMatrix,
    pub prev_omega_sigma: DenseMatrix,
    pub prev_omega_pi: DenseMatrix,
}

impl PruneScores {
    /// Recurrence seed: previous-score matrices drawn from a standard
    /// Gaussian; current scores start at zero and are never consumed
    /// before the first refresh.
    pub fn seed(m: usize, k: usize, r: usize, rng: &mut impl Rng) -> Self {
        let mut gauss =
            |rows, cols| DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
        let prev_omega_sigma = gauss(m, k);
        let prev_omega_pi = gauss(m, k);
        PruneScores {
            omega_sigma: DenseMatrix::zeros(m, k),
            omega_pi: DenseMatrix::zeros(m, k),
            psi_sigma: DenseMatrix::zeros(r, m),
            psi_pi: DenseMatrix::zeros(r, m),
            prev_omega_sigma,
            prev_omega_pi,
        }
    }

    /// Scores in the model's weight order (w_sigma, w_pi, u_sigma, u_pi).
    pub fn as_slice(&self) -> [&DenseMatrix; 4] {
        [
            &self.omega_sigma,
            &self.omega_pi,
            &self.psi_sigma,
            &self.psi_pi,
        ]
    }
}

/// How prune scores are computed at each refresh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScoreMethod {
    /// Convex blend of normalized magnitudes and prior-projection terms.
    Dash { lambda1: f64, lambda2: f64 },
    /// Normalized magnitudes only (iterative magnitude pruning).
    Magnitude,
    /// Prior-projection terms only.
    PriorOnly,
}

/// Pruning timetable: explicit (epoch, fraction) events plus a periodic
/// tail pruning `period_fraction` of the remaining entries every
/// `period` epochs after the last explicit event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneSchedule {
    pub events: Vec<(usize, f64)>,
    pub period: usize,
    pub period_fraction: f64,
}

impl PruneSchedule {
    /// The default timetable: 70% at epoch 3, then 10% of the remaining
    /// entries every 10 epochs.
    pub fn standard() -> Self {
        PruneSchedule {
            events: vec![(3, 0.7)],
            period: 10,
            period_fraction: 0.1,
        }
    }

    /// No pruning at all (dense training).
    pub fn none() -> Self {
        PruneSchedule {
            events: Vec::new(),
            period: 0,
            period_fraction: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut last = None;
        for &(epoch, fraction) in &self.events {
            if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
                return Err(DashError::config(format!(
                    "prune fraction {fraction} outside (0, 1)"
                )));
            }
            if let Some(prev) = last {
                if epoch <= prev {
                    return Err(DashError::config(
                        "prune event epochs must be strictly increasing",
                    ));
                }
            }
            last = Some(epoch);
        }
        if self.period > 0 && !(0.0..1.0).contains(&self.period_fraction) {
            return Err(DashError::config("periodic prune fraction outside (0, 1)"));
        }
        Ok(())
    }

    /// Fraction to prune at `epoch`, if this epoch is a prune event.
    pub fn fraction_at(&self, epoch: usize) -> Option<f64> {
        if let Some(&(_, f)) = self.events.iter().find(|(e, _)| *e == epoch) {
            return Some(f);
        }
        if self.period == 0 || self.period_fraction == 0.0 {
            return None;
        }
        let start = self.events.last().map_or(0, |&(e, _)| e);
        if epoch > start && (epoch - start) % self.period == 0 {
            Some(self.period_fraction)
        } else {
            None
        }
    }
}

fn uniform(rows: usize, cols: usize) -> DenseMatrix {
    let v = 1.0 / (rows * cols) as f64;
    DenseMatrix::from_fn(rows, cols, |_, _| v)
}

/// Absolute values divided by their overall sum; an all-zero matrix falls
/// back to the uniform matrix so downstream ordering stays defined.
pub fn normalize_abs(m: &DenseMatrix) -> DenseMatrix {
    let abs = m.abs();
    let s = abs.sum();
    if s == 0.0 {
        uniform(m.rows(), m.cols())
    } else {
        abs.scale(1.0 / s)
    }
}

fn normalize_exp(m: &DenseMatrix) -> DenseMatrix {
    let e = m.map(f64::exp);
    e.scale(1.0 / e.sum())
}

fn scale_rows(m: &DenseMatrix, v: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) * v.get(i, 0))
}

/// Normalized magnitude matrices (masks applied first), in weight order:
/// plain abs-sum for W_sigma; elementwise exp for the log-space W_pi; the
/// U matrices are row-scaled by the rectified gene multipliers before
/// abs-sum normalization.
pub fn normalize_weights(p: &PhoenixParams) -> Result<[DenseMatrix; 4]> {
    let relu_upsilon = p.upsilon.map(|v| v.max(0.0));
    Ok([
        normalize_abs(&p.w_sigma.hadamard(&p.mask_w_sigma)?),
        normalize_exp(&p.w_pi.hadamard(&p.mask_w_pi)?),
        normalize_abs(&scale_rows(&p.u_sigma.hadamard(&p.mask_u_sigma)?, &relu_upsilon)),
        normalize_abs(&scale_rows(&p.u_pi.hadamard(&p.mask_u_pi)?, &relu_upsilon)),
    ])
}

fn check_prior_shapes(p: &PhoenixParams, priors: &PriorKnowledge) -> Result<()> {
    let k = p.genes();
    let r = k;
    if priors.c.rows() != k || priors.c.cols() != k {
        return Err(DashError::config(format!(
            "input-input prior is {}x{}, expected {k}x{k}",
            priors.c.rows(),
            priors.c.cols()
        )));
    }
    if priors.p.rows() != r || priors.p.cols() != k {
        return Err(DashError::config(format!(
            "input-output prior is {}x{}, expected {r}x{k}",
            priors.p.rows(),
            priors.p.cols()
        )));
    }
    Ok(())
}

/// One score refresh. The first-layer scores blend normalized magnitudes
/// with `|PInv_L(prev_omega^T) . C|`; the second-layer scores blend with
/// `|P . PInv_R(omega)|` using the freshly computed first-layer scores.
/// The returned state carries the new omegas as the next recurrence seed.
pub fn dash_scores(
    p: &PhoenixParams,
    prev: &PruneScores,
    priors: Option<&PriorKnowledge>,
    method: ScoreMethod,
) -> Result<PruneScores> {
    let [w_sigma_n, w_pi_n, u_sigma_n, u_pi_n] = normalize_weights(p)?;
    let (lambda1, lambda2) = match method {
        ScoreMethod::Dash { lambda1, lambda2 } => {
            if !(0.0..=1.0).contains(&lambda1) || !(0.0..=1.0).contains(&lambda2) {
                return Err(DashError::config("lambda outside [0, 1]"));
            }
            (lambda1, lambda2)
        }
        ScoreMethod::Magnitude => (0.0, 0.0),
        ScoreMethod::PriorOnly => (1.0, 1.0),
    };
    let needs_prior = !matches!(method, ScoreMethod::Magnitude);
    let blend = |norm: &DenseMatrix, lambda: f64, prior: DenseMatrix| -> Result<DenseMatrix> {
        norm.scale(1.0 - lambda).add(&prior.abs().scale(lambda))
    };
    let (omega_sigma, omega_pi, psi_sigma, psi_pi);
    if needs_prior {
        let priors = priors.ok_or_else(|| {
            DashError::config("prior-guided scoring requires prior matrices")
        })?;
        check_prior_shapes(p, priors)?;
        let prior_omega = |prev_omega: &DenseMatrix| -> Result<DenseMatrix> {
            pinv_left(&prev_omega.transpose()).matmul(&priors.c)
        };
        omega_sigma = blend(&w_sigma_n, lambda1, prior_omega(&prev.prev_omega_sigma)?)?;
        omega_pi = blend(&w_pi_n, lambda1, prior_omega(&prev.prev_omega_pi)?)?;
        let prior_psi =
            |omega: &DenseMatrix| -> Result<DenseMatrix> { priors.p.matmul(&pinv_right(omega)) };
        psi_sigma = blend(&u_sigma_n, lambda2, prior_psi(&omega_sigma)?)?;
        psi_pi = blend(&u_pi_n, lambda2, prior_psi(&omega_pi)?)?;
    } else {
        omega_sigma = w_sigma_n;
        omega_pi = w_pi_n;
        psi_sigma = u_sigma_n;
        psi_pi = u_pi_n;
    }
    Ok(PruneScores {
        prev_omega_sigma: omega_sigma.clone(),
        prev_omega_pi: omega_pi.clone(),
        omega_sigma,
        omega_pi,
        psi_sigma,
        psi_pi,
    })
}

fn chain_product(scores: &[DenseMatrix]) -> Result<DenseMatrix> {
    // scores are ordered first layer .. last layer; the information flow
    // product is last . ... . first.
    let mut iter = scores.iter().rev();
    let mut acc = iter
        .next()
        .ok_or_else(|| DashError::contract("empty score chain"))?
        .clone();
    for s in iter {
        acc = acc.matmul(s)?;
    }
    Ok(acc)
}

/// Score refresh for a plain L-layer chain with only an input-output
/// prior `P`. Layers are updated last-to-first, each seeing the already
/// refreshed scores above it and the previous scores below it.
pub fn dash_scores_general(
    weights: &[DenseMatrix],
    prev: &[DenseMatrix],
    p: &DenseMatrix,
    lambdas: &[f64],
) -> Result<Vec<DenseMatrix>> {
    let n_layers = weights.len();
    if n_layers < 2 {
        return Err(DashError::config("layer chain needs at least 2 layers"));
    }
    if prev.len() != n_layers || lambdas.len() != n_layers {
        return Err(DashError::config("score/lambda count must match layer count"));
    }
    for w in weights.windows(2) {
        if w[1].cols() != w[0].rows() {
            return Err(DashError::config("incompatible layer chain shapes"));
        }
    }
    if p.rows() != weights[n_layers - 1].rows() || p.cols() != weights[0].cols() {
        return Err(DashError::config("prior shape does not match the chain"));
    }
    for l in lambdas {
        if !(0.0..=1.0).contains(l) {
            return Err(DashError::config("lambda outside [0, 1]"));
        }
    }
    let mut scores: Vec<DenseMatrix> = prev.to_vec();
    for l in (0..n_layers).rev() {
        let norm = normalize_abs(&weights[l]);
        let prior_term = if l == n_layers - 1 {
            p.matmul(&pinv_right(&chain_product(&scores[..l])?))?
        } else if l == 0 {
            pinv_left(&chain_product(&scores[1..])?).matmul(p)?
        } else {
            pinv_left(&chain_product(&scores[l + 1..])?)
                .matmul(p)?
                .matmul(&pinv_right(&chain_product(&scores[..l])?))?
        };
        scores[l] = norm
            .scale(1.0 - lambdas[l])
            .add(&prior_term.abs().scale(lambdas[l]))?;
    }
    Ok(scores)
}

/// Among currently unmasked entries of `mask`, zero the lowest `fraction`
/// by score (count rounded up), ties broken by (row, col) order.
/// Returns the number of newly masked entries; 0 means nothing was left
/// to prune.
pub fn prune_matrix(mask: &mut DenseMatrix, scores: &DenseMatrix, fraction: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
        return Err(DashError::contract(format!(
            "prune fraction {fraction} outside (0, 1)"
        )));
    }
    if !mask.same_shape(scores) {
        return Err(DashError::contract("mask and score shapes differ"));
    }
    let mut alive: Vec<(usize, usize)> = Vec::new();
    for i in 0..mask.rows() {
        for j in 0..mask.cols() {
            if mask.get(i, j) != 0.0 {
                alive.push((i, j));
            }
        }
    }
    let n_prune = (fraction * alive.len() as f64).ceil() as usize;
    if n_prune == 0 {
        return Ok(0);
    }
    alive.sort_by(|&(ai, aj), &(bi, bj)| {
        scores
            .get(ai, aj)
            .partial_cmp(&scores.get(bi, bj))
            .expect("finite scores")
            .then(ai.cmp(&bi))
            .then(aj.cmp(&bj))
    });
    for &(i, j) in alive.iter().take(n_prune) {
        mask.set(i, j, 0.0);
    }
    Ok(n_prune)
}

/// Apply one prune event to every weight matrix of the model. `scores`
/// must follow the model's weight order. Matrices with nothing left to
/// prune are skipped.
pub fn apply_prune(model: &mut Model, scores: &[&DenseMatrix], fraction: f64) -> Result<usize> {
    let mut masks = model.masks_mut();
    if masks.len() != scores.len() {
        return Err(DashError::contract("score count must match weight count"));
    }
    let mut total = 0;
    for (mask, score) in masks.iter_mut().zip(scores) {
        total += prune_matrix(mask, score, fraction)?;
    }
    Ok(total)
}

/// Post-hoc magnitude pruning with the one-standard-error selection rule.
/// For each sparsity level in `grid`, the trained model is masked at that
/// level per matrix and handed to `fit` (fine-tune + validation MSE),
/// `repeats` times. The sparsest level whose mean validation MSE is
/// within one standard error of the best mean is selected.
pub fn posthoc_magnitude_prune(
    model: &Model,
    grid: &[f64],
    repeats: usize,
    mut fit: impl FnMut(&Model, usize) -> Result<(Model, f64)>,
) -> Result<(f64, Model)> {
    if grid.is_empty() {
        return Err(DashError::contract("empty sparsity grid"));
    }
    if repeats == 0 {
        return Err(DashError::contract("repeats must be positive"));
    }
    let mut levels: Vec<f64> = grid.to_vec();
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    let mut means = Vec::with_capacity(levels.len());
    let mut ses = Vec::with_capacity(levels.len());
    let mut best_models = Vec::with_capacity(levels.len());
    for &p in &levels {
        if !(0.0..1.0).contains(&p) || p == 0.0 {
            return Err(DashError::contract(format!("grid level {p} outside (0, 1)")));
        }
        let mut pruned = model.clone();
        {
            let weights: Vec<DenseMatrix> =
                pruned.weights().iter().map(|w| normalize_abs(w)).collect();
            let mut masks = pruned.masks_mut();
            for (mask, score) in masks.iter_mut().zip(&weights) {
                prune_matrix(mask, score, p)?;
            }
        }
        let mut mses = Vec::with_capacity(repeats);
        let mut best: Option<(Model, f64)> = None;
        for rep in 0..repeats {
            let (tuned, mse) = fit(&pruned, rep)?;
            if best.as_ref().is_none_or(|(_, b)| mse < *b) {
                best = Some((tuned, mse));
            }
            mses.push(mse);
        }
        let mean = mses.iter().sum::<f64>() / repeats as f64;
        let se = if repeats > 1 {
            let var = mses.iter().map(|m| (m - mean).powi(2)).sum::<f64>()
                / (repeats - 1) as f64;
            (var / repeats as f64).sqrt()
        } else {
            0.0
        };
        means.push(mean);
        ses.push(se);
        best_models.push(best.expect("at least one repeat").0);
    }
    let best_idx = (0..levels.len())
        .min_by(|&a, &b| means[a].partial_cmp(&means[b]).expect("finite MSE"))
        .expect("non-empty grid");
    let threshold = means[best_idx] + ses[best_idx];
    let selected = (0..levels.len())
        .rev()
        .find(|&i| means[i] <= threshold)
        .expect("best index always qualifies");
    Ok((levels[selected], best_models.swap_remove(selected)))
}
