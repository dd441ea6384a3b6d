//! The training loop: Adam with mask-aware updates, plateau-driven
//! learning-rate decay, interleaved prune events, early stopping on
//! validation MSE, and lambda cross-validation.

use crate::autograd::Tape;
use crate::error::{DashError, Result};
use crate::linalg::DenseMatrix;
use crate::model::Model;
use crate::odeint::{tape_loss, trajectory_mse_with, TrajectoryDataset, DEFAULT_N_SUB};
use crate::pruning::{
    apply_prune, dash_scores, dash_scores_general, normalize_abs, PruneSchedule, PruneScores,
    ScoreMethod,
};
use crate::simulator::PriorKnowledge;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// RNG stream indices, so every consumer of the run seed draws from an
/// independent, individually reproducible stream.
pub mod streams {
    pub const INIT: u64 = 0;
    pub const SPLIT: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const SCORES: u64 = 3;
    pub const PERMUTATION: u64 = 4;
    pub const INFLUENCE: u64 = 5;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr0: f64,
    /// Multiplier applied to the learning rate after `decay_window`
    /// epochs without reasonable validation improvement.
    pub lr_decay: f64,
    pub decay_window: usize,
    /// Relative validation improvement below this fraction counts as
    /// stagnation.
    pub min_rel_improvement: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub score_method: ScoreMethod,
    /// Data-loss weight; 1 disables the prior-model penalty.
    pub tau: f64,
    pub schedule: PruneSchedule,
    pub n_sub: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr0: 1e-3,
            lr_decay: 0.9,
            decay_window: 3,
            min_rel_improvement: 1e-3,
            patience: 40,
            max_epochs: 500,
            score_method: ScoreMethod::Dash {
                lambda1: 0.5,
                lambda2: 0.5,
            },
            tau: 1.0,
            schedule: PruneSchedule::standard(),
            n_sub: DEFAULT_N_SUB,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr0 <= 0.0 || !(0.0..1.0).contains(&self.lr_decay) {
            return Err(DashError::config("learning-rate settings out of range"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(DashError::config("tau outside [0, 1]"));
        }
        if self.n_sub == 0 {
            return Err(DashError::config("n_sub must be positive"));
        }
        self.schedule.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mse: f64,
    pub sparsity: f64,
    pub lr: f64,
    pub newly_pruned: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    /// Epoch at which the loss became non-finite, if training aborted.
    pub diverged_at: Option<usize>,
}

/// A finished (or aborted) training run: the best-validation snapshot and
/// the full per-epoch history.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: TrainHistory,
}

/// Fraction of masked entries over the prunable weight matrices.
pub fn mask_sparsity(model: &Model) -> f64 {
    let total: usize = model.masks().iter().map(|m| m.len()).sum();
    let alive: usize = model.masks().iter().map(|m| m.count_nonzero()).sum();
    (total - alive) as f64 / total as f64
}

struct Adam {
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(shapes: &[&DenseMatrix]) -> Self {
        Adam {
            m: shapes
                .iter()
                .map(|s| DenseMatrix::zeros(s.rows(), s.cols()))
                .collect(),
            v: shapes
                .iter()
                .map(|s| DenseMatrix::zeros(s.rows(), s.cols()))
                .collect(),
            t: 0,
        }
    }

    /// One update; masked entries receive no update even if stale moments
    /// are nonzero.
    fn step(&mut self, model: &mut Model, grads: &[DenseMatrix], lr: f64) -> Result<()> {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t);
        let bc2 = 1.0 - Self::BETA2.powi(self.t);
        let masks: Vec<Option<DenseMatrix>> = model
            .trainables()
            .iter()
            .map(|(_, m)| m.cloned())
            .collect();
        let mut params = model.trainables_mut();
        if params.len() != grads.len() {
            return Err(DashError::contract("gradient count mismatch"));
        }
        for (idx, grad) in grads.iter().enumerate() {
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            let p = &mut params[idx];
            for pos in 0..grad.len() {
                if let Some(mask) = &masks[idx] {
                    if mask.data()[pos] == 0.0 {
                        continue;
                    }
                }
                let g = grad.data()[pos];
                let mi = Self::BETA1 * m.data()[pos] + (1.0 - Self::BETA1) * g;
                let vi = Self::BETA2 * v.data()[pos] + (1.0 - Self::BETA2) * g * g;
                m.data_mut()[pos] = mi;
                v.data_mut()[pos] = vi;
                let update = lr * (mi / bc1) / ((vi / bc2).sqrt() + Self::EPS);
                p.data_mut()[pos] -= update;
            }
        }
        Ok(())
    }

    /// Drop optimizer memory of freshly pruned entries so they can never
    /// be pushed off zero.
    fn zero_masked(&mut self, model: &Model) {
        for (idx, (_, mask)) in model.trainables().iter().enumerate() {
            if let Some(mask) = mask {
                for pos in 0..mask.len() {
                    if mask.data()[pos] == 0.0 {
                        self.m[idx].data_mut()[pos] = 0.0;
                        self.v[idx].data_mut()[pos] = 0.0;
                    }
                }
            }
        }
    }
}

/// Recurrence state for score refreshes, matching the model family.
enum ScoreState {
    Phoenix(PruneScores),
    Chain(Vec<DenseMatrix>),
}

impl ScoreState {
    fn seed(model: &Model, seed: u64) -> Self {
        let mut rng = stream_rng(seed, streams::SCORES);
        match model {
            Model::Phoenix(p) => ScoreState::Phoenix(PruneScores::seed(
                p.hidden(),
                p.genes(),
                p.genes(),
                &mut rng,
            )),
            Model::Mlp(_) => ScoreState::Chain(
                model
                    .weights()
                    .iter()
                    .map(|w| {
                        DenseMatrix::from_fn(w.rows(), w.cols(), |_, _| {
                            StandardNormal.sample(&mut rng)
                        })
                    })
                    .collect(),
            ),
        }
    }
}

fn refresh_and_prune(
    model: &mut Model,
    state: &mut ScoreState,
    priors: Option<&PriorKnowledge>,
    method: ScoreMethod,
    fraction: f64,
) -> Result<usize> {
    enum Refreshed {
        Phoenix(PruneScores),
        Chain(Vec<DenseMatrix>),
    }
    let refreshed = match (&*model, &*state) {
        (Model::Phoenix(params), ScoreState::Phoenix(prev)) => {
            Refreshed::Phoenix(dash_scores(params, prev, priors, method)?)
        }
        (Model::Mlp(_), ScoreState::Chain(prev)) => {
            let weights: Vec<DenseMatrix> = model
                .weights()
                .iter()
                .zip(model.masks())
                .map(|(w, m)| w.hadamard(m))
                .collect::<Result<_>>()?;
            let scores = match method {
                ScoreMethod::Magnitude => weights.iter().map(normalize_abs).collect(),
                ScoreMethod::Dash { lambda1, lambda2 } => {
                    let priors = priors
                        .ok_or_else(|| DashError::config("prior-guided scoring requires priors"))?;
                    dash_scores_general(&weights, prev, &priors.p, &[lambda1, lambda2])?
                }
                ScoreMethod::PriorOnly => {
                    let priors = priors
                        .ok_or_else(|| DashError::config("prior-guided scoring requires priors"))?;
                    dash_scores_general(&weights, prev, &priors.p, &[1.0, 1.0])?
                }
            };
            Refreshed::Chain(scores)
        }
        _ => return Err(DashError::contract("score state does not match model kind")),
    };
    match refreshed {
        Refreshed::Phoenix(scores) => {
            let pruned = apply_prune(model, &scores.as_slice(), fraction)?;
            *state = ScoreState::Phoenix(scores);
            Ok(pruned)
        }
        Refreshed::Chain(scores) => {
            let refs: Vec<&DenseMatrix> = scores.iter().collect();
            let pruned = apply_prune(model, &refs, fraction)?;
            *state = ScoreState::Chain(scores);
            Ok(pruned)
        }
    }
}

/// Train `model` until patience or the epoch budget is exhausted,
/// pruning per the schedule (each prune event precedes that epoch's
/// update and resets the learning rate). Returns the best-validation
/// snapshot; on divergence the history records the aborting epoch.
pub fn train(
    model: &Model,
    train_ds: &TrajectoryDataset,
    val_ds: &TrajectoryDataset,
    priors: Option<&PriorKnowledge>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_ds.is_empty() || val_ds.is_empty() {
        return Err(DashError::contract("train and validation sets must be non-empty"));
    }
    let uses_prior_scores = !matches!(config.score_method, ScoreMethod::Magnitude)
        && (!config.schedule.events.is_empty() || config.schedule.period > 0);
    if (uses_prior_scores || config.tau < 1.0) && priors.is_none() {
        return Err(DashError::config(
            "priors are required when lambda > 0 scoring or tau < 1 is configured",
        ));
    }
    let prior_adjacency = priors.map(|p| &p.p);

    let mut current = model.clone();
    let mut score_state = ScoreState::seed(&current, config.seed);
    let mut adam = Adam::new(&current.trainables().iter().map(|(p, _)| *p).collect::<Vec<_>>());
    let mut lr = config.lr0;
    let mut history = TrainHistory::default();
    let mut best: Option<(Model, f64, usize)> = None;
    let mut stagnant = 0usize;
    let mut plateau_best = f64::INFINITY;
    let mut since_best = 0usize;

    for epoch in 1..=config.max_epochs {
        let mut newly_pruned = 0;
        if let Some(fraction) = config.schedule.fraction_at(epoch) {
            newly_pruned = refresh_and_prune(
                &mut current,
                &mut score_state,
                priors,
                config.score_method,
                fraction,
            )?;
            if newly_pruned > 0 {
                adam.zero_masked(&current);
                lr = config.lr0;
                stagnant = 0;
                plateau_best = f64::INFINITY;
            }
        }

        let mut tape = Tape::new();
        let tape_model = current.tape_params(&mut tape)?;
        let loss = tape_loss(
            &mut tape,
            &tape_model,
            train_ds,
            config.n_sub,
            config.tau,
            prior_adjacency,
        )?;
        let train_loss = tape.scalar(loss);
        if !train_loss.is_finite() {
            history.diverged_at = Some(epoch);
            break;
        }
        let grads = tape.grad(loss)?;
        adam.step(&mut current, &grads, lr)?;

        let val_mse = trajectory_mse_with(&current, val_ds, config.n_sub)?;
        if !val_mse.is_finite() {
            history.diverged_at = Some(epoch);
            break;
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_mse,
            sparsity: mask_sparsity(&current),
            lr,
            newly_pruned,
        });

        if best.as_ref().is_none_or(|(_, b, _)| val_mse < *b) {
            best = Some((current.clone(), val_mse, epoch));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }

        if val_mse < plateau_best * (1.0 - config.min_rel_improvement) {
            plateau_best = val_mse;
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= config.decay_window {
                lr *= config.lr_decay;
                stagnant = 0;
            }
        }
    }

    let (model, best_val_mse, best_epoch) = match best {
        Some((m, v, e)) => (m, v, e),
        None => (current, f64::NAN, 0),
    };
    history.best_epoch = best_epoch;
    history.best_val_mse = best_val_mse;
    Ok(TrainOutcome { model, history })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mean_val_mse: f64,
    pub sparsity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub cells: Vec<CvCell>,
    pub best_lambda1: f64,
    pub best_lambda2: f64,
}

/// Train one model per (lambda1, lambda2) cell and pick the cell with the
/// lowest mean validation MSE; ties go to the larger lambda1 + lambda2
/// (prefer more prior under equal fit). `folds <= 1` uses the provided
/// train/validation split; larger values rotate a K-fold split over the
/// pooled trajectories.
pub fn cross_validate_lambda(
    template: &Model,
    grid: &[(f64, f64)],
    train_ds: &TrajectoryDataset,
    val_ds: &TrajectoryDataset,
    priors: Option<&PriorKnowledge>,
    base: &TrainConfig,
    folds: usize,
) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(DashError::contract("empty lambda grid"));
    }
    let fold_splits: Vec<(TrajectoryDataset, TrajectoryDataset)> = if folds <= 1 {
        vec![(train_ds.clone(), val_ds.clone())]
    } else {
        let mut pooled = train_ds.trajectories.clone();
        pooled.extend(val_ds.trajectories.iter().cloned());
        if pooled.len() < folds {
            return Err(DashError::contract("fewer trajectories than folds"));
        }
        (0..folds)
            .map(|f| {
                let mut tr = Vec::new();
                let mut va = Vec::new();
                for (i, t) in pooled.iter().enumerate() {
                    if i % folds == f {
                        va.push(t.clone());
                    } else {
                        tr.push(t.clone());
                    }
                }
                Ok((
                    TrajectoryDataset::new(tr, train_ds.gene_names.clone(), "train")?,
                    TrajectoryDataset::new(va, train_ds.gene_names.clone(), "validation")?,
                ))
            })
            .collect::<Result<_>>()?
    };
    let mut cells = Vec::with_capacity(grid.len());
    for &(lambda1, lambda2) in grid {
        let mut config = base.clone();
        config.score_method = ScoreMethod::Dash { lambda1, lambda2 };
        let mut total = 0.0;
        let mut sparsity = 0.0;
        for (tr, va) in &fold_splits {
            let outcome = train(template, tr, va, priors, &config)?;
            total += outcome.history.best_val_mse;
            sparsity += mask_sparsity(&outcome.model);
        }
        cells.push(CvCell {
            lambda1,
            lambda2,
            mean_val_mse: total / fold_splits.len() as f64,
            sparsity: sparsity / fold_splits.len() as f64,
        });
    }
    let (best_lambda1, best_lambda2) = {
        let best = pick_best_cell(&cells)?;
        (best.lambda1, best.lambda2)
    };
    Ok(CvReport {
        best_lambda1,
        best_lambda2,
        cells,
    })
}

/// Lowest mean validation MSE wins; ties prefer the larger lambda sum.
pub fn pick_best_cell(cells: &[CvCell]) -> Result<&CvCell> {
    cells
        .iter()
        .min_by(|a, b| {
            a.mean_val_mse
                .partial_cmp(&b.mean_val_mse)
                .expect("finite MSE")
                .then(
                    (b.lambda1 + b.lambda2)
                        .partial_cmp(&(a.lambda1 + a.lambda2))
                        .expect("finite lambda"),
                )
        })
        .ok_or_else(|| DashError::contract("empty lambda grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PhoenixParams;
    use crate::simulator::{build_priors, generate_network, simulate_dataset, split_dataset};

    fn toy_setup(
        k: usize,
        seed: u64,
    ) -> (Model, TrajectoryDataset, TrajectoryDataset, PriorKnowledge) {
        let net = generate_network(k, 2.0, 0.5, seed).unwrap();
        let ds = simulate_dataset(&net, 20, &[0.0, 1.0, 2.0], 0.0, seed + 1).unwrap();
        let (train_ds, val_ds, _) = split_dataset(&ds, (0.7, 0.2, 0.1), seed + 2).unwrap();
        let priors = build_priors(&net, 0.0, seed + 3).unwrap();
        let mut rng = stream_rng(seed, streams::INIT);
        let model = Model::Phoenix(PhoenixParams::init(k, 3, &mut rng));
        (model, train_ds, val_ds, priors)
    }

    fn quick_config(seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: 8,
            n_sub: 2,
            schedule: PruneSchedule::none(),
            score_method: ScoreMethod::Magnitude,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let (model, train_ds, val_ds, _) = toy_setup(4, 1);
        let mut config = quick_config(1);
        config.max_epochs = 0;
        let out = train(&model, &train_ds, &val_ds, None, &config).unwrap();
        assert_eq!(out.model, model);
        assert!(out.history.epochs.is_empty());
    }

    #[test]
    fn dense_training_reduces_validation_mse() {
        let (model, train_ds, val_ds, _) = toy_setup(4, 2);
        let mut config = quick_config(2);
        config.max_epochs = 30;
        let before = trajectory_mse_with(&model, &val_ds, 2).unwrap();
        let out = train(&model, &train_ds, &val_ds, None, &config).unwrap();
        assert!(out.history.best_val_mse < before);
        assert!(out.history.diverged_at.is_none());
    }

    #[test]
    fn schedule_event_prunes_to_fraction() {
        let (model, train_ds, val_ds, priors) = toy_setup(4, 3);
        let mut config = quick_config(3);
        config.schedule = PruneSchedule {
            events: vec![(3, 0.7)],
            period: 0,
            period_fraction: 0.0,
        };
        config.score_method = ScoreMethod::Dash {
            lambda1: 0.5,
            lambda2: 0.5,
        };
        let out = train(&model, &train_ds, &val_ds, Some(&priors), &config).unwrap();
        let post = &out.history.epochs[2];
        assert_eq!(post.epoch, 3);
        assert!(post.sparsity >= 0.69, "sparsity {}", post.sparsity);
        assert!((post.lr - config.lr0).abs() < 1e-15);
    }

    #[test]
    fn masked_parameters_never_move() {
        let (model, train_ds, val_ds, priors) = toy_setup(4, 4);
        let mut config = quick_config(4);
        config.max_epochs = 10;
        config.schedule = PruneSchedule {
            events: vec![(1, 0.5)],
            period: 0,
            period_fraction: 0.0,
        };
        config.score_method = ScoreMethod::Dash {
            lambda1: 0.3,
            lambda2: 0.3,
        };
        let out = train(&model, &train_ds, &val_ds, Some(&priors), &config).unwrap();
        // The only prune precedes the first update, so masked entries can
        // never have been touched and must still hold their initial
        // values.
        let final_weights = out.model.weights();
        let final_masks = out.model.masks();
        let init_weights = model.weights();
        for ((w, m), w0) in final_weights.iter().zip(&final_masks).zip(&init_weights) {
            for pos in 0..w.len() {
                if m.data()[pos] == 0.0 {
                    assert_eq!(w.data()[pos], w0.data()[pos]);
                }
            }
        }
    }

    #[test]
    fn sparsity_is_monotone_across_epochs() {
        let (model, train_ds, val_ds, priors) = toy_setup(4, 5);
        let mut config = quick_config(5);
        config.max_epochs = 12;
        config.schedule = PruneSchedule {
            events: vec![(2, 0.5)],
            period: 4,
            period_fraction: 0.1,
        };
        config.score_method = ScoreMethod::PriorOnly;
        let out = train(&model, &train_ds, &val_ds, Some(&priors), &config).unwrap();
        let mut last = 0.0;
        for e in &out.history.epochs {
            assert!(e.sparsity >= last);
            last = e.sparsity;
        }
    }

    #[test]
    fn lr_decays_between_events_and_never_rises() {
        let (model, train_ds, val_ds, _) = toy_setup(3, 6);
        let mut config = quick_config(6);
        config.max_epochs = 20;
        config.min_rel_improvement = 1.0; // every epoch counts as stagnant
        let out = train(&model, &train_ds, &val_ds, None, &config).unwrap();
        let mut last = f64::INFINITY;
        for e in &out.history.epochs {
            assert!(e.lr <= last);
            last = e.lr;
        }
        assert!(last < config.lr0);
    }

    #[test]
    fn identical_seeds_give_identical_histories() {
        let (model, train_ds, val_ds, priors) = toy_setup(4, 7);
        let mut config = quick_config(7);
        config.schedule = PruneSchedule::standard();
        config.score_method = ScoreMethod::Dash {
            lambda1: 0.6,
            lambda2: 0.6,
        };
        let a = train(&model, &train_ds, &val_ds, Some(&priors), &config).unwrap();
        let b = train(&model, &train_ds, &val_ds, Some(&priors), &config).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn missing_priors_with_prior_scoring_rejected() {
        let (model, train_ds, val_ds, _) = toy_setup(3, 8);
        let mut config = quick_config(8);
        config.schedule = PruneSchedule::standard();
        config.score_method = ScoreMethod::PriorOnly;
        assert!(train(&model, &train_ds, &val_ds, None, &config).is_err());
    }

    #[test]
    fn pinn_term_requires_priors_and_runs_with_them() {
        let (model, train_ds, val_ds, priors) = toy_setup(3, 9);
        let mut config = quick_config(9);
        config.tau = 0.5;
        assert!(train(&model, &train_ds, &val_ds, None, &config).is_err());
        let out = train(&model, &train_ds, &val_ds, Some(&priors), &config).unwrap();
        assert!(out.history.diverged_at.is_none());
    }

    #[test]
    fn single_cell_grid_returns_that_cell() {
        let (model, train_ds, val_ds, priors) = toy_setup(3, 10);
        let mut config = quick_config(10);
        config.max_epochs = 3;
        config.schedule = PruneSchedule {
            events: vec![(2, 0.5)],
            period: 0,
            period_fraction: 0.0,
        };
        let report = cross_validate_lambda(
            &model,
            &[(0.25, 0.75)],
            &train_ds,
            &val_ds,
            Some(&priors),
            &config,
            1,
        )
        .unwrap();
        assert_eq!(report.best_lambda1, 0.25);
        assert_eq!(report.best_lambda2, 0.75);
        assert_eq!(report.cells.len(), 1);
    }

    #[test]
    fn cv_tie_break_prefers_more_prior() {
        // With zero epochs every cell scores NaN-free equal MSE via the
        // initial model: force identical metrics by an empty schedule and
        // a single epoch, then check the argmin logic on the stored cells.
        let cells = vec![
            CvCell {
                lambda1: 0.2,
                lambda2: 0.2,
                mean_val_mse: 1.0,
                sparsity: 0.0,
            },
            CvCell {
                lambda1: 0.9,
                lambda2: 0.9,
                mean_val_mse: 1.0,
                sparsity: 0.0,
            },
            CvCell {
                lambda1: 0.5,
                lambda2: 0.5,
                mean_val_mse: 2.0,
                sparsity: 0.0,
            },
        ];
        let best = cells
            .iter()
            .min_by(|a, b| {
                a.mean_val_mse
                    .partial_cmp(&b.mean_val_mse)
                    .unwrap()
                    .then((b.lambda1 + b.lambda2).partial_cmp(&(a.lambda1 + a.lambda2)).unwrap())
            })
            .unwrap();
        assert_eq!(best.lambda1, 0.9);
    }

    #[test]
    fn kfold_rotates_all_trajectories() {
        let (model, train_ds, val_ds, priors) = toy_setup(3, 11);
        let mut config = quick_config(11);
        config.max_epochs = 2;
        let report = cross_validate_lambda(
            &model,
            &[(0.5, 0.5)],
            &train_ds,
            &val_ds,
            Some(&priors),
            &config,
            4,
        )
        .unwrap();
        assert_eq!(report.cells.len(), 1);
        assert!(report.cells[0].mean_val_mse.is_finite());
    }

    #[test]
    fn mlp_trains_and_prunes() {
        let net = generate_network(4, 2.0, 0.5, 12).unwrap();
        let ds = simulate_dataset(&net, 12, &[0.0, 1.0], 0.0, 13).unwrap();
        let (train_ds, val_ds, _) = split_dataset(&ds, (0.7, 0.3, 0.0), 14).unwrap();
        let priors = build_priors(&net, 0.0, 15).unwrap();
        let mut rng = stream_rng(12, streams::INIT);
        let model = Model::Mlp(crate::model::MlpParams::init(4, 3, &mut rng));
        let mut config = quick_config(12);
        config.schedule = PruneSchedule {
            events: vec![(2, 0.5)],
            period: 0,
            period_fraction: 0.0,
        };
        config.score_method = ScoreMethod::Dash {
            lambda1: 0.5,
            lambda2: 0.5,
        };
        let out = train(&model, &train_ds, &val_ds, Some(&priors), &config).unwrap();
        let last = out.history.epochs.last().unwrap();
        assert!(last.sparsity >= 0.4, "sparsity {}", last.sparsity);
    }
}
