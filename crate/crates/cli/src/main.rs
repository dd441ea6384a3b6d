//! `dashgrn`: reproducible experiment harness around the simulator,
//! training loop, pruning methods, and evaluation suite.

mod manifest;
mod svg;

use clap::{Parser, Subcommand, ValueEnum};
use dash_core::evaluation::{
    balanced_accuracy, extract_grn_model, gene_influence, out_degree_stats, pathway_scores,
    sparsity, GeneSetCollection,
};
use dash_core::io;
use dash_core::model::{default_hidden_width, Checkpoint, MlpParams, Model, PhoenixParams};
use dash_core::odeint::{trajectory_mse_with, TrajectoryDataset, DEFAULT_N_SUB};
use dash_core::pruning::{posthoc_magnitude_prune, PruneSchedule, ScoreMethod};
use dash_core::simulator::{
    build_priors, corrupt_network, generate_network, simulate_dataset, split_dataset,
    PriorKnowledge,
};
use dash_core::training::{
    cross_validate_lambda, pick_best_cell, stream_rng, streams, train, CvCell, CvReport,
    TrainConfig,
};
use dash_core::DashError;
use manifest::ManifestBuilder;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Parser)]
#[command(name = "dashgrn", version, about = "Prior-guided pruning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file; CLI flags override individual fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for independent jobs (fallback: DASH_GRN_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark: networks, trajectories, priors.
    Simulate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model with the selected sparsification method.
    Train {
        /// Directory produced by `simulate` (train/validation CSVs, prior TSVs).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Dash)]
        method: Method,
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long)]
        lambda2: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score checkpoints against a reference network.
    Evaluate {
        #[arg(long, required = true)]
        checkpoint: Vec<PathBuf>,
        /// Reference edge-list TSV.
        #[arg(long)]
        reference: PathBuf,
        /// Optional GMT gene sets for pathway permutation scores.
        #[arg(long)]
        genesets: Option<PathBuf>,
        /// Optional data directory for test-set MSE.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate the lambda grid.
    Cv {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    /// Prior-blended iterative pruning.
    Dash,
    /// Prior-only iterative pruning (lambda = 1 endpoint).
    Bioprune,
    /// Iterative magnitude pruning (lambda = 0 endpoint).
    Imp,
    /// Dense training followed by post-hoc magnitude pruning + fine-tune.
    MpPosthoc,
    /// Dense training with the prior-model penalty (tau < 1), no pruning.
    Pinn,
    /// Plain dense training.
    None,
}

impl Method {
    fn label(self) -> &'static str {
        match self {
            Method::Dash => "dash",
            Method::Bioprune => "bioprune",
            Method::Imp => "imp",
            Method::MpPosthoc => "mp-posthoc",
            Method::Pinn => "pinn",
            Method::None => "none",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct SimConfig {
    k: usize,
    mean_out_degree: f64,
    sign_fraction: f64,
    n_traj: usize,
    times: Vec<f64>,
    noise_sigma: f64,
    corruption_pct: f64,
    split: (f64, f64, f64),
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            k: 20,
            mean_out_degree: 3.0,
            sign_fraction: 0.5,
            n_traj: 100,
            times: vec![0.0, 2.0, 3.0, 7.0, 9.0],
            noise_sigma: 0.025,
            corruption_pct: 0.0,
            split: (0.88, 0.06, 0.06),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct TrainSection {
    #[serde(flatten)]
    base: TrainConfig,
    /// "phoenix" (two-branch Hill model) or "mlp" ablation.
    model: String,
    hidden: Option<usize>,
    finetune_epochs: usize,
    mp_grid: Vec<f64>,
    mp_repeats: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            base: TrainConfig::default(),
            model: "phoenix".into(),
            hidden: None,
            finetune_epochs: 50,
            mp_grid: vec![0.50, 0.75, 0.83, 0.87, 0.90, 0.92, 0.95, 0.97, 0.99],
            mp_repeats: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct CvSection {
    lambda1: Vec<f64>,
    lambda2: Vec<f64>,
    folds: usize,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            lambda1: vec![0.25, 0.5, 0.75],
            lambda2: vec![0.25, 0.5, 0.75],
            folds: 1,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct AppConfig {
    simulate: SimConfig,
    train: TrainSection,
    cv: CvSection,
    /// Influence-score settings used by `evaluate`.
    influence_inits: Option<usize>,
    influence_delta: Option<f64>,
    permutations: Option<usize>,
}

type Result<T> = std::result::Result<T, DashError>;

fn load_config(path: Option<&Path>) -> Result<AppConfig> {
    match path {
        Some(p) => io::read_json(p),
        None => Ok(AppConfig::default()),
    }
}

fn thread_count(cli: Option<usize>) -> usize {
    cli.or_else(|| {
        std::env::var("DASH_GRN_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                DashError::NonFinite { .. } | DashError::Divergence { .. } => 1,
                _ => 2,
            };
            std::process::exit(code);
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref())?;
    let threads = thread_count(cli.threads);
    match cli.command {
        Command::Simulate { out } => cmd_simulate(&config, cli.seed, cli.config.as_deref(), &out),
        Command::Train {
            data,
            method,
            lambda1,
            lambda2,
            tau,
            out,
        } => cmd_train(
            &config,
            cli.seed,
            cli.config.as_deref(),
            &data,
            method,
            lambda1,
            lambda2,
            tau,
            &out,
        ),
        Command::Evaluate {
            checkpoint,
            reference,
            genesets,
            data,
            out,
        } => cmd_evaluate(
            &config,
            cli.seed,
            cli.config.as_deref(),
            &checkpoint,
            &reference,
            genesets.as_deref(),
            data.as_deref(),
            &out,
        ),
        Command::Cv { data, out } => cmd_cv(
            &config,
            cli.seed,
            cli.config.as_deref(),
            &data,
            threads,
            &out,
        ),
    }
}

fn cmd_simulate(
    config: &AppConfig,
    seed: u64,
    config_path: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let sim = &config.simulate;
    let mut manifest = ManifestBuilder::new("simulate", seed, serde_json::to_value(sim).unwrap());
    if let Some(p) = config_path {
        manifest.input(p)?;
    }
    std::fs::create_dir_all(out).map_err(|e| DashError::io(out.display().to_string(), e))?;
    let net = generate_network(sim.k, sim.mean_out_degree, sim.sign_fraction, seed)?;
    // Each purpose gets its own derived seed so components stay
    // independently reproducible.
    let ds = simulate_dataset(&net, sim.n_traj, &sim.times, sim.noise_sigma, seed ^ 0x6e6f6973)?;
    let (train_ds, val_ds, test_ds) = split_dataset(&ds, sim.split, seed ^ 0x73706c69)?;
    let corrupted = corrupt_network(&net, sim.corruption_pct, seed ^ 0x636f7272)?;
    let priors = build_priors(&corrupted, sim.corruption_pct, seed ^ 0x636f7272)?;

    io::write_dataset(&out.join("train.csv"), &train_ds)?;
    io::write_dataset(&out.join("validation.csv"), &val_ds)?;
    io::write_dataset(&out.join("test.csv"), &test_ds)?;
    io::write_edge_matrix(&out.join("truth.tsv"), &net.adjacency, &net.gene_names)?;
    io::write_edge_matrix(&out.join("prior_p.tsv"), &priors.p, &net.gene_names)?;
    io::write_edge_matrix(&out.join("prior_c.tsv"), &priors.c, &net.gene_names)?;
    for name in [
        "train.csv",
        "validation.csv",
        "test.csv",
        "truth.tsv",
        "prior_p.tsv",
        "prior_c.tsv",
    ] {
        manifest.output(&out.join(name))?;
    }
    manifest.write(&out.join("manifest.json"))
}

fn read_priors(data: &Path, gene_names: &[String]) -> Result<Option<PriorKnowledge>> {
    let p_path = data.join("prior_p.tsv");
    let c_path = data.join("prior_c.tsv");
    if !p_path.exists() || !c_path.exists() {
        return Ok(None);
    }
    Ok(Some(PriorKnowledge {
        p: io::read_edge_matrix(&p_path, gene_names)?,
        c: io::read_edge_matrix(&c_path, gene_names)?,
        corruption_pct: 0.0,
    }))
}

fn init_model(section: &TrainSection, k: usize, seed: u64) -> Result<Model> {
    let hidden = section.hidden.unwrap_or_else(|| default_hidden_width(k));
    let mut rng = stream_rng(seed, streams::INIT);
    match section.model.as_str() {
        "phoenix" => Ok(Model::Phoenix(PhoenixParams::init(k, hidden, &mut rng))),
        "mlp" => Ok(Model::Mlp(MlpParams::init(k, hidden, &mut rng))),
        other => Err(DashError::config(format!("unknown model kind {other}"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    config: &AppConfig,
    seed: u64,
    config_path: Option<&Path>,
    data: &Path,
    method: Method,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    tau: Option<f64>,
    out: &Path,
) -> Result<()> {
    let train_ds = io::read_dataset(&data.join("train.csv"), "train")?;
    let val_ds = io::read_dataset(&data.join("validation.csv"), "validation")?;
    let priors = read_priors(data, &train_ds.gene_names)?;

    let mut cfg = config.train.base.clone();
    cfg.seed = seed;
    let l1 = lambda1.unwrap_or(match cfg.score_method {
        ScoreMethod::Dash { lambda1, .. } => lambda1,
        _ => 0.5,
    });
    let l2 = lambda2.unwrap_or(match cfg.score_method {
        ScoreMethod::Dash { lambda2, .. } => lambda2,
        _ => 0.5,
    });
    match method {
        Method::Dash => {
            cfg.score_method = ScoreMethod::Dash {
                lambda1: l1,
                lambda2: l2,
            };
            cfg.tau = 1.0;
        }
        Method::Bioprune => {
            cfg.score_method = ScoreMethod::PriorOnly;
            cfg.tau = 1.0;
        }
        Method::Imp => {
            cfg.score_method = ScoreMethod::Magnitude;
            cfg.tau = 1.0;
        }
        Method::MpPosthoc | Method::None => {
            cfg.score_method = ScoreMethod::Magnitude;
            cfg.schedule = PruneSchedule::none();
            cfg.tau = 1.0;
        }
        Method::Pinn => {
            cfg.score_method = ScoreMethod::Magnitude;
            cfg.schedule = PruneSchedule::none();
            cfg.tau = tau.unwrap_or(if cfg.tau < 1.0 { cfg.tau } else { 0.5 });
        }
    }
    if let Some(t) = tau {
        if method == Method::Pinn {
            cfg.tau = t;
        }
    }

    let mut manifest = ManifestBuilder::new(
        &format!("train-{}", method.label()),
        seed,
        serde_json::json!({
            "method": method.label(),
            "train": serde_json::to_value(&cfg).unwrap(),
        }),
    );
    if let Some(p) = config_path {
        manifest.input(p)?;
    }
    manifest.input(&data.join("train.csv"))?;
    manifest.input(&data.join("validation.csv"))?;

    let model = init_model(&config.train, train_ds.genes(), seed)?;
    let outcome = train(&model, &train_ds, &val_ds, priors.as_ref(), &cfg)?;
    let (final_model, history) = if method == Method::MpPosthoc {
        let dense = outcome.model;
        let mut ft_cfg = cfg.clone();
        ft_cfg.max_epochs = config.train.finetune_epochs;
        let mut rep_offset = 0u64;
        let (_, tuned) = posthoc_magnitude_prune(
            &dense,
            &config.train.mp_grid,
            config.train.mp_repeats,
            |masked, rep| {
                let mut c = ft_cfg.clone();
                rep_offset += 1;
                c.seed = seed
                    .wrapping_add(rep as u64)
                    .wrapping_add(rep_offset << 32);
                let o = train(masked, &train_ds, &val_ds, priors.as_ref(), &c)?;
                let mse = o.history.best_val_mse;
                Ok((o.model, mse))
            },
        )?;
        (tuned, outcome.history)
    } else {
        (outcome.model, outcome.history)
    };

    let checkpoint = Checkpoint {
        gene_names: train_ds.gene_names.clone(),
        hidden: final_model.hidden(),
        seed,
        model: final_model,
    };
    let ckpt_path = out.join("checkpoint.json");
    let hist_path = out.join("history.csv");
    std::fs::create_dir_all(out).map_err(|e| DashError::io(out.display().to_string(), e))?;
    std::fs::write(&ckpt_path, checkpoint.to_json())
        .map_err(|e| DashError::io(ckpt_path.display().to_string(), e))?;
    io::write_history(&hist_path, &history)?;
    manifest.output(&ckpt_path)?;
    manifest.output(&hist_path)?;
    manifest.write(&out.join("manifest.json"))?;
    if history.diverged_at.is_some() {
        return Err(DashError::Divergence {
            step: history.diverged_at.unwrap(),
            detail: "training loss became non-finite".into(),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalEntry {
    label: String,
    checkpoint: String,
    model: String,
    sparsity_pct: f64,
    balanced_accuracy_pct: f64,
    test_mse: Option<f64>,
    mean_out_degree: f64,
    max_out_degree: usize,
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    config: &AppConfig,
    seed: u64,
    config_path: Option<&Path>,
    checkpoints: &[PathBuf],
    reference: &Path,
    genesets: Option<&Path>,
    data: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let mut manifest = ManifestBuilder::new("evaluate", seed, serde_json::Value::Null);
    if let Some(p) = config_path {
        manifest.input(p)?;
    }
    manifest.input(reference)?;
    let sets = match genesets {
        Some(p) => {
            manifest.input(p)?;
            Some(GeneSetCollection::from_gmt_file(p)?)
        }
        None => None,
    };
    let test_ds: Option<TrajectoryDataset> = match data {
        Some(d) => {
            let p = d.join("test.csv");
            manifest.input(&p)?;
            Some(io::read_dataset(&p, "test")?)
        }
        None => None,
    };

    let mut entries = Vec::new();
    let mut points = Vec::new();
    for path in checkpoints {
        manifest.input(path)?;
        let text = std::fs::read_to_string(path)
            .map_err(|e| DashError::io(path.display().to_string(), e))?;
        let ckpt = Checkpoint::from_json(&text)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "checkpoint".into());
        let reference_net = io::read_edge_matrix(reference, &ckpt.gene_names)?;
        let grn = extract_grn_model(&ckpt.model, &ckpt.gene_names)?;
        let ba = balanced_accuracy(&grn.d, &reference_net, 0.0)?;
        let sp = sparsity(&ckpt.model);
        let test_mse = match &test_ds {
            Some(ds) => Some(trajectory_mse_with(&ckpt.model, ds, DEFAULT_N_SUB)?),
            None => None,
        };
        let (mean_deg, max_deg) = out_degree_stats(&grn.d);

        let grn_path = out.join(format!("grn_{label}.tsv"));
        std::fs::create_dir_all(out).map_err(|e| DashError::io(out.display().to_string(), e))?;
        std::fs::write(&grn_path, io::grn_to_tsv(&grn))
            .map_err(|e| DashError::io(grn_path.display().to_string(), e))?;
        manifest.output(&grn_path)?;

        if let Some(sets) = &sets {
            let n_init = config.influence_inits.unwrap_or(200);
            let delta = config.influence_delta.unwrap_or(0.25);
            let q = config.permutations.unwrap_or(1000);
            let times = test_ds
                .as_ref()
                .map(|d| d.times().to_vec())
                .unwrap_or_else(|| vec![0.0, 2.0, 3.0, 7.0, 9.0]);
            let influences =
                gene_influence(&ckpt.model, n_init, &times, delta, DEFAULT_N_SUB, seed)?;
            let scores = pathway_scores(&influences, &ckpt.gene_names, sets, q, seed)?;
            let mut csv = String::from("pathway,n_genes,unresolved,score,p_value,z\n");
            for s in &scores {
                use std::fmt::Write as _;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    s.name, s.n_genes, s.unresolved, s.ps, s.p_value, s.z
                );
            }
            let pw_path = out.join(format!("pathways_{label}.csv"));
            std::fs::write(&pw_path, csv)
                .map_err(|e| DashError::io(pw_path.display().to_string(), e))?;
            manifest.output(&pw_path)?;
        }

        points.push(svg::Point {
            x: sp,
            y: ba,
            label: label.clone(),
        });
        entries.push(EvalEntry {
            label,
            checkpoint: path.display().to_string(),
            model: ckpt.model.kind_name().to_string(),
            sparsity_pct: sp,
            balanced_accuracy_pct: ba,
            test_mse,
            mean_out_degree: mean_deg,
            max_out_degree: max_deg,
        });
    }

    let metrics_path = out.join("metrics.json");
    io::write_json(&metrics_path, &entries)?;
    manifest.output(&metrics_path)?;
    let svg_path = out.join("scatter.svg");
    std::fs::write(&svg_path, svg::scatter(&points))
        .map_err(|e| DashError::io(svg_path.display().to_string(), e))?;
    manifest.output(&svg_path)?;
    manifest.write(&out.join("manifest.json"))
}

fn cmd_cv(
    config: &AppConfig,
    seed: u64,
    config_path: Option<&Path>,
    data: &Path,
    threads: usize,
    out: &Path,
) -> Result<()> {
    let train_ds = io::read_dataset(&data.join("train.csv"), "train")?;
    let val_ds = io::read_dataset(&data.join("validation.csv"), "validation")?;
    let priors = read_priors(data, &train_ds.gene_names)?;
    let mut cfg = config.train.base.clone();
    cfg.seed = seed;
    let model = init_model(&config.train, train_ds.genes(), seed)?;
    let grid: Vec<(f64, f64)> = config
        .cv
        .lambda1
        .iter()
        .flat_map(|&a| config.cv.lambda2.iter().map(move |&b| (a, b)))
        .collect();

    let mut manifest = ManifestBuilder::new(
        "cv",
        seed,
        serde_json::json!({
            "grid": grid,
            "folds": config.cv.folds,
            "train": serde_json::to_value(&cfg).unwrap(),
        }),
    );
    if let Some(p) = config_path {
        manifest.input(p)?;
    }
    manifest.input(&data.join("train.csv"))?;
    manifest.input(&data.join("validation.csv"))?;

    let report = if threads <= 1 {
        cross_validate_lambda(
            &model,
            &grid,
            &train_ds,
            &val_ds,
            priors.as_ref(),
            &cfg,
            config.cv.folds,
        )?
    } else {
        // Grid cells are independent jobs; run them on a small worker
        // pool and merge in grid order so the report is deterministic.
        let results: Vec<Mutex<Option<Result<CvCell>>>> =
            grid.iter().map(|_| Mutex::new(None)).collect();
        let next = Mutex::new(0usize);
        std::thread::scope(|scope| {
            for _ in 0..threads.min(grid.len()) {
                scope.spawn(|| loop {
                    let idx = {
                        let mut n = next.lock().unwrap();
                        let idx = *n;
                        *n += 1;
                        idx
                    };
                    if idx >= grid.len() {
                        break;
                    }
                    let (lambda1, lambda2) = grid[idx];
                    let cell = cross_validate_lambda(
                        &model,
                        &[(lambda1, lambda2)],
                        &train_ds,
                        &val_ds,
                        priors.as_ref(),
                        &cfg,
                        config.cv.folds,
                    )
                    .map(|r| r.cells.into_iter().next().expect("one cell"));
                    *results[idx].lock().unwrap() = Some(cell);
                });
            }
        });
        let cells = results
            .into_iter()
            .map(|m| m.into_inner().unwrap().expect("cell computed"))
            .collect::<Result<Vec<_>>>()?;
        let best = pick_best_cell(&cells)?;
        let (b1, b2) = (best.lambda1, best.lambda2);
        CvReport {
            cells,
            best_lambda1: b1,
            best_lambda2: b2,
        }
    };

    std::fs::create_dir_all(out).map_err(|e| DashError::io(out.display().to_string(), e))?;
    let path = out.join("cv.json");
    io::write_json(&path, &report)?;
    manifest.output(&path)?;
    manifest.write(&out.join("manifest.json"))
}
