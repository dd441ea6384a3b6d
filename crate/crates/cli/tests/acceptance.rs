//! Release gate: ten go/no-go checks covering gradients, the integrator,
//! linear algebra, pruning equivalences, desk-scale network recovery,
//! prior-corruption sensitivity, extraction invariants, scoring sanity,
//! permutation testing, and reproducibility. Each check prints one
//! PASS/FAIL line; the test fails if any check fails.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to watch the
//! lines appear as the checks complete.

use dash_core::evaluation::{
    balanced_accuracy, extract_grn, extract_grn_model, pathway_scores, sparsity,
    GeneSetCollection,
};
use dash_core::linalg::{pinv_left, pinv_right, DenseMatrix};
use dash_core::model::{
    default_hidden_width, Dynamics, Model, PhoenixParams,
};
use dash_core::odeint::{integrate, tape_loss, Trajectory, TrajectoryDataset, DEFAULT_N_SUB};
use dash_core::pruning::{apply_prune, dash_scores, PruneSchedule, PruneScores, ScoreMethod};
use dash_core::simulator::{
    build_priors, corrupt_network, default_gene_names, generate_network, simulate_dataset,
    split_dataset,
};
use dash_core::training::{stream_rng, train, TrainConfig};
use dash_core::autograd::Tape;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

type Check = std::result::Result<String, String>;

fn fail(msg: impl Into<String>) -> Check {
    Err(msg.into())
}

fn random_dataset(k: usize, n_traj: usize, times: &[f64], rng: &mut ChaCha8Rng) -> TrajectoryDataset {
    let trajectories = (0..n_traj)
        .map(|_| {
            let states = times
                .iter()
                .map(|_| (0..k).map(|_| 0.2 + 0.6 * rng.random::<f64>()).collect())
                .collect();
            Trajectory::new(times.to_vec(), states).unwrap()
        })
        .collect();
    TrajectoryDataset::new(trajectories, default_gene_names(k), "train").unwrap()
}

/// Criterion 1: reverse-mode gradients through the unrolled integrator
/// match central finite differences within 1e-4 relative error.
fn c1_gradient_correctness() -> Check {
    let started = Instant::now();
    let times = [0.0, 0.5, 1.0];
    let n_sub = 2;
    let mut worst = 0.0f64;
    for (round, (k, m)) in [(4usize, 2usize), (7, 3), (10, 4)].into_iter().enumerate() {
        let mut rng = stream_rng(90 + round as u64, 0);
        let model = Model::Phoenix(PhoenixParams::init(k, m, &mut rng));
        let ds = random_dataset(k, 2, &times, &mut rng);

        let loss_of = |m: &Model| -> f64 {
            let mut tape = Tape::new();
            let tm = m.tape_params(&mut tape).unwrap();
            let loss = tape_loss(&mut tape, &tm, &ds, n_sub, 1.0, None).unwrap();
            tape.scalar(loss)
        };

        let mut tape = Tape::new();
        let tm = model.tape_params(&mut tape).unwrap();
        let loss = tape_loss(&mut tape, &tm, &ds, n_sub, 1.0, None).unwrap();
        let grads = tape.grad(loss).unwrap();

        let h = 1e-5;
        let n_mats = model.trainables().len();
        for mat_idx in 0..n_mats {
            let len = grads[mat_idx].len();
            let stride = (len / 4).max(1);
            for e in (0..len).step_by(stride) {
                let mut plus = model.clone();
                plus.trainables_mut()[mat_idx].data_mut()[e] += h;
                let mut minus = model.clone();
                minus.trainables_mut()[mat_idx].data_mut()[e] -= h;
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                let ad = grads[mat_idx].data()[e];
                let rel = (ad - fd).abs() / fd.abs().max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    if worst >= 1e-4 {
        return fail(format!("max relative gradient error {worst:.2e} >= 1e-4"));
    }
    if secs >= 30.0 {
        return fail(format!("gradient check took {secs:.1} s >= 30 s"));
    }
    Ok(format!("max relative error {worst:.2e}, {secs:.1} s"))
}

struct Decay;

impl Dynamics for Decay {
    fn velocity(&self, states: &DenseMatrix) -> dash_core::Result<DenseMatrix> {
        Ok(states.scale(-1.0))
    }
}

/// Criterion 2: fourth-order convergence of the fixed-step integrator on
/// dg/dt = -g, and absolute accuracy at the default substep count.
fn c2_integrator_order() -> Check {
    let g0 = DenseMatrix::new(1, 1, vec![1.0]).unwrap();
    let exact = (-1.0f64).exp();
    let err = |n_sub: usize| -> f64 {
        let out = integrate(&Decay, &g0, &[0.0, 1.0], n_sub).unwrap();
        (out[1].get(0, 0) - exact).abs()
    };
    let ratio = err(4) / err(8);
    if !(12.0..=20.0).contains(&ratio) {
        return fail(format!("step-halving error ratio {ratio:.2} outside [12, 20]"));
    }
    let e = err(DEFAULT_N_SUB);
    if e >= 1e-6 {
        return fail(format!("absolute error {e:.2e} >= 1e-6 at default substeps"));
    }
    Ok(format!("error ratio {ratio:.2}, default-substep error {e:.2e}"))
}

/// Criterion 3: all four Moore-Penrose identities on 100 random matrices.
fn c3_pseudoinverse_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let rows = rng.random_range(1..=200);
        let cols = rng.random_range(1..=200);
        let a = DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
        let pinv = if trial % 2 == 0 {
            pinv_left(&a)
        } else {
            pinv_right(&a)
        };
        let apa = a.matmul(&pinv).unwrap().matmul(&a).unwrap();
        let pap = pinv.matmul(&a).unwrap().matmul(&pinv).unwrap();
        let ap = a.matmul(&pinv).unwrap();
        let pa = pinv.matmul(&a).unwrap();
        let residuals = [
            apa.sub(&a).unwrap().max_abs(),
            pap.sub(&pinv).unwrap().max_abs(),
            ap.sub(&ap.transpose()).unwrap().max_abs(),
            pa.sub(&pa.transpose()).unwrap().max_abs(),
        ];
        for r in residuals {
            worst = worst.max(r);
        }
    }
    if worst >= 1e-8 {
        return fail(format!("worst Moore-Penrose residual {worst:.2e} >= 1e-8"));
    }
    Ok(format!("worst residual over 100 matrices {worst:.2e}"))
}

/// Criterion 4: the blended score at lambda = 0 reproduces magnitude-only
/// masks exactly, and at lambda = 1 the prior-only masks, with shared
/// seeds -- both directly on score refreshes and through full training.
fn c4_endpoint_equivalences() -> Check {
    let (k, m) = (10, 4);
    let mut rng = stream_rng(21, 0);
    let params = PhoenixParams::init(k, m, &mut rng);
    let net = generate_network(k, 3.0, 0.5, 22).unwrap();
    let priors = build_priors(&net, 0.0, 23).unwrap();

    for (blend, pure, name) in [
        (
            ScoreMethod::Dash { lambda1: 0.0, lambda2: 0.0 },
            ScoreMethod::Magnitude,
            "lambda=0 vs magnitude",
        ),
        (
            ScoreMethod::Dash { lambda1: 1.0, lambda2: 1.0 },
            ScoreMethod::PriorOnly,
            "lambda=1 vs prior-only",
        ),
    ] {
        let mut seed_rng = stream_rng(24, 0);
        let prev = PruneScores::seed(m, k, k, &mut seed_rng);
        let mut model_a = Model::Phoenix(params.clone());
        let mut model_b = model_a.clone();
        let mut prev_a = prev.clone();
        let mut prev_b = prev;
        for fraction in [0.7, 0.1] {
            let scores_a = dash_scores(&params, &prev_a, Some(&priors), blend).unwrap();
            let scores_b = dash_scores(&params, &prev_b, Some(&priors), pure).unwrap();
            apply_prune(&mut model_a, &scores_a.as_slice(), fraction).unwrap();
            apply_prune(&mut model_b, &scores_b.as_slice(), fraction).unwrap();
            prev_a = scores_a;
            prev_b = scores_b;
        }
        for (ma, mb) in model_a.masks().iter().zip(model_b.masks()) {
            if ma.data() != mb.data() {
                return fail(format!("masks diverge after refresh ({name})"));
            }
        }
    }

    // End-to-end: identical configs except the score method must produce
    // identical runs at the endpoints.
    let mut data_rng = stream_rng(25, 0);
    let train_ds = random_dataset(k, 12, &[0.0, 1.0, 2.0], &mut data_rng);
    let val_ds = random_dataset(k, 4, &[0.0, 1.0, 2.0], &mut data_rng);
    let model = Model::Phoenix(params);
    let mut cfg = TrainConfig {
        max_epochs: 15,
        n_sub: 2,
        seed: 26,
        ..TrainConfig::default()
    };
    for (blend, pure, name) in [
        (
            ScoreMethod::Dash { lambda1: 0.0, lambda2: 0.0 },
            ScoreMethod::Magnitude,
            "lambda=0 vs magnitude",
        ),
        (
            ScoreMethod::Dash { lambda1: 1.0, lambda2: 1.0 },
            ScoreMethod::PriorOnly,
            "lambda=1 vs prior-only",
        ),
    ] {
        cfg.score_method = blend;
        let out_a = train(&model, &train_ds, &val_ds, Some(&priors), &cfg).unwrap();
        cfg.score_method = pure;
        let out_b = train(&model, &train_ds, &val_ds, Some(&priors), &cfg).unwrap();
        if out_a.model != out_b.model || out_a.history != out_b.history {
            return fail(format!("trained endpoint runs differ ({name})"));
        }
    }
    Ok("masks and full runs identical at both endpoints".into())
}

struct DeskRun {
    sparsity: f64,
    ba: f64,
}

fn desk_train(
    model: &Model,
    train_ds: &TrajectoryDataset,
    val_ds: &TrajectoryDataset,
    priors: &dash_core::simulator::PriorKnowledge,
    reference: &DenseMatrix,
    method: ScoreMethod,
    max_epochs: usize,
    n_sub: usize,
) -> dash_core::Result<DeskRun> {
    // Every prune event also refreshes the score-recurrence state, so a ramp
    // of small early events lets the prior alignment converge before most
    // entries are irreversibly masked; the slower periodic tail then gives
    // the weights time to recover between prunes.
    let ramp: Vec<(usize, f64)> = (1..=11).map(|i| (3 * i, 0.1)).collect();
    let cfg = TrainConfig {
        score_method: method,
        max_epochs,
        n_sub,
        seed: 46,
        lr0: 3e-2,
        patience: max_epochs,
        schedule: PruneSchedule {
            events: ramp,
            period: 10,
            period_fraction: 0.1,
        },
        ..TrainConfig::default()
    };
    let outcome = train(model, train_ds, val_ds, Some(priors), &cfg)?;
    let grn = extract_grn_model(&outcome.model, &train_ds.gene_names)?;
    Ok(DeskRun {
        sparsity: sparsity(&outcome.model),
        ba: balanced_accuracy(&grn.d, reference, 0.0)?,
    })
}

/// Criterion 5: desk-scale benchmark (50 genes, mean out-degree 3, 160
/// trajectories, 5% noise, clean prior): the blended method reaches high
/// sparsity with high balanced accuracy and beats magnitude-only pruning
/// by a wide margin at comparable sparsity, within a 15-minute budget.
fn c5_desk_scale_recovery() -> Check {
    let started = Instant::now();
    let net = generate_network(50, 3.0, 0.5, 42).unwrap();
    let ds = simulate_dataset(&net, 160, &[0.0, 2.0, 3.0, 7.0, 9.0], 0.05, 43).unwrap();
    let (train_ds, val_ds, _test) = split_dataset(&ds, (0.88, 0.06, 0.06), 44).unwrap();
    let priors = build_priors(&net, 0.0, 45).unwrap();
    let mut rng = stream_rng(46, 0);
    let model = Model::Phoenix(PhoenixParams::init(50, default_hidden_width(50), &mut rng));

    let dash = desk_train(
        &model,
        &train_ds,
        &val_ds,
        &priors,
        &net.adjacency,
        ScoreMethod::Dash { lambda1: 0.85, lambda2: 0.85 },
        200,
        5,
    )
    .map_err(|e| e.to_string())?;
    let imp = desk_train(
        &model,
        &train_ds,
        &val_ds,
        &priors,
        &net.adjacency,
        ScoreMethod::Magnitude,
        200,
        5,
    )
    .map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();

    let detail = format!(
        "blended {:.1}% sparse / BA {:.1}%, magnitude {:.1}% sparse / BA {:.1}%, {:.0} s",
        dash.sparsity, dash.ba, imp.sparsity, imp.ba, secs
    );
    if dash.sparsity < 85.0 {
        return fail(format!("sparsity below 85%: {detail}"));
    }
    if dash.ba < 80.0 {
        return fail(format!("balanced accuracy below 80%: {detail}"));
    }
    if (dash.sparsity - imp.sparsity).abs() > 10.0 {
        return fail(format!("sparsity gap above 10 points: {detail}"));
    }
    if dash.ba - imp.ba < 10.0 {
        return fail(format!("accuracy margin below 10 points: {detail}"));
    }
    if secs >= 900.0 {
        return fail(format!("runtime {secs:.0} s >= 900 s: {detail}"));
    }
    Ok(detail)
}

/// Criterion 6: with noise-free data, balanced accuracy is non-increasing
/// (within 3 points) as the prior is corrupted 0% -> 20% -> 40%.
fn c6_prior_corruption_sensitivity() -> Check {
    let net = generate_network(50, 3.0, 0.5, 52).unwrap();
    let ds = simulate_dataset(&net, 80, &[0.0, 2.0, 3.0, 7.0, 9.0], 0.0, 53).unwrap();
    let (train_ds, val_ds, _test) = split_dataset(&ds, (0.88, 0.06, 0.06), 54).unwrap();
    let mut rng = stream_rng(55, 0);
    let model = Model::Phoenix(PhoenixParams::init(50, default_hidden_width(50), &mut rng));

    let mut bas = Vec::new();
    for pct in [0.0, 20.0, 40.0] {
        let corrupted = corrupt_network(&net, pct, 56).unwrap();
        let priors = build_priors(&corrupted, pct, 56).unwrap();
        let run = desk_train(
            &model,
            &train_ds,
            &val_ds,
            &priors,
            &net.adjacency,
            ScoreMethod::Dash { lambda1: 0.85, lambda2: 0.85 },
            150,
            4,
        )
        .map_err(|e| e.to_string())?;
        bas.push(run.ba);
    }
    let detail = format!(
        "balanced accuracy {:.1}% -> {:.1}% -> {:.1}% at 0/20/40% corruption",
        bas[0], bas[1], bas[2]
    );
    if bas[1] > bas[0] + 3.0 || bas[2] > bas[1] + 3.0 {
        return fail(format!("accuracy increased beyond tolerance: {detail}"));
    }
    Ok(detail)
}

/// Criterion 7: every nonzero row of the extracted matrix has absolute
/// sum 1, and mask-implied zero paths come out exactly zero.
fn c7_grn_extraction_invariants() -> Check {
    let (k, m) = (8, 4);
    let mut rng = stream_rng(61, 0);
    let mut params = PhoenixParams::init(k, m, &mut rng);
    // Mixed-sign gene multipliers, including rectified-away rows.
    params.upsilon = DenseMatrix::from_fn(k, 1, |i, _| if i % 3 == 0 { -1.0 } else { 0.5 });
    // Sever every hidden path out of input gene 2 in both branches.
    for h in 0..m {
        params.mask_w_sigma.set(h, 2, 0.0);
        params.mask_w_pi.set(h, 2, 0.0);
    }
    let grn = extract_grn(&params, &default_gene_names(k)).unwrap();
    for i in 0..k {
        let abs_sum: f64 = (0..k).map(|j| grn.d.get(i, j).abs()).sum();
        if abs_sum != 0.0 && (abs_sum - 1.0).abs() >= 1e-10 {
            return fail(format!("row {i} abs-sum {abs_sum} differs from 1"));
        }
    }
    for i in 0..k {
        if grn.d.get(i, 2) != 0.0 {
            return fail(format!("masked path into column 2 leaked: row {i}"));
        }
    }
    let zero_rows = (0..k).filter(|&i| (0..k).all(|j| grn.d.get(i, j) == 0.0)).count();
    Ok(format!(
        "all nonzero rows normalized, masked column exactly zero, {zero_rows} rectified-away rows"
    ))
}

/// Criterion 8: random predictions at the reference density score ~50%
/// balanced accuracy; the reference itself scores 100%.
fn c8_balanced_accuracy_sanity() -> Check {
    let k = 40;
    let net = generate_network(k, 4.0, 0.5, 71).unwrap();
    let reference = &net.adjacency;
    let n_edges = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && reference.get(i, j) != 0.0)
        .count();

    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let mut sum = 0.0;
    for _ in 0..20 {
        let mut positions: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .collect();
        use rand::seq::SliceRandom;
        positions.shuffle(&mut rng);
        let mut pred = DenseMatrix::zeros(k, k);
        for &(i, j) in positions.iter().take(n_edges) {
            pred.set(i, j, 1.0);
        }
        sum += balanced_accuracy(&pred, reference, 0.0).unwrap();
    }
    let mean = sum / 20.0;
    if (mean - 50.0).abs() >= 3.0 {
        return fail(format!("random-mask mean balanced accuracy {mean:.2}% outside 50 +/- 3"));
    }
    let perfect = balanced_accuracy(reference, reference, 0.0).unwrap();
    if (perfect - 100.0).abs() > 1e-9 {
        return fail(format!("perfect support scored {perfect}%"));
    }
    Ok(format!("random masks {mean:.2}% mean, perfect support 100%"))
}

/// Criterion 9: permutation z-scores are centered and bounded under
/// uniform influences, and a strongly planted pathway is detected.
fn c9_pathway_permutation() -> Check {
    let k = 100;
    let q = 1000;
    let gene_names = default_gene_names(k);
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let mut gmt = String::new();
    for s in 0..50 {
        use rand::seq::SliceRandom;
        let mut pool: Vec<&String> = gene_names.iter().collect();
        pool.shuffle(&mut rng);
        let size = rng.random_range(5..=15);
        gmt.push_str(&format!("set{s:02}\tsynthetic"));
        for g in pool.iter().take(size) {
            gmt.push_str(&format!("\t{g}"));
        }
        gmt.push('\n');
    }
    let sets = GeneSetCollection::from_gmt_str(&gmt, "inline").unwrap();

    let uniform = vec![1.0; k];
    let scores = pathway_scores(&uniform, &gene_names, &sets, q, 82).unwrap();
    let mean_z = scores.iter().map(|s| s.z).sum::<f64>() / scores.len() as f64;
    if mean_z.abs() >= 0.1 {
        return fail(format!("uniform-influence mean z {mean_z:.3} outside +/- 0.1"));
    }
    if let Some(s) = scores.iter().find(|s| s.z.abs() >= 3.5) {
        return fail(format!("uniform-influence |z| {:.2} >= 3.5 ({})", s.z, s.name));
    }

    let planted_members: Vec<String> = sets.sets[0].1.clone();
    let mut influences = vec![1.0; k];
    for (i, g) in gene_names.iter().enumerate() {
        if planted_members.contains(g) {
            influences[i] = 10.0;
        }
    }
    let scores = pathway_scores(&influences, &gene_names, &sets, q, 82).unwrap();
    let planted = scores.iter().find(|s| s.name == "set00").unwrap();
    let max_z = scores.iter().map(|s| s.z).fold(f64::NEG_INFINITY, f64::max);
    if planted.z < max_z {
        return fail(format!("planted pathway z {:.2} below max z {max_z:.2}", planted.z));
    }
    if planted.p_value > 1.0 / q as f64 {
        return fail(format!("planted pathway p {:.4} > 1/Q", planted.p_value));
    }
    Ok(format!(
        "uniform mean z {mean_z:.3}, planted z {:.2} (max) at p {:.4}",
        planted.z, planted.p_value
    ))
}

/// Criterion 10: identical config and seed give byte-identical
/// checkpoints, histories, and reports through the command-line binary.
fn c10_reproducibility() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg_path = tmp.path().join("config.json");
    std::fs::write(
        &cfg_path,
        r#"{
  "simulate": { "k": 10, "n_traj": 30, "split": [0.6, 0.2, 0.2], "noise_sigma": 0.02 },
  "train": { "max_epochs": 8, "n_sub": 2 }
}"#,
    )
    .map_err(|e| e.to_string())?;
    let cfg = cfg_path.to_str().unwrap();
    let sim = tmp.path().join("sim");
    let run = |cwd: &std::path::Path, args: &[&str]| -> std::result::Result<(), String> {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_dashgrn"))
            .current_dir(cwd)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.success() {
            Ok(())
        } else {
            Err(format!(
                "command {:?} failed: {}",
                args,
                String::from_utf8_lossy(&out.stderr)
            ))
        }
    };
    run(
        tmp.path(),
        &["simulate", "--config", cfg, "--seed", "9", "--out", sim.to_str().unwrap()],
    )?;

    // Reports embed the paths they were given, so each repetition runs
    // from its own working directory with identical relative paths.
    let mut digests: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for rep in 0..2 {
        let root = tmp.path().join(format!("rep{rep}"));
        std::fs::create_dir_all(&root).map_err(|e| e.to_string())?;
        run(
            &root,
            &[
                "train", "--config", cfg, "--seed", "9", "--data", "../sim", "--method", "dash",
                "--out", "train",
            ],
        )?;
        run(
            &root,
            &[
                "evaluate",
                "--config",
                cfg,
                "--seed",
                "9",
                "--checkpoint",
                "train/checkpoint.json",
                "--reference",
                "../sim/truth.tsv",
                "--data",
                "../sim",
                "--out",
                "eval",
            ],
        )?;
        let mut files = Vec::new();
        for path in [
            root.join("train/checkpoint.json"),
            root.join("train/history.csv"),
            root.join("eval/metrics.json"),
            root.join("eval/grn_checkpoint.tsv"),
        ] {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            files.push((name, bytes));
        }
        digests.push(files);
    }
    for ((name, a), (_, b)) in digests[0].iter().zip(&digests[1]) {
        if a != b {
            return fail(format!("{name} differs between identical runs"));
        }
    }
    Ok("checkpoint, history, metrics, and extracted network byte-identical".into())
}

#[test]
fn acceptance() {
    let checks: Vec<(&str, fn() -> Check)> = vec![
        ("1 gradient correctness", c1_gradient_correctness),
        ("2 integrator order", c2_integrator_order),
        ("3 pseudo-inverse identities", c3_pseudoinverse_identities),
        ("4 endpoint equivalences", c4_endpoint_equivalences),
        ("5 desk-scale recovery", c5_desk_scale_recovery),
        ("6 prior-corruption sensitivity", c6_prior_corruption_sensitivity),
        ("7 extraction invariants", c7_grn_extraction_invariants),
        ("8 balanced-accuracy sanity", c8_balanced_accuracy_sanity),
        ("9 pathway permutation", c9_pathway_permutation),
        ("10 reproducibility", c10_reproducibility),
    ];
    let mut failures = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail}");
                failures.push(format!("{name}: {detail}"));
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria:\n{}", failures.join("\n"));
}
