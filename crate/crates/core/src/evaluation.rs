//! Regulatory-network extraction from a trained model and the metrics
//! computed against it: balanced accuracy, sparsity, gene influence,
//! pathway permutation scores, and out-degree summaries.

use crate::error::{DashError, Result};
use crate::linalg::DenseMatrix;
use crate::model::{Model, PhoenixParams};
use crate::odeint::integrate;
use crate::training::{stream_rng, streams};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

/// Row-normalized input-to-output contribution matrix: entry (i, j) is
/// the relative contribution of gene j to the dynamics of gene i. Every
/// row either has absolute sum 1 or is entirely zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsMatrix {
    pub d: DenseMatrix,
    pub gene_names: Vec<String>,
}

/// Total additive + multiplicative contribution through the hidden layer,
/// scaled per row by the rectified gene multiplier, then row-normalized
/// by absolute sum. Rows whose denominator is zero become all-zero.
pub fn extract_grn(p: &PhoenixParams, gene_names: &[String]) -> Result<DynamicsMatrix> {
    let w_sigma = p.w_sigma.hadamard(&p.mask_w_sigma)?;
    let w_pi = p.w_pi.hadamard(&p.mask_w_pi)?;
    let u_sigma = p.u_sigma.hadamard(&p.mask_u_sigma)?;
    let u_pi = p.u_pi.hadamard(&p.mask_u_pi)?;
    let d = u_sigma.matmul(&w_sigma)?.add(&u_pi.matmul(&w_pi)?)?;
    Ok(DynamicsMatrix {
        d: row_normalize_scaled(&d, &p.upsilon.map(|v| v.max(0.0))),
        gene_names: gene_names.to_vec(),
    })
}

/// GRN extraction for either model family; the MLP variant multiplies
/// its two masked layers and row-normalizes without gene multipliers.
pub fn extract_grn_model(model: &Model, gene_names: &[String]) -> Result<DynamicsMatrix> {
    match model {
        Model::Phoenix(p) => extract_grn(p, gene_names),
        Model::Mlp(p) => {
            let d = p
                .w2
                .hadamard(&p.mask2)?
                .matmul(&p.w1.hadamard(&p.mask1)?)?;
            let ones = DenseMatrix::from_fn(d.rows(), 1, |_, _| 1.0);
            Ok(DynamicsMatrix {
                d: row_normalize_scaled(&d, &ones),
                gene_names: gene_names.to_vec(),
            })
        }
    }
}

fn row_normalize_scaled(d: &DenseMatrix, row_scale: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(d.rows(), d.cols(), |i, j| {
        let denom: f64 = (0..d.cols())
            .map(|c| (row_scale.get(i, 0) * d.get(i, c)).abs())
            .sum();
        if denom == 0.0 {
            0.0
        } else {
            row_scale.get(i, 0) * d.get(i, j) / denom
        }
    })
}

/// Balanced accuracy (percent) of predicted vs reference edge supports
/// over all off-diagonal positions. A prediction is an edge when its
/// magnitude exceeds `threshold` (0 means exact nonzero, the masked-model
/// default).
pub fn balanced_accuracy(
    prediction: &DenseMatrix,
    reference: &DenseMatrix,
    threshold: f64,
) -> Result<f64> {
    if !prediction.same_shape(reference) {
        return Err(DashError::contract("prediction/reference shape mismatch"));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..reference.rows() {
        for j in 0..reference.cols() {
            if i == j {
                continue;
            }
            let pred = prediction.get(i, j).abs() > threshold;
            let actual = reference.get(i, j) != 0.0;
            match (pred, actual) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
            }
        }
    }
    if tp + fn_ == 0 || tn + fp == 0 {
        return Err(DashError::contract(
            "reference needs both edges and non-edges off the diagonal",
        ));
    }
    let tpr = tp as f64 / (tp + fn_) as f64;
    let tnr = tn as f64 / (tn + fp) as f64;
    Ok(100.0 * (tpr + tnr) / 2.0)
}

/// Percentage of masked entries across the prunable weight matrices.
pub fn sparsity(model: &Model) -> f64 {
    100.0 * crate::training::mask_sparsity(model)
}

/// Influence score per gene: mean absolute trajectory difference on all
/// other genes after perturbing that gene's initial value by `delta`
/// (additive, clamped to [0, 1]), averaged over `n_init` uniform random
/// initial vectors and all non-initial observation times.
pub fn gene_influence(
    model: &Model,
    n_init: usize,
    times: &[f64],
    delta: f64,
    n_sub: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_init == 0 || times.len() < 2 {
        return Err(DashError::contract(
            "influence needs initial vectors and at least two times",
        ));
    }
    let k = model.genes();
    let masked = model.masked()?;
    let mut rng = stream_rng(seed, streams::INFLUENCE);
    let base_init = DenseMatrix::from_fn(k, n_init, |_, _| rng.random::<f64>());
    let base = integrate(&masked, &base_init, times, n_sub)?;
    let mut scores = Vec::with_capacity(k);
    for j in 0..k {
        let mut perturbed_init = base_init.clone();
        for b in 0..n_init {
            let v = (perturbed_init.get(j, b) + delta).clamp(0.0, 1.0);
            perturbed_init.set(j, b, v);
        }
        let perturbed = integrate(&masked, &perturbed_init, times, n_sub)?;
        let mut sum = 0.0;
        let mut count = 0usize;
        for t in 1..times.len() {
            for i in 0..k {
                if i == j {
                    continue;
                }
                for b in 0..n_init {
                    sum += (perturbed[t].get(i, b) - base[t].get(i, b)).abs();
                    count += 1;
                }
            }
        }
        scores.push(if count == 0 { 0.0 } else { sum / count as f64 });
    }
    Ok(scores)
}

/// Named gene sets (pathways). `unresolved` counts set members that did
/// not match any gene in the panel at resolution time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeneSetCollection {
    pub sets: Vec<(String, Vec<String>)>,
}

impl GeneSetCollection {
    /// Parse the tab-separated GMT format: name, description, genes...
    pub fn from_gmt_str(text: &str, origin: &str) -> Result<Self> {
        let mut sets = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 3 {
                return Err(DashError::parse(
                    origin,
                    format!("line {}: GMT needs name, description, genes", lineno + 1),
                ));
            }
            sets.push((
                fields[0].to_string(),
                fields[2..].iter().map(|s| s.to_string()).collect(),
            ));
        }
        Ok(GeneSetCollection { sets })
    }

    pub fn from_gmt_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DashError::io(path.display().to_string(), e))?;
        Self::from_gmt_str(&text, &path.display().to_string())
    }
}

/// Permutation-test result for one pathway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayScore {
    pub name: String,
    pub n_genes: usize,
    pub unresolved: usize,
    pub ps: f64,
    pub null_mean: f64,
    pub null_var: f64,
    pub p_value: f64,
    pub z: f64,
}

/// Score each pathway as the sum of its genes' influence scores against a
/// null of `q` random permutations of the influence vector. Pathways with
/// no resolvable genes are skipped.
pub fn pathway_scores(
    influences: &[f64],
    gene_names: &[String],
    sets: &GeneSetCollection,
    q: usize,
    seed: u64,
) -> Result<Vec<PathwayScore>> {
    if influences.len() != gene_names.len() {
        return Err(DashError::contract("influence/gene-name length mismatch"));
    }
    if q == 0 {
        return Err(DashError::contract("permutation count must be positive"));
    }
    let index: HashMap<&str, usize> = gene_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut rng = stream_rng(seed, streams::PERMUTATION);
    let mut out = Vec::new();
    for (name, members) in &sets.sets {
        let resolved: Vec<usize> = members
            .iter()
            .filter_map(|g| index.get(g.as_str()).copied())
            .collect();
        let unresolved = members.len() - resolved.len();
        if resolved.is_empty() {
            continue;
        }
        let ps: f64 = resolved.iter().map(|&i| influences[i]).sum();
        let mut shuffled = influences.to_vec();
        let mut null = Vec::with_capacity(q);
        for _ in 0..q {
            shuffled.shuffle(&mut rng);
            null.push(resolved.iter().map(|&i| shuffled[i]).sum::<f64>());
        }
        let null_mean = null.iter().sum::<f64>() / q as f64;
        let null_var = null.iter().map(|v| (v - null_mean).powi(2)).sum::<f64>() / q as f64;
        let p_value = null.iter().filter(|&&v| v > ps).count() as f64 / q as f64;
        let sd = null_var.sqrt();
        let z = if sd == 0.0 { 0.0 } else { (ps - null_mean) / sd };
        out.push(PathwayScore {
            name: name.clone(),
            n_genes: resolved.len(),
            unresolved,
            ps,
            null_mean,
            null_var,
            p_value,
            z,
        });
    }
    Ok(out)
}

/// Mean and maximum out-degree of the extracted network: the out-degree
/// of gene j counts rows i with a nonzero (i, j) entry.
pub fn out_degree_stats(d: &DenseMatrix) -> (f64, usize) {
    let mut total = 0usize;
    let mut max = 0usize;
    for j in 0..d.cols() {
        let deg = (0..d.rows()).filter(|&i| d.get(i, j) != 0.0).count();
        total += deg;
        max = max.max(deg);
    }
    (total as f64 / d.cols() as f64, max)
}
