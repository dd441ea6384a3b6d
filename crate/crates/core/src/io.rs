//! File formats: trajectory CSV, edge-list TSV for networks and priors,
//! training-history CSV, and JSON helpers.

use crate::error::{DashError, Result};
use crate::evaluation::DynamicsMatrix;
use crate::linalg::DenseMatrix;
use crate::odeint::{Trajectory, TrajectoryDataset};
use crate::training::TrainHistory;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| DashError::io(path.display().to_string(), e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| DashError::io(dir.display().to_string(), e))?;
    }
    std::fs::write(path, contents).map_err(|e| DashError::io(path.display().to_string(), e))
}

/// Serialize a dataset as CSV with header `traj,time,<gene names>`, one
/// row per observation, trajectories in order.
pub fn dataset_to_csv(ds: &TrajectoryDataset) -> String {
    let mut out = String::from("traj,time");
    for g in &ds.gene_names {
        let _ = write!(out, ",{g}");
    }
    out.push('\n');
    for (idx, traj) in ds.trajectories.iter().enumerate() {
        for (t, state) in traj.times.iter().zip(&traj.states) {
            let _ = write!(out, "{idx},{t}");
            for v in state {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn dataset_from_csv(text: &str, origin: &str, split: &str) -> Result<TrajectoryDataset> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| DashError::parse(origin, "empty trajectory file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "traj" || cols[1] != "time" {
        return Err(DashError::parse(origin, "expected header traj,time,<genes>"));
    }
    let gene_names: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
    let k = gene_names.len();
    let mut grouped: Vec<(Vec<f64>, Vec<Vec<f64>>)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != k + 2 {
            return Err(DashError::parse(
                origin,
                format!("line {}: expected {} fields", lineno + 2, k + 2),
            ));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| DashError::parse(origin, format!("line {}: bad number {s}", lineno + 2)))
        };
        let idx = fields[0]
            .parse::<usize>()
            .map_err(|_| DashError::parse(origin, format!("line {}: bad index", lineno + 2)))?;
        if idx > grouped.len() {
            return Err(DashError::parse(
                origin,
                format!("line {}: trajectory indices must be contiguous", lineno + 2),
            ));
        }
        if idx == grouped.len() {
            grouped.push((Vec::new(), Vec::new()));
        }
        let time = parse(fields[1])?;
        let state = fields[2..]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<f64>>>()?;
        grouped[idx].0.push(time);
        grouped[idx].1.push(state);
    }
    let trajectories = grouped
        .into_iter()
        .map(|(times, states)| Trajectory::new(times, states))
        .collect::<Result<Vec<_>>>()?;
    TrajectoryDataset::new(trajectories, gene_names, split)
}

pub fn write_dataset(path: &Path, ds: &TrajectoryDataset) -> Result<()> {
    write_file(path, &dataset_to_csv(ds))
}

pub fn read_dataset(path: &Path, split: &str) -> Result<TrajectoryDataset> {
    dataset_from_csv(&read_file(path)?, &path.display().to_string(), split)
}

/// Edge-list TSV `source<TAB>target<TAB>weight`: source is the regulator
/// (column index), target the regulated gene (row index).
pub fn matrix_to_edge_tsv(m: &DenseMatrix, row_names: &[String], col_names: &[String]) -> String {
    let mut out = String::from("source\ttarget\tweight\n");
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "{}\t{}\t{v}", col_names[j], row_names[i]);
            }
        }
    }
    out
}

/// Parse an edge list into a rows x cols matrix resolved against names.
pub fn matrix_from_edge_tsv(
    text: &str,
    origin: &str,
    row_names: &[String],
    col_names: &[String],
) -> Result<DenseMatrix> {
    let row_index: HashMap<&str, usize> = row_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let col_index: HashMap<&str, usize> = col_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut m = DenseMatrix::zeros(row_names.len(), col_names.len());
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == "source\ttarget\tweight" => {}
        _ => return Err(DashError::parse(origin, "expected header source\\ttarget\\tweight")),
    }
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(DashError::parse(
                origin,
                format!("line {}: expected 3 fields", lineno + 2),
            ));
        }
        let j = *col_index.get(fields[0]).ok_or_else(|| {
            DashError::parse(origin, format!("line {}: unknown source {}", lineno + 2, fields[0]))
        })?;
        let i = *row_index.get(fields[1]).ok_or_else(|| {
            DashError::parse(origin, format!("line {}: unknown target {}", lineno + 2, fields[1]))
        })?;
        let v = fields[2].parse::<f64>().map_err(|_| {
            DashError::parse(origin, format!("line {}: bad weight {}", lineno + 2, fields[2]))
        })?;
        m.set(i, j, v);
    }
    Ok(m)
}

pub fn write_edge_matrix(path: &Path, m: &DenseMatrix, names: &[String]) -> Result<()> {
    write_file(path, &matrix_to_edge_tsv(m, names, names))
}

pub fn read_edge_matrix(path: &Path, names: &[String]) -> Result<DenseMatrix> {
    matrix_from_edge_tsv(&read_file(path)?, &path.display().to_string(), names, names)
}

pub fn grn_to_tsv(grn: &DynamicsMatrix) -> String {
    matrix_to_edge_tsv(&grn.d, &grn.gene_names, &grn.gene_names)
}

pub fn history_to_csv(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,train_loss,val_mse,sparsity,lr,newly_pruned\n");
    for e in &history.epochs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.epoch, e.train_loss, e.val_mse, e.sparsity, e.lr, e.newly_pruned
        );
    }
    out
}

pub fn write_history(path: &Path, history: &TrainHistory) -> Result<()> {
    write_file(path, &history_to_csv(history))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| DashError::parse(path.display().to_string(), e.to_string()))?;
    write_file(path, &(text + "\n"))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_file(path)?)
        .map_err(|e| DashError::parse(path.display().to_string(), e.to_string()))
}
