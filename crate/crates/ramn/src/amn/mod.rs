//! AMN scoring, loss, accuracy, and MAP inference.
//!
//! The model assigns a labeling `y` the unnormalized log-score
//!
//! `score(w, G, y) = sum_i sum_k (w_n^k . x_i) y_i^k
//!                 + sum_{(i,j) in E} sum_k w_e^k y_i^k y_j^k`
//!
//! with one weight vector per label for nodes and one non-negative scalar per
//! label for edges (edge features collapse to the scalar because attacker
//! edges carry all-ones features).

mod inference;

pub use inference::{map_inference, InferenceResult};

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::graph::{sparse_dot_dense, FeatureGraph, GraphError, Labeling, SparseRow};
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum AmnError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solve ended with status {status:?}{}", diagnostics.as_deref().map(|d| format!(": {d}")).unwrap_or_default())]
    SolveFailed {
        status: crate::solver::SolveStatus,
        diagnostics: Option<String>,
    },
    #[error("randomized rounding exceeded {0} phases")]
    RoundingStalled(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// AMN weights: one node-feature vector per label and one non-negative edge
/// scalar per label.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    k: usize,
    d_n: usize,
    w_n: Vec<Vec<f64>>,
    w_e: Vec<f64>,
}

impl Weights {
    pub fn new(w_n: Vec<Vec<f64>>, w_e: Vec<f64>) -> Result<Self, AmnError> {
        let k = w_n.len();
        if k == 0 {
            return Err(AmnError::InvalidWeights("no labels".to_string()));
        }
        if w_e.len() != k {
            return Err(AmnError::InvalidWeights(format!(
                "{} edge weights for {k} labels",
                w_e.len()
            )));
        }
        let d_n = w_n[0].len();
        for (kk, row) in w_n.iter().enumerate() {
            if row.len() != d_n {
                return Err(AmnError::InvalidWeights(format!(
                    "w_n^{kk} has dimension {}, expected {d_n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(AmnError::InvalidWeights(format!(
                    "w_n^{kk} has a non-finite entry"
                )));
            }
        }
        for (kk, &v) in w_e.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(AmnError::InvalidWeights(format!(
                    "w_e^{kk} = {v}, edge weights must be finite and >= 0"
                )));
            }
        }
        Ok(Self { k, d_n, w_n, w_e })
    }

    pub fn zeros(k: usize, d_n: usize) -> Self {
        Self {
            k,
            d_n,
            w_n: vec![vec![0.0; d_n]; k],
            w_e: vec![0.0; k],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d_n(&self) -> usize {
        self.d_n
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.w_n[k]
    }

    pub fn edge(&self, k: usize) -> f64 {
        self.w_e[k]
    }

    pub fn edge_weights(&self) -> &[f64] {
        &self.w_e
    }

    /// Largest edge weight, the `epsilon` of the approximation-gap bound.
    pub fn max_edge_weight(&self) -> f64 {
        self.w_e.iter().fold(0.0, |a: f64, &b| a.max(b))
    }

    /// `w_n^k . x_i` for a sparse feature row.
    pub fn node_potential(&self, x: &SparseRow, k: usize) -> f64 {
        sparse_dot_dense(x, &self.w_n[k])
    }

    /// Flat layout `[w_n^0 | w_n^1 | ... | w_n^{K-1} | w_e]`, the order used
    /// by the robust training QP's weight block.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for row in &self.w_n {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.w_e);
        out
    }

    pub fn flat_len(&self) -> usize {
        self.k * self.d_n + self.k
    }

    /// Rebuilds weights from the flat layout. Edge entries within
    /// `clamp_eps` below zero (solver dust) are clamped to zero; entries
    /// further below are an error.
    pub fn from_flat(k: usize, d_n: usize, flat: &[f64], clamp_eps: f64) -> Result<Self, AmnError> {
        if flat.len() != k * d_n + k {
            return Err(AmnError::InvalidWeights(format!(
                "flat weight vector has length {}, expected {}",
                flat.len(),
                k * d_n + k
            )));
        }
        let w_n: Vec<Vec<f64>> = (0..k).map(|kk| flat[kk * d_n..(kk + 1) * d_n].to_vec()).collect();
        let w_e: Vec<f64> = flat[k * d_n..]
            .iter()
            .map(|&v| if v < 0.0 && v >= -clamp_eps { 0.0 } else { v })
            .collect();
        Self::new(w_n, w_e)
    }

    /// Flat index of `w_n^k[f]`.
    pub fn flat_node_index(k: usize, d_n: usize, label: usize, f: usize) -> usize {
        debug_assert!(label < k && f < d_n);
        label * d_n + f
    }

    /// Flat index of `w_e^k`.
    pub fn flat_edge_index(k: usize, d_n: usize, label: usize) -> usize {
        debug_assert!(label < k);
        k * d_n + label
    }
}

pub(crate) fn check_dims(
    w: &Weights,
    graph: &FeatureGraph,
    y: Option<&Labeling>,
) -> Result<(), AmnError> {
    if w.d_n() != graph.d_n() {
        return Err(AmnError::DimensionMismatch(format!(
            "weights expect d_n = {}, graph has {}",
            w.d_n(),
            graph.d_n()
        )));
    }
    if let Some(y) = y {
        if y.len() != graph.n() {
            return Err(AmnError::DimensionMismatch(format!(
                "{} labels for {} nodes",
                y.len(),
                graph.n()
            )));
        }
        if y.k() != w.k() {
            return Err(AmnError::DimensionMismatch(format!(
                "labeling has K = {}, weights have K = {}",
                y.k(),
                w.k()
            )));
        }
    }
    Ok(())
}

/// AMN log-score of a labeling (partition function excluded).
pub fn score(w: &Weights, graph: &FeatureGraph, y: &Labeling) -> Result<f64, AmnError> {
    check_dims(w, graph, Some(y))?;
    let mut total = 0.0;
    for i in 0..graph.n() {
        total += w.node_potential(graph.feature_row(i), y.label(i));
    }
    for &(i, j) in graph.edges() {
        if y.label(i) == y.label(j) {
            total += w.edge(y.label(i));
        }
    }
    Ok(total)
}

/// Number of nodes whose labels differ: `N - sum_i sum_k yhat_i^k y_i^k`.
pub fn hamming_loss(truth: &Labeling, y: &Labeling) -> Result<f64, AmnError> {
    if truth.len() != y.len() || truth.k() != y.k() {
        return Err(AmnError::DimensionMismatch(format!(
            "labelings of {} nodes / K = {} vs {} nodes / K = {}",
            truth.len(),
            truth.k(),
            y.len(),
            y.k()
        )));
    }
    Ok(truth
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .filter(|(a, b)| a != b)
        .count() as f64)
}

/// Fraction of correctly labeled nodes; 1 for empty labelings.
pub fn accuracy(pred: &Labeling, truth: &Labeling) -> Result<f64, AmnError> {
    let wrong = hamming_loss(truth, pred)?;
    if truth.is_empty() {
        return Ok(1.0);
    }
    Ok(1.0 - wrong / truth.len() as f64)
}

/// Writes weights as `amn-weights v1 K d_n`, then one `w_n^k` row per label,
/// then a final row of the K edge weights.
pub fn save_weights(path: &Path, w: &Weights) -> Result<(), AmnError> {
    let mut out = String::new();
    let _ = writeln!(out, "amn-weights v1 {} {}", w.k(), w.d_n());
    for k in 0..w.k() {
        let row: Vec<String> = w.node(k).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    let row: Vec<String> = w.edge_weights().iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "{}", row.join(" "));
    crate::graph::write_atomic(path, &out)?;
    Ok(())
}

/// Reads the format written by [`save_weights`].
pub fn load_weights(path: &Path) -> Result<Weights, AmnError> {
    let text = std::fs::read_to_string(path).map_err(GraphError::Io)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, msg: String| {
        AmnError::Graph(GraphError::Parse {
            path: path.display().to_string(),
            line,
            msg,
        })
    };
    let (hno, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".to_string()))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 4 || head[0] != "amn-weights" || head[1] != "v1" {
        return Err(parse_err(hno + 1, "expected header `amn-weights v1 K d_n`".to_string()));
    }
    let k: usize = head[2]
        .parse()
        .map_err(|_| parse_err(hno + 1, format!("bad label count {}", head[2])))?;
    let d_n: usize = head[3]
        .parse()
        .map_err(|_| parse_err(hno + 1, format!("bad dimension {}", head[3])))?;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, format!("expected {} weight rows", k + 1)))?;
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(lno + 1, format!("bad weight `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        let want = if rows.len() < k { d_n } else { k };
        if row.len() != want {
            return Err(parse_err(
                lno + 1,
                format!("row has {} values, expected {want}", row.len()),
            ));
        }
        rows.push(row);
    }
    let w_e = rows.pop().expect("edge row present");
    Weights::new(rows, w_e)
}
