//! Attributed graphs, labelings, attack budgets/plans, and graph surgery.
//!
//! [`FeatureGraph`] and [`Labeling`] are immutable after construction; every
//! operation here is a pure function of its inputs plus an explicit seed, so
//! parallel sweeps never contend.

mod dataset;
mod knn;
mod ops;

pub use dataset::{
    load_attack_plan, load_dataset, load_labeling, save_attack_plan, save_dataset, save_labeling,
};
pub(crate) use dataset::write_atomic;
pub use knn::{build_knn_graph, tfidf_transform};
pub use ops::{apply_attack, induced_subgraph, purify_noisy_edges, split_train_test, SplitPart};

use thiserror::Error;

/// Sparse feature row: strictly increasing indices with non-negative values.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid labeling: {0}")]
    InvalidLabels(String),
    #[error("invalid attack plan: {0}")]
    InvalidPlan(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("node {0} has a zero feature vector, cosine distance undefined")]
    ZeroVector(usize),
}

pub(crate) fn sparse_dot_dense(row: &SparseRow, w: &[f64]) -> f64 {
    row.iter().map(|&(i, v)| v * w[i]).sum()
}

pub(crate) fn sparse_dot_sparse(a: &SparseRow, b: &SparseRow) -> f64 {
    let mut acc = 0.0;
    let (mut ia, mut ib) = (0, 0);
    while ia < a.len() && ib < b.len() {
        match a[ia].0.cmp(&b[ib].0) {
            std::cmp::Ordering::Less => ia += 1,
            std::cmp::Ordering::Greater => ib += 1,
            std::cmp::Ordering::Equal => {
                acc += a[ia].1 * b[ib].1;
                ia += 1;
                ib += 1;
            }
        }
    }
    acc
}

pub(crate) fn sparse_norm(a: &SparseRow) -> f64 {
    a.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
}

/// Normalizes an unordered pair to `(min, max)`.
pub(crate) fn norm_pair(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Undirected graph with non-negative sparse node features and optional
/// non-negative dense edge features. Edges are stored as `(i, j)` with
/// `i < j`, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGraph {
    d_n: usize,
    features: Vec<SparseRow>,
    edges: Vec<(usize, usize)>,
    d_e: usize,
    edge_features: Option<Vec<Vec<f64>>>,
}

impl FeatureGraph {
    /// Builds a graph without edge features.
    pub fn new(
        d_n: usize,
        features: Vec<SparseRow>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        Self::build(d_n, features, edges, 0, None)
    }

    /// Builds a graph whose edges carry feature vectors of dimension `d_e`,
    /// aligned with the edge list.
    pub fn with_edge_features(
        d_n: usize,
        features: Vec<SparseRow>,
        edges: Vec<(usize, usize)>,
        d_e: usize,
        edge_features: Vec<Vec<f64>>,
    ) -> Result<Self, GraphError> {
        Self::build(d_n, features, edges, d_e, Some(edge_features))
    }

    fn build(
        d_n: usize,
        features: Vec<SparseRow>,
        edges: Vec<(usize, usize)>,
        d_e: usize,
        edge_features: Option<Vec<Vec<f64>>>,
    ) -> Result<Self, GraphError> {
        let n = features.len();
        for (i, row) in features.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(idx, v) in row {
                if idx >= d_n {
                    return Err(GraphError::InvalidGraph(format!(
                        "node {i} references feature {idx} of {d_n}"
                    )));
                }
                if prev.is_some_and(|p| p >= idx) {
                    return Err(GraphError::InvalidGraph(format!(
                        "node {i} has unsorted or duplicate feature indices"
                    )));
                }
                if !v.is_finite() || v < 0.0 {
                    return Err(GraphError::InvalidGraph(format!(
                        "node {i} feature {idx} = {v}, entries must be finite and >= 0"
                    )));
                }
                prev = Some(idx);
            }
        }
        let order: Vec<usize> = (0..edges.len()).collect();
        let mut normalized: Vec<(usize, usize, usize)> = Vec::with_capacity(edges.len());
        for &e in &order {
            let (i, j) = edges[e];
            if i == j {
                return Err(GraphError::InvalidGraph(format!("self-loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(GraphError::InvalidGraph(format!(
                    "edge ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            let (a, b) = norm_pair(i, j);
            normalized.push((a, b, e));
        }
        normalized.sort_unstable();
        for w in normalized.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(GraphError::InvalidGraph(format!(
                    "duplicate edge ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        let edge_features = match edge_features {
            Some(rows) => {
                if rows.len() != normalized.len() {
                    return Err(GraphError::InvalidGraph(format!(
                        "{} edge feature rows for {} edges",
                        rows.len(),
                        normalized.len()
                    )));
                }
                for (e, row) in rows.iter().enumerate() {
                    if row.len() != d_e {
                        return Err(GraphError::InvalidGraph(format!(
                            "edge {e} has {} features, expected {d_e}",
                            row.len()
                        )));
                    }
                    if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                        return Err(GraphError::InvalidGraph(format!(
                            "edge {e} has a negative or non-finite feature"
                        )));
                    }
                }
                // reorder rows to follow the sorted edge order
                Some(
                    normalized
                        .iter()
                        .map(|&(_, _, orig)| rows[orig].clone())
                        .collect(),
                )
            }
            None => None,
        };
        Ok(Self {
            d_n,
            features,
            edges: normalized.into_iter().map(|(a, b, _)| (a, b)).collect(),
            d_e,
            edge_features,
        })
    }

    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn d_n(&self) -> usize {
        self.d_n
    }

    pub fn features(&self) -> &[SparseRow] {
        &self.features
    }

    pub fn feature_row(&self, i: usize) -> &SparseRow {
        &self.features[i]
    }

    /// Edges as `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&norm_pair(i, j)).is_ok()
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn edge_features(&self) -> Option<&[Vec<f64>]> {
        self.edge_features.as_deref()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n()];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }
}

/// Per-node labels `0..K` (stored zero-based; one-based in files).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    k: usize,
    labels: Vec<usize>,
}

impl Labeling {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self, GraphError> {
        if k == 0 {
            return Err(GraphError::InvalidLabels("label count K = 0".to_string()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(GraphError::InvalidLabels(format!(
                "label {bad} outside 0..{k}"
            )));
        }
        Ok(Self { k, labels })
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    /// Indicator `y_i^k`.
    pub fn one_hot(&self, i: usize, k: usize) -> f64 {
        if self.labels[i] == k {
            1.0
        } else {
            0.0
        }
    }

    /// Labels of `nodes` (ascending original indices) as a new labeling.
    pub fn restrict(&self, nodes: &[usize]) -> Labeling {
        Labeling {
            k: self.k,
            labels: nodes.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Attack families. `DeleteOnly` may only remove edges; `AddDelete` may also
/// insert edges between differently-labeled non-adjacent pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackVariant {
    DeleteOnly,
    AddDelete,
}

/// Attacker resource limits: at most `deletions` removed edges, at most
/// `additions` inserted edges, and optionally a cap on the number of edge
/// changes incident to any single node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackBudget {
    deletions: usize,
    additions: usize,
    variant: AttackVariant,
    degree_cap: Option<usize>,
}

impl AttackBudget {
    pub fn delete_only(deletions: usize) -> Self {
        Self {
            deletions,
            additions: 0,
            variant: AttackVariant::DeleteOnly,
            degree_cap: None,
        }
    }

    pub fn add_delete(deletions: usize, additions: usize) -> Self {
        Self {
            deletions,
            additions,
            variant: AttackVariant::AddDelete,
            degree_cap: None,
        }
    }

    /// Budget scaled from an edge count: `floor(frac * m)` deletions, and the
    /// same number of additions for [`AttackVariant::AddDelete`].
    pub fn from_fraction(frac: f64, m: usize, variant: AttackVariant) -> Self {
        let d = (frac * m as f64).floor() as usize;
        match variant {
            AttackVariant::DeleteOnly => Self::delete_only(d),
            AttackVariant::AddDelete => Self::add_delete(d, d),
        }
    }

    pub fn with_degree_cap(mut self, cap: usize) -> Self {
        self.degree_cap = Some(cap);
        self
    }

    pub fn deletions(&self) -> usize {
        self.deletions
    }

    pub fn additions(&self) -> usize {
        self.additions
    }

    pub fn variant(&self) -> AttackVariant {
        self.variant
    }

    pub fn degree_cap(&self) -> Option<usize> {
        self.degree_cap
    }
}

/// How an [`AttackPlan`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Rounded from the attacker's LP relaxation.
    LpRound,
    /// Exhaustive enumeration.
    BruteForce,
    /// Random removal of same-label edges.
    Rs,
    /// Random removal of same-label edges plus random cross-label additions.
    Rsad,
}

impl Provenance {
    pub fn tag(&self) -> &'static str {
        match self {
            Provenance::LpRound => "lp-round",
            Provenance::BruteForce => "brute-force",
            Provenance::Rs => "rs",
            Provenance::Rsad => "rsad",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "lp-round" => Some(Provenance::LpRound),
            "brute-force" => Some(Provenance::BruteForce),
            "rs" => Some(Provenance::Rs),
            "rsad" => Some(Provenance::Rsad),
            _ => None,
        }
    }
}

/// Concrete structural attack: edges to delete and edges to add, with the
/// attacker objective the plan achieved when one was computed.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackPlan {
    /// Normalized `(i, j)` pairs, ascending.
    pub deletions: Vec<(usize, usize)>,
    /// Normalized `(i, j)` pairs, ascending; endpoints carry different true
    /// labels by construction.
    pub additions: Vec<(usize, usize)>,
    pub provenance: Provenance,
    /// Margin-form attacker objective achieved by this plan, when known.
    pub objective: Option<f64>,
}

impl AttackPlan {
    pub fn empty(provenance: Provenance) -> Self {
        Self {
            deletions: Vec::new(),
            additions: Vec::new(),
            provenance,
            objective: None,
        }
    }

    /// Checks the plan against a budget; used by tests and by `apply_attack`
    /// callers that want an audit.
    pub fn respects(&self, budget: &AttackBudget) -> bool {
        self.deletions.len() <= budget.deletions() && self.additions.len() <= budget.additions()
    }
}

#[cfg(test)]
mod tests;
