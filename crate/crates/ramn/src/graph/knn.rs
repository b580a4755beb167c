//! TF-IDF transformation and k-nearest-neighbor graph construction.

use super::{norm_pair, sparse_dot_sparse, sparse_norm, FeatureGraph, GraphError, SparseRow};

/// TF-IDF with natural log and smoothed document frequency:
/// `idf_t = ln((1 + N) / (1 + df_t)) + 1`, term frequency taken as the raw
/// count, rows L2-normalized afterwards. All-zero rows stay all-zero.
pub fn tfidf_transform(features: &[SparseRow], d_n: usize) -> Vec<SparseRow> {
    let n = features.len();
    let mut df = vec![0usize; d_n];
    for row in features {
        for &(t, v) in row {
            if v > 0.0 {
                df[t] += 1;
            }
        }
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&d| ((1.0 + n as f64) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    features
        .iter()
        .map(|row| {
            let weighted: SparseRow = row.iter().map(|&(t, v)| (t, v * idf[t])).collect();
            let norm = sparse_norm(&weighted);
            if norm == 0.0 {
                weighted
            } else {
                weighted.into_iter().map(|(t, v)| (t, v / norm)).collect()
            }
        })
        .collect()
}

/// Builds the k-nearest-neighbor graph of the input's nodes under cosine
/// distance of TF-IDF-transformed features. Each node links to its `k`
/// nearest neighbors (ties broken by ascending node index) and the directed
/// links are symmetrized by union. Node features pass through unchanged; any
/// edges on the input are ignored.
pub fn build_knn_graph(graph: &FeatureGraph, k: usize) -> Result<FeatureGraph, GraphError> {
    let n = graph.n();
    if k == 0 {
        return Err(GraphError::InvalidArgument(
            "k must be positive".to_string(),
        ));
    }
    if n < k + 1 {
        return Err(GraphError::InvalidArgument(format!(
            "kNN with k = {k} needs at least {} nodes, got {n}",
            k + 1
        )));
    }
    let transformed = tfidf_transform(graph.features(), graph.d_n());
    for (i, row) in transformed.iter().enumerate() {
        if sparse_norm(row) == 0.0 {
            return Err(GraphError::ZeroVector(i));
        }
    }
    let mut edges = std::collections::BTreeSet::new();
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        dist.clear();
        for j in 0..n {
            if j == i {
                continue;
            }
            // rows are unit-norm, so cosine distance is 1 - dot
            let d = 1.0 - sparse_dot_sparse(&transformed[i], &transformed[j]);
            dist.push((d, j));
        }
        dist.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
        for &(_, j) in dist.iter().take(k) {
            edges.insert(norm_pair(i, j));
        }
    }
    FeatureGraph::new(
        graph.d_n(),
        graph.features().to_vec(),
        edges.into_iter().collect(),
    )
}
