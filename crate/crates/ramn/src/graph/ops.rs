//! Graph surgery: attack application, induced subgraphs, train/test splits,
//! and noisy-edge purification.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{norm_pair, AttackPlan, FeatureGraph, GraphError, Labeling};

/// Applies a concrete attack plan: `E' = (E \ deletions) + additions`. Node
/// features are untouched. On graphs carrying edge features, added edges get
/// the all-ones vector, which collapses `w_e^k . x_ij` to the scalar
/// `w_e^k`.
pub fn apply_attack(graph: &FeatureGraph, plan: &AttackPlan) -> Result<FeatureGraph, GraphError> {
    let mut delete = vec![false; graph.edge_count()];
    for &(i, j) in &plan.deletions {
        let (a, b) = norm_pair(i, j);
        match graph.edges().binary_search(&(a, b)) {
            Ok(pos) => {
                if delete[pos] {
                    return Err(GraphError::InvalidPlan(format!(
                        "edge ({a}, {b}) deleted twice"
                    )));
                }
                delete[pos] = true;
            }
            Err(_) => {
                return Err(GraphError::InvalidPlan(format!(
                    "deletion ({a}, {b}) is not an edge"
                )));
            }
        }
    }
    let mut additions: Vec<(usize, usize)> = Vec::with_capacity(plan.additions.len());
    for &(i, j) in &plan.additions {
        let (a, b) = norm_pair(i, j);
        if graph.has_edge(a, b) {
            return Err(GraphError::InvalidPlan(format!(
                "addition ({a}, {b}) already exists"
            )));
        }
        additions.push((a, b));
    }

    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(
        graph.edge_count() - plan.deletions.len() + plan.additions.len(),
    );
    let mut edge_features = graph.edge_features().map(|_| Vec::new());
    for (pos, &e) in graph.edges().iter().enumerate() {
        if !delete[pos] {
            edges.push(e);
            if let (Some(out), Some(rows)) = (edge_features.as_mut(), graph.edge_features()) {
                out.push(rows[pos].clone());
            }
        }
    }
    for &e in &additions {
        edges.push(e);
        if let Some(out) = edge_features.as_mut() {
            out.push(vec![1.0; graph.d_e()]);
        }
    }

    match edge_features {
        Some(rows) => FeatureGraph::with_edge_features(
            graph.d_n(),
            graph.features().to_vec(),
            edges,
            graph.d_e(),
            rows,
        ),
        None => FeatureGraph::new(graph.d_n(), graph.features().to_vec(), edges),
    }
}

/// Node-induced subgraph on `nodes` (must be ascending, unique, in range).
/// Edges with an endpoint outside `nodes` are dropped; surviving nodes are
/// renumbered by their position in `nodes`.
pub fn induced_subgraph(graph: &FeatureGraph, nodes: &[usize]) -> Result<FeatureGraph, GraphError> {
    if nodes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GraphError::InvalidArgument(
            "induced node set must be strictly ascending".to_string(),
        ));
    }
    if let Some(&last) = nodes.last() {
        if last >= graph.n() {
            return Err(GraphError::InvalidArgument(format!(
                "node {last} outside 0..{}",
                graph.n()
            )));
        }
    }
    let mut position = vec![usize::MAX; graph.n()];
    for (p, &i) in nodes.iter().enumerate() {
        position[i] = p;
    }
    let features = nodes.iter().map(|&i| graph.feature_row(i).clone()).collect();
    let mut edges = Vec::new();
    let mut kept_rows = Vec::new();
    for (pos, &(i, j)) in graph.edges().iter().enumerate() {
        if position[i] != usize::MAX && position[j] != usize::MAX {
            edges.push((position[i], position[j]));
            kept_rows.push(pos);
        }
    }
    match graph.edge_features() {
        Some(rows) => FeatureGraph::with_edge_features(
            graph.d_n(),
            features,
            edges,
            graph.d_e(),
            kept_rows.iter().map(|&p| rows[p].clone()).collect(),
        ),
        None => FeatureGraph::new(graph.d_n(), features, edges),
    }
}

/// One side of a train/test split: the induced subgraph, its labels, and the
/// original node indices (ascending) each subgraph node came from.
#[derive(Debug, Clone)]
pub struct SplitPart {
    pub graph: FeatureGraph,
    pub labels: Labeling,
    pub nodes: Vec<usize>,
}

/// Splits nodes into a seeded random train/test partition of size
/// `round(ratio * N)` versus the rest, taking node-induced subgraphs on each
/// side. Cross-partition edges are dropped.
pub fn split_train_test(
    graph: &FeatureGraph,
    labels: &Labeling,
    ratio: f64,
    seed: u64,
) -> Result<(SplitPart, SplitPart), GraphError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(GraphError::InvalidArgument(format!(
            "split ratio {ratio} outside (0, 1)"
        )));
    }
    if labels.len() != graph.n() {
        return Err(GraphError::InvalidLabels(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.n()
        )));
    }
    let n = graph.n();
    let n_train = (ratio * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(GraphError::InvalidArgument(format!(
            "split leaves one side empty ({n_train} of {n} train nodes)"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut train_nodes: Vec<usize> = order[..n_train].to_vec();
    let mut test_nodes: Vec<usize> = order[n_train..].to_vec();
    train_nodes.sort_unstable();
    test_nodes.sort_unstable();

    let part = |nodes: Vec<usize>| -> Result<SplitPart, GraphError> {
        Ok(SplitPart {
            graph: induced_subgraph(graph, &nodes)?,
            labels: labels.restrict(&nodes),
            nodes,
        })
    };
    Ok((part(train_nodes)?, part(test_nodes)?))
}

/// Independently removes each cross-label ("noisy") edge with probability
/// `p`; same-label edges are never touched.
pub fn purify_noisy_edges(
    graph: &FeatureGraph,
    labels: &Labeling,
    p: f64,
    seed: u64,
) -> Result<FeatureGraph, GraphError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GraphError::InvalidArgument(format!(
            "removal probability {p} outside [0, 1]"
        )));
    }
    if labels.len() != graph.n() {
        return Err(GraphError::InvalidLabels(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut kept_rows = Vec::new();
    for (pos, &(i, j)) in graph.edges().iter().enumerate() {
        let noisy = labels.label(i) != labels.label(j);
        if noisy && rng.random_bool(p) {
            continue;
        }
        edges.push((i, j));
        kept_rows.push(pos);
    }
    match graph.edge_features() {
        Some(rows) => FeatureGraph::with_edge_features(
            graph.d_n(),
            graph.features().to_vec(),
            edges,
            graph.d_e(),
            kept_rows.iter().map(|&p| rows[p].clone()).collect(),
        ),
        None => FeatureGraph::new(graph.d_n(), graph.features().to_vec(), edges),
    }
}
