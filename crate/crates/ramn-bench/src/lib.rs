//! Shared fixtures for the timing benchmarks: seeded instances plus trained
//! weights, sized so a full criterion run stays in the minutes range on one
//! core.

use ramn::{generate_synthetic, train, AttackBudget, FeatureGraph, Labeling, SynthConfig, Weights};

/// A ready-to-attack instance: graph, ground-truth labels, trained weights,
/// and a deletion budget of a fifth of the edges.
pub struct Fixture {
    pub graph: FeatureGraph,
    pub labels: Labeling,
    pub weights: Weights,
    pub budget: AttackBudget,
}

/// Builds a seeded two-community instance with `nodes` nodes and trains
/// plain AMN weights on it.
pub fn fixture(nodes: usize, seed: u64) -> Fixture {
    let config = SynthConfig {
        communities: 2,
        nodes,
        feature_dim: 4,
        feature_noise: 0.8,
        avg_degree: 4.0,
        noisy_edge_fraction: 0.2,
    };
    let (graph, labels) = generate_synthetic(&config, seed).expect("valid generator config");
    let weights =
        train(&graph, &labels, 1.0, &AttackBudget::delete_only(0)).expect("training succeeds");
    let budget = AttackBudget::delete_only(graph.edge_count() / 5);
    Fixture {
        graph,
        labels,
        weights,
        budget,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_seeded_and_consistent() {
        let a = fixture(30, 9);
        let b = fixture(30, 9);
        assert_eq!(a.graph.edges(), b.graph.edges());
        assert_eq!(a.weights.flatten(), b.weights.flatten());
        assert_eq!(a.budget.deletions(), a.graph.edge_count() / 5);
    }
}
