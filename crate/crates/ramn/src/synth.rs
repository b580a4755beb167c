//! Synthetic community benchmark generator.
//!
//! Nodes fall into feature-separated communities; edges are mostly
//! intra-community, with a configurable fraction of noisy cross-community
//! links. The generator is fully seeded, so every experiment run can
//! rebuild its data.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::graph::{FeatureGraph, GraphError, Labeling, SparseRow};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Shape of a synthetic community benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Number of communities (= labels).
    pub communities: usize,
    /// Total node count; community sizes differ by at most one.
    pub nodes: usize,
    /// Node feature dimension; each community owns a disjoint block of it.
    pub feature_dim: usize,
    /// Standard deviation of Gaussian feature noise (features are clamped
    /// at zero afterwards).
    pub feature_noise: f64,
    /// Target average node degree; determines the edge count.
    pub avg_degree: f64,
    /// Fraction of edges drawn between communities instead of within one.
    pub noisy_edge_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            communities: 2,
            nodes: 200,
            feature_dim: 4,
            feature_noise: 0.5,
            avg_degree: 4.0,
            noisy_edge_fraction: 0.2,
        }
    }
}

impl SynthConfig {
    /// Checks the generator invariants without drawing anything.
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.communities < 2 {
            return Err(SynthError::InvalidArgument(
                "at least two communities are required".to_string(),
            ));
        }
        if self.nodes < 2 * self.communities {
            return Err(SynthError::InvalidArgument(format!(
                "{} nodes cannot host {} communities of at least two nodes",
                self.nodes, self.communities
            )));
        }
        if self.feature_dim < self.communities {
            return Err(SynthError::InvalidArgument(format!(
                "feature dimension {} cannot give {} communities disjoint support",
                self.feature_dim, self.communities
            )));
        }
        if self.feature_noise < 0.0 || self.feature_noise.is_nan() {
            return Err(SynthError::InvalidArgument(format!(
                "feature noise must be nonnegative, got {}",
                self.feature_noise
            )));
        }
        if self.avg_degree < 0.0 || self.avg_degree.is_nan() {
            return Err(SynthError::InvalidArgument(format!(
                "average degree must be nonnegative, got {}",
                self.avg_degree
            )));
        }
        if !(0.0..=1.0).contains(&self.noisy_edge_fraction) {
            return Err(SynthError::InvalidArgument(format!(
                "noisy edge fraction must lie in [0, 1], got {}",
                self.noisy_edge_fraction
            )));
        }
        Ok(())
    }
}

/// The community of each node: contiguous, near-equal blocks.
fn community(i: usize, n: usize, k: usize) -> usize {
    i * k / n
}

/// Generates a seeded benchmark instance. Each node's features center on
/// its community's block of the feature space (one everywhere inside the
/// block, zero outside) plus Gaussian noise clamped at zero; edge targets
/// are `nodes * avg_degree / 2` total, split into cross-community and
/// intra-community pairs sampled uniformly without replacement (targets
/// are capped by the available pairs).
pub fn generate_synthetic(
    config: &SynthConfig,
    seed: u64,
) -> Result<(FeatureGraph, Labeling), SynthError> {
    config.validate()?;
    let (n, k, d) = (config.nodes, config.communities, config.feature_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let labels: Vec<usize> = (0..n).map(|i| community(i, n, k)).collect();

    let mut features: Vec<SparseRow> = Vec::with_capacity(n);
    for &label in &labels {
        let block = (label * d / k)..((label + 1) * d / k);
        let mut row: SparseRow = Vec::new();
        for f in 0..d {
            let mean = if block.contains(&f) { 1.0 } else { 0.0 };
            let noise: f64 = StandardNormal.sample(&mut rng);
            let value = (mean + config.feature_noise * noise).max(0.0);
            if value > 0.0 {
                row.push((f, value));
            }
        }
        features.push(row);
    }

    let mut intra_pool = Vec::new();
    let mut cross_pool = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] == labels[j] {
                intra_pool.push((i, j));
            } else {
                cross_pool.push((i, j));
            }
        }
    }
    let target = (n as f64 * config.avg_degree / 2.0).round() as usize;
    let cross_target = ((target as f64) * config.noisy_edge_fraction).round() as usize;
    let cross_count = cross_target.min(cross_pool.len());
    let intra_count = (target - cross_count.min(target)).min(intra_pool.len());

    let mut edges = sample_prefix(&mut intra_pool, intra_count, &mut rng);
    edges.extend(sample_prefix(&mut cross_pool, cross_count, &mut rng));
    edges.sort_unstable();

    let graph = FeatureGraph::new(d, features, edges)?;
    let labeling = Labeling::new(labels, k)?;
    Ok((graph, labeling))
}

/// Uniform sample of `count` pairs without replacement (partial
/// Fisher-Yates prefix).
fn sample_prefix(
    pool: &mut [(usize, usize)],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let count = count.min(pool.len());
    for idx in 0..count {
        let swap = rng.random_range(idx..pool.len());
        pool.swap(idx, swap);
    }
    pool[..count].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seeded_and_validated() {
        let config = SynthConfig::default();
        let (g1, l1) = generate_synthetic(&config, 42).unwrap();
        let (g2, l2) = generate_synthetic(&config, 42).unwrap();
        assert_eq!(g1.edges(), g2.edges());
        assert_eq!(g1.features(), g2.features());
        assert_eq!(l1, l2);
        let (g3, _) = generate_synthetic(&config, 43).unwrap();
        assert_ne!(g1.features(), g3.features());

        assert!(generate_synthetic(
            &SynthConfig {
                communities: 1,
                ..config.clone()
            },
            0
        )
        .is_err());
        assert!(generate_synthetic(
            &SynthConfig {
                feature_dim: 1,
                ..config.clone()
            },
            0
        )
        .is_err());
        assert!(generate_synthetic(
            &SynthConfig {
                noisy_edge_fraction: 1.5,
                ..config
            },
            0
        )
        .is_err());
    }

    #[test]
    fn communities_and_edge_mix_follow_the_config() {
        let config = SynthConfig {
            communities: 2,
            nodes: 100,
            feature_dim: 4,
            feature_noise: 0.3,
            avg_degree: 4.0,
            noisy_edge_fraction: 0.25,
        };
        let (graph, labels) = generate_synthetic(&config, 7).unwrap();
        assert_eq!(graph.n(), 100);
        let ones = labels.as_slice().iter().filter(|&&l| l == 1).count();
        assert_eq!(ones, 50);

        let target = 200;
        assert_eq!(graph.edge_count(), target);
        let cross = graph
            .edges()
            .iter()
            .filter(|&&(i, j)| labels.label(i) != labels.label(j))
            .count();
        assert_eq!(cross, 50);
        let mut seen = graph.edges().to_vec();
        seen.dedup();
        assert_eq!(seen.len(), graph.edge_count(), "duplicate edges");
        assert!(graph.edges().iter().all(|&(i, j)| i < j));
    }

    #[test]
    fn features_carry_the_community_signal() {
        let config = SynthConfig {
            feature_noise: 0.2,
            ..SynthConfig::default()
        };
        let (graph, labels) = generate_synthetic(&config, 11).unwrap();
        let d = graph.d_n();
        let mut in_block = (0.0, 0usize);
        let mut off_block = (0.0, 0usize);
        for i in 0..graph.n() {
            let block = (labels.label(i) * d / 2)..((labels.label(i) + 1) * d / 2);
            let mut dense = vec![0.0; d];
            for &(f, v) in graph.feature_row(i) {
                dense[f] = v;
            }
            for (f, &v) in dense.iter().enumerate() {
                if block.contains(&f) {
                    in_block = (in_block.0 + v, in_block.1 + 1);
                } else {
                    off_block = (off_block.0 + v, off_block.1 + 1);
                }
            }
        }
        let in_mean = in_block.0 / in_block.1 as f64;
        let off_mean = off_block.0 / off_block.1 as f64;
        assert!(in_mean > 0.8, "in-community mean {in_mean}");
        assert!(off_mean < 0.3, "off-community mean {off_mean}");
    }
}
