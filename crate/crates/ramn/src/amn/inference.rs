//! MAP inference for associative Markov networks via LP relaxation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

use super::{check_dims, score, AmnError, Weights};
use crate::graph::{FeatureGraph, Labeling};
use crate::solver::{
    solve_lp, IneqDir, LinExpr, LinearProgram, Sense, SolveStatus, VarSpace, LP_TOL,
};
use crate::util::derive_seed;

/// Maximum per-entry distance from {0, 1} for a relaxed solution to be
/// snapped to an integral labeling.
pub(crate) const INTEGRALITY_TOL: f64 = 1e-6;

/// Number of randomized rounding trials when the relaxation is fractional.
const ROUNDING_TRIALS: usize = 100;

/// Hard cap on rounding phases before reporting a stall.
const MAX_PHASES: usize = 1_000_000;

/// Seed for the rounding fallback; trial streams are derived from it.
const ROUNDING_SEED: u64 = 0x1abe_11ed;

/// Outcome of MAP inference.
#[derive(Debug, Clone)]
pub struct InferenceResult {
    /// The integral labeling returned to the caller.
    pub labeling: Labeling,
    /// Optimal value of the LP relaxation (an upper bound on the best
    /// integral score).
    pub relaxation_value: f64,
    /// Whether the relaxation itself was integral (up to tolerance), in
    /// which case `labeling` attains `relaxation_value`.
    pub integral: bool,
}

/// Finds the highest-scoring labeling of `graph` under `w`.
///
/// Solves the standard relaxation with per-node label distributions, edge
/// agreement variables capped by both endpoint marginals, and the
/// associativity of `w` guaranteeing the edge terms are rewarded only for
/// agreement. With two labels the relaxation is integral; otherwise a
/// fractional solution is rounded by the best of [`ROUNDING_TRIALS`]
/// label-phase passes.
pub fn map_inference(w: &Weights, graph: &FeatureGraph) -> Result<InferenceResult, AmnError> {
    check_dims(w, graph, None)?;
    let n = graph.n();
    let k = w.k();

    if graph.edge_count() == 0 || w.edge_weights().iter().all(|&v| v == 0.0) {
        return Ok(decomposed_argmax(w, graph));
    }

    let mut vars = VarSpace::new();
    let y_block = vars.add_block("y", n * k, 0.0, f64::INFINITY);
    let z_block = vars.add_block("z", graph.edge_count() * k, 0.0, f64::INFINITY);
    let mut lp = LinearProgram::new(vars, Sense::Maximize);

    for i in 0..n {
        for kk in 0..k {
            lp.objective[lp.vars.index(y_block, i * k + kk)] =
                w.node_potential(graph.feature_row(i), kk);
        }
    }
    for e in 0..graph.edge_count() {
        for kk in 0..k {
            lp.objective[lp.vars.index(z_block, e * k + kk)] = w.edge(kk);
        }
    }

    for i in 0..n {
        let terms = (0..k)
            .map(|kk| (lp.vars.index(y_block, i * k + kk), 1.0))
            .collect();
        lp.push_eq("node_simplex", LinExpr::new(terms), 1.0);
    }
    for (e, &(i, j)) in graph.edges().iter().enumerate() {
        for kk in 0..k {
            let z = lp.vars.index(z_block, e * k + kk);
            lp.push_ineq(
                "agree_i",
                LinExpr::new(vec![(z, 1.0), (lp.vars.index(y_block, i * k + kk), -1.0)]),
                IneqDir::Le,
                0.0,
            );
            lp.push_ineq(
                "agree_j",
                LinExpr::new(vec![(z, 1.0), (lp.vars.index(y_block, j * k + kk), -1.0)]),
                IneqDir::Le,
                0.0,
            );
        }
    }

    let sol = solve_lp(&lp, LP_TOL)?;
    if sol.status != SolveStatus::Optimal {
        return Err(AmnError::SolveFailed {
            status: sol.status,
            diagnostics: sol.diagnostics.clone(),
        });
    }
    let marginals = sol.block("y").expect("y block exists").to_vec();
    let relaxation_value = sol.objective;

    let integral = marginals
        .iter()
        .all(|&v| (v - v.round()).abs() <= INTEGRALITY_TOL);
    let labeling = if integral {
        snap_argmax(&marginals, n, k)
    } else {
        let mut best: Option<(f64, Labeling)> = None;
        for trial in 0..ROUNDING_TRIALS {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(ROUNDING_SEED, trial as u64));
            let labels = round_nodes(&marginals, n, k, &mut rng)?;
            let candidate = Labeling::new(labels, k)?;
            let value = score(w, graph, &candidate)?;
            if best.as_ref().is_none_or(|(b, _)| value > *b) {
                best = Some((value, candidate));
            }
        }
        best.expect("at least one rounding trial").1
    };

    Ok(InferenceResult {
        labeling,
        relaxation_value,
        integral,
    })
}

/// With no effective edge coupling the relaxation decomposes per node and
/// the per-node argmax (ties toward the smaller label) is exactly optimal.
fn decomposed_argmax(w: &Weights, graph: &FeatureGraph) -> InferenceResult {
    let k = w.k();
    let mut labels = Vec::with_capacity(graph.n());
    let mut value = 0.0;
    for i in 0..graph.n() {
        let mut best_k = 0;
        let mut best_v = w.node_potential(graph.feature_row(i), 0);
        for kk in 1..k {
            let v = w.node_potential(graph.feature_row(i), kk);
            if v > best_v {
                best_v = v;
                best_k = kk;
            }
        }
        labels.push(best_k);
        value += best_v;
    }
    InferenceResult {
        labeling: Labeling::new(labels, k).expect("argmax labels are in range"),
        relaxation_value: value,
        integral: true,
    }
}

/// Snaps near-integral marginals to the per-node argmax, breaking exact
/// ties toward the smaller label.
fn snap_argmax(marginals: &[f64], n: usize, k: usize) -> Labeling {
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let row = &marginals[i * k..(i + 1) * k];
        let mut best = 0;
        for kk in 1..k {
            if row[kk] > row[best] {
                best = kk;
            }
        }
        labels.push(best);
    }
    Labeling::new(labels, k).expect("argmax labels are in range")
}

/// Label-phase randomized rounding of fractional node marginals.
///
/// Each phase draws a label uniformly and a threshold uniformly from
/// `[0, 1]`, then assigns the label to every still-unassigned node whose
/// marginal for that label strictly exceeds the threshold. Runs until all
/// nodes are assigned.
pub(crate) fn round_nodes(
    marginals: &[f64],
    n: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>, AmnError> {
    debug_assert_eq!(marginals.len(), n * k);
    let mut labels = vec![usize::MAX; n];
    let mut unassigned = n;
    let mut phases = 0usize;
    while unassigned > 0 {
        phases += 1;
        if phases > MAX_PHASES {
            return Err(AmnError::RoundingStalled(MAX_PHASES));
        }
        let kk = rng.random_range(0..k);
        let beta: f64 = rng.random_range(0.0..1.0);
        for i in 0..n {
            if labels[i] == usize::MAX && marginals[i * k + kk] > beta {
                labels[i] = kk;
                unassigned -= 1;
            }
        }
    }
    Ok(labels)
}
