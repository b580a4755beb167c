//! Empirical certification of the solver / attack / training guarantees.
//!
//! Each check exercises one contract the stack is built on — strong duality
//! of the attacker relaxation, the relaxation sandwich around the exact
//! attack, the rounding scheme's expectation guarantee and marginals, the
//! worst-case relaxation-gap bound, the zero-budget reduction to plain
//! max-margin training, binary inference integrality, and the benchmark
//! attack pattern — over freshly drawn seeded instances, and reports a
//! single pass/fail line. Tolerances and runtime budgets are pinned here as
//! constants; the `certify-bounds` subcommand and the acceptance test both
//! call into this module so there is exactly one definition of "passing".

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ramn::attack::{attacker_parametric_lp, rround};
use ramn::graph::{load_dataset, SparseRow};
use ramn::robust::dualize_parametric_lp;
use ramn::solver::{solve_lp, solve_qp, ConvexQp, IneqDir, LinExpr, SolveStatus, VarSpace, LP_TOL};
use ramn::util::{derive_seed, mean_stderr};
use ramn::{
    brute_force_attack, build_attacker_lp, generate_attack, map_inference, theorem2_bound,
    AttackBudget, AttackerObjectiveTerms, FeatureGraph, FractionalAttack, Labeling, SynthConfig,
    Weights,
};

use crate::config::{AttackKind, DatasetSource, ExperimentConfig, Trainer};
use crate::experiment::ExperimentReport;
use crate::CliError;

/// Master seed for every certification instance draw.
pub const CERT_SEED: u64 = 0x5EED_CA7A;

/// Primal/dual optimum agreement required by the duality round trip.
pub const DUALITY_TOL: f64 = 1e-5;

/// Ordering slack allowed in the relaxation sandwich (pure solver noise).
pub const SANDWICH_TOL: f64 = 1e-7;

/// Divisor in the rounding guarantee: K + 4 at K = 2.
pub const ROUNDING_DIVISOR: f64 = 6.0;

/// Absolute frequency tolerance for the rounding marginals (1e5 draws).
pub const MARGINAL_TOL: f64 = 0.01;

/// Numerical slack on the relaxation-gap bound, covering accumulated
/// interior-point tolerance from the training QP and the two inner solves.
pub const GAP_SLACK: f64 = 1e-6;

/// Weight agreement required by the zero-budget reduction.
pub const WEIGHT_MATCH_TOL: f64 = 1e-5;

/// Solve tolerance for the zero-budget comparison: both formulations are
/// solved well past the shipped training tolerance so the weight match
/// certifies the assembled problems rather than interior-point wobble.
pub const REFERENCE_QP_TOL: f64 = 1e-9;

/// Mean-accuracy slack for the monotone-degradation and heuristic-ordering
/// pattern checks (one test node is 0.01 at the benchmark size).
pub const PATTERN_SLACK: f64 = 0.01;

/// Clean-accuracy agreement required between the robust and plain trainers.
pub const CLEAN_GAP_TOL: f64 = 0.05;

/// Expected node/edge counts of the optional preprocessed dataset exports.
pub const DATASET_CONSTANTS: [(&str, usize, usize); 2] =
    [("reuters.amn", 862, 1860), ("webkb.amn", 877, 2282)];

/// Result of one certification check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// True when the check had nothing to verify (missing optional data).
    pub skipped: bool,
    pub detail: String,
}

impl CheckOutcome {
    /// One human-readable report line.
    pub fn line(&self) -> String {
        let verdict = if self.skipped {
            "SKIP"
        } else if self.passed {
            "PASS"
        } else {
            "FAIL"
        };
        format!("{verdict}  {} — {}", self.name, self.detail)
    }
}

/// Runs a check body under a wall-clock budget, folding errors and budget
/// overruns into a failed outcome.
fn timed_check(
    name: &'static str,
    budget_s: f64,
    body: impl FnOnce() -> Result<(bool, String), CliError>,
) -> CheckOutcome {
    let t0 = Instant::now();
    match body() {
        Ok((passed, detail)) => {
            let elapsed = t0.elapsed().as_secs_f64();
            let within = elapsed <= budget_s;
            CheckOutcome {
                name,
                passed: passed && within,
                skipped: false,
                detail: format!("{detail}; {elapsed:.1}s of {budget_s:.0}s budget"),
            }
        }
        Err(e) => CheckOutcome {
            name,
            passed: false,
            skipped: false,
            detail: format!("errored: {e}"),
        },
    }
}

/// Draws a random associative instance: nonnegative sparse features, a
/// Bernoulli edge set capped at `max_edges`, uniform labels, node weights
/// in [-1, 1) and edge weights in [0, 1).
fn random_instance(
    seed: u64,
    n: usize,
    k: usize,
    d: usize,
    p_edge: f64,
    max_edges: usize,
) -> (Weights, FeatureGraph, Labeling) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features: Vec<SparseRow> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row: SparseRow = Vec::new();
        for f in 0..d {
            if rng.random_range(0.0..1.0) < 0.8 {
                row.push((f, rng.random_range(0.0..1.0)));
            }
        }
        if row.is_empty() {
            // An all-zero row would tie the node's label potentials exactly,
            // putting the instance on the degenerate set where LP optima
            // stop being unique; every node keeps at least one feature.
            row.push((0, rng.random_range(0.1..1.0)));
        }
        features.push(row);
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_range(0.0..1.0) < p_edge && edges.len() < max_edges {
                edges.push((i, j));
            }
        }
    }
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let w_n: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let w_e: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    let graph = FeatureGraph::new(d, features, edges).expect("generated instance is valid");
    let labeling = Labeling::new(labels, k).expect("generated labels are valid");
    let weights = Weights::new(w_n, w_e).expect("generated weights are valid");
    (weights, graph, labeling)
}

/// Strong duality round trip: on 100 random instances (binary labels,
/// deletion budgets 0–2, both attack variants), the dualized relaxation
/// instantiated at the weights reaches the same optimum as the attacker LP.
pub fn check_duality_round_trip() -> CheckOutcome {
    timed_check("duality-round-trip", 120.0, || {
        let mut max_gap: f64 = 0.0;
        for t in 0..100u64 {
            let n = 5 + (t as usize % 8);
            let (w, graph, labels) =
                random_instance(derive_seed(CERT_SEED, 100 + t), n, 2, 2, 0.35, usize::MAX);
            let deletions = (t as usize % 3).min(graph.edge_count());
            let budget = if t % 2 == 0 {
                AttackBudget::delete_only(deletions)
            } else {
                AttackBudget::add_delete(deletions, t as usize % 3)
            };
            let primal = solve_lp(&build_attacker_lp(&w, &graph, &labels, &budget)?, LP_TOL)?;
            let dual_lp =
                dualize_parametric_lp(&attacker_parametric_lp(&graph, &labels, &budget)?)?
                    .instantiate_at(&w.flatten());
            let dual = solve_lp(&dual_lp, LP_TOL)?;
            max_gap = max_gap.max((primal.objective - dual.objective).abs());
        }
        Ok((
            max_gap <= DUALITY_TOL,
            format!("max primal/dual gap {max_gap:.2e} over 100 instances (tol {DUALITY_TOL:.0e})"),
        ))
    })
}

/// Relaxation sandwich: on 50 oracle-sized instances the exhaustive
/// optimum never exceeds the LP optimum, and the rounded plan's objective
/// never exceeds the exhaustive optimum.
pub fn check_relaxation_sandwich() -> CheckOutcome {
    timed_check("relaxation-sandwich", 300.0, || {
        let mut worst_upper: f64 = f64::NEG_INFINITY; // brute − lp, want ≤ 0
        let mut worst_lower: f64 = f64::NEG_INFINITY; // plan − brute, want ≤ 0
        for t in 0..50u64 {
            let seed = derive_seed(CERT_SEED, 200 + t);
            let (w, graph, labels, budget) = if t % 2 == 0 {
                let n = 5 + (t as usize / 2 % 4);
                let (w, g, y) = random_instance(seed, n, 2, 2, 0.35, 10);
                let budget = AttackBudget::delete_only(2.min(g.edge_count()));
                (w, g, y, budget)
            } else {
                let n = 5 + (t as usize / 2 % 2);
                let (w, g, y) = random_instance(seed, n, 2, 2, 0.4, 8);
                let budget = AttackBudget::add_delete(1.min(g.edge_count()), 1);
                (w, g, y, budget)
            };
            let lp = solve_lp(&build_attacker_lp(&w, &graph, &labels, &budget)?, LP_TOL)?;
            let (_, brute_plan) = brute_force_attack(&w, &graph, &labels, &budget)?;
            let brute = brute_plan.objective.expect("exhaustive plans carry objectives");
            let plan = generate_attack(&w, &graph, &labels, &budget, 1000, seed)?;
            let rounded = plan.objective.expect("optimized plans carry objectives");
            worst_upper = worst_upper.max(brute - lp.objective);
            worst_lower = worst_lower.max(rounded - brute);
        }
        Ok((
            worst_upper <= SANDWICH_TOL && worst_lower <= SANDWICH_TOL,
            format!(
                "max (exhaustive − relaxed) {worst_upper:.2e}, max (rounded − exhaustive) \
                 {worst_lower:.2e} over 50 instances (tol {SANDWICH_TOL:.0e})"
            ),
        ))
    })
}

/// Rounding guarantee: on 20 fixed fractional points, the mean rounded
/// objective over 1000 seeded trials stays above the fractional base value
/// plus the agreement value over K + 4, minus three standard errors.
pub fn check_rounding_guarantee() -> CheckOutcome {
    timed_check("rounding-guarantee", 180.0, || {
        let mut worst_slack = f64::INFINITY; // mean − bound + 3se, want ≥ 0
        for t in 0..20u64 {
            let seed = derive_seed(CERT_SEED, 300 + t);
            let n = 6 + (t as usize % 3);
            let (w, graph, labels) = random_instance(seed, n, 2, 2, 0.4, 12);
            let budget = AttackBudget::delete_only(graph.edge_count());
            let terms = AttackerObjectiveTerms::new(&w, &graph, &labels, &budget)?;
            let frac = random_fractional(&terms, budget, derive_seed(seed, 1));

            let base = terms.base_value(frac.y(), frac.e());
            let agreement = terms.agreement_value(frac.z(), frac.z_bar());
            let bound = base + agreement / ROUNDING_DIVISOR;

            let mut values = Vec::with_capacity(1000);
            for trial in 0..1000u64 {
                let (labeling, kept) = rround(&frac, derive_seed(seed, 7000 + trial))?;
                values.push(terms.integral_value(labeling.as_slice(), &kept, &[]));
            }
            let (mean, se) = mean_stderr(&values);
            worst_slack = worst_slack.min(mean - bound + 3.0 * se);
        }
        Ok((
            worst_slack >= 0.0,
            format!(
                "min (mean − bound + 3·stderr) {worst_slack:.4} over 20 fractional points \
                 × 1000 trials (divisor {ROUNDING_DIVISOR})"
            ),
        ))
    })
}

/// A random fractional attack point: per-node label distributions, kept
/// fractions in [0, 1], agreement variables at their closed-form optimum.
fn random_fractional(
    terms: &AttackerObjectiveTerms,
    budget: AttackBudget,
    seed: u64,
) -> FractionalAttack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k, m) = (terms.n(), terms.k(), terms.edges().len());
    let mut y = Vec::with_capacity(n * k);
    for _ in 0..n {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        y.extend(raw.into_iter().map(|v| v / total));
    }
    let e: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
    FractionalAttack::from_parts(terms, y, e, Vec::new(), budget)
        .expect("constructed point satisfies the relaxation constraints")
}

/// Rounding marginals: over 1e5 draws on a fixed fractional point, label
/// and kept-edge frequencies match the fractional values within ±0.01 and
/// each joint agreement frequency reaches its fractional value over K + 4
/// minus 0.01.
pub fn check_rounding_marginals() -> CheckOutcome {
    timed_check("rounding-marginals", 120.0, || {
        let (w, graph, labels) = fixed_marginal_instance();
        let budget = AttackBudget::delete_only(graph.edge_count());
        let terms = AttackerObjectiveTerms::new(&w, &graph, &labels, &budget)?;
        let frac = random_fractional(&terms, budget, derive_seed(CERT_SEED, 400));

        let (n, k, m) = (graph.n(), labels.k(), graph.edge_count());
        let draws = 100_000u64;
        let mut label_counts = vec![0u64; n * k];
        let mut kept_counts = vec![0u64; m];
        let mut joint_counts = vec![0u64; m * k];
        for trial in 0..draws {
            let (labeling, kept) = rround(&frac, derive_seed(CERT_SEED, 500_000 + trial))?;
            for i in 0..n {
                label_counts[i * k + labeling.label(i)] += 1;
            }
            for (e, &(i, j)) in graph.edges().iter().enumerate() {
                if kept[e] {
                    kept_counts[e] += 1;
                    if labeling.label(i) == labeling.label(j) {
                        joint_counts[e * k + labeling.label(i)] += 1;
                    }
                }
            }
        }

        let freq = |count: u64| count as f64 / draws as f64;
        let mut max_dev: f64 = 0.0;
        for i in 0..n {
            for kk in 0..k {
                max_dev = max_dev.max((freq(label_counts[i * k + kk]) - frac.y()[i * k + kk]).abs());
            }
        }
        for (&count, &kept_frac) in kept_counts.iter().zip(frac.e()) {
            max_dev = max_dev.max((freq(count) - kept_frac).abs());
        }
        let mut min_joint_slack = f64::INFINITY;
        for e in 0..m {
            for kk in 0..k {
                let lower = frac.z()[e * k + kk] / ROUNDING_DIVISOR - MARGINAL_TOL;
                min_joint_slack = min_joint_slack.min(freq(joint_counts[e * k + kk]) - lower);
            }
        }
        Ok((
            max_dev <= MARGINAL_TOL && min_joint_slack >= 0.0,
            format!(
                "max marginal deviation {max_dev:.4} (tol {MARGINAL_TOL}), min joint slack \
                 {min_joint_slack:.4} over {draws} draws"
            ),
        ))
    })
}

/// The fixed instance behind the marginal check: six binary-labeled nodes
/// with six edges, paired with one fixed fractional point.
fn fixed_marginal_instance() -> (Weights, FeatureGraph, Labeling) {
    random_instance(derive_seed(CERT_SEED, 401), 6, 2, 2, 1.0, 6)
}

/// Relaxation gap bound: on 10 oracle-sized instances, the relaxed robust
/// objective exceeds the exact one by at most the certified worst case.
pub fn check_relaxation_gap_bound() -> CheckOutcome {
    timed_check("relaxation-gap-bound", 300.0, || {
        let c = 1.0;
        let mut worst_excess = f64::NEG_INFINITY; // gap − bound, want ≤ 0
        let mut worst_order = f64::NEG_INFINITY; // brute − lp sanity, want ≤ 0
        for t in 0..10u64 {
            let seed = derive_seed(CERT_SEED, 600 + t);
            let n = 5 + (t as usize % 3);
            let (_, graph, labels) = random_instance(seed, n, 2, 2, 0.4, 10);
            let m = graph.edge_count();
            let d_minus = (1 + t as usize % 2).min(m);
            let budget = if t % 2 == 0 {
                AttackBudget::delete_only(d_minus)
            } else {
                AttackBudget::add_delete(d_minus, 1)
            };
            let w = ramn::train(&graph, &labels, c, &budget)?;
            let lp = solve_lp(&build_attacker_lp(&w, &graph, &labels, &budget)?, LP_TOL)?;
            let (_, brute_plan) = brute_force_attack(&w, &graph, &labels, &budget)?;
            let brute = brute_plan.objective.expect("exhaustive plans carry objectives");
            let gap = c * (lp.objective - brute);
            let bound = theorem2_bound(&w, c, m, budget.additions());
            worst_excess = worst_excess.max(gap - bound);
            worst_order = worst_order.max(brute - lp.objective);
        }
        Ok((
            worst_excess <= GAP_SLACK && worst_order <= SANDWICH_TOL,
            format!(
                "max (gap − bound) {worst_excess:.2e} over 10 trained instances \
                 (slack {GAP_SLACK:.0e})"
            ),
        ))
    })
}

/// Zero-budget reduction: training with no attack budget matches an
/// independently assembled max-margin QP in weights.
pub fn check_zero_budget_reduction() -> CheckOutcome {
    timed_check("zero-budget-reduction", 60.0, || {
        let c = 1.0;
        let mut max_diff: f64 = 0.0;
        for t in 0..10u64 {
            let k = if t % 2 == 0 { 2 } else { 3 };
            let n = 6 + (t as usize % 5);
            let (_, graph, labels) =
                random_instance(derive_seed(CERT_SEED, 700 + t), n, k, 2, 0.4, usize::MAX);
            let problem = ramn::build_robust_qp(&graph, &labels, c, &AttackBudget::delete_only(0))?;
            let sol = solve_qp(problem.qp(), REFERENCE_QP_TOL)?;
            if sol.status != SolveStatus::Optimal {
                return Err(CliError::InvalidArgument(format!(
                    "zero-budget robust training did not reach optimality: {:?}",
                    sol.status
                )));
            }
            let trained = problem.weights(&sol)?;
            let reference = independent_max_margin(&graph, &labels, c)?;
            let diff = trained
                .flatten()
                .iter()
                .zip(reference.flatten().iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            max_diff = max_diff.max(diff);
        }
        Ok((
            max_diff <= WEIGHT_MATCH_TOL,
            format!(
                "max weight deviation {max_diff:.2e} over 10 instances (tol {WEIGHT_MATCH_TOL:.0e})"
            ),
        ))
    })
}

/// Assembles and solves plain max-margin AMN training from first
/// principles: minimize ½‖w‖² + C·(margin bound) where the bound dualizes
/// the inference relaxation on the intact graph, with every edge kept.
fn independent_max_margin(
    graph: &FeatureGraph,
    yhat: &Labeling,
    c: f64,
) -> Result<Weights, CliError> {
    let (n, k, d_n, m) = (graph.n(), yhat.k(), graph.d_n(), graph.edge_count());
    let flat_len = k * d_n + k;

    let mut vars = VarSpace::new();
    let w_n = vars.add_block("base_w_n", k * d_n, f64::NEG_INFINITY, f64::INFINITY);
    let w_e = vars.add_block("base_w_e", k, 0.0, f64::INFINITY);
    let margin = vars.add_block("margin", n, f64::NEG_INFINITY, f64::INFINITY);
    let slack_i = vars.add_block("slack_i", m * k, 0.0, f64::INFINITY);
    let slack_j = vars.add_block("slack_j", m * k, 0.0, f64::INFINITY);

    let mut qp = ConvexQp::new(vars);
    for slot in &mut qp.quad_diag[..flat_len] {
        *slot = 1.0;
    }
    // Margin constant: N − Σ_i w_n^{ŷ_i}·x_i − Σ_{ŷ-agreeing edges} w_e^{ŷ}.
    qp.objective_offset = c * n as f64;
    for (i, x) in graph.features().iter().enumerate() {
        for &(f, v) in x {
            qp.linear[qp.vars.index(w_n, yhat.label(i) * d_n + f)] -= c * v;
        }
    }
    for &(i, j) in graph.edges() {
        if yhat.label(i) == yhat.label(j) {
            qp.linear[qp.vars.index(w_e, yhat.label(i))] -= c;
        }
    }
    for i in 0..n {
        qp.linear[qp.vars.index(margin, i)] += c;
    }

    // Per (node, label): the margin variable covers that label's potential
    // plus what incident-edge slacks push onto the node.
    for i in 0..n {
        for kk in 0..k {
            let mut terms = vec![(qp.vars.index(margin, i), 1.0)];
            for (e, &(a, b)) in graph.edges().iter().enumerate() {
                if a == i {
                    terms.push((qp.vars.index(slack_i, e * k + kk), -1.0));
                } else if b == i {
                    terms.push((qp.vars.index(slack_j, e * k + kk), -1.0));
                }
            }
            for &(f, v) in &graph.features()[i] {
                terms.push((qp.vars.index(w_n, kk * d_n + f), -v));
            }
            qp.push_ineq(
                "potential",
                LinExpr::new(terms),
                IneqDir::Ge,
                -yhat.one_hot(i, kk),
            );
        }
    }
    // Per (edge, label): the two slacks jointly cover the agreement reward.
    for e in 0..m {
        for kk in 0..k {
            let terms = vec![
                (qp.vars.index(slack_i, e * k + kk), 1.0),
                (qp.vars.index(slack_j, e * k + kk), 1.0),
                (qp.vars.index(w_e, kk), -1.0),
            ];
            qp.push_ineq("agreement", LinExpr::new(terms), IneqDir::Ge, 0.0);
        }
    }

    let sol = solve_qp(&qp, REFERENCE_QP_TOL)?;
    if sol.status != SolveStatus::Optimal {
        return Err(CliError::InvalidArgument(format!(
            "independent max-margin training did not reach optimality: {:?}",
            sol.status
        )));
    }
    Ok(Weights::from_flat(k, d_n, &sol.primal[..flat_len], 1e-6)?)
}

/// Binary inference integrality: MAP inference reports an integral
/// relaxation on 100 random associative instances up to 50 nodes.
pub fn check_inference_integrality() -> CheckOutcome {
    timed_check("inference-integrality", 120.0, || {
        let mut integral_count = 0usize;
        for t in 0..100u64 {
            let n = 10 + (t as usize * 7 % 41);
            let (w, graph, _) =
                random_instance(derive_seed(CERT_SEED, 800 + t), n, 2, 3, 0.1, usize::MAX);
            if map_inference(&w, &graph)?.integral {
                integral_count += 1;
            }
        }
        Ok((
            integral_count == 100,
            format!("{integral_count}/100 instances returned integral relaxations (tol 1e-6)"),
        ))
    })
}

/// Dataset constants: when the preprocessed exports are present under
/// `dir`, their node/edge counts must match the published sizes. Absent
/// files are skipped with a notice rather than failed.
pub fn check_dataset_constants(dir: &Path) -> CheckOutcome {
    let mut details = Vec::new();
    let mut passed = true;
    let mut any_present = false;
    for (name, nodes, edges) in DATASET_CONSTANTS {
        let path = dir.join(name);
        if !path.exists() {
            details.push(format!("{} absent (expected {nodes}/{edges})", path.display()));
            continue;
        }
        any_present = true;
        match load_dataset(&path) {
            Ok((graph, _)) => {
                let ok = graph.n() == nodes && graph.edge_count() == edges;
                passed &= ok;
                let verdict = if ok {
                    "matches".to_string()
                } else {
                    format!("expected {nodes}/{edges}")
                };
                details.push(format!(
                    "{name}: {}/{} nodes/edges ({verdict})",
                    graph.n(),
                    graph.edge_count(),
                ));
            }
            Err(e) => {
                passed = false;
                details.push(format!("{name}: failed to load: {e}"));
            }
        }
    }
    CheckOutcome {
        name: "dataset-constants",
        passed,
        skipped: !any_present,
        detail: details.join("; "),
    }
}

/// The full `certify-bounds` suite, in report order.
pub fn bound_checks(data_dir: &Path) -> Vec<CheckOutcome> {
    vec![
        check_duality_round_trip(),
        check_relaxation_sandwich(),
        check_rounding_guarantee(),
        check_rounding_marginals(),
        check_relaxation_gap_bound(),
        check_zero_budget_reduction(),
        check_inference_integrality(),
        check_dataset_constants(data_dir),
    ]
}

// ---------------------------------------------------------------------------
// Benchmark pattern checks over a finished experiment report.

/// The pinned benchmark sweep behind the pattern checks: the noisy
/// two-community generator at 200 nodes, ten splits, every attack at
/// budget fractions {0.05, 0.1, 0.2}, all three trainers, and a modest
/// cross-validation grid sized for a single core.
pub fn acceptance_config(output: PathBuf) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetSource::Synthetic(SynthConfig {
            communities: 2,
            nodes: 200,
            feature_dim: 4,
            feature_noise: 1.0,
            avg_degree: 4.0,
            noisy_edge_fraction: 0.2,
        }),
        split_ratio: 0.5,
        seeds: 10,
        base_seed: 7,
        attacks: AttackKind::ALL.to_vec(),
        budgets: vec![0.05, 0.1, 0.2],
        trainers: Trainer::ALL.to_vec(),
        c_grid: vec![0.1, 1.0],
        b_grid: vec![0.0, 0.1, 0.2],
        cv_folds: 2,
        trials: 40,
        output,
        weights: None,
        plan: None,
    }
}

fn cell(
    report: &ExperimentReport,
    trainer: Trainer,
    attack: AttackKind,
    b: f64,
) -> Result<f64, String> {
    report
        .mean_accuracy(trainer, attack, b)
        .ok_or_else(|| format!("no aggregate for ({trainer}, {attack}, b={b})"))
}

fn pattern_outcome(name: &'static str, result: Result<(bool, String), String>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome {
            name,
            passed,
            skipped: false,
            detail,
        },
        Err(msg) => CheckOutcome {
            name,
            passed: false,
            skipped: false,
            detail: msg,
        },
    }
}

/// Benchmark attack pattern over a finished report: the plain trainer
/// degrades monotonically with the budget, the robust trainer matches it
/// clean and dominates it under attack, and the strongest attack pushes
/// the plain trainer below the structure-blind baseline but not the robust
/// one.
pub fn benchmark_pattern_checks(report: &ExperimentReport) -> Vec<CheckOutcome> {
    let budgets = [0.05, 0.1, 0.2];
    let optimized = [AttackKind::StructD, AttackKind::StructAd];

    let monotone = pattern_outcome("plain-degradation-monotone", (|| {
        let mut detail = Vec::new();
        let mut passed = true;
        for attack in optimized {
            let series: Vec<f64> = budgets
                .iter()
                .map(|&b| cell(report, Trainer::Amn, attack, b))
                .collect::<Result<_, _>>()?;
            let ok = series.windows(2).all(|w| w[1] <= w[0] + PATTERN_SLACK);
            passed &= ok;
            detail.push(format!(
                "{attack}: {}",
                series
                    .iter()
                    .map(|a| format!("{a:.3}"))
                    .collect::<Vec<_>>()
                    .join(" ≥ ")
            ));
        }
        Ok((passed, format!("plain accuracy vs budget — {}", detail.join("; "))))
    })());

    let dominance = pattern_outcome("robust-dominates-under-attack", (|| {
        let mut detail = Vec::new();
        let mut passed = true;
        for attack in optimized {
            for b in [0.1, 0.2] {
                let amn = cell(report, Trainer::Amn, attack, b)?;
                let ramn = cell(report, Trainer::RAmn, attack, b)?;
                passed &= ramn >= amn;
                detail.push(format!("{attack}@{b}: robust {ramn:.3} vs plain {amn:.3}"));
            }
        }
        Ok((passed, detail.join("; ")))
    })());

    let clean = pattern_outcome("clean-accuracy-agreement", (|| {
        let amn = cell(report, Trainer::Amn, AttackKind::None, 0.0)?;
        let ramn = cell(report, Trainer::RAmn, AttackKind::None, 0.0)?;
        Ok((
            (amn - ramn).abs() <= CLEAN_GAP_TOL,
            format!(
                "clean robust {ramn:.3} within {CLEAN_GAP_TOL} of clean plain {amn:.3}"
            ),
        ))
    })());

    let baseline = pattern_outcome("baseline-crossover", (|| {
        let amn = cell(report, Trainer::Amn, AttackKind::StructAd, 0.2)?;
        let ramn = cell(report, Trainer::RAmn, AttackKind::StructAd, 0.2)?;
        let svm = cell(report, Trainer::Svm, AttackKind::StructAd, 0.2)?;
        Ok((
            amn < svm && ramn > svm,
            format!(
                "at the strongest attack: plain {amn:.3} < baseline {svm:.3} < robust {ramn:.3}"
            ),
        ))
    })());

    vec![monotone, dominance, clean, baseline]
}

/// Optimized-versus-random ordering: at budget fraction 0.1, the optimized
/// attacks degrade the plain trainer at least as much as their random
/// counterparts.
pub fn attack_ordering_checks(report: &ExperimentReport) -> Vec<CheckOutcome> {
    let pairs = [
        (
            "optimized-deletion-beats-random",
            AttackKind::StructD,
            AttackKind::StructRs,
        ),
        (
            "optimized-add-delete-beats-random",
            AttackKind::StructAd,
            AttackKind::StructRsad,
        ),
    ];
    pairs
        .into_iter()
        .map(|(name, optimized, random)| {
            pattern_outcome(name, (|| {
                let opt = cell(report, Trainer::Amn, optimized, 0.1)?;
                let rnd = cell(report, Trainer::Amn, random, 0.1)?;
                Ok((
                    opt <= rnd + PATTERN_SLACK,
                    format!("plain accuracy {opt:.3} under {optimized} vs {rnd:.3} under {random}"),
                ))
            })())
        })
        .collect()
}
