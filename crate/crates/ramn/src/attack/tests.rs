use approx::assert_abs_diff_eq;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::graph::{AttackBudget, FeatureGraph, Labeling, SparseRow};
use crate::solver::solve_lp;
use crate::util::mean_stderr;

fn random_instance(
    seed: u64,
    n: usize,
    k: usize,
    d: usize,
    p_edge: f64,
) -> (Weights, FeatureGraph, Labeling) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features: Vec<SparseRow> = Vec::with_capacity(n);
    for _ in 0..n {
        features.push((0..d).map(|t| (t, rng.random_range(0.0..2.0))).collect());
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p_edge) {
                edges.push((i, j));
            }
        }
    }
    let graph = FeatureGraph::new(d, features, edges).unwrap();
    let w_n = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let w_e = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
    let yhat = Labeling::new((0..n).map(|_| rng.random_range(0..k)).collect(), k).unwrap();
    (Weights::new(w_n, w_e).unwrap(), graph, yhat)
}

/// The attacker's objective for an integral attack, recomputed from first
/// principles: per-node potentials minus the prediction-agreement
/// indicator, minus the kept-edge penalty on originally agreeing
/// predictions, plus agreement rewards on surviving and added edges.
fn oracle_variable_value(
    w: &Weights,
    graph: &FeatureGraph,
    yhat: &Labeling,
    labels: &[usize],
    kept: &[bool],
    added: &[(usize, usize)],
) -> f64 {
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        total += w.node_potential(graph.feature_row(i), label);
        if label == yhat.label(i) {
            total -= 1.0;
        }
    }
    for (e, &(i, j)) in graph.edges().iter().enumerate() {
        if kept[e] && yhat.label(i) == yhat.label(j) {
            total -= w.edge(yhat.label(i));
        }
        if kept[e] && labels[i] == labels[j] {
            total += w.edge(labels[i]);
        }
    }
    for &(i, j) in added {
        if labels[i] == labels[j] {
            total += w.edge(labels[i]);
        }
    }
    total
}

/// Exhaustive integral optimum over labelings, deletion bitmasks, and
/// addition bitmasks, independent of the production enumerator.
fn oracle_best_value(
    w: &Weights,
    graph: &FeatureGraph,
    yhat: &Labeling,
    budget: &AttackBudget,
) -> f64 {
    let (n, k, m) = (graph.n(), yhat.k(), graph.edge_count());
    let non_edges = if budget.additions() == 0 {
        Vec::new()
    } else {
        reduced_non_edges(graph, yhat)
    };
    assert!(m < 16 && non_edges.len() < 16 && k.pow(n as u32) < 100_000);
    let mut best = f64::NEG_INFINITY;
    for code in 0..k.pow(n as u32) {
        let mut labels = vec![0usize; n];
        let mut rem = code;
        for l in &mut labels {
            *l = rem % k;
            rem /= k;
        }
        for del_mask in 0u32..1 << m {
            if del_mask.count_ones() as usize > budget.deletions() {
                continue;
            }
            let kept: Vec<bool> = (0..m).map(|e| del_mask & (1 << e) == 0).collect();
            for add_mask in 0u32..1 << non_edges.len() {
                if add_mask.count_ones() as usize > budget.additions() {
                    continue;
                }
                let added: Vec<(usize, usize)> = non_edges
                    .iter()
                    .enumerate()
                    .filter(|&(a, _)| add_mask & (1 << a) != 0)
                    .map(|(_, &p)| p)
                    .collect();
                if let Some(cap) = budget.degree_cap() {
                    let mut changes = vec![0usize; n];
                    for (e, &keep) in kept.iter().enumerate() {
                        if !keep {
                            let (i, j) = graph.edges()[e];
                            changes[i] += 1;
                            changes[j] += 1;
                        }
                    }
                    for &(i, j) in &added {
                        changes[i] += 1;
                        changes[j] += 1;
                    }
                    if changes.iter().any(|&c| c > cap) {
                        continue;
                    }
                }
                let value = oracle_variable_value(w, graph, yhat, &labels, &kept, &added);
                best = best.max(value);
            }
        }
    }
    best
}

fn addition_pairs(terms: &AttackerObjectiveTerms, additions: &[usize]) -> Vec<(usize, usize)> {
    additions.iter().map(|&a| terms.non_edges()[a]).collect()
}

#[test]
fn reduced_non_edges_lists_cross_label_non_adjacent_pairs() {
    // square 0-1-2-3-0 with labels (a, a, b, a): the only non-adjacent
    // pairs are the diagonals (0,2) and (1,3), and only (0,2) crosses
    let graph = FeatureGraph::new(
        1,
        vec![vec![]; 4],
        vec![(0, 1), (1, 2), (2, 3), (0, 3)],
    )
    .unwrap();
    let labels = Labeling::new(vec![0, 0, 1, 0], 2).unwrap();
    assert_eq!(reduced_non_edges(&graph, &labels), vec![(0, 2)]);
    let all_same = Labeling::new(vec![0, 0, 0, 0], 2).unwrap();
    assert!(reduced_non_edges(&graph, &all_same).is_empty());
}

#[test]
fn objective_terms_match_direct_formulas() {
    let (w, graph, yhat) = random_instance(11, 6, 3, 2, 0.5);
    let budget = AttackBudget::add_delete(2, 2);
    let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();

    let mut margin = graph.n() as f64;
    for i in 0..graph.n() {
        for kk in 0..3 {
            let expect = w.node_potential(graph.feature_row(i), kk) - yhat.one_hot(i, kk);
            assert_abs_diff_eq!(terms.node_coeff(i, kk), expect, epsilon = 1e-12);
        }
        margin -= w.node_potential(graph.feature_row(i), yhat.label(i));
    }
    assert_abs_diff_eq!(terms.margin_constant(), margin, epsilon = 1e-12);
    for (e, &(i, j)) in graph.edges().iter().enumerate() {
        let expect = if yhat.label(i) == yhat.label(j) {
            -w.edge(yhat.label(i))
        } else {
            0.0
        };
        assert_abs_diff_eq!(terms.deletion_coeff(e), expect, epsilon = 1e-12);
    }
    assert_eq!(terms.non_edges(), reduced_non_edges(&graph, &yhat).as_slice());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..25 {
        let labels: Vec<usize> = (0..graph.n()).map(|_| rng.random_range(0..3)).collect();
        let kept: Vec<bool> = (0..graph.edge_count()).map(|_| rng.random_bool(0.5)).collect();
        let n_adds = rng.random_range(0..=terms.non_edges().len().min(2));
        let additions: Vec<usize> = (0..n_adds).collect();
        let expect = oracle_variable_value(
            &w,
            &graph,
            &yhat,
            &labels,
            &kept,
            &addition_pairs(&terms, &additions),
        );
        assert_abs_diff_eq!(
            terms.integral_value(&labels, &kept, &additions),
            expect,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            terms.margin_value(expect),
            expect + margin,
            epsilon = 1e-12
        );
    }
}

#[test]
fn zero_budget_relaxation_reports_the_clean_inner_value() {
    for seed in [1u64, 2, 3] {
        let (w, graph, yhat) = random_instance(seed, 6, 2, 2, 0.4);
        let budget = AttackBudget::delete_only(0);
        let lp = build_attacker_lp(&w, &graph, &yhat, &budget).unwrap();
        let sol = solve_lp(&lp, 1e-8).unwrap();

        // every keep decision is pinned to one, so the optimum is the
        // clean worst-case margin over labelings; the two-label
        // relaxation is exact, so the values agree
        let kept = vec![true; graph.edge_count()];
        let mut clean_best = f64::NEG_INFINITY;
        for code in 0..1usize << graph.n() {
            let labels: Vec<usize> = (0..graph.n()).map(|i| (code >> i) & 1).collect();
            let value = oracle_variable_value(&w, &graph, &yhat, &labels, &kept, &[]);
            clean_best = clean_best.max(value);
        }
        let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();
        let expected = terms.margin_value(clean_best);
        assert_abs_diff_eq!(sol.objective, expected, epsilon = 1e-5);

        let frac = FractionalAttack::from_solution(&sol, &terms, budget).unwrap();
        for &e in frac.e() {
            assert_abs_diff_eq!(e, 1.0, epsilon = 1e-6);
        }

        let plan = generate_attack(&w, &graph, &yhat, &budget, 4, seed).unwrap();
        assert!(plan.deletions.is_empty() && plan.additions.is_empty());
        assert_abs_diff_eq!(plan.objective.unwrap(), expected, epsilon = 1e-5);
    }
}

#[test]
fn lone_edge_instance_solves_by_hand() {
    // two nodes predicted alike, zero node potentials, agreement weight
    // only on their shared label: the attacker flips both predictions and
    // deletes the edge, gaining exactly the two misclassifications
    let graph = FeatureGraph::new(1, vec![vec![], vec![]], vec![(0, 1)]).unwrap();
    let w = Weights::new(vec![vec![0.0], vec![0.0]], vec![1.0, 0.0]).unwrap();
    let yhat = Labeling::new(vec![0, 0], 2).unwrap();
    let budget = AttackBudget::delete_only(1);

    let lp = build_attacker_lp(&w, &graph, &yhat, &budget).unwrap();
    let sol = solve_lp(&lp, 1e-8).unwrap();
    assert_abs_diff_eq!(sol.objective, 2.0, epsilon = 1e-6);

    let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();
    let frac = FractionalAttack::from_solution(&sol, &terms, budget).unwrap();
    assert_abs_diff_eq!(frac.e()[0], 0.0, epsilon = 1e-6);
    assert_abs_diff_eq!(frac.y()[0], 0.0, epsilon = 1e-6); // node 0, label 0
    assert_abs_diff_eq!(frac.y()[2], 0.0, epsilon = 1e-6); // node 1, label 0

    let (best_labels, brute) = brute_force_attack(&w, &graph, &yhat, &budget).unwrap();
    assert_eq!(best_labels.as_slice(), &[1, 1]);
    assert_eq!(brute.deletions, vec![(0, 1)]);
    assert_abs_diff_eq!(brute.objective.unwrap(), 2.0, epsilon = 1e-12);

    let plan = generate_attack(&w, &graph, &yhat, &budget, 8, 5).unwrap();
    assert_eq!(plan.deletions, vec![(0, 1)]);
    assert!(plan.additions.is_empty());
    assert_abs_diff_eq!(plan.objective.unwrap(), 2.0, epsilon = 1e-6);
}

#[test]
fn relaxation_value_dominates_the_exhaustive_optimum() {
    for seed in 20..25u64 {
        let (w, graph, yhat) = random_instance(seed, 7, 2, 2, 0.35);
        let budget = AttackBudget::delete_only(2.min(graph.edge_count()));
        let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();

        let lp = build_attacker_lp(&w, &graph, &yhat, &budget).unwrap();
        let sol = solve_lp(&lp, 1e-8).unwrap();

        let (_, brute) = brute_force_attack(&w, &graph, &yhat, &budget).unwrap();
        let brute_value = brute.objective.unwrap();
        assert_abs_diff_eq!(
            brute_value,
            terms.margin_value(oracle_best_value(&w, &graph, &yhat, &budget)),
            epsilon = 1e-9
        );
        assert!(
            sol.objective >= brute_value - 1e-6,
            "relaxation {} below integral optimum {brute_value} (seed {seed})",
            sol.objective
        );

        let plan = generate_attack(&w, &graph, &yhat, &budget, 16, seed).unwrap();
        assert!(plan.respects(&budget));
        assert!(
            brute_value >= plan.objective.unwrap() - 1e-9,
            "rounded plan beat the exhaustive optimum (seed {seed})"
        );

        // the reported objective is reproducible from the plan itself
        let mut kept = vec![true; graph.edge_count()];
        for &(i, j) in &plan.deletions {
            let e = graph.edges().iter().position(|&p| p == (i, j)).unwrap();
            kept[e] = false;
        }
        let mut best_replay = f64::NEG_INFINITY;
        for code in 0..1usize << graph.n() {
            let labels: Vec<usize> = (0..graph.n()).map(|i| (code >> i) & 1).collect();
            best_replay = best_replay
                .max(oracle_variable_value(&w, &graph, &yhat, &labels, &kept, &[]));
        }
        assert!(
            plan.objective.unwrap() <= terms.margin_value(best_replay) + 1e-9,
            "plan objective exceeds the best value its own edits allow"
        );
    }
}

#[test]
fn rround_returns_integral_relaxations_unchanged() {
    let (w, graph, yhat) = random_instance(31, 5, 2, 2, 0.5);
    let m = graph.edge_count();
    assert!(m >= 2);
    let budget = AttackBudget::delete_only(m);
    let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();

    let mut y = vec![0.0; 5 * 2];
    let labels = [0usize, 1, 1, 0, 1];
    for (i, &l) in labels.iter().enumerate() {
        y[i * 2 + l] = 1.0;
    }
    let mut e = vec![1.0; m];
    e[0] = 0.0;
    let frac = FractionalAttack::from_parts(&terms, y, e, vec![], budget).unwrap();
    for seed in 0..10 {
        let (rounded, kept) = rround(&frac, seed).unwrap();
        assert_eq!(rounded.as_slice(), &labels);
        assert!(!kept[0]);
        assert!(kept[1..].iter().all(|&b| b));
    }
}

#[test]
fn rround_matches_marginals_in_distribution() {
    let graph = FeatureGraph::new(1, vec![vec![], vec![]], vec![(0, 1)]).unwrap();
    let w = Weights::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).unwrap();
    let yhat = Labeling::new(vec![0, 0], 2).unwrap();
    let budget = AttackBudget::delete_only(1);
    let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();
    let frac = FractionalAttack::from_parts(
        &terms,
        vec![0.75, 0.25, 0.4, 0.6],
        vec![0.6],
        vec![],
        budget,
    )
    .unwrap();

    let trials = 20_000u64;
    let (mut node0_label0, mut node1_label0, mut edge_kept) = (0u64, 0u64, 0u64);
    for seed in 0..trials {
        let (labels, kept) = rround(&frac, seed).unwrap();
        node0_label0 += u64::from(labels.label(0) == 0);
        node1_label0 += u64::from(labels.label(1) == 0);
        edge_kept += u64::from(kept[0]);
    }
    assert_abs_diff_eq!(node0_label0 as f64 / trials as f64, 0.75, epsilon = 0.02);
    assert_abs_diff_eq!(node1_label0 as f64 / trials as f64, 0.4, epsilon = 0.02);
    assert_abs_diff_eq!(edge_kept as f64 / trials as f64, 0.6, epsilon = 0.02);
}

#[test]
fn rround_truncates_excess_deletions_to_the_lowest_indices() {
    let graph =
        FeatureGraph::new(1, vec![vec![]; 4], vec![(0, 1), (1, 2), (2, 3)]).unwrap();
    let w = Weights::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).unwrap();
    let yhat = Labeling::new(vec![0; 4], 2).unwrap();
    let budget = AttackBudget::delete_only(1);
    let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();
    // one unit of deletion mass spread over three edges: raw rounding
    // regularly deletes two or three, and the repair must keep only the
    // lowest-index deletion
    let y = vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    let frac = FractionalAttack::from_parts(
        &terms,
        y,
        vec![2.0 / 3.0; 3],
        vec![],
        budget,
    )
    .unwrap();

    let trials = 2_000u64;
    let mut deleted = [0u64; 3];
    for seed in 0..trials {
        let (_, kept) = rround(&frac, seed).unwrap();
        let dels: Vec<usize> = (0..3).filter(|&e| !kept[e]).collect();
        assert!(dels.len() <= 1, "budget violated at seed {seed}");
        for e in dels {
            deleted[e] += 1;
        }
    }
    let freq: Vec<f64> = deleted.iter().map(|&c| c as f64 / trials as f64).collect();
    // edge 0 survives repair whenever it rounds to deleted, so its final
    // frequency stays at the 1/3 marginal; edge 2 is dropped whenever a
    // lower-index edge also rounded to deleted
    assert_abs_diff_eq!(freq[0], 1.0 / 3.0, epsilon = 0.03);
    assert!(
        freq[0] > freq[2] + 0.05,
        "repair should favor low indices: {freq:?}"
    );
}

#[test]
fn semi_rround_deletes_exactly_the_negative_gain_edges_in_order() {
    let graph = FeatureGraph::new(
        1,
        vec![vec![]; 8],
        vec![(0, 1), (2, 3), (4, 5), (6, 7)],
    )
    .unwrap();
    let w = Weights::new(vec![vec![0.0], vec![0.0]], vec![3.0, 1.0]).unwrap();
    let yhat = Labeling::new(vec![0, 0, 0, 0, 0, 1, 0, 1], 2).unwrap();
    let labels = Labeling::new(vec![0, 1, 1, 1, 1, 1, 0, 1], 2).unwrap();
    let budget = AttackBudget::delete_only(4);
    let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();

    // per-edge value of keeping: -3 (was agreeing, now split), -2 (was
    // agreeing, still agrees on the weaker label), +1, 0
    let gains: Vec<f64> = (0..4)
        .map(|e| terms.deletion_gain(labels.as_slice(), e))
        .collect();
    assert_abs_diff_eq!(gains[0], -3.0, epsilon = 1e-12);
    assert_abs_diff_eq!(gains[1], -2.0, epsilon = 1e-12);
    assert_abs_diff_eq!(gains[2], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(gains[3], 0.0, epsilon = 1e-12);

    let one = AttackBudget::delete_only(1);
    assert_eq!(
        semi_rround(&labels, &terms, &one),
        vec![false, true, true, true]
    );
    // with budget to spare, nonnegative-gain edges still survive
    assert_eq!(
        semi_rround(&labels, &terms, &budget),
        vec![false, false, true, true]
    );
}

#[test]
fn semi_rround_matches_subset_enumeration() {
    for seed in 40..50u64 {
        let (w, graph, yhat) = random_instance(seed, 7, 2, 2, 0.35);
        let m = graph.edge_count();
        if m == 0 || m > 12 {
            continue;
        }
        let budget = AttackBudget::delete_only(3.min(m));
        let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels =
            Labeling::new((0..7).map(|_| rng.random_range(0..2)).collect(), 2).unwrap();

        let kept = semi_rround(&labels, &terms, &budget);
        assert!((0..m).filter(|&e| !kept[e]).count() <= budget.deletions());
        let achieved = terms.integral_value(labels.as_slice(), &kept, &[]);

        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..1 << m {
            if mask.count_ones() as usize > budget.deletions() {
                continue;
            }
            let cand: Vec<bool> = (0..m).map(|e| mask & (1 << e) == 0).collect();
            best = best.max(terms.integral_value(labels.as_slice(), &cand, &[]));
        }
        assert_abs_diff_eq!(achieved, best, epsilon = 1e-9);
    }
}

#[test]
fn semi_rround_never_scores_below_the_rounded_edges() {
    let (w, graph, yhat) = random_instance(60, 8, 2, 2, 0.4);
    let budget = AttackBudget::delete_only(2.min(graph.edge_count()));
    let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();
    let lp = build_attacker_lp(&w, &graph, &yhat, &budget).unwrap();
    let sol = solve_lp(&lp, 1e-8).unwrap();
    let frac = FractionalAttack::from_solution(&sol, &terms, budget).unwrap();
    for seed in 0..50 {
        let (labels, kept) = rround(&frac, seed).unwrap();
        let repaired = semi_rround(&labels, &terms, &budget);
        assert!(
            terms.integral_value(labels.as_slice(), &repaired, &[])
                >= terms.integral_value(labels.as_slice(), &kept, &[]) - 1e-12
        );
    }
}

#[test]
fn generate_attack_requires_at_least_one_trial() {
    let (w, graph, yhat) = random_instance(70, 5, 2, 2, 0.5);
    let budget = AttackBudget::delete_only(1);
    assert!(matches!(
        generate_attack(&w, &graph, &yhat, &budget, 0, 0),
        Err(AttackError::InvalidArgument(_))
    ));
}

#[test]
fn rounding_guarantee_holds_on_average() {
    // the rounded attack keeps, in expectation, the whole base part of the
    // relaxed objective plus at least a 1/(K + 4) share of the agreement
    // part; with two labels the divisor is six
    let (w, graph, yhat) = random_instance(80, 6, 2, 2, 0.5);
    let budget = AttackBudget::delete_only(2.min(graph.edge_count()));
    let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();
    let lp = build_attacker_lp(&w, &graph, &yhat, &budget).unwrap();
    let sol = solve_lp(&lp, 1e-8).unwrap();
    let frac = FractionalAttack::from_solution(&sol, &terms, budget).unwrap();

    let base = terms.base_value(frac.y(), frac.e());
    let agreement = terms.agreement_value(frac.z(), frac.z_bar());
    assert!(agreement >= -1e-9);
    let bound = base + agreement / 6.0;

    let values: Vec<f64> = (0..400)
        .map(|seed| {
            let (labels, _) = rround(&frac, seed).unwrap();
            let kept = semi_rround(&labels, &terms, &budget);
            terms.integral_value(labels.as_slice(), &kept, &[])
        })
        .collect();
    let (mean, stderr) = mean_stderr(&values);
    assert!(
        mean >= bound - 3.0 * stderr - 1e-9,
        "mean rounded value {mean} (stderr {stderr}) fell below {bound}"
    );
}

#[test]
fn joint_agreement_frequency_respects_the_rounding_factor() {
    let graph = FeatureGraph::new(1, vec![vec![], vec![]], vec![(0, 1)]).unwrap();
    let w = Weights::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).unwrap();
    let yhat = Labeling::new(vec![0, 0], 2).unwrap();
    let budget = AttackBudget::delete_only(1);
    let terms = AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget).unwrap();
    let frac = FractionalAttack::from_parts(
        &terms,
        vec![0.5, 0.5, 0.6, 0.4],
        vec![0.7],
        vec![],
        budget,
    )
    .unwrap();
    let z0 = frac.z()[0];
    assert_abs_diff_eq!(z0, 0.5, epsilon = 1e-12);

    let trials = 20_000u64;
    let mut joint = 0u64;
    for seed in 0..trials {
        let (labels, kept) = rround(&frac, seed).unwrap();
        joint += u64::from(labels.label(0) == 0 && labels.label(1) == 0 && kept[0]);
    }
    let freq = joint as f64 / trials as f64;
    let sigma = (freq * (1.0 - freq) / trials as f64).sqrt();
    assert!(
        freq >= z0 / 6.0 - 3.0 * sigma,
        "joint agreement frequency {freq} below {}",
        z0 / 6.0
    );
}

#[test]
fn heuristic_attacks_sample_only_valid_candidates() {
    let (_, graph, _) = random_instance(90, 10, 2, 2, 0.4);
    let truth = Labeling::new(
        (0..10).map(|i| usize::from(i % 3 == 0)).collect(),
        2,
    )
    .unwrap();
    let same_label: Vec<(usize, usize)> = graph
        .edges()
        .iter()
        .copied()
        .filter(|&(i, j)| truth.label(i) == truth.label(j))
        .collect();
    assert!(same_label.len() >= 3, "fixture needs same-label edges");
    let cross_pool = reduced_non_edges(&graph, &truth);

    let budget = AttackBudget::delete_only(2);
    for seed in 0..20u64 {
        let plan = heuristic_attack(&graph, &truth, &budget, HeuristicMode::Rs, seed).unwrap();
        assert!(plan.respects(&budget));
        assert!(plan.objective.is_none());
        assert!(plan.deletions.windows(2).all(|p| p[0] < p[1]));
        for d in &plan.deletions {
            assert!(same_label.contains(d), "deleted a cross-label edge: {d:?}");
        }
        let again = heuristic_attack(&graph, &truth, &budget, HeuristicMode::Rs, seed).unwrap();
        assert_eq!(plan.deletions, again.deletions);
    }
    let distinct: std::collections::BTreeSet<Vec<(usize, usize)>> = (0..20u64)
        .map(|seed| {
            heuristic_attack(&graph, &truth, &budget, HeuristicMode::Rs, seed)
                .unwrap()
                .deletions
        })
        .collect();
    assert!(distinct.len() > 1, "sampling should vary across seeds");

    let ad = AttackBudget::add_delete(2, 2);
    assert!(matches!(
        heuristic_attack(&graph, &truth, &ad, HeuristicMode::Rs, 0),
        Err(AttackError::InvalidArgument(_))
    ));
    for seed in 0..10u64 {
        let plan = heuristic_attack(&graph, &truth, &ad, HeuristicMode::Rsad, seed).unwrap();
        assert!(plan.respects(&ad));
        for a in &plan.additions {
            assert!(cross_pool.contains(a), "added an invalid pair: {a:?}");
        }
    }

    // a budget beyond the candidate pool consumes the whole pool; the
    // shortfall is visible as the gap between budget and plan size
    let oversized = AttackBudget::delete_only(same_label.len() + 5);
    let plan =
        heuristic_attack(&graph, &truth, &oversized, HeuristicMode::Rs, 1).unwrap();
    assert_eq!(plan.deletions.len(), same_label.len());
}

#[test]
fn addition_budgets_preserve_the_dominance_ordering() {
    for seed in [100u64, 101, 102] {
        let (w, graph, yhat) = random_instance(seed, 5, 2, 2, 0.4);
        if graph.edge_count() == 0 || reduced_non_edges(&graph, &yhat).is_empty() {
            continue;
        }
        let budget = AttackBudget::add_delete(1, 1);
        let lp = build_attacker_lp(&w, &graph, &yhat, &budget).unwrap();
        let sol = solve_lp(&lp, 1e-8).unwrap();
        let (_, brute) = brute_force_attack(&w, &graph, &yhat, &budget).unwrap();
        let brute_value = brute.objective.unwrap();
        assert_abs_diff_eq!(
            brute_value,
            AttackerObjectiveTerms::new(&w, &graph, &yhat, &budget)
                .unwrap()
                .margin_value(oracle_best_value(&w, &graph, &yhat, &budget)),
            epsilon = 1e-9
        );
        assert!(sol.objective >= brute_value - 1e-6);

        let plan = generate_attack(&w, &graph, &yhat, &budget, 16, seed).unwrap();
        assert!(plan.respects(&budget));
        assert!(brute_value >= plan.objective.unwrap() - 1e-9);
        let pool = reduced_non_edges(&graph, &yhat);
        for a in &plan.additions {
            assert!(pool.contains(a));
        }
    }
}

#[test]
fn degree_caps_constrain_every_producer() {
    let (w, graph, yhat) = random_instance(110, 6, 2, 2, 0.5);
    assert!(graph.edge_count() >= 3);
    let capped = AttackBudget::add_delete(2, 2).with_degree_cap(1);
    let uncapped = AttackBudget::add_delete(2, 2);

    let audit = |plan: &AttackPlan| {
        let mut changes = vec![0usize; graph.n()];
        for &(i, j) in plan.deletions.iter().chain(&plan.additions) {
            changes[i] += 1;
            changes[j] += 1;
        }
        assert!(changes.iter().all(|&c| c <= 1), "degree cap violated");
    };

    let (_, brute_capped) = brute_force_attack(&w, &graph, &yhat, &capped).unwrap();
    let (_, brute_free) = brute_force_attack(&w, &graph, &yhat, &uncapped).unwrap();
    audit(&brute_capped);
    assert!(brute_capped.objective.unwrap() <= brute_free.objective.unwrap() + 1e-9);

    let lp = build_attacker_lp(&w, &graph, &yhat, &capped).unwrap();
    let sol = solve_lp(&lp, 1e-8).unwrap();
    assert!(sol.objective >= brute_capped.objective.unwrap() - 1e-6);

    let plan = generate_attack(&w, &graph, &yhat, &capped, 8, 3).unwrap();
    audit(&plan);
    assert!(plan.objective.unwrap() <= brute_capped.objective.unwrap() + 1e-9);

    let truth = yhat.clone();
    let heur = heuristic_attack(&graph, &truth, &capped, HeuristicMode::Rsad, 9).unwrap();
    audit(&heur);
}
