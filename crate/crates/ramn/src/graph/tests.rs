use std::collections::BTreeSet;
use std::path::PathBuf;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::*;

fn grid_graph() -> FeatureGraph {
    // 0-1-2
    // |   |
    // 3-4-5
    let features = (0..6).map(|i| vec![(0, 1.0 + i as f64)]).collect();
    FeatureGraph::new(
        1,
        features,
        vec![(0, 1), (1, 2), (0, 3), (2, 5), (3, 4), (4, 5)],
    )
    .unwrap()
}

#[test]
fn construction_normalizes_and_validates() {
    let g = FeatureGraph::new(
        1,
        vec![vec![], vec![(0, 2.0)], vec![]],
        vec![(2, 0), (1, 2)],
    )
    .unwrap();
    assert_eq!(g.edges(), &[(0, 2), (1, 2)]);
    assert!(g.has_edge(2, 0));
    assert!(!g.has_edge(0, 1));

    assert!(matches!(
        FeatureGraph::new(1, vec![vec![], vec![]], vec![(0, 0)]),
        Err(GraphError::InvalidGraph(_))
    ));
    assert!(matches!(
        FeatureGraph::new(1, vec![vec![], vec![]], vec![(0, 1), (1, 0)]),
        Err(GraphError::InvalidGraph(_))
    ));
    assert!(matches!(
        FeatureGraph::new(1, vec![vec![(0, -1.0)]], vec![]),
        Err(GraphError::InvalidGraph(_))
    ));
    assert!(matches!(
        FeatureGraph::new(1, vec![vec![(1, 1.0)]], vec![]),
        Err(GraphError::InvalidGraph(_))
    ));
    assert!(matches!(
        FeatureGraph::new(2, vec![vec![(1, 1.0), (0, 1.0)]], vec![]),
        Err(GraphError::InvalidGraph(_))
    ));
}

#[test]
fn labeling_validates_range() {
    assert!(Labeling::new(vec![0, 1, 2], 3).is_ok());
    assert!(matches!(
        Labeling::new(vec![0, 3], 3),
        Err(GraphError::InvalidLabels(_))
    ));
    assert!(matches!(
        Labeling::new(vec![], 0),
        Err(GraphError::InvalidLabels(_))
    ));
    let l = Labeling::new(vec![0, 1, 0, 1], 2).unwrap();
    assert_eq!(l.restrict(&[1, 3]).as_slice(), &[1, 1]);
    assert_eq!(l.one_hot(0, 0), 1.0);
    assert_eq!(l.one_hot(0, 1), 0.0);
}

#[test]
fn budget_constructors_enforce_variant() {
    let b = AttackBudget::delete_only(3);
    assert_eq!(b.additions(), 0);
    assert_eq!(b.variant(), AttackVariant::DeleteOnly);
    let b = AttackBudget::from_fraction(0.1, 19, AttackVariant::AddDelete);
    assert_eq!(b.deletions(), 1);
    assert_eq!(b.additions(), 1);
    let b = AttackBudget::from_fraction(0.2, 10, AttackVariant::DeleteOnly).with_degree_cap(2);
    assert_eq!(b.deletions(), 2);
    assert_eq!(b.degree_cap(), Some(2));
}

#[test]
fn apply_attack_matches_set_algebra() {
    let g = grid_graph();
    let empty = AttackPlan::empty(Provenance::LpRound);
    assert_eq!(apply_attack(&g, &empty).unwrap().edges(), g.edges());

    let all = AttackPlan {
        deletions: g.edges().to_vec(),
        additions: vec![],
        provenance: Provenance::BruteForce,
        objective: None,
    };
    assert_eq!(apply_attack(&g, &all).unwrap().edge_count(), 0);

    // two deletions plus one addition on a 6-edge graph
    let plan = AttackPlan {
        deletions: vec![(0, 1), (4, 5)],
        additions: vec![(1, 4)],
        provenance: Provenance::LpRound,
        objective: None,
    };
    let attacked = apply_attack(&g, &plan).unwrap();
    let expected: BTreeSet<(usize, usize)> = g
        .edges()
        .iter()
        .copied()
        .filter(|e| !plan.deletions.contains(e))
        .chain([(1, 4)])
        .collect();
    let got: BTreeSet<(usize, usize)> = attacked.edges().iter().copied().collect();
    assert_eq!(got, expected);
    assert_eq!(attacked.edge_count(), 5);

    let bad_delete = AttackPlan {
        deletions: vec![(0, 5)],
        additions: vec![],
        provenance: Provenance::LpRound,
        objective: None,
    };
    assert!(matches!(
        apply_attack(&g, &bad_delete),
        Err(GraphError::InvalidPlan(_))
    ));
    let bad_add = AttackPlan {
        deletions: vec![],
        additions: vec![(0, 1)],
        provenance: Provenance::LpRound,
        objective: None,
    };
    assert!(matches!(
        apply_attack(&g, &bad_add),
        Err(GraphError::InvalidPlan(_))
    ));
}

#[test]
fn added_edges_get_all_ones_features() {
    let g = FeatureGraph::with_edge_features(
        1,
        vec![vec![], vec![], vec![]],
        vec![(0, 1)],
        2,
        vec![vec![0.5, 2.0]],
    )
    .unwrap();
    let plan = AttackPlan {
        deletions: vec![],
        additions: vec![(1, 2)],
        provenance: Provenance::LpRound,
        objective: None,
    };
    let out = apply_attack(&g, &plan).unwrap();
    assert_eq!(out.edges(), &[(0, 1), (1, 2)]);
    assert_eq!(out.edge_features().unwrap()[1], vec![1.0, 1.0]);
    assert_eq!(out.edge_features().unwrap()[0], vec![0.5, 2.0]);
}

#[test]
fn split_is_even_and_deterministic() {
    let features = (0..10).map(|i| vec![(0, 1.0 + i as f64)]).collect();
    let g = FeatureGraph::new(1, features, vec![(0, 1), (2, 3), (4, 9), (5, 6)]).unwrap();
    let labels = Labeling::new(vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 2).unwrap();
    let (train, test) = split_train_test(&g, &labels, 0.5, 7).unwrap();
    assert_eq!(train.nodes.len(), 5);
    assert_eq!(test.nodes.len(), 5);
    let (train2, _) = split_train_test(&g, &labels, 0.5, 7).unwrap();
    assert_eq!(train.nodes, train2.nodes);
    let mut all: Vec<usize> = train.nodes.iter().chain(&test.nodes).copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..10).collect::<Vec<_>>());

    // surviving edges have both endpoints on the same side
    for part in [&train, &test] {
        for &(a, b) in part.graph.edges() {
            let (oa, ob) = (part.nodes[a], part.nodes[b]);
            assert!(g.has_edge(oa, ob));
        }
        for (p, &orig) in part.nodes.iter().enumerate() {
            assert_eq!(part.graph.feature_row(p), g.feature_row(orig));
            assert_eq!(part.labels.label(p), labels.label(orig));
        }
    }

    assert!(matches!(
        split_train_test(&g, &labels, 0.01, 7),
        Err(GraphError::InvalidArgument(_))
    ));
}

#[test]
fn purify_touches_only_cross_label_edges() {
    let g = grid_graph();
    let labels = Labeling::new(vec![0, 0, 1, 0, 1, 1], 2).unwrap();
    let same_label = |g: &FeatureGraph| {
        g.edges()
            .iter()
            .filter(|&&(i, j)| labels.label(i) == labels.label(j))
            .count()
    };
    let untouched = purify_noisy_edges(&g, &labels, 0.0, 3).unwrap();
    assert_eq!(untouched.edges(), g.edges());
    let scrubbed = purify_noisy_edges(&g, &labels, 1.0, 3).unwrap();
    assert!(scrubbed
        .edges()
        .iter()
        .all(|&(i, j)| labels.label(i) == labels.label(j)));
    assert_eq!(same_label(&scrubbed), same_label(&g));
}

#[test]
fn purify_removal_rate_concentrates() {
    // 100 cross-label edges between two label classes on 40 nodes
    let n = 40;
    let features = (0..n).map(|i| vec![(0, 1.0 + i as f64)]).collect();
    let labels = Labeling::new((0..n).map(|i| i % 2).collect(), 2).unwrap();
    let mut edges = Vec::new();
    'outer: for i in (0..n).step_by(2) {
        for j in (1..n).step_by(2) {
            edges.push((i, j));
            if edges.len() == 100 {
                break 'outer;
            }
        }
    }
    let g = FeatureGraph::new(1, features, edges).unwrap();
    let mut total_removed = 0usize;
    for seed in 0..1000u64 {
        let out = purify_noisy_edges(&g, &labels, 0.5, seed).unwrap();
        total_removed += g.edge_count() - out.edge_count();
    }
    let mean = total_removed as f64 / 1000.0;
    assert!((45.0..=55.0).contains(&mean), "mean removed {mean}");
}

#[test]
fn tfidf_matches_hand_computation() {
    let rows = vec![vec![(0, 1.0)], vec![(0, 1.0), (1, 2.0)]];
    let out = tfidf_transform(&rows, 2);
    assert_eq!(out[0], vec![(0, 1.0)]);
    // idf_0 = ln(3/3)+1 = 1, idf_1 = ln(3/2)+1; row 1 L2-normalized
    assert_abs_diff_eq!(out[1][0].1, 0.33517574332792605, epsilon = 1e-12);
    assert_abs_diff_eq!(out[1][1].1, 0.9421556246632359, epsilon = 1e-12);

    // all-zero row passes through untouched
    let out = tfidf_transform(&[vec![], vec![(0, 3.0)]], 1);
    assert!(out[0].is_empty());
}

#[test]
fn knn_tie_breaks_by_lowest_index() {
    let features = vec![vec![(0, 2.0)]; 4];
    let g = FeatureGraph::new(1, features, vec![]).unwrap();
    let knn = build_knn_graph(&g, 1).unwrap();
    assert_eq!(knn.edges(), &[(0, 1), (0, 2), (0, 3)]);
}

#[test]
fn knn_keeps_orthogonal_clusters_apart() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut features: Vec<SparseRow> = Vec::new();
    for i in 0..10 {
        let base = if i < 5 { 0 } else { 3 };
        features.push(
            (0..3)
                .map(|t| (base + t, rng.random_range(0.5..2.0)))
                .collect(),
        );
    }
    let g = FeatureGraph::new(6, features, vec![]).unwrap();
    let knn = build_knn_graph(&g, 3).unwrap();
    for &(i, j) in knn.edges() {
        assert_eq!(i < 5, j < 5, "cross-cluster edge ({i}, {j})");
    }
}

#[test]
fn knn_agrees_with_quadratic_scan_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 50;
    let d = 20;
    let mut features: Vec<SparseRow> = Vec::new();
    for _ in 0..n {
        let mut row: SparseRow = Vec::new();
        for t in 0..d {
            if rng.random_bool(0.4) {
                row.push((t, rng.random_range(0.1..3.0)));
            }
        }
        features.push(if row.is_empty() { vec![(0, 1.0)] } else { row });
    }
    let g = FeatureGraph::new(d, features, vec![]).unwrap();
    let k = 3;
    let knn = build_knn_graph(&g, k).unwrap();

    // oracle: cosine from raw dot products and norms, k repeated min-scans
    let t = tfidf_transform(g.features(), d);
    let mut expected: BTreeSet<(usize, usize)> = BTreeSet::new();
    for i in 0..n {
        let mut chosen: Vec<usize> = Vec::new();
        for _ in 0..k {
            let mut best: Option<(f64, usize)> = None;
            for j in 0..n {
                if j == i || chosen.contains(&j) {
                    continue;
                }
                let cos = sparse_dot_sparse(&t[i], &t[j]) / (sparse_norm(&t[i]) * sparse_norm(&t[j]));
                let dist = 1.0 - cos;
                if best.is_none() || (dist, j) < best.unwrap() {
                    best = Some((dist, j));
                }
            }
            chosen.push(best.unwrap().1);
        }
        for j in chosen {
            expected.insert(norm_pair(i, j));
        }
    }
    let got: BTreeSet<(usize, usize)> = knn.edges().iter().copied().collect();
    assert_eq!(got, expected);
    assert!(knn.edge_count() <= k * n);
    assert!(knn.degrees().iter().all(|&d| d >= k));
}

#[test]
fn knn_rejects_zero_vectors_and_tiny_inputs() {
    let g = FeatureGraph::new(1, vec![vec![], vec![(0, 1.0)], vec![(0, 2.0)]], vec![]).unwrap();
    assert!(matches!(build_knn_graph(&g, 1), Err(GraphError::ZeroVector(0))));
    let g = FeatureGraph::new(1, vec![vec![(0, 1.0)]], vec![]).unwrap();
    assert!(matches!(
        build_knn_graph(&g, 1),
        Err(GraphError::InvalidArgument(_))
    ));
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ramn-graph-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn dataset_round_trips() {
    let g = grid_graph();
    let labels = Labeling::new(vec![0, 0, 1, 0, 1, 1], 2).unwrap();
    let path = temp_path("round.amn");
    save_dataset(&path, &g, &labels).unwrap();
    let (g2, l2) = load_dataset(&path).unwrap();
    assert_eq!(g, g2);
    assert_eq!(labels, l2);

    let gf = FeatureGraph::with_edge_features(
        2,
        vec![vec![(0, 1.5)], vec![(1, 2.0)], vec![]],
        vec![(0, 1), (1, 2)],
        1,
        vec![vec![0.25], vec![1.75]],
    )
    .unwrap();
    let labels = Labeling::new(vec![0, 1, 2], 3).unwrap();
    let path = temp_path("round-ef.amn");
    save_dataset(&path, &gf, &labels).unwrap();
    let (g2, l2) = load_dataset(&path).unwrap();
    assert_eq!(gf, g2);
    assert_eq!(labels, l2);
}

#[test]
fn dataset_parses_the_three_node_example() {
    let path = temp_path("tiny.amn");
    std::fs::write(
        &path,
        "amn-dataset v1 3 2 2\n1; 0:1.0 1:0.5\n2; 1:2.0\n1;\n",
    )
    .unwrap();
    let (g, l) = load_dataset(&path).unwrap();
    assert_eq!(g.n(), 3);
    assert_eq!(g.d_n(), 2);
    assert_eq!(g.edge_count(), 0);
    assert_eq!(l.as_slice(), &[0, 1, 0]);
    assert_eq!(l.k(), 2);
}

#[test]
fn dataset_errors_carry_line_numbers() {
    let cases = [
        ("bad-header.amn", "amn-dataset v2 1 1 1\n", 1),
        ("bad-label.amn", "amn-dataset v1 1 1 2\n3; 0:1\n", 2),
        ("bad-pair.amn", "amn-dataset v1 1 1 1\n1; zz\n", 2),
        ("neg-val.amn", "amn-dataset v1 1 1 1\n1; 0:-2\n", 2),
        (
            "bad-edge.amn",
            "amn-dataset v1 2 1 1\n1; 0:1\n1; 0:1\nedges\n0\n",
            5,
        ),
    ];
    for (name, contents, want_line) in cases {
        let path = temp_path(name);
        std::fs::write(&path, contents).unwrap();
        match load_dataset(&path) {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, want_line, "{name}"),
            other => panic!("{name}: expected parse error, got {other:?}"),
        }
    }
}

#[test]
fn attack_plan_round_trips() {
    let plan = AttackPlan {
        deletions: vec![(0, 1), (2, 5)],
        additions: vec![(1, 4)],
        provenance: Provenance::Rsad,
        objective: Some(3.25),
    };
    let path = temp_path("plan.txt");
    save_attack_plan(&path, &plan).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("delete 0 1\n"), "{text}");
    assert!(text.contains("add 1 4\n"), "{text}");
    let back = load_attack_plan(&path).unwrap();
    assert_eq!(back, plan);

    let bare = temp_path("bare-plan.txt");
    std::fs::write(&bare, "delete 3 1\n").unwrap();
    let p = load_attack_plan(&bare).unwrap();
    assert_eq!(p.deletions, vec![(1, 3)]);
    assert_eq!(p.provenance, Provenance::LpRound);
    assert_eq!(p.objective, None);
}

#[test]
fn labeling_round_trips() {
    let labels = Labeling::new(vec![1, 0, 2, 1], 3).unwrap();
    let path = temp_path("labels.txt");
    save_labeling(&path, &labels).unwrap();
    let back = load_labeling(&path).unwrap();
    assert_eq!(back, labels);

    let gap = temp_path("labels-gap.txt");
    std::fs::write(&gap, "0 1\n2 1\n").unwrap();
    assert!(matches!(
        load_labeling(&gap),
        Err(GraphError::InvalidLabels(_))
    ));
}

fn seeded_graph(seed: u64, n: usize, p_edge: f64) -> FeatureGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features = (0..n)
        .map(|_| vec![(0, rng.random_range(0.01..5.0))])
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p_edge) {
                edges.push((i, j));
            }
        }
    }
    FeatureGraph::new(1, features, edges).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deleting_then_re_adding_restores_edges(seed in any::<u64>(), n in 3usize..10, p in 0.1f64..0.9) {
        let g = seeded_graph(seed, n, p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xffff);
        let deletions: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .copied()
            .filter(|_| rng.random_bool(0.5))
            .collect();
        let del_plan = AttackPlan {
            deletions: deletions.clone(),
            additions: vec![],
            provenance: Provenance::LpRound,
            objective: None,
        };
        let stripped = apply_attack(&g, &del_plan).unwrap();
        prop_assert_eq!(stripped.edge_count(), g.edge_count() - deletions.len());
        let add_plan = AttackPlan {
            deletions: vec![],
            additions: deletions,
            provenance: Provenance::LpRound,
            objective: None,
        };
        let restored = apply_attack(&stripped, &add_plan).unwrap();
        prop_assert_eq!(restored.edges(), g.edges());
    }

    #[test]
    fn purify_preserves_same_label_edges(seed in any::<u64>(), n in 3usize..12, p in 0.0f64..1.0) {
        let g = seeded_graph(seed, n, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        let labels = Labeling::new((0..n).map(|_| rng.random_range(0..3)).collect(), 3).unwrap();
        let out = purify_noisy_edges(&g, &labels, p, seed).unwrap();
        let same = |g: &FeatureGraph| -> Vec<(usize, usize)> {
            g.edges()
                .iter()
                .copied()
                .filter(|&(i, j)| labels.label(i) == labels.label(j))
                .collect()
        };
        prop_assert_eq!(same(&out), same(&g));
    }

    #[test]
    fn knn_is_stable_under_node_permutation(seed in any::<u64>()) {
        let n = 12;
        let d = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let features: Vec<SparseRow> = (0..n)
            .map(|_| (0..d).map(|t| (t, rng.random_range(0.01..1.0))).collect())
            .collect();
        let g = FeatureGraph::new(d, features.clone(), vec![]).unwrap();
        let knn = build_knn_graph(&g, 2).unwrap();

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        // position of original node i in the permuted graph
        let mut pos = vec![0usize; n];
        for (p, &orig) in perm.iter().enumerate() {
            pos[orig] = p;
        }
        let permuted_features: Vec<SparseRow> = perm.iter().map(|&orig| features[orig].clone()).collect();
        let pg = FeatureGraph::new(d, permuted_features, vec![]).unwrap();
        let pknn = build_knn_graph(&pg, 2).unwrap();

        let mapped: BTreeSet<(usize, usize)> = knn
            .edges()
            .iter()
            .map(|&(i, j)| norm_pair(pos[i], pos[j]))
            .collect();
        let got: BTreeSet<(usize, usize)> = pknn.edges().iter().copied().collect();
        prop_assert_eq!(got, mapped);
    }
}
