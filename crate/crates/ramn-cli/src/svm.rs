//! Structure-blind baseline: an L2-regularized hinge-loss linear classifier.
//!
//! Fit as the primal quadratic program
//!
//! ```text
//!   min  ½‖v‖² + C · Σ_i ξ_i
//!   s.t. s_i · (v · x̃_i) + ξ_i ≥ 1,   ξ_i ≥ 0,
//! ```
//!
//! where `s_i ∈ {−1, +1}` encodes the binary label and `x̃_i` is the node's
//! feature row with a constant 1 appended, so the bias rides inside `v` and
//! the objective stays strictly convex. Predictions read single nodes and
//! never look at edges, which is the point of the baseline: structural
//! attacks cannot touch it.

use ramn::graph::SparseRow;
use ramn::robust::cv_folds;
use ramn::solver::{solve_qp, ConvexQp, IneqDir, LinExpr, SolveStatus, VarSpace, QP_TOL};
use ramn::{accuracy, FeatureGraph, Labeling};

use crate::CliError;

/// A trained linear separator over node features.
#[derive(Debug, Clone)]
pub struct SvmModel {
    /// Feature weights; the last entry multiplies the constant bias feature.
    v: Vec<f64>,
}

impl SvmModel {
    /// Signed score of one feature row; positive means label 1.
    pub fn decision_value(&self, x: &SparseRow) -> f64 {
        let bias = self.v[self.v.len() - 1];
        x.iter().map(|&(f, val)| self.v[f] * val).sum::<f64>() + bias
    }

    /// Predicts every node independently (edges are ignored).
    pub fn predict(&self, graph: &FeatureGraph) -> Labeling {
        let labels: Vec<usize> = graph
            .features()
            .iter()
            .map(|x| usize::from(self.decision_value(x) >= 0.0))
            .collect();
        Labeling::new(labels, 2).expect("binary labels are always valid")
    }

    /// The learned coefficient vector, bias last.
    pub fn weights(&self) -> &[f64] {
        &self.v
    }
}

/// Trains the baseline on a binary-labeled graph's node features.
///
/// Errors if the labeling is not binary, only one class is present, or the
/// regularization weight is not positive.
pub fn train_svm(graph: &FeatureGraph, labels: &Labeling, c: f64) -> Result<SvmModel, CliError> {
    if labels.k() != 2 {
        return Err(CliError::InvalidArgument(format!(
            "the linear baseline is binary-only, got {} classes",
            labels.k()
        )));
    }
    if labels.len() != graph.n() {
        return Err(CliError::InvalidArgument(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.n()
        )));
    }
    if c <= 0.0 || !c.is_finite() {
        return Err(CliError::InvalidArgument(format!(
            "regularization weight must be positive, got {c}"
        )));
    }
    let n = graph.n();
    let ones = labels.as_slice().iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == n {
        return Err(CliError::Degenerate(format!(
            "all {n} training nodes carry the same label"
        )));
    }

    let d = graph.d_n() + 1; // + constant bias feature
    let mut vars = VarSpace::new();
    let v_block = vars.add_block("v", d, f64::NEG_INFINITY, f64::INFINITY);
    let xi_block = vars.add_block("xi", n, 0.0, f64::INFINITY);

    let mut qp = ConvexQp::new(vars);
    for slot in &mut qp.quad_diag[..d] {
        *slot = 1.0;
    }
    for i in 0..n {
        qp.linear[qp.vars.index(xi_block, i)] = c;
    }
    for (i, x) in graph.features().iter().enumerate() {
        let sign = if labels.label(i) == 1 { 1.0 } else { -1.0 };
        let mut terms: Vec<(usize, f64)> = x
            .iter()
            .map(|&(f, val)| (qp.vars.index(v_block, f), sign * val))
            .collect();
        terms.push((qp.vars.index(v_block, d - 1), sign));
        terms.push((qp.vars.index(xi_block, i), 1.0));
        qp.push_ineq("margin", LinExpr::new(terms), IneqDir::Ge, 1.0);
    }

    let sol = solve_qp(&qp, QP_TOL)?;
    if sol.status != SolveStatus::Optimal {
        return Err(CliError::InvalidArgument(format!(
            "baseline training did not reach optimality: {:?}",
            sol.status
        )));
    }
    Ok(SvmModel {
        v: sol.primal[..d].to_vec(),
    })
}

/// Selects the regularization weight by k-fold cross-validation on the same
/// seeded folds the robust trainer uses, then refits on all nodes.
///
/// Ties prefer the smaller `C`. Returns the chosen weight and the refit
/// model.
pub fn tune_svm(
    graph: &FeatureGraph,
    labels: &Labeling,
    c_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<(f64, SvmModel), CliError> {
    if c_grid.is_empty() {
        return Err(CliError::InvalidArgument(
            "the regularization grid must be non-empty".to_string(),
        ));
    }
    let fold_nodes = cv_folds(graph.n(), folds, seed)?;
    let n = graph.n();

    let mut best: Option<(f64, f64)> = None; // (mean accuracy, c)
    for &c in c_grid {
        let mut accuracies = Vec::with_capacity(folds);
        for val in &fold_nodes {
            let train_nodes: Vec<usize> = (0..n).filter(|i| !val.contains(i)).collect();
            let train_graph = ramn::graph::induced_subgraph(graph, &train_nodes)?;
            let train_labels = labels.restrict(&train_nodes);
            let model = train_svm(&train_graph, &train_labels, c)?;
            let pred: Vec<usize> = val
                .iter()
                .map(|&i| usize::from(model.decision_value(&graph.features()[i]) >= 0.0))
                .collect();
            let pred = Labeling::new(pred, 2).expect("binary labels are always valid");
            accuracies.push(accuracy(&pred, &labels.restrict(val))?);
        }
        let mean = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
        let better = match best {
            None => true,
            Some((acc, prev_c)) => mean > acc || (mean == acc && c < prev_c),
        };
        if better {
            best = Some((mean, c));
        }
    }
    let (_, c) = best.expect("grid is non-empty");
    Ok((c, train_svm(graph, labels, c)?))
}
