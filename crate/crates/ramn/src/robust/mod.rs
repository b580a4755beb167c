//! Robust (and standard) AMN training.
//!
//! The attacker's relaxation is dualized mechanically ([`parametric`]) and
//! folded into a single convex QP over the weights and the dual variables;
//! minimizing it trains weights that anticipate the worst budgeted
//! structural attack.

pub mod parametric;

pub use parametric::{dualize_parametric_lp, DualRow, DualizedLp, ParametricLp, WAffine};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::amn::{accuracy, map_inference, AmnError, Weights};
use crate::attack::{attacker_parametric_lp, generate_attack, AttackError};
use crate::graph::{
    apply_attack, induced_subgraph, AttackBudget, AttackVariant, FeatureGraph, GraphError,
    Labeling,
};
use crate::solver::{
    solve_qp, ConvexQp, IneqDir, LinExpr, Solution, SolveStatus, SolverError, VarBlock, VarSpace,
    QP_TOL,
};
use crate::util::derive_seed;

/// Rounding trials used by the simulated attacker during cross-validation.
const CV_ATTACK_TRIALS: usize = 10;

/// Edge fraction the simulated cross-validation attacker may change.
const CV_ATTACK_FRACTION: f64 = 0.1;

/// Default trade-off grid for [`cross_validate`].
pub const DEFAULT_C_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Default training budget-fraction grid for [`cross_validate`].
pub const DEFAULT_B_GRID: [f64; 4] = [0.0, 0.05, 0.1, 0.2];

#[derive(Debug, Error)]
pub enum RobustError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not in canonical form: {0}")]
    NonCanonical(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solve ended with status {status:?}{}", diagnostics.as_deref().map(|d| format!(": {d}")).unwrap_or_default())]
    SolveFailed {
        status: crate::solver::SolveStatus,
        diagnostics: Option<String>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Amn(#[from] AmnError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

/// The robust training QP: weights first (`w_n` free, `w_e` nonnegative, in
/// the flat layout of [`Weights::flatten`]), then one dual variable per
/// attacker-LP constraint, grouped and named after the constraint groups
/// they dualize. Minimizing it yields max-margin weights whose margin term
/// anticipates the worst budgeted structural attack.
pub struct RobustProblem {
    k: usize,
    d_n: usize,
    flat_len: usize,
    c: f64,
    budget: AttackBudget,
    qp: ConvexQp,
    dual: DualizedLp,
}

impl RobustProblem {
    pub fn qp(&self) -> &ConvexQp {
        &self.qp
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn budget(&self) -> AttackBudget {
        self.budget
    }

    /// The QP variable block of the dual variables for the named
    /// attacker-LP constraint group (for example `"node_simplex"` or
    /// `"del_budget"`); its length equals that group's row count.
    pub fn dual_block(&self, group: &str) -> Option<&VarBlock> {
        self.qp
            .vars
            .block_by_name(group)
            .filter(|b| b.name != "w_n" && b.name != "w_e")
    }

    /// Solves the QP to a verified optimum.
    pub fn solve(&self) -> Result<Solution, RobustError> {
        let sol = solve_qp(&self.qp, QP_TOL)?;
        if sol.status != SolveStatus::Optimal {
            return Err(RobustError::SolveFailed {
                status: sol.status,
                diagnostics: sol.diagnostics,
            });
        }
        Ok(sol)
    }

    /// Extracts the trained weights, clamping solver dust on `w_e`.
    pub fn weights(&self, sol: &Solution) -> Result<Weights, RobustError> {
        let mut flat = Vec::with_capacity(self.flat_len);
        for name in ["w_n", "w_e"] {
            flat.extend_from_slice(sol.block(name).ok_or_else(|| {
                RobustError::InvalidArgument(format!("solution lacks a `{name}` block"))
            })?);
        }
        Ok(Weights::from_flat(self.k, self.d_n, &flat, 1e-6)?)
    }

    /// The attacker's optimal margin-form value at the solved weights,
    /// read off the dual variables: by strong duality it equals the
    /// attacker-LP optimum at those weights.
    pub fn inner_value(&self, sol: &Solution) -> f64 {
        let w = &sol.primal[..self.flat_len];
        let duals = &sol.primal[self.flat_len..];
        let mut value = self.dual.objective_offset.eval(w);
        for (coef, lambda) in self.dual.objective.iter().zip(duals) {
            value += coef.eval(w) * lambda;
        }
        value
    }
}

/// Assembles the robust training QP for a trade-off weight and attack
/// budget: minimize `||w||^2 / 2 + C * (worst-case relaxed margin
/// violation)`, with the inner maximization replaced by its dual so the
/// whole problem is a single convex minimization. A zero budget recovers
/// standard max-margin training with the LP-relaxed inner maximization.
pub fn build_robust_qp(
    graph: &FeatureGraph,
    yhat: &Labeling,
    c: f64,
    budget: &AttackBudget,
) -> Result<RobustProblem, RobustError> {
    if c <= 0.0 || !c.is_finite() {
        return Err(RobustError::InvalidArgument(format!(
            "trade-off weight must be positive, got {c}"
        )));
    }
    let primal = attacker_parametric_lp(graph, yhat, budget)?;
    let dual = dualize_parametric_lp(&primal)?;
    let (k, d_n) = (yhat.k(), graph.d_n());
    let flat_len = k * d_n + k;

    let mut vars = VarSpace::new();
    vars.add_block("w_n", k * d_n, f64::NEG_INFINITY, f64::INFINITY);
    vars.add_block("w_e", k, 0.0, f64::INFINITY);
    for block in dual.vars.blocks() {
        if block.name == "w_n" || block.name == "w_e" {
            return Err(RobustError::NonCanonical(format!(
                "attacker constraint group `{}` collides with a weight block",
                block.name
            )));
        }
        vars.add_block(
            &block.name,
            block.len,
            dual.vars.lower()[block.offset],
            dual.vars.upper()[block.offset],
        );
    }

    let mut qp = ConvexQp::new(vars);
    for slot in &mut qp.quad_diag[..flat_len] {
        *slot = 1.0;
    }
    qp.objective_offset = c * dual.objective_offset.constant;
    for &(idx, coef) in &dual.objective_offset.terms {
        qp.linear[idx] += c * coef;
    }
    for (j, coef) in dual.objective.iter().enumerate() {
        if !coef.is_constant() {
            return Err(RobustError::NonCanonical(format!(
                "dual variable {j} has a weight-dependent objective \
                 coefficient; the attacker's constraint bounds must be \
                 numeric"
            )));
        }
        qp.linear[flat_len + j] += c * coef.constant;
    }
    for family in &dual.row_families {
        for row in &dual.rows[family.range.clone()] {
            let mut terms: Vec<(usize, f64)> = row
                .terms
                .iter()
                .map(|&(j, v)| (flat_len + j, v))
                .collect();
            for &(idx, coef) in &row.rhs.terms {
                terms.push((idx, -coef));
            }
            qp.push_ineq(&family.name, LinExpr::new(terms), IneqDir::Ge, row.rhs.constant);
        }
    }

    Ok(RobustProblem {
        k,
        d_n,
        flat_len,
        c,
        budget: *budget,
        qp,
        dual,
    })
}

/// Trains AMN weights that anticipate the worst structural attack within
/// the budget; a zero budget trains a standard max-margin AMN.
pub fn train(
    graph: &FeatureGraph,
    yhat: &Labeling,
    c: f64,
    budget: &AttackBudget,
) -> Result<Weights, RobustError> {
    let problem = build_robust_qp(graph, yhat, c, budget)?;
    let sol = problem.solve()?;
    problem.weights(&sol)
}

/// Upper bound on the optimality gap of training against the relaxed
/// attacker instead of the exact one: `(K+3) * C * |E| * eps / (K+4)` with
/// `eps` the largest agreement weight, and `|E| + K * D_plus` replacing
/// `|E|` when the attacker may also add `D_plus` edges.
pub fn theorem2_bound(w: &Weights, c: f64, edge_count: usize, d_plus: usize) -> f64 {
    let k = w.k() as f64;
    let eps = w.max_edge_weight();
    let volume = edge_count as f64 + k * d_plus as f64;
    (k + 3.0) * c * volume * eps / (k + 4.0)
}

/// One cross-validation grid cell: the candidate pair and its accuracy
/// averaged over validation folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvCell {
    pub c: f64,
    pub b: f64,
    pub mean_accuracy: f64,
}

/// Selects `(C, b)` by k-fold cross-validation on node partitions: for
/// each grid cell, weights are trained on each fold complement with a
/// training budget of `floor(b * |E_train|)` deletions (and as many
/// additions for add-delete budgets), then scored by accuracy on the
/// fold's induced subgraph after a simulated attack that may change a
/// tenth of its edges. Ties prefer smaller `C`, then smaller `b`. Folds
/// and grid cells run in parallel; the fold partition and the simulated
/// attacker are seeded, so the selection is reproducible.
pub fn cross_validate(
    graph: &FeatureGraph,
    yhat: &Labeling,
    c_grid: &[f64],
    b_grid: &[f64],
    folds: usize,
    variant: AttackVariant,
    seed: u64,
) -> Result<(f64, f64), RobustError> {
    cross_validate_detailed(graph, yhat, c_grid, b_grid, folds, variant, seed)
        .map(|(selection, _)| selection)
}

/// [`cross_validate`] plus the full fold-mean accuracy table it selected
/// from, in grid order (`C` major, `b` minor).
/// Seeded partition of `0..n` into `folds` disjoint validation folds, each
/// returned sorted. Exposed so other model selectors (e.g. baseline
/// classifiers compared against [`cross_validate`]) can tune on identical
/// folds.
pub fn cv_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>, RobustError> {
    if folds < 2 {
        return Err(RobustError::InvalidArgument(format!(
            "cross-validation needs at least two folds, got {folds}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for idx in 0..n {
        let swap = rng.random_range(idx..n);
        order.swap(idx, swap);
    }
    let mut fold_nodes: Vec<Vec<usize>> = Vec::with_capacity(folds);
    for f in 0..folds {
        let mut val: Vec<usize> = order[f * n / folds..(f + 1) * n / folds].to_vec();
        if val.is_empty() || val.len() == n {
            return Err(RobustError::InvalidArgument(format!(
                "fold {f} of {folds} is empty on one side with {n} nodes"
            )));
        }
        val.sort_unstable();
        fold_nodes.push(val);
    }
    Ok(fold_nodes)
}

pub fn cross_validate_detailed(
    graph: &FeatureGraph,
    yhat: &Labeling,
    c_grid: &[f64],
    b_grid: &[f64],
    folds: usize,
    variant: AttackVariant,
    seed: u64,
) -> Result<((f64, f64), Vec<CvCell>), RobustError> {
    if folds < 2 {
        return Err(RobustError::InvalidArgument(format!(
            "cross-validation needs at least two folds, got {folds}"
        )));
    }
    if c_grid.is_empty() || b_grid.is_empty() {
        return Err(RobustError::InvalidArgument(
            "parameter grids must be non-empty".to_string(),
        ));
    }
    if yhat.len() != graph.n() {
        return Err(RobustError::InvalidArgument(format!(
            "{} labels for {} nodes",
            yhat.len(),
            graph.n()
        )));
    }

    let n = graph.n();
    let fold_nodes = cv_folds(n, folds, seed)?;

    let tasks: Vec<(usize, usize)> = (0..c_grid.len())
        .flat_map(|ci| (0..b_grid.len()).map(move |bi| (ci, bi)))
        .collect();
    let cells: Vec<CvCell> = tasks
        .into_par_iter()
        .map(|(ci, bi)| -> Result<CvCell, RobustError> {
            let (c, b) = (c_grid[ci], b_grid[bi]);
            let mut accuracies = Vec::with_capacity(folds);
            for (f, val) in fold_nodes.iter().enumerate() {
                let train_nodes: Vec<usize> =
                    (0..n).filter(|i| !val.contains(i)).collect();
                let train_graph = induced_subgraph(graph, &train_nodes)?;
                let train_labels = yhat.restrict(&train_nodes);
                let budget =
                    AttackBudget::from_fraction(b, train_graph.edge_count(), variant);
                let w = train(&train_graph, &train_labels, c, &budget)?;

                let val_graph = induced_subgraph(graph, val)?;
                let val_labels = yhat.restrict(val);
                let attack_budget = AttackBudget::from_fraction(
                    CV_ATTACK_FRACTION,
                    val_graph.edge_count(),
                    variant,
                );
                let plan = generate_attack(
                    &w,
                    &val_graph,
                    &val_labels,
                    &attack_budget,
                    CV_ATTACK_TRIALS,
                    derive_seed(seed, ((ci * b_grid.len() + bi) * folds + f) as u64),
                )?;
                let attacked = apply_attack(&val_graph, &plan)?;
                let pred = map_inference(&w, &attacked)?;
                accuracies.push(accuracy(&pred.labeling, &val_labels)?);
            }
            Ok(CvCell {
                c,
                b,
                mean_accuracy: accuracies.iter().sum::<f64>() / accuracies.len() as f64,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut best: Option<(f64, f64, f64)> = None;
    for cell in &cells {
        let better = match best {
            None => true,
            Some((acc, c, b)) => {
                cell.mean_accuracy > acc
                    || (cell.mean_accuracy == acc
                        && (cell.c < c || (cell.c == c && cell.b < b)))
            }
        };
        if better {
            best = Some((cell.mean_accuracy, cell.c, cell.b));
        }
    }
    let (_, c, b) = best.expect("grids are non-empty");
    Ok(((c, b), cells))
}
