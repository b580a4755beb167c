//! Structural attacks on AMN classifiers.
//!
//! The attacker flips test predictions by deleting (and optionally adding)
//! edges under a budget. The exact problem is an integer program; this
//! module builds its LP relaxation, rounds relaxed solutions into concrete
//! [`AttackPlan`]s, and provides an exhaustive oracle and random heuristic
//! baselines for calibration.

mod lp;

pub use lp::{attacker_parametric_lp, build_attacker_lp};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::amn::{check_dims, AmnError, Weights};
use crate::graph::{
    AttackBudget, AttackPlan, AttackVariant, FeatureGraph, GraphError, Labeling, Provenance,
};
use crate::solver::{solve_lp, Solution, SolveStatus, SolverError, LP_TOL};
use crate::util::derive_seed;

/// Hard cap on rounding phases before reporting a stall.
const MAX_PHASES: usize = 1_000_000;

/// Cap on the number of (labeling, deletion set, addition set) combinations
/// the exhaustive oracle will enumerate.
const BRUTE_FORCE_CAP: f64 = 1e8;

/// Tolerance for post-solve feasibility checks on relaxed solutions.
const RELAXATION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("instance too large for exhaustive search: {0}")]
    InstanceTooLarge(String),
    #[error("randomized rounding exceeded {0} phases")]
    RoundingStalled(usize),
    #[error("relaxed solution violates {0}")]
    InconsistentRelaxation(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solve ended with status {status:?}{}", diagnostics.as_deref().map(|d| format!(": {d}")).unwrap_or_default())]
    SolveFailed {
        status: SolveStatus,
        diagnostics: Option<String>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Amn(#[from] AmnError),
}

/// Candidate additions: non-adjacent node pairs whose labels differ under
/// `labels`. Restricting additions to cross-label pairs keeps the attacker's
/// search space small without giving up attack strength, since same-label
/// edges help the classifier.
pub fn reduced_non_edges(graph: &FeatureGraph, labels: &Labeling) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..graph.n() {
        for j in i + 1..graph.n() {
            if labels.label(i) != labels.label(j) && !graph.has_edge(i, j) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Coefficient view of the attacker's objective for fixed weights and a
/// fixed target labeling.
///
/// The variable part of the objective splits into a term linear in the
/// node assignment and edge decisions ([`Self::base_value`]) plus the
/// nonnegative agreement rewards ([`Self::agreement_value`]); the integral
/// objective ([`Self::integral_value`]) is their value at a concrete
/// labeling and edge selection. The constant completing the full margin
/// expression is kept separate ([`Self::margin_value`]) so bound
/// certifications can work with the variable part alone.
#[derive(Debug, Clone)]
pub struct AttackerObjectiveTerms {
    n: usize,
    k: usize,
    /// `w_n^k . x_i - yhat_i^k`, indexed `i * k + kk`.
    node_coeffs: Vec<f64>,
    /// `-sum_k w_e^k yhat_i^k yhat_j^k`, per edge.
    deletion_coeffs: Vec<f64>,
    /// `w_e^k`, per label; nonnegative by [`Weights`] construction.
    agreement_coeffs: Vec<f64>,
    /// `N - sum_i w_n^{yhat_i} . x_i`.
    margin_constant: f64,
    edges: Vec<(usize, usize)>,
    /// Candidate additions; empty for delete-only budgets.
    non_edges: Vec<(usize, usize)>,
}

impl AttackerObjectiveTerms {
    pub fn new(
        w: &Weights,
        graph: &FeatureGraph,
        yhat: &Labeling,
        budget: &AttackBudget,
    ) -> Result<Self, AttackError> {
        check_dims(w, graph, Some(yhat))?;
        let (n, k) = (graph.n(), w.k());
        let mut node_coeffs = Vec::with_capacity(n * k);
        let mut margin_constant = n as f64;
        for i in 0..n {
            for kk in 0..k {
                node_coeffs
                    .push(w.node_potential(graph.feature_row(i), kk) - yhat.one_hot(i, kk));
            }
            margin_constant -= w.node_potential(graph.feature_row(i), yhat.label(i));
        }
        let deletion_coeffs = graph
            .edges()
            .iter()
            .map(|&(i, j)| {
                if yhat.label(i) == yhat.label(j) {
                    -w.edge(yhat.label(i))
                } else {
                    0.0
                }
            })
            .collect();
        let non_edges = match budget.variant() {
            AttackVariant::DeleteOnly => Vec::new(),
            AttackVariant::AddDelete => reduced_non_edges(graph, yhat),
        };
        Ok(Self {
            n,
            k,
            node_coeffs,
            deletion_coeffs,
            agreement_coeffs: w.edge_weights().to_vec(),
            margin_constant,
            edges: graph.edges().to_vec(),
            non_edges,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn non_edges(&self) -> &[(usize, usize)] {
        &self.non_edges
    }

    pub fn node_coeff(&self, i: usize, kk: usize) -> f64 {
        self.node_coeffs[i * self.k + kk]
    }

    pub fn deletion_coeff(&self, e: usize) -> f64 {
        self.deletion_coeffs[e]
    }

    pub fn agreement_coeff(&self, kk: usize) -> f64 {
        self.agreement_coeffs[kk]
    }

    /// Node and edge-decision terms at a (possibly fractional) assignment:
    /// `sum_{i,k} (w_n^k . x_i - yhat_i^k) y_i^k - sum_E sum_k w_e^k
    /// yhat_i^k yhat_j^k e_ij`.
    pub fn base_value(&self, y: &[f64], e: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.n * self.k);
        debug_assert_eq!(e.len(), self.edges.len());
        let nodes: f64 = self
            .node_coeffs
            .iter()
            .zip(y)
            .map(|(c, v)| c * v)
            .sum();
        let dels: f64 = self
            .deletion_coeffs
            .iter()
            .zip(e)
            .map(|(c, v)| c * v)
            .sum();
        nodes + dels
    }

    /// Agreement terms at (possibly fractional) agreement values:
    /// `sum_E sum_k w_e^k z_ij^k + sum_Ebar sum_k w_e^k zbar_ij^k`.
    pub fn agreement_value(&self, z: &[f64], z_bar: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.edges.len() * self.k);
        debug_assert_eq!(z_bar.len(), self.non_edges.len() * self.k);
        z.chunks_exact(self.k)
            .chain(z_bar.chunks_exact(self.k))
            .map(|row| {
                row.iter()
                    .zip(&self.agreement_coeffs)
                    .map(|(v, c)| c * v)
                    .sum::<f64>()
            })
            .sum()
    }

    /// The attacker's integral objective for node labels `labels`, kept-edge
    /// flags `kept`, and `additions` given as indices into
    /// [`Self::non_edges`].
    pub fn integral_value(&self, labels: &[usize], kept: &[bool], additions: &[usize]) -> f64 {
        debug_assert_eq!(labels.len(), self.n);
        debug_assert_eq!(kept.len(), self.edges.len());
        let mut total = 0.0;
        for (i, &lab) in labels.iter().enumerate() {
            total += self.node_coeffs[i * self.k + lab];
        }
        for (e, &keep) in kept.iter().enumerate() {
            if keep {
                total += self.deletion_coeffs[e] + self.kept_gain(labels, self.edges[e]);
            }
        }
        for &a in additions {
            total += self.kept_gain(labels, self.non_edges[a]);
        }
        total
    }

    /// Change to the integral objective from deleting edge `e` under
    /// `labels`, negated: the value of keeping it. Deleting is profitable
    /// exactly when this is negative.
    pub fn deletion_gain(&self, labels: &[usize], e: usize) -> f64 {
        self.deletion_coeffs[e] + self.kept_gain(labels, self.edges[e])
    }

    /// Objective gain from adding candidate `a` (an index into
    /// [`Self::non_edges`]) under `labels`.
    pub fn addition_gain(&self, labels: &[usize], a: usize) -> f64 {
        self.kept_gain(labels, self.non_edges[a])
    }

    /// Full margin value of a variable-part objective value: adds
    /// `N - sum_i w_n^{yhat_i} . x_i`.
    pub fn margin_value(&self, variable_part: f64) -> f64 {
        variable_part + self.margin_constant
    }

    pub fn margin_constant(&self) -> f64 {
        self.margin_constant
    }

    fn kept_gain(&self, labels: &[usize], (i, j): (usize, usize)) -> f64 {
        if labels[i] == labels[j] {
            self.agreement_coeffs[labels[i]]
        } else {
            0.0
        }
    }
}

/// Fractional attacker solution: per-node label distributions, per-edge keep
/// probabilities, and the agreement values implied by them.
#[derive(Debug, Clone)]
pub struct FractionalAttack {
    n: usize,
    k: usize,
    /// `n * k`, rows sum to 1.
    y: Vec<f64>,
    /// Keep probability per edge, in `[0, 1]`.
    e: Vec<f64>,
    /// `|E| * k`, exactly `min(y_i^k, y_j^k, e_ij)`.
    z: Vec<f64>,
    /// Keep probability per candidate addition, in `[0, 1]`.
    e_bar: Vec<f64>,
    /// `|Ebar| * k`, exactly `min(y_i^k, y_j^k, ebar_ij)`.
    z_bar: Vec<f64>,
    budget: AttackBudget,
}

impl FractionalAttack {
    /// Builds and validates a fractional attack from raw node and edge
    /// values; the agreement values are derived as elementwise minima.
    pub fn from_parts(
        terms: &AttackerObjectiveTerms,
        y: Vec<f64>,
        e: Vec<f64>,
        e_bar: Vec<f64>,
        budget: AttackBudget,
    ) -> Result<Self, AttackError> {
        let mut frac = Self {
            n: terms.n(),
            k: terms.k(),
            y,
            e,
            e_bar,
            z: Vec::new(),
            z_bar: Vec::new(),
            budget,
        };
        frac.validate_and_project(terms)?;
        Ok(frac)
    }

    /// Extracts a fractional attack from an attacker-LP solution.
    ///
    /// Numerical dust is clamped into `[0, 1]` and the agreement variables
    /// are projected onto their optimal closed form `min(y_i, y_j, e)`,
    /// which never decreases the objective because agreement coefficients
    /// are nonnegative.
    pub fn from_solution(
        sol: &Solution,
        terms: &AttackerObjectiveTerms,
        budget: AttackBudget,
    ) -> Result<Self, AttackError> {
        let block = |name: &str| -> Result<Vec<f64>, AttackError> {
            sol.block(name)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| {
                    AttackError::InconsistentRelaxation(format!("missing `{name}` block"))
                })
        };
        let provided_z = block("z")?;
        let (e_bar, provided_z_bar) = if budget.variant() == AttackVariant::AddDelete {
            (block("e_bar")?, block("z_bar")?)
        } else {
            (Vec::new(), Vec::new())
        };
        let mut frac = Self {
            n: terms.n(),
            k: terms.k(),
            y: block("y")?,
            e: block("e")?,
            e_bar,
            z: Vec::new(),
            z_bar: Vec::new(),
            budget,
        };
        frac.validate_and_project(terms)?;
        for (name, provided, derived) in [
            ("z", &provided_z, &frac.z),
            ("z_bar", &provided_z_bar, &frac.z_bar),
        ] {
            if provided.len() != derived.len() {
                return Err(AttackError::InconsistentRelaxation(format!(
                    "`{name}` has {} entries, expected {}",
                    provided.len(),
                    derived.len()
                )));
            }
            if let Some(idx) = (0..provided.len())
                .find(|&idx| provided[idx] > derived[idx] + RELAXATION_TOL)
            {
                return Err(AttackError::InconsistentRelaxation(format!(
                    "`{name}[{idx}]` exceeds its caps: {} > {}",
                    provided[idx], derived[idx]
                )));
            }
        }
        Ok(frac)
    }

    fn validate_and_project(&mut self, terms: &AttackerObjectiveTerms) -> Result<(), AttackError> {
        let (n, k) = (self.n, self.k);
        if self.y.len() != n * k {
            return Err(AttackError::DimensionMismatch(format!(
                "y has {} entries, expected {}",
                self.y.len(),
                n * k
            )));
        }
        if self.e.len() != terms.edges().len() || self.e_bar.len() != terms.non_edges().len() {
            return Err(AttackError::DimensionMismatch(
                "edge value vectors do not match the instance".to_string(),
            ));
        }
        for v in self.y.iter_mut().chain(&mut self.e).chain(&mut self.e_bar) {
            if !v.is_finite() || *v < -RELAXATION_TOL || *v > 1.0 + RELAXATION_TOL {
                return Err(AttackError::InconsistentRelaxation(format!(
                    "unit-interval bounds: {v}"
                )));
            }
            *v = v.clamp(0.0, 1.0);
        }
        for i in 0..n {
            let row = &mut self.y[i * k..(i + 1) * k];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > RELAXATION_TOL {
                return Err(AttackError::InconsistentRelaxation(format!(
                    "label distribution of node {i}: sums to {sum}"
                )));
            }
            for v in row {
                *v /= sum;
            }
        }
        let deleted_mass = self.e.len() as f64 - self.e.iter().sum::<f64>();
        if deleted_mass > self.budget.deletions() as f64 + RELAXATION_TOL {
            return Err(AttackError::InconsistentRelaxation(format!(
                "deletion budget: {deleted_mass:.6} > {}",
                self.budget.deletions()
            )));
        }
        let added_mass: f64 = self.e_bar.iter().sum();
        if added_mass > self.budget.additions() as f64 + RELAXATION_TOL {
            return Err(AttackError::InconsistentRelaxation(format!(
                "addition budget: {added_mass:.6} > {}",
                self.budget.additions()
            )));
        }
        self.z = derive_agreement(&self.y, k, terms.edges(), &self.e);
        self.z_bar = derive_agreement(&self.y, k, terms.non_edges(), &self.e_bar);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn e_bar(&self) -> &[f64] {
        &self.e_bar
    }

    pub fn z_bar(&self) -> &[f64] {
        &self.z_bar
    }

    pub fn budget(&self) -> AttackBudget {
        self.budget
    }
}

fn derive_agreement(
    y: &[f64],
    k: usize,
    pairs: &[(usize, usize)],
    keep: &[f64],
) -> Vec<f64> {
    let mut z = Vec::with_capacity(pairs.len() * k);
    for (&(i, j), &e) in pairs.iter().zip(keep) {
        for kk in 0..k {
            z.push(y[i * k + kk].min(y[j * k + kk]).min(e));
        }
    }
    z
}

/// Rounds a fractional attack into node labels and kept-edge flags.
///
/// Each phase draws one of the `2K` (label, keep-bit) combinations and a
/// threshold `beta` uniform on `[0, 1]`; every still-unassigned node whose
/// marginal for the drawn label exceeds `beta` takes that label, and every
/// still-undecided edge whose probability for the drawn keep-bit exceeds
/// `beta` takes that bit. Phases repeat until everything is assigned, so
/// each node ends with label `k` with probability `y_i^k` and each edge is
/// kept with probability `e_ij`. If more edges are deleted than the budget
/// allows, only the lowest-index deletions are kept.
pub fn rround(frac: &FractionalAttack, seed: u64) -> Result<(Labeling, Vec<bool>), AttackError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, k) = (frac.n, frac.k);
    let m = frac.e.len();
    let mut labels = vec![usize::MAX; n];
    let mut kept: Vec<Option<bool>> = vec![None; m];
    let mut remaining = n + m;
    let mut phases = 0usize;
    while remaining > 0 {
        phases += 1;
        if phases > MAX_PHASES {
            return Err(AttackError::RoundingStalled(MAX_PHASES));
        }
        let combo = rng.random_range(0..2 * k);
        let (kk, keep_bit) = (combo / 2, combo % 2 == 1);
        let beta: f64 = rng.random_range(0.0..1.0);
        for (i, label) in labels.iter_mut().enumerate() {
            if *label == usize::MAX && frac.y[i * k + kk] > beta {
                *label = kk;
                remaining -= 1;
            }
        }
        for (decision, &keep_frac) in kept.iter_mut().zip(&frac.e) {
            if decision.is_none() {
                let p = if keep_bit { keep_frac } else { 1.0 - keep_frac };
                if p > beta {
                    *decision = Some(keep_bit);
                    remaining -= 1;
                }
            }
        }
    }
    let mut kept: Vec<bool> = kept.into_iter().map(|b| b.expect("all assigned")).collect();
    let mut deletions = 0usize;
    for flag in kept.iter_mut() {
        if !*flag {
            deletions += 1;
            if deletions > frac.budget.deletions() {
                *flag = true;
            }
        }
    }
    Ok((Labeling::new(labels, k)?, kept))
}

/// With node labels fixed, recomputes the edge decisions optimally: the
/// objective is linear in the kept-edge flags, so edges are deleted in
/// ascending order of [`AttackerObjectiveTerms::deletion_gain`] (ties by
/// edge index), stopping at the budget or when gains turn nonnegative,
/// whichever comes first. Deleting a nonnegative-gain edge can only help
/// the defender, so it never happens even with budget left over.
pub fn semi_rround(
    labels: &Labeling,
    terms: &AttackerObjectiveTerms,
    budget: &AttackBudget,
) -> Vec<bool> {
    let m = terms.edges().len();
    let mut order: Vec<(f64, usize)> = (0..m)
        .map(|e| (terms.deletion_gain(labels.as_slice(), e), e))
        .filter(|&(c, _)| c < 0.0)
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).expect("finite gains"));
    let mut kept = vec![true; m];
    let mut changes = vec![0usize; terms.n()];
    let mut deleted = 0usize;
    for &(_, e) in &order {
        if deleted == budget.deletions() {
            break;
        }
        let (i, j) = terms.edges()[e];
        if let Some(cap) = budget.degree_cap() {
            if changes[i] == cap || changes[j] == cap {
                continue;
            }
        }
        kept[e] = false;
        changes[i] += 1;
        changes[j] += 1;
        deleted += 1;
    }
    kept
}

/// Chooses candidate additions in descending gain order, skipping
/// non-positive gains, capped by the addition budget (and the degree cap
/// when set, counting the deletions already chosen).
pub(crate) fn select_additions(
    labels: &Labeling,
    terms: &AttackerObjectiveTerms,
    budget: &AttackBudget,
    kept: &[bool],
) -> Vec<usize> {
    if budget.additions() == 0 || terms.non_edges().is_empty() {
        return Vec::new();
    }
    let mut order: Vec<(f64, usize)> = (0..terms.non_edges().len())
        .map(|a| (terms.addition_gain(labels.as_slice(), a), a))
        .filter(|&(c, _)| c > 0.0)
        .collect();
    order.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite gains")
            .then(a.1.cmp(&b.1))
    });
    let mut changes = vec![0usize; terms.n()];
    for (e, &keep) in kept.iter().enumerate() {
        if !keep {
            let (i, j) = terms.edges()[e];
            changes[i] += 1;
            changes[j] += 1;
        }
    }
    let mut chosen = Vec::new();
    for &(_, a) in &order {
        if chosen.len() == budget.additions() {
            break;
        }
        let (i, j) = terms.non_edges()[a];
        if let Some(cap) = budget.degree_cap() {
            if changes[i] == cap || changes[j] == cap {
                continue;
            }
        }
        chosen.push(a);
        changes[i] += 1;
        changes[j] += 1;
    }
    chosen
}

/// Generates a structural attack by solving the LP relaxation once and
/// rounding it `trials` times, keeping the plan with the highest integral
/// objective. Each trial owns a generator derived from `(seed, trial)`, so
/// results are reproducible and trials can run in parallel.
pub fn generate_attack(
    w: &Weights,
    graph: &FeatureGraph,
    yhat: &Labeling,
    budget: &AttackBudget,
    trials: usize,
    seed: u64,
) -> Result<AttackPlan, AttackError> {
    if trials == 0 {
        return Err(AttackError::InvalidArgument(
            "at least one rounding trial is required".to_string(),
        ));
    }
    let terms = AttackerObjectiveTerms::new(w, graph, yhat, budget)?;
    let lp = attacker_parametric_lp(graph, yhat, budget)?.instantiate(&w.flatten());
    let sol = solve_lp(&lp, LP_TOL)?;
    if sol.status != SolveStatus::Optimal {
        return Err(AttackError::SolveFailed {
            status: sol.status,
            diagnostics: sol.diagnostics.clone(),
        });
    }
    let frac = FractionalAttack::from_solution(&sol, &terms, *budget)?;

    let rounded: Vec<(f64, Labeling, Vec<bool>, Vec<usize>)> = (0..trials)
        .into_par_iter()
        .map(|trial| -> Result<_, AttackError> {
            let (labels, _) = rround(&frac, derive_seed(seed, trial as u64))?;
            let kept = semi_rround(&labels, &terms, budget);
            let additions = select_additions(&labels, &terms, budget, &kept);
            let value = terms.integral_value(labels.as_slice(), &kept, &additions);
            Ok((value, labels, kept, additions))
        })
        .collect::<Result<_, _>>()?;
    let (value, _, kept, additions) = rounded
        .into_iter()
        .reduce(|best, cand| if cand.0 > best.0 { cand } else { best })
        .expect("trials >= 1");

    let mut plan = AttackPlan::empty(Provenance::LpRound);
    plan.deletions = kept
        .iter()
        .enumerate()
        .filter(|&(_, &keep)| !keep)
        .map(|(e, _)| terms.edges()[e])
        .collect();
    plan.additions = additions.iter().map(|&a| terms.non_edges()[a]).collect();
    plan.additions.sort_unstable();
    plan.objective = Some(terms.margin_value(value));
    Ok(plan)
}

/// Best enumerated attack so far: objective, labels, deletions, additions.
type BestAttack = (f64, Vec<usize>, Vec<usize>, Vec<usize>);

/// Exhaustively maximizes the attacker's integral objective over all
/// labelings, deletion subsets within budget, and addition subsets within
/// budget. Returns the maximizing labeling along with the plan.
pub fn brute_force_attack(
    w: &Weights,
    graph: &FeatureGraph,
    yhat: &Labeling,
    budget: &AttackBudget,
) -> Result<(Labeling, AttackPlan), AttackError> {
    let terms = AttackerObjectiveTerms::new(w, graph, yhat, budget)?;
    let (n, k) = (terms.n(), terms.k());
    let m = terms.edges().len();
    let mb = terms.non_edges().len();
    let d_minus = budget.deletions().min(m);
    let d_plus = budget.additions().min(mb);

    let combos = (k as f64).powi(n as i32)
        * subset_count(m, d_minus)
        * subset_count(mb, d_plus);
    if !combos.is_finite() || combos > BRUTE_FORCE_CAP {
        return Err(AttackError::InstanceTooLarge(format!(
            "{combos:.3e} combinations exceed the {BRUTE_FORCE_CAP:.0e} cap"
        )));
    }

    let mut best: Option<BestAttack> = None;
    let mut labels = vec![0usize; n];
    for_each_subset(m, d_minus, &mut |dels| {
        let mut kept = vec![true; m];
        for &e in dels {
            kept[e] = false;
        }
        for_each_subset(mb, d_plus, &mut |adds| {
            if violates_degree_cap(&terms, budget, dels, adds) {
                return;
            }
            labels.iter_mut().for_each(|l| *l = 0);
            loop {
                let value = terms.integral_value(&labels, &kept, adds);
                if best.as_ref().is_none_or(|(b, _, _, _)| value > *b) {
                    best = Some((value, labels.clone(), dels.to_vec(), adds.to_vec()));
                }
                let mut pos = 0;
                loop {
                    if pos == n {
                        return;
                    }
                    labels[pos] += 1;
                    if labels[pos] < k {
                        break;
                    }
                    labels[pos] = 0;
                    pos += 1;
                }
            }
        });
    });

    let (value, labels, dels, adds) = best.expect("at least the empty attack is enumerated");
    let mut plan = AttackPlan::empty(Provenance::BruteForce);
    plan.deletions = dels.iter().map(|&e| terms.edges()[e]).collect();
    plan.additions = adds.iter().map(|&a| terms.non_edges()[a]).collect();
    plan.objective = Some(terms.margin_value(value));
    Ok((Labeling::new(labels, k)?, plan))
}

fn violates_degree_cap(
    terms: &AttackerObjectiveTerms,
    budget: &AttackBudget,
    dels: &[usize],
    adds: &[usize],
) -> bool {
    let Some(cap) = budget.degree_cap() else {
        return false;
    };
    let mut changes = vec![0usize; terms.n()];
    for &e in dels {
        let (i, j) = terms.edges()[e];
        changes[i] += 1;
        changes[j] += 1;
    }
    for &a in adds {
        let (i, j) = terms.non_edges()[a];
        changes[i] += 1;
        changes[j] += 1;
    }
    changes.iter().any(|&c| c > cap)
}

/// Number of subsets of an `m`-set with at most `max_size` elements, as a
/// float so oversized instances saturate instead of overflowing.
fn subset_count(m: usize, max_size: usize) -> f64 {
    let mut total = 0.0f64;
    let mut term = 1.0f64;
    for d in 0..=max_size.min(m) {
        if d > 0 {
            term *= (m - d + 1) as f64 / d as f64;
        }
        total += term;
    }
    total
}

/// Calls `f` with every subset of `{0, .., m-1}` of size at most
/// `max_size`, smallest subsets first, lexicographic within a size.
fn for_each_subset(m: usize, max_size: usize, f: &mut impl FnMut(&[usize])) {
    fn extend(
        m: usize,
        start: usize,
        left: usize,
        current: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]),
    ) {
        f(current);
        if left == 0 {
            return;
        }
        for next in start..m {
            current.push(next);
            extend(m, next + 1, left - 1, current, f);
            current.pop();
        }
    }
    // size-ordered traversal would revisit subsets; a single DFS emitting
    // each prefix visits every subset exactly once
    let mut current = Vec::with_capacity(max_size);
    extend(m, 0, max_size.min(m), &mut current, f);
}

/// Which random baseline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicMode {
    /// Delete random same-label edges.
    Rs,
    /// Delete random same-label edges and add random cross-label non-edges.
    Rsad,
}

/// Random structural attack using only the true labels: deletes up to the
/// budget many uniformly chosen same-label edges, and in [`HeuristicMode::Rsad`]
/// also adds up to the budget many uniformly chosen cross-label non-edges.
/// When candidates run short the plan simply uses all of them; the shortfall
/// is the difference between the budget and the plan size.
pub fn heuristic_attack(
    graph: &FeatureGraph,
    truth: &Labeling,
    budget: &AttackBudget,
    mode: HeuristicMode,
    seed: u64,
) -> Result<AttackPlan, AttackError> {
    if truth.len() != graph.n() {
        return Err(AttackError::DimensionMismatch(format!(
            "{} labels for {} nodes",
            truth.len(),
            graph.n()
        )));
    }
    if mode == HeuristicMode::Rs && budget.variant() == AttackVariant::AddDelete {
        return Err(AttackError::InvalidArgument(
            "the delete-only heuristic requires a delete-only budget".to_string(),
        ));
    }

    let candidates: Vec<(usize, usize)> = graph
        .edges()
        .iter()
        .copied()
        .filter(|&(i, j)| truth.label(i) == truth.label(j))
        .collect();
    let mut deletions = sample_pairs(
        &candidates,
        budget.deletions(),
        derive_seed(seed, 0),
        budget.degree_cap(),
        &mut vec![0usize; graph.n()],
    );
    deletions.sort_unstable();

    let mut plan = AttackPlan::empty(match mode {
        HeuristicMode::Rs => Provenance::Rs,
        HeuristicMode::Rsad => Provenance::Rsad,
    });
    if mode == HeuristicMode::Rsad {
        let mut changes = vec![0usize; graph.n()];
        for &(i, j) in &deletions {
            changes[i] += 1;
            changes[j] += 1;
        }
        let pool = reduced_non_edges(graph, truth);
        let mut additions = sample_pairs(
            &pool,
            budget.additions(),
            derive_seed(seed, 1),
            budget.degree_cap(),
            &mut changes,
        );
        additions.sort_unstable();
        plan.additions = additions;
    }
    plan.deletions = deletions;
    Ok(plan)
}

/// Uniform sample without replacement of up to `want` pairs, greedily
/// skipping pairs that would exceed the per-node change cap.
fn sample_pairs(
    pool: &[(usize, usize)],
    want: usize,
    seed: u64,
    cap: Option<usize>,
    changes: &mut [usize],
) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..pool.len()).collect();
    for idx in 0..order.len() {
        let swap = rng.random_range(idx..order.len());
        order.swap(idx, swap);
    }
    let mut chosen = Vec::new();
    for &p in &order {
        if chosen.len() == want {
            break;
        }
        let (i, j) = pool[p];
        if let Some(cap) = cap {
            if changes[i] == cap || changes[j] == cap {
                continue;
            }
        }
        chosen.push(pool[p]);
        changes[i] += 1;
        changes[j] += 1;
    }
    chosen
}

#[cfg(test)]
mod tests;
