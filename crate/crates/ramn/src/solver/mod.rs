//! LP/QP solving behind a small contract: problems are stated in natural
//! form (named variable blocks, equality and inequality rows, bounds), the
//! backend is an interior-point conic solver, and every returned solution can
//! be re-verified against the KKT conditions without trusting the backend.
//!
//! Conventions, fixed once and used by the whole crate:
//!
//! * Internally every problem is normalized to minimization with all
//!   inequality rows written as `a.x <= b` (a `>=` row is negated). Reported
//!   duals refer to that normalized form: `eq_duals` are free multipliers
//!   `y`, `ineq_duals` are `lambda >= 0` per inequality row (in the caller's
//!   row order), `lower_duals`/`upper_duals` are `mu >= 0` per variable.
//! * Stationarity reads `P x + c + A_eq^T y + A_le^T lambda - mu_lb + mu_ub
//!   = 0` where `c` and `A_le` are the minimization-normalized objective and
//!   inequality matrix.
//! * `Solution::objective` is stated in the caller's sense and includes the
//!   problem's constant offset.

mod backend;
mod kkt;
mod lp_text;

pub use kkt::{check_kkt, dual_objective, ResidualReport};
pub use lp_text::{lp_to_text, qp_to_text};

use std::ops::Range;
use std::time::Duration;

use thiserror::Error;

/// Default tolerance for linear programs.
pub const LP_TOL: f64 = 1e-8;
/// Default tolerance for quadratic programs.
pub const QP_TOL: f64 = 1e-7;

/// Optimization direction of a [`LinearProgram`]. Quadratic programs are
/// always minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Inequality direction of a row as stated by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IneqDir {
    Le,
    Ge,
}

/// A named contiguous run of variables inside a [`VarSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct VarBlock {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

impl VarBlock {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Handle to a block returned by [`VarSpace::add_block`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockId(usize);

/// Flat variable space assembled from named blocks, each entry carrying a
/// lower and upper bound (`NEG_INFINITY`/`INFINITY` mean unbounded).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VarSpace {
    blocks: Vec<VarBlock>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl VarSpace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a block of `len` variables sharing one bound pair.
    pub fn add_block(&mut self, name: &str, len: usize, lower: f64, upper: f64) -> BlockId {
        let offset = self.lower.len();
        self.blocks.push(VarBlock {
            name: name.to_string(),
            offset,
            len,
        });
        self.lower.extend(std::iter::repeat_n(lower, len));
        self.upper.extend(std::iter::repeat_n(upper, len));
        BlockId(self.blocks.len() - 1)
    }

    /// Flat index of entry `i` within `block`.
    pub fn index(&self, block: BlockId, i: usize) -> usize {
        let b = &self.blocks[block.0];
        assert!(i < b.len, "entry {i} out of range for block {}", b.name);
        b.offset + i
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn blocks(&self) -> &[VarBlock] {
        &self.blocks
    }

    pub fn block(&self, id: BlockId) -> &VarBlock {
        &self.blocks[id.0]
    }

    pub fn block_by_name(&self, name: &str) -> Option<&VarBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

/// Sparse linear expression over flat variable indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn new(terms: Vec<(usize, f64)>) -> Self {
        Self { terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum()
    }
}

/// `expr = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqRow {
    pub expr: LinExpr,
    pub rhs: f64,
}

/// `expr <= rhs` or `expr >= rhs` depending on `dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct IneqRow {
    pub expr: LinExpr,
    pub rhs: f64,
    pub dir: IneqDir,
}

impl IneqRow {
    /// Row as `a.x <= b`, negating `>=` rows.
    pub(crate) fn normalized(&self) -> (Vec<(usize, f64)>, f64) {
        match self.dir {
            IneqDir::Le => (self.expr.terms.clone(), self.rhs),
            IneqDir::Ge => (
                self.expr.terms.iter().map(|&(i, c)| (i, -c)).collect(),
                -self.rhs,
            ),
        }
    }
}

/// Contiguous run of rows sharing a caller-chosen name, used to map duals
/// back to the constraint family that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct RowGroup {
    pub name: String,
    pub range: Range<usize>,
}

pub(crate) fn push_grouped(groups: &mut Vec<RowGroup>, name: &str, row_index: usize) {
    match groups.last_mut() {
        Some(g) if g.name == name && g.range.end == row_index => g.range.end += 1,
        _ => groups.push(RowGroup {
            name: name.to_string(),
            range: row_index..row_index + 1,
        }),
    }
}

/// Linear program in natural form.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub vars: VarSpace,
    pub sense: Sense,
    /// Dense objective over the flat variable space.
    pub objective: Vec<f64>,
    /// Constant added to the reported objective value.
    pub objective_offset: f64,
    pub eq_rows: Vec<EqRow>,
    pub ineq_rows: Vec<IneqRow>,
    pub eq_groups: Vec<RowGroup>,
    pub ineq_groups: Vec<RowGroup>,
}

impl LinearProgram {
    pub fn new(vars: VarSpace, sense: Sense) -> Self {
        let n = vars.len();
        Self {
            vars,
            sense,
            objective: vec![0.0; n],
            objective_offset: 0.0,
            eq_rows: Vec::new(),
            ineq_rows: Vec::new(),
            eq_groups: Vec::new(),
            ineq_groups: Vec::new(),
        }
    }

    /// Appends an equality row under `group`.
    pub fn push_eq(&mut self, group: &str, expr: LinExpr, rhs: f64) {
        push_grouped(&mut self.eq_groups, group, self.eq_rows.len());
        self.eq_rows.push(EqRow { expr, rhs });
    }

    /// Appends an inequality row under `group`.
    pub fn push_ineq(&mut self, group: &str, expr: LinExpr, dir: IneqDir, rhs: f64) {
        push_grouped(&mut self.ineq_groups, group, self.ineq_rows.len());
        self.ineq_rows.push(IneqRow { expr, rhs, dir });
    }

    pub fn ineq_group(&self, name: &str) -> Option<&RowGroup> {
        self.ineq_groups.iter().find(|g| g.name == name)
    }

    pub fn eq_group(&self, name: &str) -> Option<&RowGroup> {
        self.eq_groups.iter().find(|g| g.name == name)
    }

    /// Objective value of `x` in the caller's sense, including the offset.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let v: f64 = self.objective.iter().zip(x).map(|(c, xi)| c * xi).sum();
        v + self.objective_offset
    }
}

/// Convex quadratic program `min 1/2 x' diag(q) x + c'x` subject to rows and
/// bounds. The quadratic part is restricted to a non-negative diagonal, which
/// keeps convexity a construction-time fact instead of a runtime check.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexQp {
    pub vars: VarSpace,
    /// Diagonal of the quadratic form; entries must be non-negative.
    pub quad_diag: Vec<f64>,
    pub linear: Vec<f64>,
    pub objective_offset: f64,
    pub eq_rows: Vec<EqRow>,
    pub ineq_rows: Vec<IneqRow>,
    pub eq_groups: Vec<RowGroup>,
    pub ineq_groups: Vec<RowGroup>,
}

impl ConvexQp {
    pub fn new(vars: VarSpace) -> Self {
        let n = vars.len();
        Self {
            vars,
            quad_diag: vec![0.0; n],
            linear: vec![0.0; n],
            objective_offset: 0.0,
            eq_rows: Vec::new(),
            ineq_rows: Vec::new(),
            eq_groups: Vec::new(),
            ineq_groups: Vec::new(),
        }
    }

    pub fn push_eq(&mut self, group: &str, expr: LinExpr, rhs: f64) {
        push_grouped(&mut self.eq_groups, group, self.eq_rows.len());
        self.eq_rows.push(EqRow { expr, rhs });
    }

    pub fn push_ineq(&mut self, group: &str, expr: LinExpr, dir: IneqDir, rhs: f64) {
        push_grouped(&mut self.ineq_groups, group, self.ineq_rows.len());
        self.ineq_rows.push(IneqRow { expr, rhs, dir });
    }

    pub fn ineq_group(&self, name: &str) -> Option<&RowGroup> {
        self.ineq_groups.iter().find(|g| g.name == name)
    }

    /// Objective value of `x` (minimization sense), including the offset.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        let quad: f64 = self
            .quad_diag
            .iter()
            .zip(x)
            .map(|(q, xi)| 0.5 * q * xi * xi)
            .sum();
        let lin: f64 = self.linear.iter().zip(x).map(|(c, xi)| c * xi).sum();
        quad + lin + self.objective_offset
    }
}

/// Outcome of a solve. Infeasibility and unboundedness are reported here, not
/// as errors; `NumericalFailure` carries diagnostics in
/// [`Solution::diagnostics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Solver output. On [`SolveStatus::Optimal`] all primal and dual vectors are
/// populated; on `Infeasible`/`Unbounded` they are empty and the objective is
/// NaN.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    /// Flat primal values.
    pub primal: Vec<f64>,
    /// Multipliers of equality rows, caller row order.
    pub eq_duals: Vec<f64>,
    /// Multipliers (`>= 0`) of inequality rows in `<=`-normalized form,
    /// caller row order.
    pub ineq_duals: Vec<f64>,
    /// Multipliers (`>= 0`) of finite lower bounds, one per variable.
    pub lower_duals: Vec<f64>,
    /// Multipliers (`>= 0`) of finite upper bounds, one per variable.
    pub upper_duals: Vec<f64>,
    /// Objective in the caller's sense, including the constant offset.
    pub objective: f64,
    pub iterations: u32,
    pub wall_time: Duration,
    /// Residual description when the backend could not certify optimality.
    pub diagnostics: Option<String>,
    blocks: Vec<VarBlock>,
}

impl Solution {
    pub(crate) fn new(blocks: Vec<VarBlock>) -> Self {
        Self {
            status: SolveStatus::NumericalFailure,
            primal: Vec::new(),
            eq_duals: Vec::new(),
            ineq_duals: Vec::new(),
            lower_duals: Vec::new(),
            upper_duals: Vec::new(),
            objective: f64::NAN,
            iterations: 0,
            wall_time: Duration::ZERO,
            diagnostics: None,
            blocks,
        }
    }

    /// Primal values of the named variable block.
    pub fn block(&self, name: &str) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .map(|b| &self.primal[b.range()])
    }

    pub(crate) fn blocks(&self) -> &[VarBlock] {
        &self.blocks
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("solution does not match problem: {0}")]
    SolutionMismatch(String),
    #[error("solver backend: {0}")]
    Backend(String),
}

/// Internal uniform view over LPs and QPs: minimization sense, dense linear
/// part, optional diagonal quadratic.
pub(crate) trait Program {
    fn vars(&self) -> &VarSpace;
    fn quad_diag(&self) -> Option<&[f64]>;
    /// Linear coefficients in minimization-normalized form.
    fn linear_min(&self) -> Vec<f64>;
    fn eq_rows(&self) -> &[EqRow];
    fn ineq_rows(&self) -> &[IneqRow];
    /// Maps a minimization objective value (without offset) back to the
    /// caller's sense, adding the offset.
    fn user_objective(&self, min_value: f64) -> f64;
}

impl Program for LinearProgram {
    fn vars(&self) -> &VarSpace {
        &self.vars
    }
    fn quad_diag(&self) -> Option<&[f64]> {
        None
    }
    fn linear_min(&self) -> Vec<f64> {
        match self.sense {
            Sense::Minimize => self.objective.clone(),
            Sense::Maximize => self.objective.iter().map(|c| -c).collect(),
        }
    }
    fn eq_rows(&self) -> &[EqRow] {
        &self.eq_rows
    }
    fn ineq_rows(&self) -> &[IneqRow] {
        &self.ineq_rows
    }
    fn user_objective(&self, min_value: f64) -> f64 {
        match self.sense {
            Sense::Minimize => min_value + self.objective_offset,
            Sense::Maximize => -min_value + self.objective_offset,
        }
    }
}

impl Program for ConvexQp {
    fn vars(&self) -> &VarSpace {
        &self.vars
    }
    fn quad_diag(&self) -> Option<&[f64]> {
        Some(&self.quad_diag)
    }
    fn linear_min(&self) -> Vec<f64> {
        self.linear.clone()
    }
    fn eq_rows(&self) -> &[EqRow] {
        &self.eq_rows
    }
    fn ineq_rows(&self) -> &[IneqRow] {
        &self.ineq_rows
    }
    fn user_objective(&self, min_value: f64) -> f64 {
        min_value + self.objective_offset
    }
}

pub(crate) fn validate<P: Program>(p: &P) -> Result<(), SolverError> {
    let n = p.vars().len();
    let bad = |msg: String| Err(SolverError::InvalidProblem(msg));
    if p.linear_min().len() != n {
        return bad(format!(
            "objective has {} coefficients for {} variables",
            p.linear_min().len(),
            n
        ));
    }
    if let Some(q) = p.quad_diag() {
        if q.len() != n {
            return bad(format!(
                "quadratic diagonal has {} entries for {} variables",
                q.len(),
                n
            ));
        }
        if let Some(qi) = q.iter().find(|&&qi| qi < 0.0 || !qi.is_finite()) {
            return bad(format!("quadratic diagonal entry {qi} is not in [0, inf)"));
        }
    }
    let mut names: Vec<&str> = p.vars().blocks().iter().map(|b| b.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return bad("duplicate variable block name".to_string());
    }
    for (j, (&lo, &hi)) in p.vars().lower().iter().zip(p.vars().upper()).enumerate() {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return bad(format!("variable {j} has bounds [{lo}, {hi}]"));
        }
    }
    let check_expr = |expr: &LinExpr, what: &str| -> Result<(), SolverError> {
        for &(i, c) in &expr.terms {
            if i >= n {
                return Err(SolverError::InvalidProblem(format!(
                    "{what} references variable {i} of {n}"
                )));
            }
            if !c.is_finite() {
                return Err(SolverError::InvalidProblem(format!(
                    "{what} has non-finite coefficient {c}"
                )));
            }
        }
        Ok(())
    };
    for (r, row) in p.eq_rows().iter().enumerate() {
        check_expr(&row.expr, &format!("equality row {r}"))?;
        if !row.rhs.is_finite() {
            return bad(format!("equality row {r} has rhs {}", row.rhs));
        }
    }
    for (r, row) in p.ineq_rows().iter().enumerate() {
        check_expr(&row.expr, &format!("inequality row {r}"))?;
        if !row.rhs.is_finite() {
            return bad(format!("inequality row {r} has rhs {}", row.rhs));
        }
    }
    if p.linear_min().iter().any(|c| !c.is_finite()) {
        return bad("objective has non-finite coefficient".to_string());
    }
    Ok(())
}

/// Solves a linear program to tolerance `tol`.
///
/// The returned solution is verified against the KKT conditions before being
/// reported optimal; a solution that cannot be verified comes back as
/// [`SolveStatus::NumericalFailure`] with diagnostics, never as a silently
/// wrong optimum.
pub fn solve_lp(lp: &LinearProgram, tol: f64) -> Result<Solution, SolverError> {
    backend::solve(lp, tol)
}

/// Solves a convex quadratic program to tolerance `tol`. See [`solve_lp`] for
/// the verification contract.
pub fn solve_qp(qp: &ConvexQp, tol: f64) -> Result<Solution, SolverError> {
    backend::solve(qp, tol)
}
