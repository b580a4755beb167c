//! Independent verification of solver output against the KKT conditions.
//!
//! Everything here is computed straight from the natural-form problem data;
//! nothing is taken from the backend beyond the candidate point itself. The
//! Lagrangian convention matches the module-level documentation:
//!
//! `L = 1/2 x'Px + c'x + y'(A_eq x - b_eq) + lambda'(A_le x - b_le)
//!    + mu_lb'(lb - x) + mu_ub'(x - ub)`
//!
//! with `lambda, mu >= 0` and `c`, `A_le` minimization-normalized.

use std::fmt;

use super::{ConvexQp, LinearProgram, Program, Solution, SolverError};

/// Worst-case residual per KKT condition, together with the tolerance the
/// check ran at. `duality_gap` is relative: `|p - d| / (1 + |p|)` in
/// minimization form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    pub tol: f64,
    pub primal_eq: f64,
    pub primal_ineq: f64,
    pub primal_bounds: f64,
    pub dual_nonneg: f64,
    pub stationarity: f64,
    pub complementarity: f64,
    pub duality_gap: f64,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.primal_eq,
            self.primal_ineq,
            self.primal_bounds,
            self.dual_nonneg,
            self.stationarity,
            self.complementarity,
            self.duality_gap,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.max_residual() <= self.tol
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "eq {:.3e} ineq {:.3e} bounds {:.3e} dual-sign {:.3e} stationarity {:.3e} \
             complementarity {:.3e} gap {:.3e} (tol {:.1e})",
            self.primal_eq,
            self.primal_ineq,
            self.primal_bounds,
            self.dual_nonneg,
            self.stationarity,
            self.complementarity,
            self.duality_gap,
            self.tol
        )
    }
}

fn shape_check<P: Program>(p: &P, sol: &Solution) -> Result<(), SolverError> {
    let mismatch = |msg: String| Err(SolverError::SolutionMismatch(msg));
    if sol.blocks() != p.vars().blocks() {
        return mismatch("variable blocks differ".to_string());
    }
    let n = p.vars().len();
    if sol.primal.len() != n {
        return mismatch(format!(
            "{} primal values for {} variables",
            sol.primal.len(),
            n
        ));
    }
    if sol.eq_duals.len() != p.eq_rows().len() {
        return mismatch(format!(
            "{} equality duals for {} rows",
            sol.eq_duals.len(),
            p.eq_rows().len()
        ));
    }
    if sol.ineq_duals.len() != p.ineq_rows().len() {
        return mismatch(format!(
            "{} inequality duals for {} rows",
            sol.ineq_duals.len(),
            p.ineq_rows().len()
        ));
    }
    if sol.lower_duals.len() != n || sol.upper_duals.len() != n {
        return mismatch("bound dual vectors must have one entry per variable".to_string());
    }
    Ok(())
}

pub(super) fn residuals<P: Program>(
    p: &P,
    sol: &Solution,
    tol: f64,
) -> Result<ResidualReport, SolverError> {
    shape_check(p, sol)?;
    let x = &sol.primal;
    let n = p.vars().len();
    let c = p.linear_min();

    let mut primal_eq = 0.0f64;
    for row in p.eq_rows() {
        primal_eq = primal_eq.max((row.expr.eval(x) - row.rhs).abs());
    }

    let mut primal_ineq = 0.0f64;
    let mut slacks = Vec::with_capacity(p.ineq_rows().len());
    let mut b_le = Vec::with_capacity(p.ineq_rows().len());
    let mut normalized_rows = Vec::with_capacity(p.ineq_rows().len());
    for row in p.ineq_rows() {
        let (terms, rhs) = row.normalized();
        let lhs: f64 = terms.iter().map(|&(i, co)| co * x[i]).sum();
        primal_ineq = primal_ineq.max(lhs - rhs);
        slacks.push(rhs - lhs);
        b_le.push(rhs);
        normalized_rows.push(terms);
    }
    primal_ineq = primal_ineq.max(0.0);

    let lower = p.vars().lower();
    let upper = p.vars().upper();
    let mut primal_bounds = 0.0f64;
    for j in 0..n {
        if lower[j].is_finite() {
            primal_bounds = primal_bounds.max(lower[j] - x[j]);
        }
        if upper[j].is_finite() {
            primal_bounds = primal_bounds.max(x[j] - upper[j]);
        }
    }
    primal_bounds = primal_bounds.max(0.0);

    let mut dual_nonneg = 0.0f64;
    for &l in &sol.ineq_duals {
        dual_nonneg = dual_nonneg.max(-l);
    }
    for &m in sol.lower_duals.iter().chain(&sol.upper_duals) {
        dual_nonneg = dual_nonneg.max(-m);
    }
    dual_nonneg = dual_nonneg.max(0.0);

    // Stationarity: P x + c + A_eq' y + A_le' lambda - mu_lb + mu_ub.
    let mut grad = vec![0.0f64; n];
    if let Some(d) = p.quad_diag() {
        for j in 0..n {
            grad[j] += d[j] * x[j];
        }
    }
    for j in 0..n {
        grad[j] += c[j];
    }
    for (row, &y) in p.eq_rows().iter().zip(&sol.eq_duals) {
        for &(i, co) in &row.expr.terms {
            grad[i] += co * y;
        }
    }
    for (terms, &l) in normalized_rows.iter().zip(&sol.ineq_duals) {
        for &(i, co) in terms {
            grad[i] += co * l;
        }
    }
    for (j, g) in grad.iter_mut().enumerate() {
        *g -= sol.lower_duals[j];
        *g += sol.upper_duals[j];
    }
    let stationarity = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));

    let mut complementarity = 0.0f64;
    for (&l, &s) in sol.ineq_duals.iter().zip(&slacks) {
        complementarity = complementarity.max((l * s).abs());
    }
    for j in 0..n {
        if lower[j].is_finite() {
            complementarity = complementarity.max((sol.lower_duals[j] * (x[j] - lower[j])).abs());
        }
        if upper[j].is_finite() {
            complementarity = complementarity.max((sol.upper_duals[j] * (upper[j] - x[j])).abs());
        }
    }

    let p_min = objective_min_value(p, x);
    let d_min = dual_value_min(p, sol, &b_le);
    let duality_gap = (p_min - d_min).abs() / (1.0 + p_min.abs());

    Ok(ResidualReport {
        tol,
        primal_eq,
        primal_ineq,
        primal_bounds,
        dual_nonneg,
        stationarity,
        complementarity,
        duality_gap,
    })
}

fn objective_min_value<P: Program>(p: &P, x: &[f64]) -> f64 {
    let lin: f64 = p.linear_min().iter().zip(x).map(|(c, xi)| c * xi).sum();
    let quad: f64 = match p.quad_diag() {
        Some(d) => d.iter().zip(x).map(|(q, xi)| 0.5 * q * xi * xi).sum(),
        None => 0.0,
    };
    lin + quad
}

/// Lagrange dual value in minimization form (no offset). For a QP this
/// evaluates `-1/2 x'Px - y'b_eq - lambda'b_le + mu_lb'lb - mu_ub'ub` at the
/// candidate point, which equals the dual function whenever stationarity
/// holds.
fn dual_value_min<P: Program>(p: &P, sol: &Solution, b_le: &[f64]) -> f64 {
    let mut d = 0.0;
    if let Some(diag) = p.quad_diag() {
        let quad: f64 = diag
            .iter()
            .zip(&sol.primal)
            .map(|(q, xi)| 0.5 * q * xi * xi)
            .sum();
        d -= quad;
    }
    for (row, &y) in p.eq_rows().iter().zip(&sol.eq_duals) {
        d -= y * row.rhs;
    }
    for (&l, &b) in sol.ineq_duals.iter().zip(b_le) {
        d -= l * b;
    }
    let lower = p.vars().lower();
    let upper = p.vars().upper();
    for j in 0..p.vars().len() {
        if lower[j].is_finite() {
            d += sol.lower_duals[j] * lower[j];
        }
        if upper[j].is_finite() {
            d -= sol.upper_duals[j] * upper[j];
        }
    }
    d
}

/// Verifies `sol` against the KKT conditions of `problem` at tolerance `tol`
/// and reports the worst residual per condition. Fails only when the solution
/// shape does not match the problem; residual magnitudes never error.
pub fn check_kkt<P: CheckTarget>(
    problem: &P,
    sol: &Solution,
    tol: f64,
) -> Result<ResidualReport, SolverError> {
    problem.residual_report(sol, tol)
}

/// Dual objective bound in the caller's sense: an upper bound on a
/// maximization optimum, a lower bound on a minimization optimum (weak
/// duality), valid whenever the duals are feasible.
pub fn dual_objective<P: CheckTarget>(problem: &P, sol: &Solution) -> Result<f64, SolverError> {
    problem.dual_objective_user(sol)
}

/// Problems that can be KKT-checked; implemented by [`LinearProgram`] and
/// [`ConvexQp`] only.
pub trait CheckTarget: private::Sealed {
    fn residual_report(&self, sol: &Solution, tol: f64) -> Result<ResidualReport, SolverError>;
    fn dual_objective_user(&self, sol: &Solution) -> Result<f64, SolverError>;
}

mod private {
    pub trait Sealed {}
    impl Sealed for super::LinearProgram {}
    impl Sealed for super::ConvexQp {}
}

impl CheckTarget for LinearProgram {
    fn residual_report(&self, sol: &Solution, tol: f64) -> Result<ResidualReport, SolverError> {
        residuals(self, sol, tol)
    }
    fn dual_objective_user(&self, sol: &Solution) -> Result<f64, SolverError> {
        dual_user(self, sol)
    }
}

impl CheckTarget for ConvexQp {
    fn residual_report(&self, sol: &Solution, tol: f64) -> Result<ResidualReport, SolverError> {
        residuals(self, sol, tol)
    }
    fn dual_objective_user(&self, sol: &Solution) -> Result<f64, SolverError> {
        dual_user(self, sol)
    }
}

fn dual_user<P: Program>(p: &P, sol: &Solution) -> Result<f64, SolverError> {
    shape_check(p, sol)?;
    let b_le: Vec<f64> = p.ineq_rows().iter().map(|r| r.normalized().1).collect();
    let d_min = dual_value_min(p, sol, &b_le);
    Ok(p.user_objective(d_min))
}
