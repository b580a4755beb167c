//! Conic assembly for the interior-point backend.
//!
//! Normalized problem: `min 1/2 x' P x + c' x` subject to `A x + s = b` with
//! `s` in a zero cone (equalities) followed by a non-negative cone
//! (inequalities, then finite lower bounds as `-x <= -lb`, then finite upper
//! bounds as `x <= ub`). The backend's dual vector therefore slices directly
//! into equality duals, inequality duals, and bound multipliers in our sign
//! convention.

use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::kkt;
use super::{Program, Solution, SolveStatus, SolverError};

struct Triplet {
    row: usize,
    col: usize,
    val: f64,
}

fn to_csc(m: usize, n: usize, mut triplets: Vec<Triplet>) -> CscMatrix<f64> {
    triplets.sort_by_key(|t| (t.col, t.row));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(triplets.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(triplets.len());
    let mut last: Option<(usize, usize)> = None;
    for t in triplets {
        if last == Some((t.col, t.row)) {
            *nzval.last_mut().expect("merged entry exists") += t.val;
        } else {
            colptr[t.col + 1] += 1;
            rowval.push(t.row);
            nzval.push(t.val);
            last = Some((t.col, t.row));
        }
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

/// Row-major constraint assembly shared by the solver call and nothing else;
/// the KKT checker re-reads the natural-form rows instead.
struct ConicForm {
    n: usize,
    n_eq: usize,
    n_ineq: usize,
    /// Variable index per finite-lower-bound row, in row order.
    lb_vars: Vec<usize>,
    /// Variable index per finite-upper-bound row, in row order.
    ub_vars: Vec<usize>,
    a: CscMatrix<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

fn assemble<P: Program>(p: &P) -> ConicForm {
    let vars = p.vars();
    let n = vars.len();
    let n_eq = p.eq_rows().len();
    let n_ineq = p.ineq_rows().len();

    let mut triplets = Vec::new();
    let mut b = Vec::new();
    for (r, row) in p.eq_rows().iter().enumerate() {
        for &(i, c) in &row.expr.terms {
            triplets.push(Triplet {
                row: r,
                col: i,
                val: c,
            });
        }
        b.push(row.rhs);
    }
    for (k, row) in p.ineq_rows().iter().enumerate() {
        let (terms, rhs) = row.normalized();
        let r = n_eq + k;
        for (i, c) in terms {
            triplets.push(Triplet {
                row: r,
                col: i,
                val: c,
            });
        }
        b.push(rhs);
    }
    let mut lb_vars = Vec::new();
    for (j, &lo) in vars.lower().iter().enumerate() {
        if lo.is_finite() {
            let r = n_eq + n_ineq + lb_vars.len();
            triplets.push(Triplet {
                row: r,
                col: j,
                val: -1.0,
            });
            b.push(-lo);
            lb_vars.push(j);
        }
    }
    let mut ub_vars = Vec::new();
    for (j, &hi) in vars.upper().iter().enumerate() {
        if hi.is_finite() {
            let r = n_eq + n_ineq + lb_vars.len() + ub_vars.len();
            triplets.push(Triplet {
                row: r,
                col: j,
                val: 1.0,
            });
            b.push(hi);
            ub_vars.push(j);
        }
    }
    let m = b.len();
    let a = to_csc(m, n, triplets);

    let mut cones = Vec::new();
    if n_eq > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_eq));
    }
    let nonneg = m - n_eq;
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }

    ConicForm {
        n,
        n_eq,
        n_ineq,
        lb_vars,
        ub_vars,
        a,
        b,
        cones,
    }
}

fn quad_csc(n: usize, diag: Option<&[f64]>) -> CscMatrix<f64> {
    let mut triplets = Vec::new();
    if let Some(d) = diag {
        for (j, &q) in d.iter().enumerate() {
            if q != 0.0 {
                triplets.push(Triplet {
                    row: j,
                    col: j,
                    val: q,
                });
            }
        }
    }
    to_csc(n, n, triplets)
}

struct RawOutcome {
    status: SolverStatus,
    x: Vec<f64>,
    z: Vec<f64>,
    iterations: u32,
}

fn run_backend(
    p_mat: &CscMatrix<f64>,
    q: &[f64],
    form: &ConicForm,
    tol: f64,
    max_iter: u32,
) -> Result<RawOutcome, SolverError> {
    let settings = DefaultSettings {
        verbose: false,
        max_iter,
        tol_feas: tol,
        tol_gap_abs: tol,
        tol_gap_rel: tol,
        ..DefaultSettings::default()
    };
    let mut solver = DefaultSolver::new(p_mat, q, &form.a, &form.b, &form.cones, settings)
        .map_err(|e| SolverError::Backend(format!("{e:?}")))?;
    solver.solve();
    let sol = &solver.solution;
    Ok(RawOutcome {
        status: sol.status,
        x: sol.x.clone(),
        z: sol.z.clone(),
        iterations: sol.iterations,
    })
}

fn scatter_duals(form: &ConicForm, z: &[f64], out: &mut Solution) {
    out.eq_duals = z[..form.n_eq].to_vec();
    out.ineq_duals = z[form.n_eq..form.n_eq + form.n_ineq].to_vec();
    out.lower_duals = vec![0.0; form.n];
    out.upper_duals = vec![0.0; form.n];
    let lb_start = form.n_eq + form.n_ineq;
    for (r, &j) in form.lb_vars.iter().enumerate() {
        out.lower_duals[j] = z[lb_start + r];
    }
    let ub_start = lb_start + form.lb_vars.len();
    for (r, &j) in form.ub_vars.iter().enumerate() {
        out.upper_duals[j] = z[ub_start + r];
    }
}

pub(super) fn solve<P: Program>(p: &P, tol: f64) -> Result<Solution, SolverError> {
    super::validate(p)?;
    let start = Instant::now();
    let form = assemble(p);
    let q = p.linear_min();
    let p_mat = quad_csc(form.n, p.quad_diag());
    let blocks = p.vars().blocks().to_vec();

    // The backend runs tighter than the contract tolerance; the contract is
    // then enforced by an independent KKT check, with one stricter retry.
    let floor = |t: f64| t.max(1e-12);
    let attempts = [(floor(tol / 10.0), 300u32), (floor(tol / 100.0), 1200u32)];
    let mut last_report: Option<String> = None;
    let mut last_solution: Option<Solution> = None;

    for (solver_tol, max_iter) in attempts {
        let raw = run_backend(&p_mat, &q, &form, solver_tol, max_iter)?;
        match raw.status {
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                let mut sol = Solution::new(blocks);
                sol.status = SolveStatus::Infeasible;
                sol.iterations = raw.iterations;
                sol.wall_time = start.elapsed();
                return Ok(sol);
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                let mut sol = Solution::new(blocks);
                sol.status = SolveStatus::Unbounded;
                sol.iterations = raw.iterations;
                sol.wall_time = start.elapsed();
                return Ok(sol);
            }
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                let mut sol = Solution::new(blocks.clone());
                sol.status = SolveStatus::Optimal;
                sol.primal = raw.x;
                scatter_duals(&form, &raw.z, &mut sol);
                let min_value = objective_min(p, &sol.primal);
                sol.objective = p.user_objective(min_value);
                sol.iterations = raw.iterations;
                sol.wall_time = start.elapsed();
                let report = kkt::residuals(p, &sol, tol)
                    .expect("solution assembled from this problem always matches it");
                if report.passes() {
                    return Ok(sol);
                }
                last_report = Some(format!("residuals above {tol}: {report}"));
                last_solution = Some(sol);
            }
            other => {
                last_report = Some(format!("backend status {other:?}"));
            }
        }
    }

    let mut sol = last_solution.unwrap_or_else(|| Solution::new(blocks));
    sol.status = SolveStatus::NumericalFailure;
    sol.wall_time = start.elapsed();
    sol.diagnostics = last_report;
    Ok(sol)
}

fn objective_min<P: Program>(p: &P, x: &[f64]) -> f64 {
    let lin: f64 = p.linear_min().iter().zip(x).map(|(c, xi)| c * xi).sum();
    let quad: f64 = match p.quad_diag() {
        Some(d) => d.iter().zip(x).map(|(q, xi)| 0.5 * q * xi * xi).sum(),
        None => 0.0,
    };
    lin + quad
}
