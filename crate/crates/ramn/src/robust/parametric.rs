//! Maximization LPs whose objective coefficients and right-hand sides are
//! affine in an external weight vector, and their mechanical duals.
//!
//! The attacker's relaxation fits this shape: its constraint matrix is fixed
//! by the graph while the objective coefficients move with the model weights.
//! Dualizing once at the symbolic level yields constraints affine in
//! `(w, duals)`, which is exactly what the robust training QP folds in.

use super::RobustError;
use crate::solver::{
    push_grouped, EqRow, IneqDir, IneqRow, LinExpr, LinearProgram, RowGroup, Sense, VarSpace,
};

/// A scalar of the form `constant + sum coef * w[idx]` over a flat external
/// weight vector `w`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WAffine {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl WAffine {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(constant: f64) -> Self {
        Self {
            constant,
            terms: Vec::new(),
        }
    }

    pub fn linear(idx: usize, coef: f64) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(idx, coef)],
        }
    }

    pub fn push(&mut self, idx: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((idx, coef));
        }
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(idx, coef)| coef * w[idx])
                .sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    fn negated(&self) -> Self {
        Self {
            constant: -self.constant,
            terms: self.terms.iter().map(|&(i, c)| (i, -c)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParamEqRow {
    pub expr: LinExpr,
    pub rhs: WAffine,
}

#[derive(Debug, Clone)]
pub struct ParamIneqRow {
    pub expr: LinExpr,
    pub dir: IneqDir,
    pub rhs: WAffine,
}

impl ParamIneqRow {
    /// Row as `a.x <= b(w)`, negating `>=` rows.
    fn normalized(&self) -> (Vec<(usize, f64)>, WAffine) {
        match self.dir {
            IneqDir::Le => (self.expr.terms.clone(), self.rhs.clone()),
            IneqDir::Ge => (
                self.expr.terms.iter().map(|&(i, c)| (i, -c)).collect(),
                self.rhs.negated(),
            ),
        }
    }
}

/// A maximization LP over variables bounded to `[0, +inf)` whose objective
/// coefficients, offset, and row right-hand sides may be affine in an
/// external weight vector. Constraint coefficients are plain reals, so any
/// bound other than nonnegativity must be written as an explicit row.
#[derive(Debug, Clone)]
pub struct ParametricLp {
    pub vars: VarSpace,
    pub objective: Vec<WAffine>,
    pub objective_offset: WAffine,
    pub eq_rows: Vec<ParamEqRow>,
    pub ineq_rows: Vec<ParamIneqRow>,
    pub eq_groups: Vec<RowGroup>,
    pub ineq_groups: Vec<RowGroup>,
}

impl ParametricLp {
    pub fn new(vars: VarSpace) -> Self {
        let n = vars.len();
        Self {
            vars,
            objective: vec![WAffine::zero(); n],
            objective_offset: WAffine::zero(),
            eq_rows: Vec::new(),
            ineq_rows: Vec::new(),
            eq_groups: Vec::new(),
            ineq_groups: Vec::new(),
        }
    }

    pub fn push_eq(&mut self, group: &str, expr: LinExpr, rhs: WAffine) {
        push_grouped(&mut self.eq_groups, group, self.eq_rows.len());
        self.eq_rows.push(ParamEqRow { expr, rhs });
    }

    pub fn push_ineq(&mut self, group: &str, expr: LinExpr, dir: IneqDir, rhs: WAffine) {
        push_grouped(&mut self.ineq_groups, group, self.ineq_rows.len());
        self.ineq_rows.push(ParamIneqRow { expr, dir, rhs });
    }

    pub fn ineq_group(&self, name: &str) -> Option<&RowGroup> {
        self.ineq_groups.iter().find(|g| g.name == name)
    }

    /// Plugs a concrete weight vector in, yielding an ordinary maximization.
    pub fn instantiate(&self, w: &[f64]) -> LinearProgram {
        let mut lp = LinearProgram::new(self.vars.clone(), Sense::Maximize);
        for (slot, coef) in lp.objective.iter_mut().zip(&self.objective) {
            *slot = coef.eval(w);
        }
        lp.objective_offset = self.objective_offset.eval(w);
        lp.eq_rows = self
            .eq_rows
            .iter()
            .map(|r| EqRow {
                expr: r.expr.clone(),
                rhs: r.rhs.eval(w),
            })
            .collect();
        lp.ineq_rows = self
            .ineq_rows
            .iter()
            .map(|r| IneqRow {
                expr: r.expr.clone(),
                dir: r.dir,
                rhs: r.rhs.eval(w),
            })
            .collect();
        lp.eq_groups = self.eq_groups.clone();
        lp.ineq_groups = self.ineq_groups.clone();
        lp
    }
}

/// One `terms . duals >= rhs(w)` constraint of the dual, generated for a
/// single primal variable.
#[derive(Debug, Clone)]
pub struct DualRow {
    pub terms: Vec<(usize, f64)>,
    pub rhs: WAffine,
}

/// Mechanical dual of a [`ParametricLp`]: a minimization over one dual
/// variable per primal row (free for equality rows, nonnegative for
/// inequality rows, named after the primal row group), with one `>=`
/// constraint per primal variable.
#[derive(Debug, Clone)]
pub struct DualizedLp {
    pub vars: VarSpace,
    /// One row per primal variable, in primal variable order.
    pub rows: Vec<DualRow>,
    /// Dual objective coefficient per dual variable: the (normalized) primal
    /// right-hand side.
    pub objective: Vec<WAffine>,
    pub objective_offset: WAffine,
    /// Primal variable blocks, marking which slice of [`Self::rows`] each
    /// block generated.
    pub row_families: Vec<RowGroup>,
}

impl DualizedLp {
    pub fn rows_for(&self, family: &str) -> Option<&[DualRow]> {
        self.row_families
            .iter()
            .find(|g| g.name == family)
            .map(|g| &self.rows[g.range.clone()])
    }

    /// Plugs a concrete weight vector in, yielding an ordinary minimization
    /// whose optimum matches the instantiated primal's by strong duality.
    pub fn instantiate_at(&self, w: &[f64]) -> LinearProgram {
        let mut lp = LinearProgram::new(self.vars.clone(), Sense::Minimize);
        for (slot, coef) in lp.objective.iter_mut().zip(&self.objective) {
            *slot = coef.eval(w);
        }
        lp.objective_offset = self.objective_offset.eval(w);
        for (family, row) in self
            .row_families
            .iter()
            .flat_map(|g| std::iter::repeat(g.name.as_str()).zip(&self.rows[g.range.clone()]))
        {
            lp.push_ineq(
                family,
                LinExpr::new(row.terms.clone()),
                IneqDir::Ge,
                row.rhs.eval(w),
            );
        }
        lp
    }
}

fn check_canonical(lp: &ParametricLp) -> Result<(), RobustError> {
    for block in lp.vars.blocks() {
        for idx in block.range() {
            if lp.vars.lower()[idx] != 0.0 || lp.vars.upper()[idx] != f64::INFINITY {
                return Err(RobustError::NonCanonical(format!(
                    "variable block `{}` must be bounded to [0, +inf); \
                     write other bounds as explicit rows",
                    block.name
                )));
            }
        }
    }
    for groups in [&lp.eq_groups, &lp.ineq_groups] {
        for (a, g) in groups.iter().enumerate() {
            if groups[..a].iter().any(|h| h.name == g.name) {
                return Err(RobustError::NonCanonical(format!(
                    "row group `{}` is not contiguous; push its rows together",
                    g.name
                )));
            }
        }
    }
    if lp
        .eq_groups
        .iter()
        .any(|g| lp.ineq_groups.iter().any(|h| h.name == g.name))
    {
        return Err(RobustError::NonCanonical(
            "a row group name is shared between equality and inequality rows".to_string(),
        ));
    }
    Ok(())
}

/// Forms the LP dual symbolically.
///
/// For `max c(w).x` subject to `A_eq x = b_eq(w)`, `A_le x <= b_le(w)`
/// (after normalizing `>=` rows), `x >= 0`, the dual is
/// `min b_eq(w).t + b_le(w).u` subject to `A_eq' t + A_le' u >= c(w)`,
/// `t` free, `u >= 0`. Substituting any fixed `w` makes the two optima
/// coincide (strong duality), which the tests verify numerically.
pub fn dualize_parametric_lp(lp: &ParametricLp) -> Result<DualizedLp, RobustError> {
    check_canonical(lp)?;
    let n_eq = lp.eq_rows.len();

    let mut vars = VarSpace::new();
    for g in &lp.eq_groups {
        vars.add_block(&g.name, g.range.len(), f64::NEG_INFINITY, f64::INFINITY);
    }
    for g in &lp.ineq_groups {
        vars.add_block(&g.name, g.range.len(), 0.0, f64::INFINITY);
    }

    let mut objective = Vec::with_capacity(n_eq + lp.ineq_rows.len());
    let mut rows: Vec<DualRow> = lp
        .objective
        .iter()
        .map(|coef| DualRow {
            terms: Vec::new(),
            rhs: coef.clone(),
        })
        .collect();

    for (r, row) in lp.eq_rows.iter().enumerate() {
        objective.push(row.rhs.clone());
        for &(j, a) in &row.expr.terms {
            rows[j].terms.push((r, a));
        }
    }
    for (r, row) in lp.ineq_rows.iter().enumerate() {
        let (terms, rhs) = row.normalized();
        objective.push(rhs);
        for &(j, a) in &terms {
            rows[j].terms.push((n_eq + r, a));
        }
    }

    Ok(DualizedLp {
        vars,
        rows,
        objective,
        objective_offset: lp.objective_offset.clone(),
        row_families: lp
            .vars
            .blocks()
            .iter()
            .map(|b| RowGroup {
                name: b.name.clone(),
                range: b.range(),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::solver::{solve_lp, SolveStatus, LP_TOL};

    #[test]
    fn textbook_pair_dualizes_to_min_c_lambda() {
        // max x  s.t.  x <= c(w), x >= 0   with c(w) = w_0
        let mut vars = VarSpace::new();
        let x = vars.add_block("x", 1, 0.0, f64::INFINITY);
        let mut lp = ParametricLp::new(vars);
        lp.objective[0] = WAffine::constant(1.0);
        let x0 = lp.vars.index(x, 0);
        lp.push_ineq(
            "cap",
            LinExpr::new(vec![(x0, 1.0)]),
            IneqDir::Le,
            WAffine::linear(0, 1.0),
        );

        let dual = dualize_parametric_lp(&lp).unwrap();
        assert_eq!(dual.vars.len(), 1);
        let cap = dual.vars.block_by_name("cap").unwrap();
        assert_eq!((cap.offset, cap.len), (0, 1));
        assert_eq!(dual.vars.lower()[0], 0.0);
        // min c(w) . lambda  s.t.  lambda >= 1
        assert_eq!(dual.objective[0], WAffine::linear(0, 1.0));
        assert_eq!(dual.rows.len(), 1);
        assert_eq!(dual.rows[0].terms, vec![(0, 1.0)]);
        assert_eq!(dual.rows[0].rhs, WAffine::constant(1.0));

        for w0 in [0.5, 2.0, 7.25] {
            let p = solve_lp(&lp.instantiate(&[w0]), LP_TOL).unwrap();
            let d = solve_lp(&dual.instantiate_at(&[w0]), LP_TOL).unwrap();
            assert_eq!(p.status, SolveStatus::Optimal);
            assert_eq!(d.status, SolveStatus::Optimal);
            assert_abs_diff_eq!(p.objective, w0, epsilon = 1e-7);
            assert_abs_diff_eq!(d.objective, w0, epsilon = 1e-7);
        }
    }

    #[test]
    fn equality_rows_produce_free_duals_and_ge_rows_normalize() {
        // max w_0 x_0 + x_1  s.t.  x_0 + x_1 = 1, x_0 >= 0.25 (as -x_0 <= -0.25)
        let mut vars = VarSpace::new();
        let x = vars.add_block("x", 2, 0.0, f64::INFINITY);
        let mut lp = ParametricLp::new(vars);
        lp.objective[0] = WAffine::linear(0, 1.0);
        lp.objective[1] = WAffine::constant(1.0);
        let (x0, x1) = (lp.vars.index(x, 0), lp.vars.index(x, 1));
        lp.push_eq(
            "simplex",
            LinExpr::new(vec![(x0, 1.0), (x1, 1.0)]),
            WAffine::constant(1.0),
        );
        lp.push_ineq(
            "floor",
            LinExpr::new(vec![(x0, 1.0)]),
            IneqDir::Ge,
            WAffine::constant(0.25),
        );

        let dual = dualize_parametric_lp(&lp).unwrap();
        let simplex = dual.vars.block_by_name("simplex").unwrap();
        assert_eq!(dual.vars.lower()[simplex.offset], f64::NEG_INFINITY);
        let floor = dual.vars.block_by_name("floor").unwrap();
        assert_eq!(dual.vars.lower()[floor.offset], 0.0);
        // normalized floor row enters the objective as -0.25
        assert_eq!(dual.objective[floor.offset], WAffine::constant(-0.25));

        for w0 in [0.0, 0.5, 3.0] {
            let p = solve_lp(&lp.instantiate(&[w0]), LP_TOL).unwrap();
            let d = solve_lp(&dual.instantiate_at(&[w0]), LP_TOL).unwrap();
            let expect = if w0 >= 1.0 {
                w0
            } else {
                0.25 * w0 + 0.75
            };
            assert_abs_diff_eq!(p.objective, expect, epsilon = 1e-7);
            assert_abs_diff_eq!(d.objective, expect, epsilon = 1e-7);
        }
    }

    #[test]
    fn rejects_non_canonical_bounds_and_split_groups() {
        let mut vars = VarSpace::new();
        vars.add_block("x", 1, 0.0, 1.0);
        assert!(matches!(
            dualize_parametric_lp(&ParametricLp::new(vars)),
            Err(RobustError::NonCanonical(_))
        ));

        let mut vars = VarSpace::new();
        let x = vars.add_block("x", 2, 0.0, f64::INFINITY);
        let mut lp = ParametricLp::new(vars);
        let (x0, x1) = (lp.vars.index(x, 0), lp.vars.index(x, 1));
        lp.push_ineq("a", LinExpr::new(vec![(x0, 1.0)]), IneqDir::Le, WAffine::constant(1.0));
        lp.push_ineq("b", LinExpr::new(vec![(x1, 1.0)]), IneqDir::Le, WAffine::constant(1.0));
        lp.push_ineq("a", LinExpr::new(vec![(x1, 1.0)]), IneqDir::Le, WAffine::constant(2.0));
        assert!(matches!(
            dualize_parametric_lp(&lp),
            Err(RobustError::NonCanonical(_))
        ));
    }

    #[test]
    fn strong_duality_holds_on_random_parametric_lps() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..25 {
            let n = rng.random_range(2..6);
            let mut vars = VarSpace::new();
            let x = vars.add_block("x", n, 0.0, f64::INFINITY);
            let mut lp = ParametricLp::new(vars);
            for j in 0..n {
                let mut coef = WAffine::constant(rng.random_range(-1.0..1.0));
                coef.push(rng.random_range(0..3), rng.random_range(-1.0..1.0));
                lp.objective[j] = coef;
            }
            // box rows keep the primal bounded regardless of the objective
            for j in 0..n {
                let idx = lp.vars.index(x, j);
                lp.push_ineq(
                    "box",
                    LinExpr::new(vec![(idx, 1.0)]),
                    IneqDir::Le,
                    WAffine::constant(rng.random_range(0.5..2.0)),
                );
            }
            let mut coupling = Vec::new();
            for j in 0..n {
                coupling.push((lp.vars.index(x, j), rng.random_range(0.1..1.0)));
            }
            lp.push_ineq(
                "mass",
                LinExpr::new(coupling),
                IneqDir::Le,
                WAffine::constant(rng.random_range(0.5..1.5)),
            );

            let dual = dualize_parametric_lp(&lp).unwrap();
            for draw in 0..3 {
                let w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let p = solve_lp(&lp.instantiate(&w), LP_TOL).unwrap();
                let d = solve_lp(&dual.instantiate_at(&w), LP_TOL).unwrap();
                assert_eq!(p.status, SolveStatus::Optimal, "case {case} draw {draw}");
                assert_eq!(d.status, SolveStatus::Optimal, "case {case} draw {draw}");
                assert_abs_diff_eq!(p.objective, d.objective, epsilon = 1e-6);
            }
        }
    }
}
