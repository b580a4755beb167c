//! Plain-text dump of problems in LP format, for eyeballing and for diffing
//! small instances in tests. Variables are named `{block}_{i}`, rows
//! `{group}_{global row index}`.

use std::fmt::Write;

use super::{ConvexQp, IneqDir, LinearProgram, Program, RowGroup, Sense};

fn var_names(p: &dyn VarNamer) -> Vec<String> {
    let mut names = vec![String::new(); p.n()];
    for b in p.block_list() {
        for i in 0..b.1 {
            names[b.2 + i] = format!("{}_{i}", b.0);
        }
    }
    names
}

trait VarNamer {
    fn n(&self) -> usize;
    /// (name, len, offset) per block.
    fn block_list(&self) -> Vec<(String, usize, usize)>;
}

impl<P: Program> VarNamer for P {
    fn n(&self) -> usize {
        self.vars().len()
    }
    fn block_list(&self) -> Vec<(String, usize, usize)> {
        self.vars()
            .blocks()
            .iter()
            .map(|b| (b.name.clone(), b.len, b.offset))
            .collect()
    }
}

fn group_name(groups: &[RowGroup], row: usize) -> &str {
    groups
        .iter()
        .find(|g| g.range.contains(&row))
        .map(|g| g.name.as_str())
        .unwrap_or("row")
}

fn write_linear(out: &mut String, terms: &[(usize, f64)], names: &[String], lead: bool) {
    let mut first = lead;
    for &(i, c) in terms {
        if c == 0.0 {
            continue;
        }
        if first {
            if c < 0.0 {
                let _ = write!(out, "- ");
            }
            first = false;
        } else if c < 0.0 {
            let _ = write!(out, " - ");
        } else {
            let _ = write!(out, " + ");
        }
        let a = c.abs();
        if a == 1.0 {
            let _ = write!(out, "{}", names[i]);
        } else {
            let _ = write!(out, "{} {}", a, names[i]);
        }
    }
    if first {
        let _ = write!(out, "0");
    }
}

fn write_rows<P: Program>(out: &mut String, p: &P, names: &[String], eqg: &[RowGroup], ing: &[RowGroup]) {
    let _ = writeln!(out, "Subject To");
    for (r, row) in p.eq_rows().iter().enumerate() {
        let _ = write!(out, " {}_{}: ", group_name(eqg, r), r);
        write_linear(out, &row.expr.terms, names, true);
        let _ = writeln!(out, " = {}", row.rhs);
    }
    for (r, row) in p.ineq_rows().iter().enumerate() {
        let _ = write!(out, " {}_{}: ", group_name(ing, r), r);
        write_linear(out, &row.expr.terms, names, true);
        let op = match row.dir {
            IneqDir::Le => "<=",
            IneqDir::Ge => ">=",
        };
        let _ = writeln!(out, " {} {}", op, row.rhs);
    }
}

fn write_bounds<P: Program>(out: &mut String, p: &P, names: &[String]) {
    let _ = writeln!(out, "Bounds");
    let lower = p.vars().lower();
    let upper = p.vars().upper();
    for j in 0..p.vars().len() {
        let (lo, hi) = (lower[j], upper[j]);
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " {} free", names[j]);
        } else if hi == f64::INFINITY {
            let _ = writeln!(out, " {} >= {}", names[j], lo);
        } else if lo == f64::NEG_INFINITY {
            let _ = writeln!(out, " -infinity <= {} <= {}", names[j], hi);
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", lo, names[j], hi);
        }
    }
}

/// Renders a linear program as LP-format text.
pub fn lp_to_text(lp: &LinearProgram) -> String {
    let names = var_names(lp);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ {} variables, {} equalities, {} inequalities",
        lp.vars.len(),
        lp.eq_rows.len(),
        lp.ineq_rows.len()
    );
    let _ = writeln!(
        out,
        "{}",
        match lp.sense {
            Sense::Maximize => "Maximize",
            Sense::Minimize => "Minimize",
        }
    );
    let _ = write!(out, " obj: ");
    let terms: Vec<(usize, f64)> = lp
        .objective
        .iter()
        .enumerate()
        .map(|(i, &c)| (i, c))
        .collect();
    write_linear(&mut out, &terms, &names, true);
    if lp.objective_offset != 0.0 {
        let c = lp.objective_offset;
        if c < 0.0 {
            let _ = write!(out, " - {}", -c);
        } else {
            let _ = write!(out, " + {}", c);
        }
    }
    let _ = writeln!(out);
    write_rows(&mut out, lp, &names, &lp.eq_groups, &lp.ineq_groups);
    write_bounds(&mut out, lp, &names);
    let _ = writeln!(out, "End");
    out
}

/// Renders a convex QP as LP-format text; the quadratic part uses the
/// bracketed `[...] / 2` objective section.
pub fn qp_to_text(qp: &ConvexQp) -> String {
    let names = var_names(qp);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "\\ {} variables, {} equalities, {} inequalities",
        qp.vars.len(),
        qp.eq_rows.len(),
        qp.ineq_rows.len()
    );
    let _ = writeln!(out, "Minimize");
    let _ = write!(out, " obj: ");
    let terms: Vec<(usize, f64)> = qp
        .linear
        .iter()
        .enumerate()
        .map(|(i, &c)| (i, c))
        .collect();
    write_linear(&mut out, &terms, &names, true);
    let quad_terms: Vec<(usize, f64)> = qp
        .quad_diag
        .iter()
        .enumerate()
        .filter(|&(_, &q)| q != 0.0)
        .map(|(i, &q)| (i, q))
        .collect();
    if !quad_terms.is_empty() {
        let _ = write!(out, " + [ ");
        let mut first = true;
        for (i, q) in quad_terms {
            if !first {
                let _ = write!(out, " + ");
            }
            first = false;
            if q == 1.0 {
                let _ = write!(out, "{} ^2", names[i]);
            } else {
                let _ = write!(out, "{} {} ^2", q, names[i]);
            }
        }
        let _ = write!(out, " ] / 2");
    }
    if qp.objective_offset != 0.0 {
        let c = qp.objective_offset;
        if c < 0.0 {
            let _ = write!(out, " - {}", -c);
        } else {
            let _ = write!(out, " + {}", c);
        }
    }
    let _ = writeln!(out);
    write_rows(&mut out, qp, &names, &qp.eq_groups, &qp.ineq_groups);
    write_bounds(&mut out, qp, &names);
    let _ = writeln!(out, "End");
    out
}
