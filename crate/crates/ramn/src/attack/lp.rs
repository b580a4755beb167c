//! The attacker's LP relaxation, built once with symbolic weight
//! coefficients and instantiated per weight vector.

use super::{reduced_non_edges, AttackError};
use crate::amn::{check_dims, Weights};
use crate::graph::{AttackBudget, AttackVariant, FeatureGraph, Labeling};
use crate::robust::{ParametricLp, WAffine};
use crate::solver::{IneqDir, LinExpr, LinearProgram, VarSpace};

/// Builds the attacker's relaxation with the model weights left symbolic,
/// using the flat weight layout of [`Weights::flatten`].
///
/// Variables are the relaxed node assignment `y` (one simplex row per
/// node), the agreement values `z` capped by both endpoint marginals and
/// the keep decision, and the keep decisions `e` in `[0, 1]`; add/delete
/// budgets additionally get `e_bar`/`z_bar` over the cross-label non-edge
/// candidates. The deletion budget row bounds the deleted mass, the
/// addition budget row bounds the added mass, and an optional per-node row
/// group caps total incident changes. The objective's constant part (the
/// margin constant) rides along as the offset so instantiated optima report
/// the full inner margin value.
pub fn attacker_parametric_lp(
    graph: &FeatureGraph,
    yhat: &Labeling,
    budget: &AttackBudget,
) -> Result<ParametricLp, AttackError> {
    if yhat.len() != graph.n() {
        return Err(AttackError::DimensionMismatch(format!(
            "{} labels for {} nodes",
            yhat.len(),
            graph.n()
        )));
    }
    let (n, k, m) = (graph.n(), yhat.k(), graph.edge_count());
    let d_n = graph.d_n();
    if budget.deletions() > m {
        return Err(AttackError::InvalidArgument(format!(
            "deletion budget {} exceeds the {m} edges present",
            budget.deletions()
        )));
    }
    let non_edges = match budget.variant() {
        AttackVariant::DeleteOnly => Vec::new(),
        AttackVariant::AddDelete => reduced_non_edges(graph, yhat),
    };
    let mb = non_edges.len();

    let mut vars = VarSpace::new();
    let y = vars.add_block("y", n * k, 0.0, f64::INFINITY);
    let z = vars.add_block("z", m * k, 0.0, f64::INFINITY);
    let e = vars.add_block("e", m, 0.0, f64::INFINITY);
    let (e_bar, z_bar) = if budget.variant() == AttackVariant::AddDelete {
        (
            Some(vars.add_block("e_bar", mb, 0.0, f64::INFINITY)),
            Some(vars.add_block("z_bar", mb * k, 0.0, f64::INFINITY)),
        )
    } else {
        (None, None)
    };
    let mut lp = ParametricLp::new(vars);

    for i in 0..n {
        for kk in 0..k {
            let mut coef = WAffine::constant(-yhat.one_hot(i, kk));
            for &(f, v) in graph.feature_row(i) {
                coef.push(Weights::flat_node_index(k, d_n, kk, f), v);
            }
            lp.objective[lp.vars.index(y, i * k + kk)] = coef;
        }
    }
    for em in 0..m {
        for kk in 0..k {
            lp.objective[lp.vars.index(z, em * k + kk)] =
                WAffine::linear(Weights::flat_edge_index(k, d_n, kk), 1.0);
        }
        let (i, j) = graph.edges()[em];
        if yhat.label(i) == yhat.label(j) {
            lp.objective[lp.vars.index(e, em)] =
                WAffine::linear(Weights::flat_edge_index(k, d_n, yhat.label(i)), -1.0);
        }
    }
    if let Some(z_bar) = z_bar {
        for a in 0..mb {
            for kk in 0..k {
                lp.objective[lp.vars.index(z_bar, a * k + kk)] =
                    WAffine::linear(Weights::flat_edge_index(k, d_n, kk), 1.0);
            }
        }
    }
    let mut offset = WAffine::constant(n as f64);
    let mut offset_coeffs = vec![0.0; k * d_n];
    for i in 0..n {
        for &(f, v) in graph.feature_row(i) {
            offset_coeffs[Weights::flat_node_index(k, d_n, yhat.label(i), f)] -= v;
        }
    }
    for (idx, &coef) in offset_coeffs.iter().enumerate() {
        offset.push(idx, coef);
    }
    lp.objective_offset = offset;

    for i in 0..n {
        let terms = (0..k).map(|kk| (lp.vars.index(y, i * k + kk), 1.0)).collect();
        lp.push_eq("node_simplex", LinExpr::new(terms), WAffine::constant(1.0));
    }
    push_agreement_caps(&mut lp, "agree", graph.edges(), y, z, e, k);
    for em in 0..m {
        lp.push_ineq(
            "keep_ub",
            LinExpr::new(vec![(lp.vars.index(e, em), 1.0)]),
            IneqDir::Le,
            WAffine::constant(1.0),
        );
    }
    let deleted_mass = (0..m).map(|em| (lp.vars.index(e, em), -1.0)).collect();
    lp.push_ineq(
        "del_budget",
        LinExpr::new(deleted_mass),
        IneqDir::Le,
        WAffine::constant(budget.deletions() as f64 - m as f64),
    );

    if let (Some(e_bar), Some(z_bar)) = (e_bar, z_bar) {
        push_agreement_caps(&mut lp, "add_agree", &non_edges, y, z_bar, e_bar, k);
        for a in 0..mb {
            lp.push_ineq(
                "add_ub",
                LinExpr::new(vec![(lp.vars.index(e_bar, a), 1.0)]),
                IneqDir::Le,
                WAffine::constant(1.0),
            );
        }
        let added_mass = (0..mb).map(|a| (lp.vars.index(e_bar, a), 1.0)).collect();
        lp.push_ineq(
            "add_budget",
            LinExpr::new(added_mass),
            IneqDir::Le,
            WAffine::constant(budget.additions() as f64),
        );
    }

    if let Some(cap) = budget.degree_cap() {
        for (i, &deg) in graph.degrees().iter().enumerate() {
            let mut terms = Vec::new();
            for (em, &(a, b)) in graph.edges().iter().enumerate() {
                if a == i || b == i {
                    terms.push((lp.vars.index(e, em), -1.0));
                }
            }
            if let Some(e_bar) = e_bar {
                for (idx, &(a, b)) in non_edges.iter().enumerate() {
                    if a == i || b == i {
                        terms.push((lp.vars.index(e_bar, idx), 1.0));
                    }
                }
            }
            lp.push_ineq(
                "degree_cap",
                LinExpr::new(terms),
                IneqDir::Le,
                WAffine::constant(cap as f64 - deg as f64),
            );
        }
    }

    Ok(lp)
}

fn push_agreement_caps(
    lp: &mut ParametricLp,
    prefix: &str,
    pairs: &[(usize, usize)],
    y: crate::solver::BlockId,
    z: crate::solver::BlockId,
    e: crate::solver::BlockId,
    k: usize,
) {
    let groups = [
        format!("{prefix}_i"),
        format!("{prefix}_j"),
        format!("{prefix}_e"),
    ];
    for (pass, group) in groups.iter().enumerate() {
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            for kk in 0..k {
                let zv = lp.vars.index(z, idx * k + kk);
                let other = match pass {
                    0 => lp.vars.index(y, i * k + kk),
                    1 => lp.vars.index(y, j * k + kk),
                    _ => lp.vars.index(e, idx),
                };
                lp.push_ineq(
                    group,
                    LinExpr::new(vec![(zv, 1.0), (other, -1.0)]),
                    IneqDir::Le,
                    WAffine::zero(),
                );
            }
        }
    }
}

/// The attacker's LP relaxation at concrete weights: maximize the margin
/// objective over relaxed labelings and budgeted edge decisions.
pub fn build_attacker_lp(
    w: &Weights,
    graph: &FeatureGraph,
    yhat: &Labeling,
    budget: &AttackBudget,
) -> Result<LinearProgram, AttackError> {
    check_dims(w, graph, Some(yhat))?;
    Ok(attacker_parametric_lp(graph, yhat, budget)?.instantiate(&w.flatten()))
}
