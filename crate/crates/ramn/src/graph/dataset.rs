//! Line-oriented text formats for datasets, labelings, and attack plans.
//!
//! Dataset format (versioned header):
//!
//! ```text
//! amn-dataset v1 N d_n K
//! <label>; <idx>:<val> <idx>:<val> ...      (N lines, labels 1..=K)
//! edges                                     (optional section)
//! <i> <j> [d_e floats]                      (d_e inferred from first line)
//! ```
//!
//! Attack plans are `delete i j` / `add i j` lines; `#`-prefixed comment
//! lines carry the provenance tag and achieved objective when known.
//! Labelings are `node_index label` lines with one-based labels.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{AttackPlan, FeatureGraph, GraphError, Labeling, Provenance, SparseRow};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> GraphError {
    GraphError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Writes `contents` to a sibling temp file and renames it into place, so a
/// crash never leaves a half-written file at `path`.
pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<(), GraphError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads a dataset file. The returned graph has edges only if the file has an
/// `edges` section; the usual flow for corpus exports is to follow up with
/// [`super::build_knn_graph`].
pub fn load_dataset(path: &Path) -> Result<(FeatureGraph, Labeling), GraphError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (hno, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 5 || head[0] != "amn-dataset" || head[1] != "v1" {
        return Err(parse_err(
            path,
            hno + 1,
            "expected header `amn-dataset v1 N d_n K`",
        ));
    }
    let n: usize = head[2]
        .parse()
        .map_err(|_| parse_err(path, hno + 1, format!("bad node count {}", head[2])))?;
    let d_n: usize = head[3]
        .parse()
        .map_err(|_| parse_err(path, hno + 1, format!("bad feature dimension {}", head[3])))?;
    let k: usize = head[4]
        .parse()
        .map_err(|_| parse_err(path, hno + 1, format!("bad label count {}", head[4])))?;

    let mut features: Vec<SparseRow> = Vec::with_capacity(n);
    let mut labels: Vec<usize> = Vec::with_capacity(n);
    while features.len() < n {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, format!("{} node lines, expected {n}", features.len())))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = lno + 1;
        let (label_part, feat_part) = line
            .split_once(';')
            .ok_or_else(|| parse_err(path, lineno, "expected `label; idx:val ...`"))?;
        let label: usize = label_part
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad label `{}`", label_part.trim())))?;
        if label < 1 || label > k {
            return Err(parse_err(path, lineno, format!("label {label} outside 1..={k}")));
        }
        labels.push(label - 1);
        let mut row: SparseRow = Vec::new();
        for pair in feat_part.split_whitespace() {
            let (idx, val) = pair
                .split_once(':')
                .ok_or_else(|| parse_err(path, lineno, format!("bad feature pair `{pair}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad feature index `{idx}`")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad feature value `{val}`")))?;
            if val < 0.0 {
                return Err(parse_err(path, lineno, format!("negative feature value {val}")));
            }
            row.push((idx, val));
        }
        features.push(row);
    }

    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut edge_features: Vec<Vec<f64>> = Vec::new();
    let mut d_e: Option<usize> = None;
    let mut in_edges = false;
    for (lno, line) in lines {
        let lineno = lno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if !in_edges {
            if line == "edges" {
                in_edges = true;
                continue;
            }
            return Err(parse_err(path, lineno, format!("unexpected line `{line}`")));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 {
            return Err(parse_err(path, lineno, "edge line needs at least `i j`"));
        }
        let i: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node index `{}`", toks[0])))?;
        let j: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node index `{}`", toks[1])))?;
        let feats: Vec<f64> = toks[2..]
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(path, lineno, format!("bad edge feature `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        match d_e {
            None => d_e = Some(feats.len()),
            Some(d) if d != feats.len() => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("edge has {} features, earlier edges had {d}", feats.len()),
                ));
            }
            _ => {}
        }
        edges.push((i, j));
        edge_features.push(feats);
    }

    let graph = match d_e {
        Some(d) if d > 0 => FeatureGraph::with_edge_features(d_n, features, edges, d, edge_features)?,
        _ => FeatureGraph::new(d_n, features, edges)?,
    };
    let labeling = Labeling::new(labels, k)?;
    Ok((graph, labeling))
}

/// Writes a dataset in the format read by [`load_dataset`].
pub fn save_dataset(
    path: &Path,
    graph: &FeatureGraph,
    labels: &Labeling,
) -> Result<(), GraphError> {
    if labels.len() != graph.n() {
        return Err(GraphError::InvalidLabels(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.n()
        )));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "amn-dataset v1 {} {} {}",
        graph.n(),
        graph.d_n(),
        labels.k()
    );
    for i in 0..graph.n() {
        let _ = write!(out, "{};", labels.label(i) + 1);
        for &(t, v) in graph.feature_row(i) {
            let _ = write!(out, " {t}:{v}");
        }
        let _ = writeln!(out);
    }
    if graph.edge_count() > 0 {
        let _ = writeln!(out, "edges");
        for (pos, &(i, j)) in graph.edges().iter().enumerate() {
            let _ = write!(out, "{i} {j}");
            if let Some(rows) = graph.edge_features() {
                for v in &rows[pos] {
                    let _ = write!(out, " {v}");
                }
            }
            let _ = writeln!(out);
        }
    }
    write_atomic(path, &out)
}

/// Loads an attack plan. Files without a `# provenance` comment load as
/// `lp-round`; files without `# objective` load with no recorded objective.
pub fn load_attack_plan(path: &Path) -> Result<AttackPlan, GraphError> {
    let text = fs::read_to_string(path)?;
    let mut plan = AttackPlan::empty(Provenance::LpRound);
    for (lno, raw) in text.lines().enumerate() {
        let lineno = lno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let toks: Vec<&str> = comment.split_whitespace().collect();
            match toks.as_slice() {
                ["provenance", tag] => {
                    plan.provenance = Provenance::from_tag(tag)
                        .ok_or_else(|| parse_err(path, lineno, format!("unknown provenance `{tag}`")))?;
                }
                ["objective", v] => {
                    let v: f64 = v
                        .parse()
                        .map_err(|_| parse_err(path, lineno, format!("bad objective `{v}`")))?;
                    plan.objective = Some(v);
                }
                _ => {}
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(parse_err(path, lineno, "expected `delete i j` or `add i j`"));
        }
        let i: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node index `{}`", toks[1])))?;
        let j: usize = toks[2]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node index `{}`", toks[2])))?;
        match toks[0] {
            "delete" => plan.deletions.push(super::norm_pair(i, j)),
            "add" => plan.additions.push(super::norm_pair(i, j)),
            op => return Err(parse_err(path, lineno, format!("unknown operation `{op}`"))),
        }
    }
    plan.deletions.sort_unstable();
    plan.additions.sort_unstable();
    Ok(plan)
}

/// Writes an attack plan in the format read by [`load_attack_plan`].
pub fn save_attack_plan(path: &Path, plan: &AttackPlan) -> Result<(), GraphError> {
    let mut out = String::new();
    let _ = writeln!(out, "# provenance {}", plan.provenance.tag());
    if let Some(v) = plan.objective {
        let _ = writeln!(out, "# objective {v}");
    }
    for &(i, j) in &plan.deletions {
        let _ = writeln!(out, "delete {i} {j}");
    }
    for &(i, j) in &plan.additions {
        let _ = writeln!(out, "add {i} {j}");
    }
    write_atomic(path, &out)
}

/// Loads a labeling written as `node_index label` lines (one-based labels).
/// Every node in `0..N` must appear exactly once; `K` is the largest label
/// seen.
pub fn load_labeling(path: &Path) -> Result<Labeling, GraphError> {
    let text = fs::read_to_string(path)?;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (lno, raw) in text.lines().enumerate() {
        let lineno = lno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, lineno, "expected `node_index label`"));
        }
        let i: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad node index `{}`", toks[0])))?;
        let label: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad label `{}`", toks[1])))?;
        if label == 0 {
            return Err(parse_err(path, lineno, "labels are one-based"));
        }
        pairs.push((i, label - 1));
    }
    pairs.sort_unstable();
    for (expect, &(i, _)) in pairs.iter().enumerate() {
        if i != expect {
            return Err(GraphError::InvalidLabels(format!(
                "node {expect} missing or duplicated in labeling file"
            )));
        }
    }
    let k = pairs.iter().map(|&(_, l)| l + 1).max().unwrap_or(1);
    Labeling::new(pairs.into_iter().map(|(_, l)| l).collect(), k)
}

/// Writes a labeling in the format read by [`load_labeling`].
pub fn save_labeling(path: &Path, labels: &Labeling) -> Result<(), GraphError> {
    let mut out = String::new();
    for i in 0..labels.len() {
        let _ = writeln!(out, "{i} {}", labels.label(i) + 1);
    }
    write_atomic(path, &out)
}
