//! Deterministic SVG rendering of report aggregates.
//!
//! One accuracy-versus-budget curve file per (trainer, attack) pair, with
//! mean ± standard-error whiskers; a report whose only attack is `none`
//! collapses to a single clean-accuracy bar chart. The files are plain
//! hand-assembled SVG with fixed-precision coordinates, so regenerating
//! them from the same report (or its CSV round-trip) is byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::{AttackKind, Trainer};
use crate::experiment::{write_text_atomic, AggregateRow, ExperimentReport};
use crate::CliError;

const WIDTH: f64 = 460.0;
const HEIGHT: f64 = 340.0;
const LEFT: f64 = 54.0;
const RIGHT: f64 = 444.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 296.0;

/// Renders the report's plot files next to `base` (the report CSV path),
/// named `<stem>_<trainer>_<attack>.svg` — or `<stem>_clean.svg` when no
/// real attack was swept. Returns the written paths in name order.
pub fn emit_plots(report: &ExperimentReport, base: &Path) -> Result<Vec<PathBuf>, CliError> {
    if report.rows.is_empty() {
        return Err(CliError::InvalidArgument(
            "cannot plot an empty report".to_string(),
        ));
    }
    if report.aggregates.is_empty() {
        return Err(CliError::InvalidArgument(
            "no successful cells to plot".to_string(),
        ));
    }
    let dir = base.parent().unwrap_or_else(|| Path::new(""));
    let stem = base
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");

    let mut pairs: Vec<(Trainer, AttackKind)> = Vec::new();
    for agg in &report.aggregates {
        if !pairs.contains(&(agg.trainer, agg.attack)) {
            pairs.push((agg.trainer, agg.attack));
        }
    }
    pairs.sort();

    let only_clean = pairs.iter().all(|&(_, a)| a == AttackKind::None);
    let mut written = Vec::new();
    if only_clean {
        let path = dir.join(format!("{stem}_clean.svg"));
        write_text_atomic(&path, &clean_bar_svg(report))?;
        written.push(path);
        return Ok(written);
    }

    for (trainer, attack) in pairs {
        let mut points: Vec<&AggregateRow> = report
            .aggregates
            .iter()
            .filter(|a| a.trainer == trainer && a.attack == attack)
            .collect();
        points.sort_by(|x, y| x.b.total_cmp(&y.b));
        let path = dir.join(format!("{stem}_{trainer}_{attack}.svg"));
        write_text_atomic(&path, &curve_svg(trainer, attack, &points))?;
        written.push(path);
    }
    Ok(written)
}

fn svg_open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.2}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\" fill=\"#333\">{title}</text>\n",
        (LEFT + RIGHT) / 2.0,
    );
}

fn axes(out: &mut String, x_label: &str) {
    // Horizontal gridlines and accuracy ticks at 0, 0.25, …, 1.
    for i in 0..=4 {
        let acc = i as f64 * 0.25;
        let y = y_of(acc);
        let _ = write!(
            out,
            "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{RIGHT}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>\n\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\" fill=\"#333\">{acc}</text>\n",
            LEFT - 6.0,
            y + 4.0,
        );
    }
    let _ = write!(
        out,
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{BOTTOM}\" stroke=\"#333\"/>\n\
         <line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" stroke=\"#333\"/>\n\
         <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#333\">{x_label}</text>\n\
         <text x=\"16\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#333\" \
         transform=\"rotate(-90 16 {:.2})\">accuracy</text>\n",
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 12.0,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
    );
}

fn y_of(accuracy: f64) -> f64 {
    BOTTOM - accuracy.clamp(0.0, 1.0) * (BOTTOM - TOP)
}

fn whisker(out: &mut String, x: f64, mean: f64, stderr: f64) {
    let (lo, hi) = (y_of(mean - stderr), y_of(mean + stderr));
    let _ = write!(
        out,
        "<line x1=\"{x:.2}\" y1=\"{lo:.2}\" x2=\"{x:.2}\" y2=\"{hi:.2}\" stroke=\"#2a6f97\"/>\n\
         <line x1=\"{:.2}\" y1=\"{lo:.2}\" x2=\"{:.2}\" y2=\"{lo:.2}\" stroke=\"#2a6f97\"/>\n\
         <line x1=\"{:.2}\" y1=\"{hi:.2}\" x2=\"{:.2}\" y2=\"{hi:.2}\" stroke=\"#2a6f97\"/>\n",
        x - 4.0,
        x + 4.0,
        x - 4.0,
        x + 4.0,
    );
}

fn curve_svg(trainer: Trainer, attack: AttackKind, points: &[&AggregateRow]) -> String {
    let mut out = String::new();
    svg_open(&mut out, &format!("{trainer} under {attack}"));
    axes(&mut out, "attack budget fraction b");

    let max_b = points
        .iter()
        .map(|p| p.b)
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    let x_of = |b: f64| LEFT + (b / max_b) * (RIGHT - LEFT) * 0.94 + (RIGHT - LEFT) * 0.03;

    // Budget ticks under each plotted point.
    for p in points {
        let x = x_of(p.b);
        let _ = write!(
            out,
            "<line x1=\"{x:.2}\" y1=\"{BOTTOM}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#333\"/>\n\
             <text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333\">{}</text>\n",
            BOTTOM + 4.0,
            BOTTOM + 18.0,
            p.b,
        );
    }

    if points.len() > 1 {
        let coords: Vec<String> = points
            .iter()
            .map(|p| format!("{:.2},{:.2}", x_of(p.b), y_of(p.mean_accuracy)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#2a6f97\" stroke-width=\"1.5\"/>",
            coords.join(" "),
        );
    }
    for p in points {
        let x = x_of(p.b);
        whisker(&mut out, x, p.mean_accuracy, p.stderr_accuracy);
        let _ = writeln!(
            out,
            "<circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#2a6f97\"/>",
            y_of(p.mean_accuracy),
        );
    }
    out.push_str("</svg>\n");
    out
}

fn clean_bar_svg(report: &ExperimentReport) -> String {
    let mut out = String::new();
    svg_open(&mut out, "clean accuracy");
    axes(&mut out, "trainer");

    let bars: Vec<&AggregateRow> = report
        .aggregates
        .iter()
        .filter(|a| a.attack == AttackKind::None)
        .collect();
    let slot = (RIGHT - LEFT) / bars.len() as f64;
    for (i, bar) in bars.iter().enumerate() {
        let x0 = LEFT + i as f64 * slot + slot * 0.25;
        let xc = LEFT + i as f64 * slot + slot * 0.5;
        let y = y_of(bar.mean_accuracy);
        let _ = writeln!(
            out,
            "<rect x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#2a6f97\" fill-opacity=\"0.35\"/>",
            slot * 0.5,
            BOTTOM - y,
        );
        whisker(&mut out, xc, bar.mean_accuracy, bar.stderr_accuracy);
        let _ = write!(
            out,
            "<circle cx=\"{xc:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"#2a6f97\"/>\n\
             <text x=\"{xc:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333\">{}</text>\n",
            BOTTOM + 18.0,
            bar.trainer,
        );
    }
    out.push_str("</svg>\n");
    out
}
