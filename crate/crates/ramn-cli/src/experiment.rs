//! Experiment orchestration: dataset → split → train → attack → evaluate.
//!
//! [`run_experiment`] reproduces the evaluation protocol at desk scale: for
//! each of `seeds` independent splits it trains every configured model on
//! the training side, then measures each model on the test side under every
//! configured attack and budget fraction. Optimized attacks are white-box —
//! each model is attacked through its own trained weights — while the
//! random heuristics read only the labels. The structure-blind baseline
//! ignores edges entirely, so its rows repeat its clean accuracy.
//!
//! Every random draw hangs off the config's base seed through fixed stream
//! tags, so identical configs produce identical reports (wall-time
//! measurements aside). Cell failures are recorded in the row's `error`
//! column and the sweep continues.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use ramn::graph::{apply_attack, load_dataset, split_train_test, AttackVariant, SplitPart};
use ramn::util::{derive_seed, mean_stderr};
use ramn::{
    accuracy, cross_validate, generate_attack, generate_synthetic, heuristic_attack,
    map_inference, theorem2_bound, AttackBudget, FeatureGraph, HeuristicMode, Labeling, Weights,
};

use crate::config::{AttackKind, DatasetSource, ExperimentConfig, Trainer};
use crate::svm::{tune_svm, SvmModel};
use crate::CliError;

/// One evaluated sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub trainer: Trainer,
    pub attack: AttackKind,
    /// Attack budget fraction (0 for clean rows).
    pub b: f64,
    /// Split index in `0..seeds`.
    pub seed: usize,
    pub train_size: usize,
    pub test_size: usize,
    /// Test accuracy; `None` when the cell failed.
    pub accuracy: Option<f64>,
    /// The optimized attacker's objective value, when one was solved.
    pub attacker_objective: Option<f64>,
    /// Worst-case relaxation-gap bound at the model's training
    /// configuration (AMN-family trainers only).
    pub theorem2_bound: Option<f64>,
    /// Time spent evaluating this cell (attack generation + inference).
    pub wall_time_s: f64,
    /// Failure description; set if and only if `accuracy` is `None`.
    pub error: Option<String>,
}

/// Mean ± standard error over one cell's successful rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub trainer: Trainer,
    pub attack: AttackKind,
    pub b: f64,
    /// Number of rows aggregated.
    pub seeds: usize,
    pub mean_accuracy: f64,
    /// Sample standard deviation over √seeds.
    pub stderr_accuracy: f64,
}

/// Raw rows plus their aggregates, one raw row per (trainer, attack, b,
/// seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ExperimentRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// Column header of the report CSV. `row` is `raw` or `agg`; aggregate rows
/// reuse the `seed` column for the number of rows they cover.
pub const REPORT_HEADER: &str = "row,trainer,attack,b,seed,train_size,test_size,accuracy,\
accuracy_stderr,attacker_objective,theorem2_bound,wall_time_s,error";

// ---------------------------------------------------------------------------
// Seed streams. Every stochastic stage derives its RNG seed from the config
// base seed through these fixed tags, which is what makes reports
// reproducible cell by cell.

/// Seed for the synthetic dataset draw.
pub fn dataset_seed(base: u64) -> u64 {
    derive_seed(base, 0xD5)
}

/// Seed for split `s`'s train/test shuffle.
pub fn split_seed(base: u64, s: usize) -> u64 {
    derive_seed(base, 0x1000 + s as u64)
}

/// Seed for split `s`'s cross-validation folds (shared by every trainer so
/// they tune on identical folds).
pub fn cv_seed(base: u64, s: usize) -> u64 {
    derive_seed(base, 0x2000 + s as u64)
}

/// Seed for the attack drawn in split `s` against `attack` at budget index
/// `budget_index`. Shared across trainers: optimized plans still differ per
/// model because they read the model's weights.
pub fn attack_seed(base: u64, s: usize, attack: AttackKind, budget_index: usize) -> u64 {
    let pos = AttackKind::ALL
        .iter()
        .position(|a| *a == attack)
        .expect("attack is one of the five kinds") as u64;
    derive_seed(
        derive_seed(base, 0x3000 + s as u64),
        (pos << 32) | budget_index as u64,
    )
}

/// Loads the configured dataset, drawing the synthetic benchmark from the
/// base seed's dataset stream.
pub fn load_experiment_dataset(
    config: &ExperimentConfig,
) -> Result<(FeatureGraph, Labeling), CliError> {
    match &config.dataset {
        DatasetSource::Path(path) => Ok(load_dataset(path)?),
        DatasetSource::Synthetic(synth) => {
            Ok(generate_synthetic(synth, dataset_seed(config.base_seed))?)
        }
    }
}

/// The budget variant the robust trainer defends against: add-delete as
/// soon as any configured attack can add edges builds.
pub fn defense_variant(attacks: &[AttackKind]) -> AttackVariant {
    if attacks
        .iter()
        .any(|a| matches!(a, AttackKind::StructAd | AttackKind::StructRsad))
    {
        AttackVariant::AddDelete
    } else {
        AttackVariant::DeleteOnly
    }
}

/// One trainer fit on a split's training side.
struct TrainedModel {
    weights: Option<Weights>,
    svm: Option<SvmModel>,
    bound: Option<f64>,
}

fn train_one(
    trainer: Trainer,
    train: &SplitPart,
    config: &ExperimentConfig,
    variant: AttackVariant,
    seed: u64,
) -> Result<TrainedModel, CliError> {
    match trainer {
        Trainer::Amn => {
            // Plain AMN: tune C on the shared folds, train with a zero
            // attack budget.
            let (c, _) = cross_validate(
                &train.graph,
                &train.labels,
                &config.c_grid,
                &[0.0],
                config.cv_folds,
                AttackVariant::DeleteOnly,
                seed,
            )?;
            let w = ramn::train(
                &train.graph,
                &train.labels,
                c,
                &AttackBudget::delete_only(0),
            )?;
            let bound = theorem2_bound(&w, c, train.graph.edge_count(), 0);
            Ok(TrainedModel {
                weights: Some(w),
                svm: None,
                bound: Some(bound),
            })
        }
        Trainer::RAmn => {
            let (c, b) = cross_validate(
                &train.graph,
                &train.labels,
                &config.c_grid,
                &config.b_grid,
                config.cv_folds,
                variant,
                seed,
            )?;
            let budget = AttackBudget::from_fraction(b, train.graph.edge_count(), variant);
            let w = ramn::train(&train.graph, &train.labels, c, &budget)?;
            let bound = theorem2_bound(&w, c, train.graph.edge_count(), budget.additions());
            Ok(TrainedModel {
                weights: Some(w),
                svm: None,
                bound: Some(bound),
            })
        }
        Trainer::Svm => {
            let (_, model) = tune_svm(
                &train.graph,
                &train.labels,
                &config.c_grid,
                config.cv_folds,
                seed,
            )?;
            Ok(TrainedModel {
                weights: None,
                svm: Some(model),
                bound: None,
            })
        }
    }
}

fn evaluate_cell(
    model: &TrainedModel,
    test: &SplitPart,
    attack: AttackKind,
    b: f64,
    trials: usize,
    seed: u64,
) -> Result<(f64, Option<f64>), CliError> {
    // The baseline predicts nodes independently, so no structural edit can
    // change its output; every cell repeats its clean accuracy.
    if let Some(svm) = &model.svm {
        let pred = svm.predict(&test.graph);
        return Ok((accuracy(&pred, &test.labels)?, None));
    }
    let w = model
        .weights
        .as_ref()
        .expect("AMN-family models carry weights");

    let m = test.graph.edge_count();
    let plan = match attack.variant() {
        None => None,
        Some(variant) => {
            let budget = AttackBudget::from_fraction(b, m, variant);
            if budget.deletions() == 0 && budget.additions() == 0 {
                None // the fraction rounds down to no edits
            } else {
                let plan = if attack.is_model_based() {
                    generate_attack(w, &test.graph, &test.labels, &budget, trials, seed)?
                } else {
                    let mode = match attack {
                        AttackKind::StructRs => HeuristicMode::Rs,
                        _ => HeuristicMode::Rsad,
                    };
                    heuristic_attack(&test.graph, &test.labels, &budget, mode, seed)?
                };
                if !plan.respects(&budget) {
                    return Err(CliError::InvalidArgument(format!(
                        "generated plan spends {} deletions / {} additions against budget {}/{}",
                        plan.deletions.len(),
                        plan.additions.len(),
                        budget.deletions(),
                        budget.additions(),
                    )));
                }
                Some(plan)
            }
        }
    };

    let (pred, objective) = match plan {
        None => (map_inference(w, &test.graph)?, None),
        Some(plan) => {
            let attacked = apply_attack(&test.graph, &plan)?;
            (map_inference(w, &attacked)?, plan.objective)
        }
    };
    Ok((accuracy(&pred.labeling, &test.labels)?, objective))
}

/// Flattens an error into a CSV-safe single-line message.
fn sanitize(msg: &str) -> String {
    msg.replace(',', ";").replace('\n', "; ")
}

fn run_split(
    config: &ExperimentConfig,
    graph: &FeatureGraph,
    labels: &Labeling,
    attacks: &[AttackKind],
    variant: AttackVariant,
    s: usize,
) -> Vec<ExperimentRow> {
    let mut rows = Vec::new();
    let blank = |trainer: Trainer, attack: AttackKind, b: f64| ExperimentRow {
        trainer,
        attack,
        b,
        seed: s,
        train_size: 0,
        test_size: 0,
        accuracy: None,
        attacker_objective: None,
        theorem2_bound: None,
        wall_time_s: 0.0,
        error: None,
    };

    let split = split_train_test(graph, labels, config.split_ratio, split_seed(config.base_seed, s));
    let (train_part, test_part) = match split {
        Ok(parts) => parts,
        Err(e) => {
            let msg = sanitize(&e.to_string());
            for &trainer in &config.trainers {
                for &attack in attacks {
                    for &b in &config.budgets_for(attack) {
                        let mut row = blank(trainer, attack, b);
                        row.error = Some(msg.clone());
                        rows.push(row);
                    }
                }
            }
            return rows;
        }
    };
    let (train_size, test_size) = (train_part.nodes.len(), test_part.nodes.len());

    for &trainer in &config.trainers {
        let model = train_one(
            trainer,
            &train_part,
            config,
            variant,
            cv_seed(config.base_seed, s),
        );
        for &attack in attacks {
            for (bi, &b) in config.budgets_for(attack).iter().enumerate() {
                let mut row = blank(trainer, attack, b);
                row.train_size = train_size;
                row.test_size = test_size;
                match &model {
                    Err(e) => row.error = Some(sanitize(&e.to_string())),
                    Ok(model) => {
                        row.theorem2_bound = model.bound;
                        let t0 = Instant::now();
                        let outcome = evaluate_cell(
                            model,
                            &test_part,
                            attack,
                            b,
                            config.trials,
                            attack_seed(config.base_seed, s, attack, bi),
                        );
                        row.wall_time_s = t0.elapsed().as_secs_f64();
                        match outcome {
                            Ok((acc, objective)) => {
                                row.accuracy = Some(acc);
                                row.attacker_objective = objective;
                            }
                            Err(e) => row.error = Some(sanitize(&e.to_string())),
                        }
                    }
                }
                rows.push(row);
            }
        }
    }
    rows
}

/// Runs the full sweep described by `config` and returns the report.
///
/// Per-cell failures land in the rows' `error` column; only dataset-level
/// failures abort the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    config.validate()?;
    let (graph, labels) = load_experiment_dataset(config)?;
    let attacks = config.effective_attacks();
    let variant = defense_variant(&attacks);

    let mut rows: Vec<ExperimentRow> = (0..config.seeds)
        .into_par_iter()
        .map(|s| run_split(config, &graph, &labels, &attacks, variant, s))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|x, y| {
        (x.trainer, x.attack)
            .cmp(&(y.trainer, y.attack))
            .then(x.b.total_cmp(&y.b))
            .then(x.seed.cmp(&y.seed))
    });
    let aggregates = aggregate_rows(&rows);
    Ok(ExperimentReport { rows, aggregates })
}

/// Recomputes the aggregate table from raw rows (failed rows are skipped).
pub fn aggregate_rows(rows: &[ExperimentRow]) -> Vec<AggregateRow> {
    let mut keys: Vec<(Trainer, AttackKind, f64)> = Vec::new();
    for row in rows {
        if !keys
            .iter()
            .any(|&(t, a, b)| t == row.trainer && a == row.attack && b == row.b)
        {
            keys.push((row.trainer, row.attack, row.b));
        }
    }
    keys.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));

    let mut aggregates = Vec::new();
    for (trainer, attack, b) in keys {
        let accs: Vec<f64> = rows
            .iter()
            .filter(|r| {
                r.trainer == trainer && r.attack == attack && r.b == b && r.error.is_none()
            })
            .filter_map(|r| r.accuracy)
            .collect();
        if accs.is_empty() {
            continue;
        }
        let (mean, stderr) = mean_stderr(&accs);
        aggregates.push(AggregateRow {
            trainer,
            attack,
            b,
            seeds: accs.len(),
            mean_accuracy: mean,
            stderr_accuracy: stderr,
        });
    }
    aggregates
}

impl ExperimentReport {
    /// Mean accuracy of a cell, read from the aggregate table.
    pub fn mean_accuracy(&self, trainer: Trainer, attack: AttackKind, b: f64) -> Option<f64> {
        self.aggregates
            .iter()
            .find(|a| a.trainer == trainer && a.attack == attack && (a.b - b).abs() < 1e-12)
            .map(|a| a.mean_accuracy)
    }

    /// Mean clean accuracy of a trainer (its `none` row).
    pub fn clean_accuracy(&self, trainer: Trainer) -> Option<f64> {
        self.mean_accuracy(trainer, AttackKind::None, 0.0)
    }

    /// Serializes the report; see [`REPORT_HEADER`] for the columns.
    pub fn to_csv(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut out = String::with_capacity(64 * (self.rows.len() + self.aggregates.len()));
        out.push_str(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "raw,{},{},{},{},{},{},{},,{},{},{:.3},{}\n",
                r.trainer,
                r.attack,
                r.b,
                r.seed,
                r.train_size,
                r.test_size,
                opt(r.accuracy),
                opt(r.attacker_objective),
                opt(r.theorem2_bound),
                r.wall_time_s,
                r.error.as_deref().unwrap_or_default(),
            ));
        }
        for a in &self.aggregates {
            out.push_str(&format!(
                "agg,{},{},{},{},,,{},{},,,,\n",
                a.trainer, a.attack, a.b, a.seeds, a.mean_accuracy, a.stderr_accuracy,
            ));
        }
        out
    }

    /// Parses a report produced by [`ExperimentReport::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != REPORT_HEADER {
            return Err(CliError::InvalidArgument(format!(
                "unrecognized report header `{header}`"
            )));
        }
        let mut rows = Vec::new();
        let mut aggregates = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let err = |msg: String| {
                CliError::InvalidArgument(format!("report line {}: {msg}", lineno + 2))
            };
            if fields.len() != 13 {
                return Err(err(format!("expected 13 fields, got {}", fields.len())));
            }
            let trainer = Trainer::parse(fields[1])
                .ok_or_else(|| err(format!("unknown trainer `{}`", fields[1])))?;
            let attack = AttackKind::parse(fields[2])
                .ok_or_else(|| err(format!("unknown attack `{}`", fields[2])))?;
            let num = |s: &str| -> Result<f64, CliError> {
                s.parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")))
            };
            let opt_num = |s: &str| -> Result<Option<f64>, CliError> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    num(s).map(Some)
                }
            };
            let int = |s: &str| -> Result<usize, CliError> {
                s.parse::<usize>().map_err(|e| err(format!("`{s}`: {e}")))
            };
            match fields[0] {
                "raw" => rows.push(ExperimentRow {
                    trainer,
                    attack,
                    b: num(fields[3])?,
                    seed: int(fields[4])?,
                    train_size: int(fields[5])?,
                    test_size: int(fields[6])?,
                    accuracy: opt_num(fields[7])?,
                    attacker_objective: opt_num(fields[9])?,
                    theorem2_bound: opt_num(fields[10])?,
                    wall_time_s: num(fields[11])?,
                    error: if fields[12].is_empty() {
                        None
                    } else {
                        Some(fields[12].to_string())
                    },
                }),
                "agg" => aggregates.push(AggregateRow {
                    trainer,
                    attack,
                    b: num(fields[3])?,
                    seeds: int(fields[4])?,
                    mean_accuracy: num(fields[7])?,
                    stderr_accuracy: num(fields[8])?,
                }),
                kind => return Err(err(format!("unknown row kind `{kind}`"))),
            }
        }
        Ok(ExperimentReport { rows, aggregates })
    }
}

/// Writes `text` to `path` through a sibling temp file and a rename, so a
/// crash never leaves a half-written file behind.
pub fn write_text_atomic(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Writes the report CSV atomically.
pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<(), CliError> {
    write_text_atomic(path, &report.to_csv())
}
