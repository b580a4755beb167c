//! Command-line front end.
//!
//! `train`, `attack`, and `eval` are one-shot operations on the configured
//! dataset as a whole: fit weights, build a single attack plan, score a
//! labeling. `sweep` runs the full multi-seed experiment protocol and
//! writes the CSV report plus accuracy curves. `certify-bounds` replays
//! the empirical checks behind the solver and training guarantees. Every
//! command exits nonzero unless all of its cells or checks succeed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ramn::amn::{load_weights, save_weights};
use ramn::graph::{apply_attack, load_attack_plan, save_attack_plan, save_labeling};
use ramn::{
    accuracy, cross_validate, generate_attack, heuristic_attack, map_inference, AttackBudget,
    HeuristicMode, Weights,
};
use ramn_cli::certify::bound_checks;
use ramn_cli::config::{AttackKind, ExperimentConfig, Trainer};
use ramn_cli::experiment::{
    cv_seed, defense_variant, load_experiment_dataset, run_experiment, write_report,
    write_text_atomic,
};
use ramn_cli::plots::emit_plots;
use ramn_cli::CliError;

#[derive(Parser)]
#[command(
    name = "ramn-cli",
    about = "Robust associative Markov network training, attacks, and benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the first graph-based trainer in the config on the full dataset
    /// and save its weights.
    Train {
        /// Experiment config (flat key=value file).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Weights output path.
        #[arg(long, default_value = "weights.amn")]
        out: PathBuf,
    },
    /// Build one structural attack plan against the full dataset graph
    /// using the first configured attack.
    Attack {
        /// Experiment config; `weights = <path>` is required for the
        /// optimized attacks.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's first budget fraction.
        #[arg(long)]
        budget_frac: Option<f64>,
        /// Overrides the config's rounding trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Plan output path.
        #[arg(long, default_value = "attack.plan")]
        out: PathBuf,
    },
    /// Run MAP inference on the dataset graph — after applying the
    /// config's attack plan, if one is set — and report accuracy.
    Eval {
        /// Experiment config; `weights = <path>` is required, `plan =
        /// <path>` is applied when present.
        #[arg(long)]
        config: PathBuf,
        /// Optional path for the predicted labeling.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full multi-seed sweep and write the CSV report and plots.
    Sweep {
        /// Experiment config (flat key=value file).
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's rounding trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides the config's report output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the empirical certification checks behind the attack and
    /// training guarantees.
    CertifyBounds {
        /// Directory searched for the optional preprocessed dataset
        /// exports.
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        /// Optional path for the text report (one line per check).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Train { config, seed, out } => run_train(&config, seed, &out),
        Command::Attack {
            config,
            seed,
            budget_frac,
            trials,
            out,
        } => run_attack(&config, seed, budget_frac, trials, &out),
        Command::Eval { config, out } => run_eval(&config, out.as_deref()),
        Command::Sweep {
            config,
            seed,
            trials,
            out,
        } => run_sweep(&config, seed, trials, out),
        Command::CertifyBounds { data_dir, out } => run_certify(&data_dir, out.as_deref()),
    }
}

fn load_config(path: &std::path::Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.base_seed = seed;
    }
    Ok(config)
}

/// Cross-validates and fits the given graph trainer on the whole dataset.
fn fit_trainer(
    trainer: Trainer,
    config: &ExperimentConfig,
    graph: &ramn::FeatureGraph,
    labels: &ramn::Labeling,
) -> Result<(Weights, f64, f64), CliError> {
    let variant = defense_variant(&config.attacks);
    let seed = cv_seed(config.base_seed, 0);
    let (c, b) = match trainer {
        Trainer::Amn => (
            cross_validate(graph, labels, &config.c_grid, &[0.0], config.cv_folds, variant, seed)?
                .0,
            0.0,
        ),
        Trainer::RAmn => cross_validate(
            graph,
            labels,
            &config.c_grid,
            &config.b_grid,
            config.cv_folds,
            variant,
            seed,
        )?,
        Trainer::Svm => {
            return Err(CliError::InvalidArgument(
                "the train subcommand fits the graph-based trainers; configure amn or r-amn"
                    .to_string(),
            ))
        }
    };
    let budget = AttackBudget::from_fraction(b, graph.edge_count(), variant);
    let w = ramn::train(graph, labels, c, &budget)?;
    Ok((w, c, b))
}

fn run_train(
    config_path: &std::path::Path,
    seed: Option<u64>,
    out: &std::path::Path,
) -> Result<ExitCode, CliError> {
    let config = load_config(config_path, seed)?;
    config.validate()?;
    let (graph, labels) = load_experiment_dataset(&config)?;
    let trainer = config
        .trainers
        .iter()
        .copied()
        .find(|t| *t != Trainer::Svm)
        .ok_or_else(|| {
            CliError::InvalidArgument(
                "the train subcommand fits the graph-based trainers; configure amn or r-amn"
                    .to_string(),
            )
        })?;
    let (w, c, b) = fit_trainer(trainer, &config, &graph, &labels)?;
    save_weights(out, &w)?;
    println!(
        "trained {trainer} on {} nodes / {} edges (C = {c}, b = {b}); weights -> {}",
        graph.n(),
        graph.edge_count(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_attack(
    config_path: &std::path::Path,
    seed: Option<u64>,
    budget_frac: Option<f64>,
    trials: Option<usize>,
    out: &std::path::Path,
) -> Result<ExitCode, CliError> {
    let config = load_config(config_path, seed)?;
    config.validate()?;
    let attack = config
        .attacks
        .iter()
        .copied()
        .find(|a| *a != AttackKind::None)
        .ok_or_else(|| {
            CliError::InvalidArgument(
                "the attack subcommand needs a structural attack; configure one of struct-d, \
                 struct-ad, struct-rs, struct-rsad"
                    .to_string(),
            )
        })?;
    let frac = budget_frac.or_else(|| config.budgets.first().copied()).ok_or_else(|| {
        CliError::InvalidArgument("no budget fraction configured or given".to_string())
    })?;
    if !(0.0..=1.0).contains(&frac) {
        return Err(CliError::InvalidArgument(format!(
            "budget fraction {frac} outside [0, 1]"
        )));
    }
    let trials = trials.unwrap_or(config.trials);
    let (graph, labels) = load_experiment_dataset(&config)?;
    let variant = attack.variant().expect("a structural attack has a variant");
    let budget = AttackBudget::from_fraction(frac, graph.edge_count(), variant);

    let plan = if attack.is_model_based() {
        let weights_path = config.weights.as_ref().ok_or_else(|| {
            CliError::InvalidArgument(format!(
                "attack {attack} optimizes against a model; set `weights = <path>` in the config \
                 (produced by the train subcommand)"
            ))
        })?;
        let w = load_weights(weights_path)?;
        generate_attack(&w, &graph, &labels, &budget, trials, config.base_seed)?
    } else {
        let mode = match attack {
            AttackKind::StructRs => HeuristicMode::Rs,
            _ => HeuristicMode::Rsad,
        };
        heuristic_attack(&graph, &labels, &budget, mode, config.base_seed)?
    };
    save_attack_plan(out, &plan)?;
    println!(
        "{attack} plan at b = {frac}: {} deletions, {} additions{} -> {}",
        plan.deletions.len(),
        plan.additions.len(),
        plan.objective
            .map(|v| format!(", attacker objective {v:.6}"))
            .unwrap_or_default(),
        out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_eval(
    config_path: &std::path::Path,
    out: Option<&std::path::Path>,
) -> Result<ExitCode, CliError> {
    let config = load_config(config_path, None)?;
    config.validate()?;
    let weights_path = config.weights.as_ref().ok_or_else(|| {
        CliError::InvalidArgument(
            "eval scores saved weights; set `weights = <path>` in the config".to_string(),
        )
    })?;
    let w = load_weights(weights_path)?;
    let (graph, labels) = load_experiment_dataset(&config)?;
    let graph = match &config.plan {
        Some(plan_path) => apply_attack(&graph, &load_attack_plan(plan_path)?)?,
        None => graph,
    };
    let result = map_inference(&w, &graph)?;
    let acc = accuracy(&result.labeling, &labels)?;
    println!(
        "accuracy {acc:.4} over {} nodes ({} edges{})",
        graph.n(),
        graph.edge_count(),
        if config.plan.is_some() { " after attack" } else { "" }
    );
    if let Some(out) = out {
        save_labeling(out, &result.labeling)?;
        println!("predicted labeling -> {}", out.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(
    config_path: &std::path::Path,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    let mut config = load_config(config_path, seed)?;
    if let Some(trials) = trials {
        config.trials = trials;
    }
    if let Some(out) = out {
        config.output = out;
    }
    let report = run_experiment(&config)?;
    write_report(&report, &config.output)?;
    let plot_paths = emit_plots(&report, &config.output)?;

    println!("report -> {}", config.output.display());
    for path in &plot_paths {
        println!("plot -> {}", path.display());
    }
    println!("trainer      attack       b      mean    stderr  seeds");
    for agg in &report.aggregates {
        println!(
            "{:<12} {:<12} {:<6} {:.4}  {:.4}  {}",
            agg.trainer.name(),
            agg.attack.name(),
            agg.b,
            agg.mean_accuracy,
            agg.stderr_accuracy,
            agg.seeds
        );
    }
    let failures: Vec<&ramn_cli::ExperimentRow> =
        report.rows.iter().filter(|r| r.error.is_some()).collect();
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for row in &failures {
            eprintln!(
                "cell failed: trainer={} attack={} b={} seed={}: {}",
                row.trainer,
                row.attack,
                row.b,
                row.seed,
                row.error.as_deref().unwrap_or("unknown")
            );
        }
        eprintln!("{} of {} cells failed", failures.len(), report.rows.len());
        Ok(ExitCode::FAILURE)
    }
}

fn run_certify(
    data_dir: &std::path::Path,
    out: Option<&std::path::Path>,
) -> Result<ExitCode, CliError> {
    let outcomes = bound_checks(data_dir);
    let mut lines = Vec::with_capacity(outcomes.len());
    for outcome in &outcomes {
        let line = outcome.line();
        println!("{line}");
        lines.push(line);
    }
    if let Some(out) = out {
        write_text_atomic(out, &(lines.join("\n") + "\n"))?;
        println!("certification report -> {}", out.display());
    }
    if outcomes.iter().all(|o| o.passed) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::FAILURE)
    }
}
