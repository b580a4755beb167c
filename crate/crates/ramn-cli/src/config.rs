//! Flat key=value experiment configuration.
//!
//! A config file is a sequence of `key = value` lines (`#` starts a comment,
//! blank lines are ignored). Every key has a default, so the empty file is a
//! valid configuration describing the default synthetic sweep. List-valued
//! keys take comma-separated entries.
//!
//! Recognized keys:
//!
//! | key                           | meaning                                        |
//! |-------------------------------|------------------------------------------------|
//! | `dataset`                     | path to an `amn-dataset v1` file               |
//! | `synthetic.communities`       | generator: number of communities               |
//! | `synthetic.nodes`             | generator: number of nodes                     |
//! | `synthetic.feature_dim`       | generator: node feature dimension              |
//! | `synthetic.feature_noise`     | generator: feature noise level                 |
//! | `synthetic.avg_degree`        | generator: average node degree                 |
//! | `synthetic.noisy_edge_fraction` | generator: cross-community edge fraction     |
//! | `split_ratio`                 | train fraction of each split                   |
//! | `seeds`                       | number of independent data splits              |
//! | `seed`                        | base RNG seed                                  |
//! | `attacks`                     | subset of `none,struct-d,struct-ad,struct-rs,struct-rsad` |
//! | `budgets`                     | attack budget fractions `b`                    |
//! | `trainers`                    | subset of `amn,r-amn,svm`                      |
//! | `c_grid`                      | cross-validation grid for the trade-off `C`    |
//! | `b_grid`                      | cross-validation grid for the defense budget   |
//! | `cv_folds`                    | cross-validation fold count                    |
//! | `trials`                      | rounding trials per generated attack           |
//! | `output`                      | report CSV path                                |
//! | `weights`                     | saved-weights path (used by `eval`/`attack`)   |
//! | `plan`                        | saved attack-plan path (used by `eval`)        |
//!
//! `dataset` and the `synthetic.*` keys are mutually exclusive; with neither,
//! the default synthetic generator is used.

use std::fmt;
use std::path::{Path, PathBuf};

use ramn::graph::AttackVariant;
use ramn::robust::{DEFAULT_B_GRID, DEFAULT_C_GRID};
use ramn::SynthConfig;

use crate::CliError;

/// Structural attacks the sweep can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttackKind {
    /// No attack: rows record clean accuracy.
    None,
    /// Optimized edge deletion within the budget.
    StructD,
    /// Optimized edge deletion plus addition within the budget.
    StructAd,
    /// Random deletion of same-label edges.
    StructRs,
    /// Random same-label deletions plus random cross-label additions.
    StructRsad,
}

impl AttackKind {
    /// Every attack, in report order.
    pub const ALL: [AttackKind; 5] = [
        AttackKind::None,
        AttackKind::StructD,
        AttackKind::StructAd,
        AttackKind::StructRs,
        AttackKind::StructRsad,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::StructD => "struct-d",
            AttackKind::StructAd => "struct-ad",
            AttackKind::StructRs => "struct-rs",
            AttackKind::StructRsad => "struct-rsad",
        }
    }

    /// Whether plans are optimized against a trained model's weights
    /// (as opposed to drawn from the labels alone).
    pub fn is_model_based(self) -> bool {
        matches!(self, AttackKind::StructD | AttackKind::StructAd)
    }

    /// The budget variant this attack spends, or `None` for clean rows.
    pub fn variant(self) -> Option<AttackVariant> {
        match self {
            AttackKind::None => None,
            AttackKind::StructD | AttackKind::StructRs => Some(AttackVariant::DeleteOnly),
            AttackKind::StructAd | AttackKind::StructRsad => Some(AttackVariant::AddDelete),
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classifiers the sweep can train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trainer {
    /// Associative Markov network trained with a zero attack budget.
    Amn,
    /// Robust AMN trained against the cross-validated budget.
    RAmn,
    /// Structure-blind linear hinge-loss baseline.
    Svm,
}

impl Trainer {
    /// Every trainer, in report order.
    pub const ALL: [Trainer; 3] = [Trainer::Amn, Trainer::RAmn, Trainer::Svm];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    pub fn name(self) -> &'static str {
        match self {
            Trainer::Amn => "amn",
            Trainer::RAmn => "r-amn",
            Trainer::Svm => "svm",
        }
    }
}

impl fmt::Display for Trainer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Where the experiment's graph comes from.
#[derive(Debug, Clone)]
pub enum DatasetSource {
    /// An `amn-dataset v1` file on disk.
    Path(PathBuf),
    /// The built-in community benchmark generator.
    Synthetic(SynthConfig),
}

/// A parsed and validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    /// Train fraction of each split, in (0, 1).
    pub split_ratio: f64,
    /// Number of independent data splits (and report rows per cell).
    pub seeds: usize,
    /// Base seed every derived RNG stream hangs off.
    pub base_seed: u64,
    /// Attacks to evaluate; empty behaves like `[none]`.
    pub attacks: Vec<AttackKind>,
    /// Attack budget fractions, each in [0, 1].
    pub budgets: Vec<f64>,
    pub trainers: Vec<Trainer>,
    /// Cross-validation grid for the trade-off weight `C`.
    pub c_grid: Vec<f64>,
    /// Cross-validation grid for the defense budget fraction.
    pub b_grid: Vec<f64>,
    pub cv_folds: usize,
    /// Rounding trials per generated attack.
    pub trials: usize,
    /// Report CSV path; plot files are written next to it.
    pub output: PathBuf,
    /// Saved weights consumed by `eval` and (optionally) `attack`.
    pub weights: Option<PathBuf>,
    /// Saved attack plan consumed by `eval`.
    pub plan: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::Synthetic(SynthConfig::default()),
            split_ratio: 0.5,
            seeds: 10,
            base_seed: 0,
            attacks: AttackKind::ALL.to_vec(),
            budgets: vec![0.05, 0.1, 0.2],
            trainers: Trainer::ALL.to_vec(),
            c_grid: DEFAULT_C_GRID.to_vec(),
            b_grid: DEFAULT_B_GRID.to_vec(),
            cv_folds: 3,
            trials: 50,
            output: PathBuf::from("report.csv"),
            weights: None,
            plan: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses a flat key=value config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses config text; see the module docs for the key table.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ExperimentConfig::default();
        let mut dataset_path: Option<PathBuf> = None;
        let mut synth = SynthConfig::default();
        let mut synth_keys = false;
        let mut seen: Vec<String> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| {
                CliError::Config(format!("line {}: {msg}", lineno + 1))
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            seen.push(key.to_string());

            match key {
                "dataset" => dataset_path = Some(PathBuf::from(value)),
                "synthetic.communities" => {
                    synth.communities = parse_num(key, value).map_err(err)?;
                    synth_keys = true;
                }
                "synthetic.nodes" => {
                    synth.nodes = parse_num(key, value).map_err(err)?;
                    synth_keys = true;
                }
                "synthetic.feature_dim" => {
                    synth.feature_dim = parse_num(key, value).map_err(err)?;
                    synth_keys = true;
                }
                "synthetic.feature_noise" => {
                    synth.feature_noise = parse_num(key, value).map_err(err)?;
                    synth_keys = true;
                }
                "synthetic.avg_degree" => {
                    synth.avg_degree = parse_num(key, value).map_err(err)?;
                    synth_keys = true;
                }
                "synthetic.noisy_edge_fraction" => {
                    synth.noisy_edge_fraction = parse_num(key, value).map_err(err)?;
                    synth_keys = true;
                }
                "split_ratio" => cfg.split_ratio = parse_num(key, value).map_err(err)?,
                "seeds" => cfg.seeds = parse_num(key, value).map_err(err)?,
                "seed" => cfg.base_seed = parse_num(key, value).map_err(err)?,
                "attacks" => {
                    cfg.attacks = parse_list(value, |s| {
                        AttackKind::parse(s)
                            .ok_or_else(|| format!("unknown attack `{s}`"))
                    })
                    .map_err(err)?;
                }
                "budgets" => {
                    cfg.budgets = parse_list(value, |s| {
                        s.parse::<f64>().map_err(|e| format!("budget `{s}`: {e}"))
                    })
                    .map_err(err)?;
                }
                "trainers" => {
                    cfg.trainers = parse_list(value, |s| {
                        Trainer::parse(s).ok_or_else(|| format!("unknown trainer `{s}`"))
                    })
                    .map_err(err)?;
                }
                "c_grid" => {
                    cfg.c_grid = parse_list(value, |s| {
                        s.parse::<f64>().map_err(|e| format!("C value `{s}`: {e}"))
                    })
                    .map_err(err)?;
                }
                "b_grid" => {
                    cfg.b_grid = parse_list(value, |s| {
                        s.parse::<f64>().map_err(|e| format!("b value `{s}`: {e}"))
                    })
                    .map_err(err)?;
                }
                "cv_folds" => cfg.cv_folds = parse_num(key, value).map_err(err)?,
                "trials" => cfg.trials = parse_num(key, value).map_err(err)?,
                "output" => cfg.output = PathBuf::from(value),
                "weights" => cfg.weights = Some(PathBuf::from(value)),
                "plan" => cfg.plan = Some(PathBuf::from(value)),
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }

        cfg.dataset = match (dataset_path, synth_keys) {
            (Some(_), true) => {
                return Err(CliError::Config(
                    "`dataset` and `synthetic.*` keys are mutually exclusive".to_string(),
                ))
            }
            (Some(path), false) => DatasetSource::Path(path),
            (None, _) => DatasetSource::Synthetic(synth),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every invariant the rest of the pipeline relies on.
    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::Config(msg));
        if let DatasetSource::Synthetic(synth) = &self.dataset {
            synth.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return fail(format!("split_ratio {} outside (0, 1)", self.split_ratio));
        }
        if self.seeds == 0 {
            return fail("seeds must be at least 1".to_string());
        }
        for &b in &self.budgets {
            if !(0.0..=1.0).contains(&b) {
                return fail(format!("budget fraction {b} outside [0, 1]"));
            }
        }
        if self.attacks.iter().any(|a| *a != AttackKind::None) && self.budgets.is_empty() {
            return fail("budgets must be non-empty when an attack is configured".to_string());
        }
        if self.trainers.is_empty() {
            return fail("trainers must be non-empty".to_string());
        }
        let mut attacks = self.attacks.clone();
        attacks.sort_unstable();
        attacks.dedup();
        if attacks.len() != self.attacks.len() {
            return fail("attacks list contains duplicates".to_string());
        }
        let mut trainers = self.trainers.clone();
        trainers.sort_unstable();
        trainers.dedup();
        if trainers.len() != self.trainers.len() {
            return fail("trainers list contains duplicates".to_string());
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|&c| c <= 0.0 || !c.is_finite()) {
            return fail("c_grid must be non-empty with positive finite entries".to_string());
        }
        if self.b_grid.is_empty() || self.b_grid.iter().any(|&b| !(0.0..=1.0).contains(&b)) {
            return fail("b_grid must be non-empty with entries in [0, 1]".to_string());
        }
        if self.cv_folds < 2 {
            return fail("cv_folds must be at least 2".to_string());
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".to_string());
        }
        Ok(())
    }

    /// The attacks actually swept: an empty list behaves as `[none]`.
    pub fn effective_attacks(&self) -> Vec<AttackKind> {
        if self.attacks.is_empty() {
            vec![AttackKind::None]
        } else {
            self.attacks.clone()
        }
    }

    /// Budget fractions evaluated for `attack` (clean rows pin b = 0).
    pub fn budgets_for(&self, attack: AttackKind) -> Vec<f64> {
        if attack == AttackKind::None {
            vec![0.0]
        } else {
            self.budgets.clone()
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| format!("value for `{key}`: {e}"))
}

fn parse_list<T>(value: &str, mut one: impl FnMut(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(&mut one)
        .collect()
}
