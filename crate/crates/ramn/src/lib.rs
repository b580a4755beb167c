//! Associative Markov network (AMN) node classification that survives
//! structural test-time attacks.
//!
//! The crate is organized bottom-up:
//!
//! * [`solver`] wraps a conic interior-point backend behind plain LP/QP types
//!   and verifies every solution against the KKT conditions independently.
//! * [`graph`] holds featured graphs, labelings, attack budgets and plans,
//!   plus dataset construction (TF-IDF, kNN) and graph surgery.
//! * [`amn`] scores labelings under AMN weights and runs MAP inference via an
//!   LP relaxation that is integral for two labels.
//! * [`attack`] builds the attacker's LP relaxation, rounds it into concrete
//!   edge-deletion/addition plans, and provides brute-force and heuristic
//!   baselines.
//! * [`robust`] dualizes the attacker LP mechanically and folds it into a
//!   convex QP whose solution is a max-margin weight vector that anticipates
//!   the attacker.
//! * [`synth`] generates the two-community synthetic benchmark used by the
//!   experiment harness.

pub mod amn;
pub mod attack;
pub mod graph;
pub mod robust;
pub mod solver;
pub mod synth;
pub mod util;

pub use amn::{accuracy, hamming_loss, map_inference, score, InferenceResult, Weights};
pub use attack::{
    brute_force_attack, build_attacker_lp, generate_attack, heuristic_attack, AttackError,
    AttackerObjectiveTerms, FractionalAttack, HeuristicMode,
};
pub use robust::{
    build_robust_qp, cross_validate, cross_validate_detailed, cv_folds, theorem2_bound, train,
    CvCell, RobustError, RobustProblem,
};
pub use synth::{generate_synthetic, SynthConfig, SynthError};
pub use graph::{AttackBudget, AttackPlan, AttackVariant, FeatureGraph, Labeling};
pub use solver::{check_kkt, solve_lp, solve_qp, ConvexQp, LinearProgram, Solution, SolveStatus};
