//! Co-design of a fast-gradient-method MPC controller and its compute
//! platform: given a linear plant, this crate builds the condensed
//! input-constrained QP, runs the controller in closed loop, scores each
//! design on settling performance versus compute resources, and approximates
//! the Pareto frontier of that trade-off with a budget-limited bi-objective
//! direct search (with Latin hypercube sampling as the baseline).

pub mod config;
pub mod design;
pub mod error;
pub mod eval;
pub mod fgm;
pub mod fixed;
pub mod moo;
pub mod ocp;
pub mod plant;
pub mod sim;
pub mod study;

pub use config::{CaseStudy, ExperimentConfig};
pub use design::{DesignPoint, DesignSpace, Dimension, VarKind};
pub use error::{Error, Result};
pub use eval::{CaseStudyContext, Evaluation, Evaluator, TimingMode};
pub use fgm::{Arithmetic, FgmConfig, FgmSolver};
pub use fixed::FixedPointFormat;
pub use moo::{ParetoArchive, SearchOptions};
pub use study::{run_comparison, run_study, Algorithm, Comparison, StudyResult};
