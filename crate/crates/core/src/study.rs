//! Experiment driver: runs one search algorithm on one case study for one
//! seed, and a full multi-seed comparison between the two algorithms.

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::eval::{CaseStudyContext, TimingMode};
use crate::moo::{bimads_optimize, lhs_optimize, ParetoArchive, SearchOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    BiMads,
    Lhs,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::BiMads => write!(f, "bimads"),
            Algorithm::Lhs => write!(f, "lhs"),
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bimads" => Ok(Algorithm::BiMads),
            "lhs" => Ok(Algorithm::Lhs),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?}; expected \"bimads\" or \"lhs\""
            ))),
        }
    }
}

/// One finished search run.
#[derive(Debug, Clone)]
pub struct StudyResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub archive: ParetoArchive,
}

impl StudyResult {
    /// Hypervolume of the final front against a shared reference point.
    pub fn hypervolume(&self, y_ref: &[f64; 2]) -> f64 {
        self.archive.hypervolume(y_ref)
    }

    /// Hypervolume after each evaluation (the budget-convergence profile).
    pub fn profile(&self, y_ref: &[f64; 2]) -> Vec<f64> {
        self.archive.hypervolume_trace(y_ref)
    }
}

/// Runs `algorithm` on the study described by `cfg` with the given seed.
pub fn run_study(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    seed: u64,
    timing_mode: TimingMode,
) -> Result<StudyResult> {
    let mut ctx = CaseStudyContext::from_config(cfg)?;
    ctx.timing_mode = timing_mode;
    let archive = match algorithm {
        Algorithm::BiMads => bimads_optimize(
            &ctx,
            &SearchOptions::new(
                cfg.budget,
                cfg.search.bootstrap_fraction,
                cfg.search.sub_budget,
                seed,
            ),
        )?,
        Algorithm::Lhs => lhs_optimize(&ctx, cfg.budget, seed),
    };
    Ok(StudyResult { algorithm, seed, archive })
}

/// Componentwise worst feasible objective across all runs, inflated by a 5%
/// margin so every archived feasible point contributes dominated area.
pub fn shared_reference(results: &[StudyResult]) -> Option<[f64; 2]> {
    let mut worst = [f64::NEG_INFINITY; 2];
    let mut any = false;
    for r in results {
        if let Some(n) = r.archive.nadir() {
            worst[0] = worst[0].max(n[0]);
            worst[1] = worst[1].max(n[1]);
            any = true;
        }
    }
    any.then(|| [worst[0] + 0.05 * worst[0].abs().max(1.0), worst[1] + 0.05 * worst[1].abs().max(1.0)])
}

/// Full comparison: both algorithms on every configured seed, scored against
/// one shared reference point.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub results: Vec<StudyResult>,
    pub y_ref: [f64; 2],
}

impl Comparison {
    pub fn hypervolumes(&self, algorithm: Algorithm) -> Vec<f64> {
        self.results
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .map(|r| r.hypervolume(&self.y_ref))
            .collect()
    }

    pub fn mean_hypervolume(&self, algorithm: Algorithm) -> f64 {
        let hv = self.hypervolumes(algorithm);
        hv.iter().sum::<f64>() / hv.len().max(1) as f64
    }
}

pub fn run_comparison(cfg: &ExperimentConfig, timing_mode: TimingMode) -> Result<Comparison> {
    let mut results = Vec::with_capacity(2 * cfg.seeds.len());
    for &seed in &cfg.seeds {
        for algorithm in [Algorithm::BiMads, Algorithm::Lhs] {
            results.push(run_study(cfg, algorithm, seed, timing_mode)?);
        }
    }
    let y_ref = shared_reference(&results)
        .ok_or_else(|| Error::InfeasibleSpace("no feasible design found by any run".into()))?;
    Ok(Comparison { results, y_ref })
}
