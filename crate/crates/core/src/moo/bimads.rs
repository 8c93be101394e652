//! Bi-objective search: a reference-point scalarization loop over
//! single-objective mesh-adaptive sub-runs, bootstrapped by a small Latin
//! hypercube sample. A plain Latin hypercube search over the full budget is
//! provided as the comparison baseline.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::eval::{Evaluation, Evaluator};
use crate::moo::archive::ParetoArchive;
use crate::moo::lhs::latin_hypercube;
use crate::moo::mads::{mads_minimize, MadsOptions, Trial};
use crate::moo::scalarize::{scalarize_phi_r, ReferenceSelector};

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    /// Total number of true blackbox evaluations.
    pub budget: usize,
    /// Fraction of the budget spent on the bootstrap sample.
    pub bootstrap_fraction: f64,
    /// Trials per scalarized sub-run.
    pub sub_budget: usize,
    pub seed: u64,
}

impl SearchOptions {
    pub fn new(budget: usize, bootstrap_fraction: f64, sub_budget: usize, seed: u64) -> Self {
        Self { budget, bootstrap_fraction, sub_budget, seed }
    }
}

/// Budget-metered evaluation cache. Repeat visits to a point are served from
/// the cache and do not consume budget; every true evaluation is archived.
struct MeteredEvaluator<'a> {
    inner: &'a dyn Evaluator,
    budget: usize,
    used: usize,
    cache: HashMap<Vec<u64>, Evaluation>,
    archive: ParetoArchive,
}

impl<'a> MeteredEvaluator<'a> {
    fn new(inner: &'a dyn Evaluator, budget: usize) -> Self {
        Self { inner, budget, used: 0, cache: HashMap::new(), archive: ParetoArchive::new() }
    }

    fn key(p: &[f64]) -> Vec<u64> {
        p.iter().map(|v| v.to_bits()).collect()
    }

    /// `None` once the budget is spent and the point is not cached.
    fn evaluate(&mut self, p: &[f64]) -> Option<Evaluation> {
        let mut q = p.to_vec();
        self.inner.space().snap(&mut q);
        let key = Self::key(&q);
        if let Some(e) = self.cache.get(&key) {
            return Some(e.clone());
        }
        if self.used >= self.budget {
            return None;
        }
        let e = self.inner.evaluate(&q);
        self.used += 1;
        self.archive.push(q, e.clone());
        self.cache.insert(key, e.clone());
        Some(e)
    }

    fn exhausted(&self) -> bool {
        self.used >= self.budget
    }
}

fn trial_from(eval: &Evaluation, r: &[f64; 2]) -> Trial {
    if eval.extreme_feasible() {
        Trial {
            value: scalarize_phi_r(&eval.objectives, r),
            violation: eval.violation,
            extreme_ok: true,
        }
    } else {
        Trial { value: f64::INFINITY, violation: f64::INFINITY, extreme_ok: false }
    }
}

fn random_point<R: Rng>(space: &crate::design::DesignSpace, rng: &mut R) -> Vec<f64> {
    let mut p: Vec<f64> = space
        .dims
        .iter()
        .map(|d| rng.gen_range(d.lo..d.hi))
        .collect();
    space.snap(&mut p);
    p
}

/// Approximates the Pareto frontier of a bi-objective blackbox within a fixed
/// evaluation budget. Deterministic for a fixed `(evaluator, options)` pair.
pub fn bimads_optimize(evaluator: &dyn Evaluator, opts: &SearchOptions) -> Result<ParetoArchive> {
    let space = evaluator.space().clone();
    let mut metered = MeteredEvaluator::new(evaluator, opts.budget);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let n_boot = ((opts.budget as f64 * opts.bootstrap_fraction).round() as usize)
        .clamp(2, opts.budget);
    for p in latin_hypercube(&space, n_boot, &mut rng).points {
        if metered.evaluate(&p).is_none() {
            break;
        }
    }

    let mut selector = ReferenceSelector::new();
    let mut run_idx: u64 = 0;
    while !metered.exhausted() {
        let front = metered.archive.front();
        if front.is_empty() {
            // Nothing feasible yet: keep space-filling until something is.
            let p = random_point(&space, &mut rng);
            if metered.evaluate(&p).is_none() {
                break;
            }
            continue;
        }
        let r = selector.select(&front)?;

        // Start the sub-run from the archived point best aligned with r.
        let start = metered
            .archive
            .entries
            .iter()
            .filter(|e| e.eval.feasible())
            .min_by(|a, b| {
                scalarize_phi_r(&a.eval.objectives, &r)
                    .total_cmp(&scalarize_phi_r(&b.eval.objectives, &r))
            })
            .map(|e| e.point.clone())
            .unwrap_or_else(|| random_point(&space, &mut rng));

        let used_before = metered.used;
        let mads_opts = MadsOptions {
            max_trials: opts.sub_budget,
            seed: opts.seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(run_idx + 1)),
            ..Default::default()
        };
        mads_minimize(&space, &start, &mads_opts, |p| {
            metered.evaluate(p).map(|e| trial_from(&e, &r))
        });
        run_idx += 1;

        // A sub-run served entirely from cache makes no progress; spend one
        // evaluation on a fresh point so the budget always drains.
        if metered.used == used_before && !metered.exhausted() {
            let p = random_point(&space, &mut rng);
            if metered.evaluate(&p).is_none() {
                break;
            }
        }
    }
    Ok(metered.archive)
}

/// Baseline: one Latin hypercube sample of exactly `budget` points.
pub fn lhs_optimize(evaluator: &dyn Evaluator, budget: usize, seed: u64) -> ParetoArchive {
    let space = evaluator.space().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut archive = ParetoArchive::new();
    for p in latin_hypercube(&space, budget, &mut rng).points {
        let e = evaluator.evaluate(&p);
        archive.push(p, e);
    }
    archive
}
