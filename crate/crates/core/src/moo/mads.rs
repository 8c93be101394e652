//! Mesh-adaptive direct search on a bounded mixed-integer space, with a
//! progressive barrier for relaxable constraints and an extreme barrier for
//! unrelaxable ones.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::design::{DesignSpace, VarKind};

/// Scalar outcome of one blackbox trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    /// Scalarized objective (finite for extreme-feasible points).
    pub value: f64,
    /// Progressive-barrier violation; 0 means fully feasible.
    pub violation: f64,
    /// False when an extreme barrier fired; such points never become
    /// incumbents.
    pub extreme_ok: bool,
}

impl Trial {
    /// Progressive-barrier order: feasible beats infeasible; within a class,
    /// smaller violation first, then smaller value.
    pub fn better_than(&self, other: &Trial) -> bool {
        if !self.extreme_ok {
            return false;
        }
        if !other.extreme_ok {
            return true;
        }
        match (self.violation == 0.0, other.violation == 0.0) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => self.value < other.value,
            (false, false) => (self.violation, self.value) < (other.violation, other.value),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MadsOptions {
    /// Trials this run may request (the closure may additionally cut it short
    /// by returning `None` when a global budget runs out).
    pub max_trials: usize,
    pub seed: u64,
    /// Initial mesh size as a fraction of each dimension's range.
    pub initial_mesh: f64,
    /// Run stops once the mesh fraction falls below this.
    pub min_mesh: f64,
}

impl Default for MadsOptions {
    fn default() -> Self {
        Self { max_trials: 15, seed: 0, initial_mesh: 0.25, min_mesh: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct MadsOutcome {
    pub best_point: Vec<f64>,
    pub best_trial: Trial,
    pub trials_used: usize,
}

/// Poll displacement along `±e_axis` at the current mesh, with a seeded
/// rotation into the other continuous coordinates so poll directions grow
/// dense as the mesh shrinks. Integer coordinates move on their unit lattice
/// (never less than one step).
fn poll_point(
    space: &DesignSpace,
    from: &[f64],
    axis: usize,
    sign: f64,
    mesh: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut p = from.to_vec();
    let d = &space.dims[axis];
    match d.kind {
        VarKind::Integer => {
            let step = (mesh * d.range()).round().max(1.0);
            p[axis] += sign * step;
        }
        VarKind::Continuous => {
            p[axis] += sign * mesh * d.range();
            for (j, dj) in space.dims.iter().enumerate() {
                if j != axis && dj.kind == VarKind::Continuous {
                    p[j] += rng.gen_range(-0.5..0.5) * mesh * dj.range();
                }
            }
        }
    }
    space.snap(&mut p);
    p
}

/// Minimizes a scalar blackbox from `start`. The closure returns `None` when
/// an external budget is exhausted, which ends the run immediately. Polling is
/// non-opportunistic: the full frame is evaluated before choosing a winner.
pub fn mads_minimize<F>(
    space: &DesignSpace,
    start: &[f64],
    opts: &MadsOptions,
    mut trial: F,
) -> Option<MadsOutcome>
where
    F: FnMut(&[f64]) -> Option<Trial>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut incumbent = start.to_vec();
    space.snap(&mut incumbent);

    let mut used = 0usize;
    let first = trial(&incumbent)?;
    used += 1;
    let mut best = first;
    let mut best_point = incumbent.clone();
    let mut mesh = opts.initial_mesh;

    'outer: while used < opts.max_trials && mesh >= opts.min_mesh {
        let mut frame_best: Option<(Vec<f64>, Trial)> = None;
        for axis in 0..space.len() {
            for sign in [1.0, -1.0] {
                if used >= opts.max_trials {
                    break;
                }
                let p = poll_point(space, &best_point, axis, sign, mesh, &mut rng);
                if p == best_point {
                    continue;
                }
                let t = match trial(&p) {
                    Some(t) => t,
                    None => break 'outer,
                };
                used += 1;
                let improves = frame_best
                    .as_ref()
                    .map_or(true, |(_, fb)| t.better_than(fb));
                if improves {
                    frame_best = Some((p, t));
                }
            }
        }
        match frame_best {
            Some((p, t)) if t.better_than(&best) => {
                best = t;
                best_point = p;
                mesh = (mesh * 2.0).min(opts.initial_mesh * 4.0).min(1.0);
            }
            _ => mesh *= 0.5,
        }
    }

    Some(MadsOutcome { best_point, best_trial: best, trials_used: used })
}
