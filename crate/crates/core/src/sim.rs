//! Closed-loop simulation of a linear plant under sampled-data control, and
//! the settling-time performance measure.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::plant::{discretize_zoh, ContinuousLinearModel};

#[derive(Debug, Clone, Copy)]
pub struct SimulationConfig {
    pub t_max: f64,
    /// Settling threshold on the state 2-norm.
    pub epsilon: f64,
    /// Fine simulation step; the controller period is snapped to an integer
    /// multiple of (an adjusted version of) this.
    pub substep: f64,
    pub divergence_threshold: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            t_max: 25.0,
            epsilon: 0.01,
            substep: 0.01,
            divergence_threshold: 1e3,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) || !(self.epsilon > 0.0) || !(self.substep > 0.0) {
            return Err(Error::Config("simulation parameters must be positive".into()));
        }
        Ok(())
    }
}

/// Sampled-data state-feedback controller. `reset` clears warm-start memory
/// between independent simulations.
pub trait Controller {
    fn sampling_time(&self) -> f64;
    fn control(&mut self, x: &DVector<f64>) -> DVector<f64>;
    fn reset(&mut self) {}
}

/// Outputs zero force; useful as an open-loop baseline.
pub struct ZeroController {
    pub inputs: usize,
    pub t_s: f64,
}

impl Controller for ZeroController {
    fn sampling_time(&self) -> f64 {
        self.t_s
    }

    fn control(&mut self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.inputs)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Uniform grid at the adjusted substep, starting at 0.
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// One input per controller period, held between updates.
    pub inputs: Vec<DVector<f64>>,
    pub diverged: bool,
    pub substep: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Settling {
    Settled(f64),
    Unsettled,
}

/// Simulates the plant under the controller: the input is held between
/// controller updates and the plant is advanced on the fine grid with its
/// exact substep ZOH discretization.
pub fn simulate(
    plant: &ContinuousLinearModel,
    controller: &mut dyn Controller,
    x0: &DVector<f64>,
    cfg: &SimulationConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let t_s = controller.sampling_time();
    if !(t_s > 0.0) {
        return Err(Error::Domain("controller sampling time must be positive".into()));
    }
    let substeps_per_period = (t_s / cfg.substep).round().max(1.0) as usize;
    let delta = t_s / substeps_per_period as f64;
    let fine = discretize_zoh(plant, delta)?;

    let periods = (cfg.t_max / t_s).ceil() as usize;
    let total_substeps = periods * substeps_per_period;
    let mut times = Vec::with_capacity(total_substeps + 1);
    let mut states = Vec::with_capacity(total_substeps + 1);
    let mut inputs = Vec::with_capacity(periods);

    let mut x = x0.clone();
    times.push(0.0);
    states.push(x.clone());
    let mut diverged = x.norm() > cfg.divergence_threshold;
    let mut k = 0usize;
    'outer: for _ in 0..periods {
        if diverged {
            break;
        }
        let u = controller.control(&x);
        inputs.push(u.clone());
        for _ in 0..substeps_per_period {
            x = fine.step(&x, &u);
            k += 1;
            times.push(k as f64 * delta);
            states.push(x.clone());
            if !x.iter().all(|v| v.is_finite()) || x.norm() > cfg.divergence_threshold {
                diverged = true;
                break 'outer;
            }
        }
    }
    Ok(Trajectory { times, states, inputs, diverged, substep: delta })
}

/// First grid time after which the state 2-norm remains at or below `epsilon`
/// for the rest of the trajectory (last-crossing convention).
pub fn settling_time(traj: &Trajectory, epsilon: f64) -> Settling {
    if traj.diverged {
        return Settling::Unsettled;
    }
    let mut last_above: Option<usize> = None;
    for (i, x) in traj.states.iter().enumerate() {
        if x.norm() > epsilon {
            last_above = Some(i);
        }
    }
    match last_above {
        None => Settling::Settled(0.0),
        Some(i) if i + 1 < traj.times.len() => Settling::Settled(traj.times[i + 1]),
        Some(_) => Settling::Unsettled,
    }
}

/// Sum of settling times over an initial-condition bank; `+∞` if any run
/// diverges or fails to settle (feeds the stability extreme barrier).
pub fn performance_measure(
    plant: &ContinuousLinearModel,
    controller: &mut dyn Controller,
    bank: &[DVector<f64>],
    cfg: &SimulationConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for x0 in bank {
        controller.reset();
        let traj = simulate(plant, controller, x0, cfg)?;
        match settling_time(&traj, cfg.epsilon) {
            Settling::Settled(t) => total += t,
            Settling::Unsettled => return Ok(f64::INFINITY),
        }
    }
    Ok(total)
}
