//! Maps a design point to its bi-objective vector and constraint values,
//! using deterministic surrogate timing/resource models in place of hardware.

use std::time::Instant;

use nalgebra::DVector;

use crate::config::{CaseStudy, ExperimentConfig, FpgaSection, TimingSection};
use crate::design::{DesignPoint, DesignSpace};
use crate::error::{Error, Result};
use crate::fgm::{derive_fixed_format, quantized_spectrum, Arithmetic, FgmConfig, FgmSolver};
use crate::ocp::{build_weights, condense, discretize_cost, CondensedQp, DiscreteOcp};
use crate::plant::{build_mass_spring_chain, discretize_zoh, ContinuousLinearModel};
use crate::sim::{performance_measure, Controller, SimulationConfig};

/// Result of evaluating one design. Objectives are finite iff every
/// extreme-barrier flag passed; the timing constraint is progressive and kept
/// as a violation measure instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `(f1 performance [s], f2 resource — seconds for CPU, R_FPGA for FPGA)`.
    pub objectives: [f64; 2],
    /// `solver_time - T_s` (≤ 0 feasible).
    pub constraint_time: f64,
    /// Aggregated progressive-barrier violation `h(p)`.
    pub violation: f64,
    pub stability_ok: bool,
    pub convexity_ok: bool,
    /// Identifier of the timing/resource model that produced `f2`.
    pub timing_model: String,
}

impl Evaluation {
    /// Extreme barriers (stability, convexity) all passed.
    pub fn extreme_feasible(&self) -> bool {
        self.stability_ok && self.convexity_ok
    }

    /// Fully feasible: extreme barriers passed and zero progressive violation.
    pub fn feasible(&self) -> bool {
        self.extreme_feasible() && self.violation == 0.0
    }

    fn rejected(timing_model: &str, convexity_ok: bool) -> Self {
        Self {
            objectives: [f64::INFINITY, f64::INFINITY],
            constraint_time: f64::INFINITY,
            violation: f64::INFINITY,
            stability_ok: false,
            convexity_ok,
            timing_model: timing_model.to_string(),
        }
    }
}

/// A bi-objective blackbox over a design space.
pub trait Evaluator {
    fn space(&self) -> &DesignSpace;
    fn evaluate(&self, p: &[f64]) -> Evaluation;
}

/// FPGA fabric capacities and surrogate-model coefficients.
#[derive(Debug, Clone, Copy)]
pub struct ResourceModelParams {
    pub section: FpgaSection,
}

impl ResourceModelParams {
    pub fn validate(&self) -> Result<()> {
        let s = &self.section;
        if [s.lut_capacity, s.ff_capacity, s.dsp_capacity, s.bram_capacity_bits, s.clock_hz, s.lanes]
            .iter()
            .any(|&c| !(c > 0.0))
        {
            return Err(Error::Config("FPGA capacities must be positive".into()));
        }
        Ok(())
    }
}

/// Euclidean norm of the four relative resource utilizations.
pub fn resource_measure(r_ff: f64, r_lut: f64, r_dsp: f64, r_bram: f64) -> Result<f64> {
    for (name, v) in [("ff", r_ff), ("lut", r_lut), ("dsp", r_dsp), ("bram", r_bram)] {
        if v < 0.0 {
            return Err(Error::Domain(format!("negative {name} fraction: {v}")));
        }
    }
    Ok((r_ff * r_ff + r_lut * r_lut + r_dsp * r_dsp + r_bram * r_bram).sqrt())
}

/// Deterministic per-solve execution time stand-in for the CPU study:
/// `t = N_FGM · (2·(Nm)² + c_lin·(Nm)) · t_flop`.
pub fn cpu_time_model(timing: &TimingSection, qp_dim: usize, n_fgm: usize) -> f64 {
    let d = qp_dim as f64;
    n_fgm as f64 * (2.0 * d * d + timing.c_lin * d) * timing.t_flop
}

#[derive(Debug, Clone, Copy)]
pub struct FpgaEstimate {
    pub r_ff: f64,
    pub r_lut: f64,
    pub r_dsp: f64,
    pub r_bram: f64,
    pub latency_s: f64,
}

/// Deterministic resource/latency stand-in for circuit synthesis. Usage is
/// affine in word width times datapath size; BRAM stores `H`, `G` and the
/// iterate vectors; latency counts pipelined MAC cycles at the configured
/// clock. Fractions may exceed 1 for over-mapped designs.
pub fn fpga_surrogate(
    params: &ResourceModelParams,
    qp_dim: usize,
    state_dim: usize,
    n_fgm: usize,
    word_bits: u32,
) -> Result<FpgaEstimate> {
    if qp_dim == 0 || state_dim == 0 || n_fgm == 0 || word_bits == 0 {
        return Err(Error::Domain("zero-size problem".into()));
    }
    params.validate()?;
    let s = &params.section;
    let w = word_bits as f64;
    let d = qp_dim as f64;

    let dsp_per_mult = ((word_bits + s.dsp_word_bits - 1) / s.dsp_word_bits).pow(2) as f64;
    let dsp_used = s.lanes * dsp_per_mult;
    let lut_used = s.lut_base + s.lut_per_lane_bit * s.lanes * w + s.lut_per_dim * d;
    let ff_used = s.ff_base + s.ff_per_lane_bit * s.lanes * w + s.lut_per_dim * d;
    let words = d * d + d * state_dim as f64 + 5.0 * d;
    let bram_bits = words * w;

    let cycles_per_iter = d * d / s.lanes + s.cycles_overhead_per_dim * d + s.cycles_fixed;
    let latency_s = n_fgm as f64 * cycles_per_iter / s.clock_hz;

    Ok(FpgaEstimate {
        r_ff: ff_used / s.ff_capacity,
        r_lut: lut_used / s.lut_capacity,
        r_dsp: dsp_used / s.dsp_capacity,
        r_bram: bram_bits / s.bram_capacity_bits,
        latency_s,
    })
}

/// Builds the condensed QP for a design on a given plant.
pub fn build_design_qp(
    plant: &ContinuousLinearModel,
    t_s: f64,
    horizon: usize,
    q_speed: f64,
    u_min: f64,
    u_max: f64,
) -> Result<CondensedQp> {
    let n = plant.n();
    let m = plant.m();
    let weights = build_weights(q_speed, n, m)?;
    let model = discretize_zoh(plant, t_s)?;
    let cost = discretize_cost(&weights, plant, t_s)?;
    let ocp = DiscreteOcp::new(
        model,
        cost,
        horizon,
        DVector::from_element(m, u_min),
        DVector::from_element(m, u_max),
    )?;
    condense(&ocp)
}

/// Receding-horizon controller: solves the condensed QP with FGM at every
/// sampling instant and applies the first input block.
pub struct MpcController {
    solver: FgmSolver,
    t_s: f64,
    dim: usize,
    m: usize,
    warm_start: bool,
    prev_theta: Option<DVector<f64>>,
}

impl MpcController {
    pub fn new(qp: &CondensedQp, m: usize, t_s: f64, cfg: &FgmConfig) -> Result<Self> {
        Ok(Self {
            solver: FgmSolver::new(qp, m, cfg)?,
            t_s,
            dim: qp.dim(),
            m,
            warm_start: cfg.warm_start,
            prev_theta: None,
        })
    }

    /// Previous solution shifted by one input block, last block repeated.
    fn initial_guess(&self) -> DVector<f64> {
        match (&self.prev_theta, self.warm_start) {
            (Some(prev), true) => {
                let mut theta0 = DVector::zeros(self.dim);
                theta0
                    .rows_mut(0, self.dim - self.m)
                    .copy_from(&prev.rows(self.m, self.dim - self.m));
                theta0
                    .rows_mut(self.dim - self.m, self.m)
                    .copy_from(&prev.rows(self.dim - self.m, self.m));
                theta0
            }
            _ => DVector::zeros(self.dim),
        }
    }
}

impl Controller for MpcController {
    fn sampling_time(&self) -> f64 {
        self.t_s
    }

    fn control(&mut self, x: &DVector<f64>) -> DVector<f64> {
        let theta0 = self.initial_guess();
        match self.solver.solve(x, &theta0) {
            Ok(sol) => {
                self.prev_theta = Some(sol.theta);
                sol.first_input
            }
            // A nonfinite iterate poisons the loop; the simulator flags the
            // resulting trajectory as diverged.
            Err(_) => DVector::from_element(self.m, f64::NAN),
        }
    }

    fn reset(&mut self) {
        self.prev_theta = None;
    }
}

/// How the per-solve time objective of the CPU study is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingMode {
    /// Deterministic flop-count model.
    Model,
    /// Measure the actual solver on this machine (non-deterministic).
    WallClock,
}

/// Shared context for evaluating designs of one case study.
pub struct CaseStudyContext {
    pub case_study: CaseStudy,
    pub plant: ContinuousLinearModel,
    pub bank: Vec<DVector<f64>>,
    pub sim: SimulationConfig,
    pub u_min: f64,
    pub u_max: f64,
    pub timing: TimingSection,
    pub timing_mode: TimingMode,
    pub resources: ResourceModelParams,
    pub metric_mean: bool,
    pub space: DesignSpace,
}

impl CaseStudyContext {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let chain = cfg.chain()?;
        let plant = build_mass_spring_chain(&chain)?;
        let bank = cfg.initial_conditions(plant.n())?;
        Ok(Self {
            case_study: cfg.case_study,
            bank,
            sim: cfg.simulation_config(),
            u_min: cfg.ocp.u_min,
            u_max: cfg.ocp.u_max,
            timing: cfg.timing,
            timing_mode: TimingMode::Model,
            resources: ResourceModelParams { section: cfg.fpga },
            metric_mean: cfg.simulation.metric == "mean",
            space: cfg.design_space()?,
            plant,
        })
    }

    fn performance(&self, qp: &CondensedQp, t_s: f64, fgm: &FgmConfig) -> Result<f64> {
        let mut controller = MpcController::new(qp, self.plant.m(), t_s, fgm)?;
        let mut perf = performance_measure(&self.plant, &mut controller, &self.bank, &self.sim)?;
        if self.metric_mean && !self.bank.is_empty() {
            perf /= self.bank.len() as f64;
        }
        Ok(perf)
    }

    fn solver_wallclock(&self, qp: &CondensedQp, n_fgm: usize) -> Result<f64> {
        let cfg = FgmConfig::double(n_fgm);
        let solver = FgmSolver::new(qp, self.plant.m(), &cfg)?;
        let x = DVector::from_element(self.plant.n(), 0.1);
        let theta0 = DVector::zeros(qp.dim());
        // Median of a few repetitions.
        let mut samples = Vec::with_capacity(5);
        for _ in 0..5 {
            let t0 = Instant::now();
            let _ = solver.solve(&x, &theta0)?;
            samples.push(t0.elapsed().as_secs_f64());
        }
        samples.sort_by(f64::total_cmp);
        Ok(samples[2])
    }

    pub fn evaluate_point(&self, p: &DesignPoint) -> Evaluation {
        match self.case_study {
            CaseStudy::Cpu => self.evaluate_cpu(p),
            CaseStudy::Fpga => self.evaluate_fpga(p),
        }
    }

    /// CPU study: f1 = settling performance, f2 = per-solve time; the timing
    /// constraint is progressive, stability is an extreme barrier.
    pub fn evaluate_cpu(&self, p: &DesignPoint) -> Evaluation {
        let model_name = match self.timing_mode {
            TimingMode::Model => "cpu-flop-model",
            TimingMode::WallClock => "cpu-wallclock",
        };
        let qp = match build_design_qp(
            &self.plant, p.t_s, p.horizon, p.q_speed, self.u_min, self.u_max,
        ) {
            Ok(qp) => qp,
            Err(_) => return Evaluation::rejected(model_name, true),
        };
        let solve_time = match self.timing_mode {
            TimingMode::Model => cpu_time_model(&self.timing, qp.dim(), p.n_fgm),
            TimingMode::WallClock => match self.solver_wallclock(&qp, p.n_fgm) {
                Ok(t) => t,
                Err(_) => return Evaluation::rejected(model_name, true),
            },
        };
        let constraint_time = solve_time - p.t_s;
        let violation = constraint_time.max(0.0).powi(2);

        let fgm = FgmConfig::double(p.n_fgm);
        let perf = match self.performance(&qp, p.t_s, &fgm) {
            Ok(perf) => perf,
            Err(_) => f64::INFINITY,
        };
        let stability_ok = perf.is_finite();
        Evaluation {
            objectives: if stability_ok {
                [perf, solve_time]
            } else {
                [f64::INFINITY, f64::INFINITY]
            },
            constraint_time,
            violation,
            stability_ok,
            convexity_ok: true,
            timing_model: model_name.to_string(),
        }
    }

    /// FPGA study: f1 = settling performance under fixed-point FGM, f2 =
    /// R_FPGA. Convexity of the quantized Hessian is an extreme barrier
    /// checked before any simulation; latency ≤ T_s is progressive.
    pub fn evaluate_fpga(&self, p: &DesignPoint) -> Evaluation {
        let model_name = "fpga-surrogate";
        let n_frac = match p.n_frac {
            Some(nf) => nf,
            None => return Evaluation::rejected(model_name, true),
        };
        let qp = match build_design_qp(
            &self.plant, p.t_s, p.horizon, p.q_speed, self.u_min, self.u_max,
        ) {
            Ok(qp) => qp,
            Err(_) => return Evaluation::rejected(model_name, true),
        };
        let envelope =
            DVector::from_element(self.plant.n(), self.resources.section.state_envelope);
        let fmt = match derive_fixed_format(&qp, n_frac, &envelope) {
            Ok(fmt) => fmt,
            Err(_) => return Evaluation::rejected(model_name, true),
        };
        // Convexity pre-check: reject before simulating.
        let convexity_ok = match quantized_spectrum(&qp.h_mat, fmt) {
            Ok((_, mu_q)) => mu_q > 0.0,
            Err(_) => false,
        };
        if !convexity_ok {
            return Evaluation::rejected(model_name, false);
        }

        let word_bits = fmt.integer_bits + fmt.fraction_bits;
        let est = match fpga_surrogate(
            &self.resources,
            qp.dim(),
            self.plant.n(),
            p.n_fgm,
            word_bits,
        ) {
            Ok(est) => est,
            Err(_) => return Evaluation::rejected(model_name, true),
        };
        let r_fpga = match resource_measure(est.r_ff, est.r_lut, est.r_dsp, est.r_bram) {
            Ok(r) => r,
            Err(_) => return Evaluation::rejected(model_name, true),
        };
        let constraint_time = est.latency_s - p.t_s;
        let mut violation = constraint_time.max(0.0).powi(2);
        if self.resources.section.resource_cap {
            for frac in [est.r_ff, est.r_lut, est.r_dsp, est.r_bram] {
                violation += (frac - 1.0).max(0.0).powi(2);
            }
        }

        let fgm = FgmConfig {
            n_iterations: p.n_fgm,
            arithmetic: Arithmetic::Fixed(fmt),
            warm_start: true,
        };
        let perf = match self.performance(&qp, p.t_s, &fgm) {
            Ok(perf) => perf,
            Err(_) => f64::INFINITY,
        };
        let stability_ok = perf.is_finite();
        Evaluation {
            objectives: if stability_ok {
                [perf, r_fpga]
            } else {
                [f64::INFINITY, f64::INFINITY]
            },
            constraint_time,
            violation,
            stability_ok,
            convexity_ok: true,
            timing_model: model_name.to_string(),
        }
    }
}

impl Evaluator for CaseStudyContext {
    fn space(&self) -> &DesignSpace {
        &self.space
    }

    fn evaluate(&self, p: &[f64]) -> Evaluation {
        match DesignPoint::from_vector(p) {
            Ok(point) => self.evaluate_point(&point),
            Err(_) => Evaluation::rejected("invalid-point", true),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use approx::assert_relative_eq;

    fn cpu_ctx(limit: usize) -> CaseStudyContext {
        let mut cfg = ExperimentConfig::default_cpu();
        cfg.initial_conditions.limit = limit;
        CaseStudyContext::from_config(&cfg).unwrap()
    }

    fn fpga_ctx(limit: usize) -> CaseStudyContext {
        let mut cfg = ExperimentConfig::default_fpga();
        cfg.initial_conditions.limit = limit;
        CaseStudyContext::from_config(&cfg).unwrap()
    }

    #[test]
    fn resource_measure_basics() {
        assert_eq!(resource_measure(0.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(resource_measure(0.5, 0.5, 0.5, 0.5).unwrap(), 1.0);
        assert_relative_eq!(resource_measure(0.3, 0.4, 0.0, 0.0).unwrap(), 0.5);
        assert!(resource_measure(-0.1, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn resource_measure_norm_inequalities() {
        let fr = [0.2, 0.7, 0.1, 0.4];
        let r = resource_measure(fr[0], fr[1], fr[2], fr[3]).unwrap();
        let max = fr.iter().cloned().fold(0.0, f64::max);
        let sum: f64 = fr.iter().sum();
        assert!(max <= r && r <= sum);
    }

    #[test]
    fn cpu_time_model_scalings() {
        let timing = ExperimentConfig::default_cpu().timing;
        let t1 = cpu_time_model(&timing, 50, 100);
        assert_relative_eq!(cpu_time_model(&timing, 50, 200), 2.0 * t1, epsilon = 1e-15);
        // Quadratic term dominates at this size.
        let ratio = cpu_time_model(&timing, 100, 100) / t1;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn cpu_time_model_reference_calibration() {
        let timing = ExperimentConfig::default_cpu().timing;
        let t = cpu_time_model(&timing, 50, 136);
        assert!((t - 0.0225).abs() / 0.0225 < 0.01, "reference time {t}");
    }

    #[test]
    fn cpu_time_model_strictly_increasing() {
        let timing = ExperimentConfig::default_cpu().timing;
        assert!(cpu_time_model(&timing, 50, 101) > cpu_time_model(&timing, 50, 100));
        assert!(cpu_time_model(&timing, 51, 100) > cpu_time_model(&timing, 50, 100));
    }

    #[test]
    fn fpga_surrogate_monotone_in_word_width() {
        let ctx = fpga_ctx(1);
        let a = fpga_surrogate(&ctx.resources, 50, 20, 100, 18).unwrap();
        let b = fpga_surrogate(&ctx.resources, 50, 20, 100, 22).unwrap();
        assert!(b.r_ff >= a.r_ff);
        assert!(b.r_lut >= a.r_lut);
        assert!(b.r_dsp >= a.r_dsp);
        assert!(b.r_bram > a.r_bram);
    }

    #[test]
    fn fpga_surrogate_rejects_zero_size() {
        let ctx = fpga_ctx(1);
        assert!(fpga_surrogate(&ctx.resources, 0, 20, 100, 18).is_err());
    }

    #[test]
    fn higher_n_frac_uses_more_resources() {
        let ctx = fpga_ctx(1);
        let p13 = DesignPoint { t_s: 0.4141, horizon: 1, n_fgm: 20, q_speed: 0.2, n_frac: Some(13) };
        let p17 = DesignPoint { n_frac: Some(17), ..p13 };
        let e13 = ctx.evaluate_point(&p13);
        let e17 = ctx.evaluate_point(&p17);
        assert!(e13.extreme_feasible() && e17.extreme_feasible());
        assert!(e17.objectives[1] > e13.objectives[1]);
    }

    #[test]
    fn cpu_evaluation_is_deterministic_and_feasible_for_good_design() {
        let ctx = cpu_ctx(2);
        let p = DesignPoint { t_s: 0.236, horizon: 5, n_fgm: 136, q_speed: 0.2, n_frac: None };
        let a = ctx.evaluate_point(&p);
        let b = ctx.evaluate_point(&p);
        assert_eq!(a, b);
        assert!(a.stability_ok);
        assert!(a.objectives[0].is_finite());
        assert!(a.objectives[1] <= p.t_s, "solve time exceeds sampling time");
        assert_eq!(a.violation, 0.0);
    }

    #[test]
    fn timing_violation_is_progressive_not_extreme() {
        let ctx = cpu_ctx(1);
        // Long horizon, many iterations, tiny sampling time: solver cannot
        // finish within T_s but the design is still archived with violation.
        let p = DesignPoint { t_s: 0.02, horizon: 12, n_fgm: 200, q_speed: 0.2, n_frac: None };
        let e = ctx.evaluate_point(&p);
        assert!(e.constraint_time > 0.0);
        assert!(e.violation > 0.0);
        assert_relative_eq!(e.violation, e.constraint_time.powi(2));
    }

    #[test]
    fn fpga_low_precision_convexity_rejection_is_pre_simulation() {
        let ctx = fpga_ctx(1);
        // μ of the ten-mass Hessian is ~1e-4 (R_c scale); N_frac = 5 gives a
        // resolution of 2^-5, so the quantized Hessian loses definiteness.
        let p = DesignPoint { t_s: 0.236, horizon: 5, n_fgm: 136, q_speed: 0.2, n_frac: Some(5) };
        let e = ctx.evaluate_point(&p);
        assert!(!e.convexity_ok);
        assert!(!e.extreme_feasible());
        assert!(e.objectives[0].is_infinite());
    }

    #[test]
    fn fpga_high_precision_design_is_feasible() {
        let ctx = fpga_ctx(1);
        let p = DesignPoint { t_s: 0.4141, horizon: 1, n_fgm: 20, q_speed: 0.2, n_frac: Some(25) };
        let e = ctx.evaluate_point(&p);
        assert!(e.convexity_ok, "quantization at 25 bits is near-exact");
        assert!(e.stability_ok);
        assert!(e.objectives[0].is_finite());
    }
}
