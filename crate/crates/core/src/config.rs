//! Experiment configuration: a single TOML file with sections for the plant,
//! design space, simulation, surrogate models and search. Bundled defaults
//! reproduce both case studies.

use nalgebra::DVector;
use serde::Deserialize;

use crate::design::{DesignSpace, Dimension};
use crate::error::{Error, Result};
use crate::plant::MassSpringChain;
use crate::sim::SimulationConfig;

pub const DEFAULT_CPU_TOML: &str = include_str!("../configs/default_cpu.toml");
pub const DEFAULT_FPGA_TOML: &str = include_str!("../configs/default_fpga.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseStudy {
    Cpu,
    Fpga,
}

impl std::fmt::Display for CaseStudy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CaseStudy::Cpu => write!(f, "cpu"),
            CaseStudy::Fpga => write!(f, "fpga"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct PlantSection {
    pub masses: Vec<f64>,
    pub springs: Vec<f64>,
    pub dampers: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct BoundsSection {
    pub t_s: [f64; 2],
    pub horizon: [f64; 2],
    pub n_fgm: [f64; 2],
    pub q_speed: [f64; 2],
    pub n_frac: [f64; 2],
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct OcpSection {
    pub u_min: f64,
    pub u_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
pub struct SimulationSection {
    pub t_max: f64,
    pub epsilon: f64,
    pub substep: f64,
    pub divergence_threshold: f64,
    #[serde(default = "default_metric")]
    pub metric: String,
}

fn default_metric() -> String {
    "sum".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcMode {
    /// Each of the 5 table columns is one 20-state initial condition.
    Columns,
    /// Each of the 20 table rows is one initial condition; its 5 values fill
    /// the first 5 states, the rest are zero.
    Rows,
}

#[derive(Debug, Clone, Deserialize)]
pub struct InitialConditionSection {
    pub mode: IcMode,
    /// Use only the first `limit` bank entries; 0 means all.
    #[serde(default)]
    pub limit: usize,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct TimingSection {
    pub t_flop: f64,
    pub c_lin: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct FpgaSection {
    pub clock_hz: f64,
    pub lanes: f64,
    pub lut_capacity: f64,
    pub ff_capacity: f64,
    pub dsp_capacity: f64,
    pub bram_capacity_bits: f64,
    pub lut_base: f64,
    pub ff_base: f64,
    pub lut_per_lane_bit: f64,
    pub ff_per_lane_bit: f64,
    pub lut_per_dim: f64,
    pub dsp_word_bits: u32,
    pub cycles_overhead_per_dim: f64,
    pub cycles_fixed: f64,
    pub resource_cap: bool,
    /// Per-state magnitude bound used when deriving the fixed-point format.
    pub state_envelope: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct SearchSection {
    pub bootstrap_fraction: f64,
    pub sub_budget: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub case_study: CaseStudy,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub plant: PlantSection,
    pub bounds: BoundsSection,
    pub ocp: OcpSection,
    pub simulation: SimulationSection,
    pub initial_conditions: InitialConditionSection,
    pub timing: TimingSection,
    pub fpga: FpgaSection,
    pub search: SearchSection,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_cpu() -> Self {
        Self::from_toml_str(DEFAULT_CPU_TOML).expect("bundled CPU config is valid")
    }

    pub fn default_fpga() -> Self {
        Self::from_toml_str(DEFAULT_FPGA_TOML).expect("bundled FPGA config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 10 {
            return Err(Error::Config(format!("budget must be ≥ 10, got {}", self.budget)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed required".into()));
        }
        for (name, b) in [
            ("t_s", self.bounds.t_s),
            ("horizon", self.bounds.horizon),
            ("n_fgm", self.bounds.n_fgm),
            ("q_speed", self.bounds.q_speed),
            ("n_frac", self.bounds.n_frac),
        ] {
            if !(b[0] < b[1]) {
                return Err(Error::Config(format!("bounds.{name}: require min < max")));
            }
        }
        if !(self.ocp.u_min < self.ocp.u_max) {
            return Err(Error::Config("ocp: require u_min < u_max".into()));
        }
        if self.simulation.metric != "sum" && self.simulation.metric != "mean" {
            return Err(Error::Config(format!(
                "simulation.metric must be \"sum\" or \"mean\", got {:?}",
                self.simulation.metric
            )));
        }
        let n_rows = self.initial_conditions.values.len();
        if n_rows == 0 || self.initial_conditions.values.iter().any(|r| r.len() != self.initial_conditions.values[0].len()) {
            return Err(Error::Config("initial_conditions.values must be a nonempty rectangular table".into()));
        }
        self.chain()?;
        Ok(())
    }

    pub fn chain(&self) -> Result<MassSpringChain> {
        MassSpringChain::new(
            self.plant.masses.clone(),
            self.plant.springs.clone(),
            self.plant.dampers.clone(),
        )
    }

    pub fn design_space(&self) -> Result<DesignSpace> {
        let b = &self.bounds;
        let mut dims = vec![
            Dimension::continuous("t_s", b.t_s[0], b.t_s[1]),
            Dimension::integer("horizon", b.horizon[0], b.horizon[1]),
            Dimension::integer("n_fgm", b.n_fgm[0], b.n_fgm[1]),
            Dimension::continuous("q_speed", b.q_speed[0], b.q_speed[1]),
        ];
        if self.case_study == CaseStudy::Fpga {
            dims.push(Dimension::integer("n_frac", b.n_frac[0], b.n_frac[1]));
        }
        DesignSpace::new(dims)
    }

    pub fn simulation_config(&self) -> SimulationConfig {
        SimulationConfig {
            t_max: self.simulation.t_max,
            epsilon: self.simulation.epsilon,
            substep: self.simulation.substep,
            divergence_threshold: self.simulation.divergence_threshold,
        }
    }

    /// Initial-condition bank for a plant with `n` states, after applying the
    /// configured interpretation and `limit`.
    pub fn initial_conditions(&self, n: usize) -> Result<Vec<DVector<f64>>> {
        let table = &self.initial_conditions.values;
        let rows = table.len();
        let cols = table[0].len();
        let mut bank: Vec<DVector<f64>> = match self.initial_conditions.mode {
            IcMode::Columns => {
                if rows != n {
                    return Err(Error::Config(format!(
                        "columns mode needs {n} table rows (one per state), found {rows}"
                    )));
                }
                (0..cols)
                    .map(|c| DVector::from_fn(n, |r, _| table[r][c]))
                    .collect()
            }
            IcMode::Rows => {
                if cols > n {
                    return Err(Error::Config(format!(
                        "rows mode needs ≤ {n} columns, found {cols}"
                    )));
                }
                table
                    .iter()
                    .map(|row| {
                        DVector::from_fn(n, |i, _| row.get(i).copied().unwrap_or(0.0))
                    })
                    .collect()
            }
        };
        let limit = self.initial_conditions.limit;
        if limit > 0 && limit < bank.len() {
            bank.truncate(limit);
        }
        Ok(bank)
    }
}

/// The bundled ten-mass chain (Appendix table of the target setup).
pub fn appendix_chain() -> MassSpringChain {
    ExperimentConfig::default_cpu()
        .chain()
        .expect("bundled chain is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_defaults_parse_and_validate() {
        let cpu = ExperimentConfig::default_cpu();
        assert_eq!(cpu.case_study, CaseStudy::Cpu);
        assert_eq!(cpu.budget, 200);
        assert_eq!(cpu.simulation.epsilon, 0.01);
        let fpga = ExperimentConfig::default_fpga();
        assert_eq!(fpga.case_study, CaseStudy::Fpga);
        assert_eq!(fpga.simulation.epsilon, 0.02);
        assert_eq!(cpu.design_space().unwrap().len(), 4);
        assert_eq!(fpga.design_space().unwrap().len(), 5);
    }

    #[test]
    fn column_bank_has_five_twenty_state_entries() {
        let cfg = ExperimentConfig::default_cpu();
        let bank = cfg.initial_conditions(20).unwrap();
        assert_eq!(bank.len(), 5);
        assert!(bank.iter().all(|x| x.len() == 20));
        // Spot-check the first column against the table.
        assert_eq!(bank[0][0], 0.0329);
        assert_eq!(bank[0][1], -0.1523);
        assert_eq!(bank[0][19], -0.0019);
        assert!(bank.iter().flat_map(|x| x.iter()).all(|v| v.abs() <= 0.2));
    }

    #[test]
    fn row_bank_pads_remaining_states_with_zeros() {
        let mut cfg = ExperimentConfig::default_cpu();
        cfg.initial_conditions.mode = IcMode::Rows;
        let bank = cfg.initial_conditions(20).unwrap();
        assert_eq!(bank.len(), 20);
        assert_eq!(bank[0][0], 0.0329);
        assert_eq!(bank[0][4], -0.0728);
        assert!(bank[0].rows(5, 15).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn limit_truncates_the_bank() {
        let mut cfg = ExperimentConfig::default_cpu();
        cfg.initial_conditions.limit = 3;
        assert_eq!(cfg.initial_conditions(20).unwrap().len(), 3);
    }

    #[test]
    fn malformed_configs_are_rejected() {
        assert!(ExperimentConfig::from_toml_str("case_study = \"cpu\"").is_err());
        let bad = DEFAULT_CPU_TOML.replace("budget = 200", "budget = 3");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = DEFAULT_CPU_TOML.replace("t_s     = [0.02, 0.5]", "t_s     = [0.5, 0.02]");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }
}
