//! Design points and the bounded mixed-integer design space they live in.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone)]
pub struct Dimension {
    pub name: &'static str,
    pub kind: VarKind,
    pub lo: f64,
    pub hi: f64,
}

impl Dimension {
    pub fn continuous(name: &'static str, lo: f64, hi: f64) -> Self {
        Self { name, kind: VarKind::Continuous, lo, hi }
    }

    pub fn integer(name: &'static str, lo: f64, hi: f64) -> Self {
        Self { name, kind: VarKind::Integer, lo, hi }
    }

    pub fn range(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Ordered search dimensions; CPU studies use
/// `(T_s, N, N_FGM, q_speed)`, FPGA studies append `N_frac`.
#[derive(Debug, Clone)]
pub struct DesignSpace {
    pub dims: Vec<Dimension>,
}

impl DesignSpace {
    pub fn new(dims: Vec<Dimension>) -> Result<Self> {
        if dims.iter().any(|d| !(d.lo < d.hi)) {
            return Err(Error::Config("design-space bounds must satisfy lo < hi".into()));
        }
        Ok(Self { dims })
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Clamps to bounds and rounds integer coordinates to the lattice.
    pub fn snap(&self, p: &mut [f64]) {
        for (v, d) in p.iter_mut().zip(self.dims.iter()) {
            if d.kind == VarKind::Integer {
                *v = v.round();
            }
            *v = v.clamp(d.lo, d.hi);
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dims.len()
            && p.iter().zip(self.dims.iter()).all(|(v, d)| {
                *v >= d.lo && *v <= d.hi && (d.kind == VarKind::Continuous || v.fract() == 0.0)
            })
    }
}

/// One candidate parameter vector. `n_frac` is present only for the FPGA
/// study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub t_s: f64,
    pub horizon: usize,
    pub n_fgm: usize,
    pub q_speed: f64,
    pub n_frac: Option<u32>,
}

impl DesignPoint {
    /// Interprets a raw search vector; length 4 is a CPU point, 5 an FPGA
    /// point.
    pub fn from_vector(v: &[f64]) -> Result<Self> {
        if v.len() != 4 && v.len() != 5 {
            return Err(Error::Domain(format!("design vector of length {}", v.len())));
        }
        Ok(Self {
            t_s: v[0],
            horizon: v[1].round() as usize,
            n_fgm: v[2].round() as usize,
            q_speed: v[3],
            n_frac: v.get(4).map(|x| x.round() as u32),
        })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = vec![
            self.t_s,
            self.horizon as f64,
            self.n_fgm as f64,
            self.q_speed,
        ];
        if let Some(nf) = self.n_frac {
            v.push(nf as f64);
        }
        v
    }
}
