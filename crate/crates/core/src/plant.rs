//! Mass-spring-damper chain modelling and zero-order-hold discretization.
//!
//! The state is ordered as interleaved `(position_i, velocity_i)` pairs, one
//! pair per mass. All modules downstream rely on this ordering.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Continuous-time linear state-space model `x' = A_c x + B_c u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl ContinuousLinearModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::InvalidModel(format!(
                "state matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::InvalidModel(format!(
                "input matrix has {} rows, expected {}",
                b.nrows(),
                a.nrows()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("nonfinite entry".into()));
        }
        Ok(Self { a, b })
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }
}

/// Discrete-time model `x+ = A_d x + B_d u` obtained under a zero-order hold.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub t_s: f64,
}

impl DiscreteLinearModel {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
}

/// Chain of masses connected by springs and dampers; the first mass is also
/// attached to a fixed wall. Element `i` of `spring_constants` /
/// `damping_constants` connects mass `i` to mass `i-1` (the wall for `i = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct MassSpringChain {
    pub masses: Vec<f64>,
    pub spring_constants: Vec<f64>,
    pub damping_constants: Vec<f64>,
}

impl MassSpringChain {
    pub fn new(masses: Vec<f64>, springs: Vec<f64>, dampers: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidModel("empty chain".into()));
        }
        if masses.len() != springs.len() || masses.len() != dampers.len() {
            return Err(Error::InvalidModel(
                "masses, springs and dampers must have equal length".into(),
            ));
        }
        if masses
            .iter()
            .chain(springs.iter())
            .chain(dampers.iter())
            .any(|&v| !(v > 0.0) || !v.is_finite())
        {
            return Err(Error::InvalidModel("nonpositive physical constant".into()));
        }
        Ok(Self {
            masses,
            spring_constants: springs,
            damping_constants: dampers,
        })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// Assembles the continuous state-space model of the chain from the Newtonian
/// force balance. Each mass is actuated by its own input force.
pub fn build_mass_spring_chain(chain: &MassSpringChain) -> Result<ContinuousLinearModel> {
    let nm = chain.len();
    let n = 2 * nm;
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, nm);

    let pos = |i: usize| 2 * i;
    let vel = |i: usize| 2 * i + 1;

    for i in 0..nm {
        let m_i = chain.masses[i];
        a[(pos(i), vel(i))] = 1.0;

        // Spring/damper i couples mass i to mass i-1 (wall when i = 0).
        let k = chain.spring_constants[i];
        let c = chain.damping_constants[i];
        a[(vel(i), pos(i))] -= k / m_i;
        a[(vel(i), vel(i))] -= c / m_i;
        if i > 0 {
            a[(vel(i), pos(i - 1))] += k / m_i;
            a[(vel(i), vel(i - 1))] += c / m_i;
        }

        // Reaction from the element connecting mass i+1.
        if i + 1 < nm {
            let k_next = chain.spring_constants[i + 1];
            let c_next = chain.damping_constants[i + 1];
            a[(vel(i), pos(i))] -= k_next / m_i;
            a[(vel(i), vel(i))] -= c_next / m_i;
            a[(vel(i), pos(i + 1))] += k_next / m_i;
            a[(vel(i), vel(i + 1))] += c_next / m_i;
        }

        b[(vel(i), i)] = 1.0 / m_i;
    }

    ContinuousLinearModel::new(a, b)
}

/// Discretizes a continuous model under a zero-order hold via the augmented
/// matrix exponential: `exp([A B; 0 0] T_s) = [A_d B_d; 0 I]`.
pub fn discretize_zoh(model: &ContinuousLinearModel, t_s: f64) -> Result<DiscreteLinearModel> {
    if !(t_s > 0.0) {
        return Err(Error::Domain(format!("sampling time must be positive, got {t_s}")));
    }
    let n = model.n();
    let m = model.m();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&model.a);
    aug.view_mut((0, n), (n, m)).copy_from(&model.b);
    let exp = (aug * t_s).exp();
    let a_d = exp.view((0, 0), (n, n)).into_owned();
    let b_d = exp.view((0, n), (n, m)).into_owned();
    if a_d.iter().chain(b_d.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("nonfinite entries in discretized model".into()));
    }
    Ok(DiscreteLinearModel { a: a_d, b: b_d, t_s })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_chain(n: usize) -> MassSpringChain {
        MassSpringChain::new(vec![1.0; n], vec![1.0; n], vec![1.0; n]).unwrap()
    }

    #[test]
    fn single_undamped_mass_is_unit_oscillator() {
        // c must be > 0 per invariants; use a tiny damper and check the limit
        // structure against the exact c = 0 oscillator entries.
        let chain = MassSpringChain::new(vec![1.0], vec![1.0], vec![1e-12]).unwrap();
        let model = build_mass_spring_chain(&chain).unwrap();
        assert_eq!(model.n(), 2);
        assert_eq!(model.m(), 1);
        assert_relative_eq!(model.a[(0, 0)], 0.0);
        assert_relative_eq!(model.a[(0, 1)], 1.0);
        assert_relative_eq!(model.a[(1, 0)], -1.0);
        assert_relative_eq!(model.a[(1, 1)], -1e-12);
        assert_relative_eq!(model.b[(0, 0)], 0.0);
        assert_relative_eq!(model.b[(1, 0)], 1.0);
    }

    #[test]
    fn ten_mass_chain_dimensions() {
        let chain = crate::config::appendix_chain();
        let model = build_mass_spring_chain(&chain).unwrap();
        assert_eq!(model.n(), 20);
        assert_eq!(model.m(), 10);
    }

    /// Independent force-balance oracle for a two-mass chain with unit
    /// constants, written directly from the coupled ODEs:
    ///   m1 p1'' = -k1 p1 - c1 v1 + k2 (p2 - p1) + c2 (v2 - v1) + u1
    ///   m2 p2'' = -k2 (p2 - p1) - c2 (v2 - v1) + u2
    #[test]
    fn two_mass_chain_matches_force_balance_oracle() {
        let model = build_mass_spring_chain(&unit_chain(2)).unwrap();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
             0.0,  0.0,  1.0,  0.0,
             0.0,  0.0,  0.0,  1.0,
            -2.0,  1.0, -2.0,  1.0,
             1.0, -1.0,  1.0, -1.0,
        ]);
        // expected is in (p1, p2, v1, v2) ordering; remap to interleaved.
        let map = [0usize, 2, 1, 3]; // interleaved index -> grouped index
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(model.a[(i, j)], expected[(map[i], map[j])], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn rejects_invalid_chains() {
        assert!(MassSpringChain::new(vec![], vec![], vec![]).is_err());
        assert!(MassSpringChain::new(vec![1.0], vec![-1.0], vec![1.0]).is_err());
        assert!(MassSpringChain::new(vec![1.0, 1.0], vec![1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn zoh_zero_dynamics() {
        let model = ContinuousLinearModel::new(
            DMatrix::zeros(2, 2),
            DMatrix::from_row_slice(2, 1, &[1.0, 2.0]),
        )
        .unwrap();
        let d = discretize_zoh(&model, 0.1).unwrap();
        assert_relative_eq!(d.a, DMatrix::identity(2, 2), epsilon = 1e-14);
        assert_relative_eq!(d.b[(0, 0)], 0.1, epsilon = 1e-14);
        assert_relative_eq!(d.b[(1, 0)], 0.2, epsilon = 1e-14);
    }

    #[test]
    fn zoh_scalar_closed_form() {
        // a = -1, b = 1, T_s = ln 2: A_d = 1/2, B_d = 1 - e^{-T} = 1/2.
        let model = ContinuousLinearModel::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
        .unwrap();
        let d = discretize_zoh(&model, std::f64::consts::LN_2).unwrap();
        assert_relative_eq!(d.a[(0, 0)], 0.5, epsilon = 1e-12);
        assert_relative_eq!(d.b[(0, 0)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zoh_rejects_nonpositive_sampling_time() {
        let model = build_mass_spring_chain(&unit_chain(1)).unwrap();
        assert!(discretize_zoh(&model, 0.0).is_err());
        assert!(discretize_zoh(&model, -0.1).is_err());
    }

    #[test]
    fn zoh_semigroup_property() {
        let model = build_mass_spring_chain(&crate::config::appendix_chain()).unwrap();
        let d1 = discretize_zoh(&model, 0.13).unwrap();
        let d2 = discretize_zoh(&model, 0.21).unwrap();
        let d12 = discretize_zoh(&model, 0.34).unwrap();
        // Composed dynamics: x2 = A2 (A1 x + B1 u) + B2 u with the same held u.
        let a_comp = &d2.a * &d1.a;
        let b_comp = &d2.a * &d1.b + &d2.b;
        assert!((a_comp - &d12.a).amax() < 1e-9);
        assert!((b_comp - &d12.b).amax() < 1e-9);
    }

    #[test]
    fn damped_chain_discrete_dynamics_are_stable() {
        let model = build_mass_spring_chain(&crate::config::appendix_chain()).unwrap();
        for &t_s in &[0.02, 0.1, 0.236, 0.35, 0.5] {
            let d = discretize_zoh(&model, t_s).unwrap();
            let rho = d
                .a
                .complex_eigenvalues()
                .iter()
                .map(|l| l.norm())
                .fold(0.0, f64::max);
            assert!(rho < 1.0, "spectral radius {rho} at T_s = {t_s}");
        }
    }
}
