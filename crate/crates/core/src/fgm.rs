//! Projected fast gradient method with constant step size, in double
//! precision or in emulated fixed-point arithmetic.
//!
//! Per iteration: anti-gradient step `θ = (I - H/L)ν - h/L`, projection onto
//! the box, extra-momentum `ν = (1+β)z⁺ - βz`. All divisions are folded into
//! the precomputed matrices, so the fixed-point path only adds and multiplies.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fixed::{rshift_round_even, rshift_round_even_i64, FixedPointFormat};
use crate::ocp::{spectral_bounds, CondensedQp};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arithmetic {
    Double,
    Fixed(FixedPointFormat),
}

#[derive(Debug, Clone, Copy)]
pub struct FgmConfig {
    pub n_iterations: usize,
    pub arithmetic: Arithmetic,
    pub warm_start: bool,
}

impl FgmConfig {
    pub fn double(n_iterations: usize) -> Self {
        Self { n_iterations, arithmetic: Arithmetic::Double, warm_start: true }
    }

    pub fn fixed(n_iterations: usize, fmt: FixedPointFormat) -> Self {
        Self { n_iterations, arithmetic: Arithmetic::Fixed(fmt), warm_start: true }
    }
}

#[derive(Debug, Clone)]
pub struct FgmSolution {
    pub theta: DVector<f64>,
    pub first_input: DVector<f64>,
    pub iterates_bound_hit: bool,
}

/// Constant-step momentum parameter `β = (√L - √μ)/(√L + √μ)`.
pub fn compute_beta(l_max: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Domain(format!("nonconvex problem: μ = {mu}")));
    }
    if l_max < mu {
        return Err(Error::Domain(format!("require L ≥ μ, got L = {l_max}, μ = {mu}")));
    }
    let (sl, sm) = (l_max.sqrt(), mu.sqrt());
    Ok((sl - sm) / (sl + sm))
}

#[derive(Debug, Clone)]
struct FixedData {
    fmt: FixedPointFormat,
    /// `I - H_q/L`, row-major raw.
    step: Vec<i64>,
    /// `G/L`, row-major raw.
    grad: Vec<i64>,
    theta_min: Vec<i64>,
    theta_max: Vec<i64>,
    /// `1 + β` and `β`, raw.
    beta_plus: i64,
    beta: i64,
    /// 32-bit copies of the matrices when every raw — and every possible row
    /// accumulation — provably fits (see [`FixedData::narrow`]); the narrow
    /// path computes bit-identical sums with vectorizable 32×32→64 products.
    step32: Vec<i32>,
    grad32: Vec<i32>,
}

impl FixedData {
    /// True when inner products of `mat` rows against any raw value of the
    /// format provably stay inside an `i64` and all operands fit `i32`. The
    /// accumulation bound is per row: `Σ|m_ij| · max_raw`.
    fn narrow(fmt: FixedPointFormat, mat: &[i64], cols: usize) -> bool {
        let max_raw = fmt.max_raw() as i128;
        if max_raw > i32::MAX as i128 {
            return false;
        }
        let mut max_row_sum: i128 = 0;
        for row in mat.chunks(cols.max(1)) {
            if row.iter().any(|v| v.unsigned_abs() > i32::MAX as u64) {
                return false;
            }
            let sum: i128 = row.iter().map(|v| v.unsigned_abs() as i128).sum();
            max_row_sum = max_row_sum.max(sum);
        }
        max_row_sum * max_raw <= (1i128 << 62)
    }
}

/// Solver with all design-dependent data precomputed; `solve` is then called
/// once per controller step.
#[derive(Debug, Clone)]
pub struct FgmSolver {
    n_iterations: usize,
    m_inputs: usize,
    dim: usize,
    state_dim: usize,
    /// `I - H/L` (double path).
    step_mat: DMatrix<f64>,
    /// `G/L` (double path).
    grad_map: DMatrix<f64>,
    theta_min: DVector<f64>,
    theta_max: DVector<f64>,
    beta: f64,
    fixed: Option<FixedData>,
}

impl FgmSolver {
    /// `m_inputs` is the per-step input dimension used to slice `u₀` out of
    /// the solution. In fixed mode the spectrum (and hence `L`, `β`) is taken
    /// from the quantized Hessian, which must remain positive definite.
    pub fn new(qp: &CondensedQp, m_inputs: usize, cfg: &FgmConfig) -> Result<Self> {
        if cfg.n_iterations == 0 {
            return Err(Error::Domain("n_iterations must be at least 1".into()));
        }
        let dim = qp.dim();
        let state_dim = qp.g_map.ncols();
        match cfg.arithmetic {
            Arithmetic::Double => {
                let beta = compute_beta(qp.l_max, qp.mu)?;
                let step_mat = DMatrix::identity(dim, dim) - &qp.h_mat / qp.l_max;
                let grad_map = &qp.g_map / qp.l_max;
                Ok(Self {
                    n_iterations: cfg.n_iterations,
                    m_inputs,
                    dim,
                    state_dim,
                    step_mat,
                    grad_map,
                    theta_min: qp.theta_min.clone(),
                    theta_max: qp.theta_max.clone(),
                    beta,
                    fixed: None,
                })
            }
            Arithmetic::Fixed(fmt) => {
                // The divisions by L are folded offline into the stored
                // constants, so quantization acts on `I - H/L` and `G/L`; the
                // effective Hessian is reconstructed from the stored matrix.
                let step_mat =
                    quantize_matrix(&(DMatrix::identity(dim, dim) - &qp.h_mat / qp.l_max), fmt);
                let (l_q, mu_q) = quantized_spectrum(&qp.h_mat, fmt)?;
                let beta = compute_beta(l_q, mu_q)?;
                let grad_map = quantize_matrix(&(&qp.g_map / qp.l_max), fmt);
                let theta_min = qp.theta_min.map(|v| fmt.quantize(v));
                let theta_max = qp.theta_max.map(|v| fmt.quantize(v));
                let row_major_raw = |m: &DMatrix<f64>| -> Vec<i64> {
                    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
                    for i in 0..m.nrows() {
                        for j in 0..m.ncols() {
                            out.push(fmt.to_raw(m[(i, j)]));
                        }
                    }
                    out
                };
                let step_raw = row_major_raw(&step_mat);
                let grad_raw = row_major_raw(&grad_map);
                // The momentum products β·z must also fit an i64:
                // (frac+1) + (int-1+frac) + 1 carry bit within 62.
                let use32 = FixedData::narrow(fmt, &step_raw, dim)
                    && FixedData::narrow(fmt, &grad_raw, state_dim)
                    && fmt.integer_bits + 2 * fmt.fraction_bits <= 60;
                let (step32, grad32) = if use32 {
                    (
                        step_raw.iter().map(|&v| v as i32).collect(),
                        grad_raw.iter().map(|&v| v as i32).collect(),
                    )
                } else {
                    (Vec::new(), Vec::new())
                };
                let fixed = FixedData {
                    fmt,
                    step: step_raw,
                    grad: grad_raw,
                    theta_min: theta_min.iter().map(|&v| fmt.to_raw(v)).collect(),
                    theta_max: theta_max.iter().map(|&v| fmt.to_raw(v)).collect(),
                    beta_plus: fmt.to_raw(1.0 + beta),
                    beta: fmt.to_raw(beta),
                    step32,
                    grad32,
                };
                Ok(Self {
                    n_iterations: cfg.n_iterations,
                    m_inputs,
                    dim,
                    state_dim,
                    step_mat,
                    grad_map,
                    theta_min,
                    theta_max,
                    beta,
                    fixed: Some(fixed),
                })
            }
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// True when fixed-mode matvecs run on the 32-bit fast path.
    pub fn narrow_fixed_path(&self) -> bool {
        self.fixed.as_ref().is_some_and(|fx| !fx.step32.is_empty())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Runs exactly `n_iterations` iterations from `theta0` (clamped to the
    /// box) and returns the last projected iterate.
    pub fn solve(&self, x_hat: &DVector<f64>, theta0: &DVector<f64>) -> Result<FgmSolution> {
        if x_hat.len() != self.state_dim || theta0.len() != self.dim {
            return Err(Error::Domain("dimension mismatch in solve".into()));
        }
        match &self.fixed {
            None => self.solve_double(x_hat, theta0),
            Some(fx) => Ok(self.solve_fixed(fx, x_hat, theta0)),
        }
    }

    fn solve_double(&self, x_hat: &DVector<f64>, theta0: &DVector<f64>) -> Result<FgmSolution> {
        let g = &self.grad_map * x_hat;
        let clamp = |v: &mut DVector<f64>| {
            for i in 0..self.dim {
                v[i] = v[i].clamp(self.theta_min[i], self.theta_max[i]);
            }
        };
        let mut z = theta0.clone();
        clamp(&mut z);
        let mut nu = z.clone();
        for _ in 0..self.n_iterations {
            let mut theta = &self.step_mat * &nu - &g;
            if theta.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical("nonfinite FGM iterate".into()));
            }
            clamp(&mut theta);
            nu = &theta * (1.0 + self.beta) - &z * self.beta;
            z = theta;
        }
        let first_input = z.rows(0, self.m_inputs).into_owned();
        Ok(FgmSolution { theta: z, first_input, iterates_bound_hit: false })
    }

    fn solve_fixed(&self, fx: &FixedData, x_hat: &DVector<f64>, theta0: &DVector<f64>) -> FgmSolution {
        let fmt = fx.fmt;
        let n = self.dim;
        let frac = fmt.fraction_bits;
        let use32 = !fx.step32.is_empty();
        let mut saturated = false;

        // g = (G/L) x̂, quantized input and output.
        let x_raw: Vec<i64> = x_hat.iter().map(|&v| fmt.to_raw(v)).collect();
        let x32: Vec<i32> = if use32 { x_raw.iter().map(|&v| v as i32).collect() } else { Vec::new() };
        let mut g_raw = vec![0i64; n];
        for i in 0..n {
            let acc = if use32 {
                dot_i32(&fx.grad32[i * self.state_dim..(i + 1) * self.state_dim], &x32) as i128
            } else {
                dot_raw_wide(&fx.grad[i * self.state_dim..(i + 1) * self.state_dim], &x_raw)
            };
            let (v, sat) = fmt.saturate(rshift_round_even(acc, frac));
            saturated |= sat;
            g_raw[i] = v;
        }

        let clamp = |v: i64, i: usize| v.clamp(fx.theta_min[i], fx.theta_max[i]);
        let mut z: Vec<i64> = theta0
            .iter()
            .enumerate()
            .map(|(i, &v)| clamp(fmt.to_raw(v), i))
            .collect();
        let mut nu = z.clone();
        let mut nu32 = vec![0i32; if use32 { n } else { 0 }];
        let mut theta = vec![0i64; n];
        for _ in 0..self.n_iterations {
            // Anti-gradient: products accumulate double-width (or single-width
            // on the proven-narrow path), one re-quantization per entry.
            if use32 {
                let max = fmt.max_raw();
                for (d, &s) in nu32.iter_mut().zip(nu.iter()) {
                    *d = s as i32;
                }
                for ((t, row), &g) in theta
                    .iter_mut()
                    .zip(fx.step32.chunks_exact(n))
                    .zip(g_raw.iter())
                {
                    let acc = dot_i32(row, &nu32).wrapping_sub(g << frac);
                    let v = rshift_round_even_i64(acc, frac);
                    saturated |= v > max || v < -max;
                    *t = v.clamp(-max, max);
                }
            } else {
                for i in 0..n {
                    let acc = dot_raw_wide(&fx.step[i * n..(i + 1) * n], &nu)
                        - ((g_raw[i] as i128) << frac);
                    let (v, sat) = fmt.saturate(rshift_round_even(acc, frac));
                    saturated |= sat;
                    theta[i] = v;
                }
            }
            // Projection is exact in raw arithmetic.
            for i in 0..n {
                theta[i] = clamp(theta[i], i);
            }
            // Extra momentum.
            if use32 {
                let max = fmt.max_raw();
                for ((dst, &t), &zp) in nu.iter_mut().zip(theta.iter()).zip(z.iter()) {
                    let acc = fx.beta_plus.wrapping_mul(t).wrapping_sub(fx.beta.wrapping_mul(zp));
                    let v = rshift_round_even_i64(acc, frac);
                    saturated |= v > max || v < -max;
                    *dst = v.clamp(-max, max);
                }
            } else {
                for i in 0..n {
                    let acc =
                        fx.beta_plus as i128 * theta[i] as i128 - fx.beta as i128 * z[i] as i128;
                    let (v, sat) = fmt.saturate(rshift_round_even(acc, frac));
                    saturated |= sat;
                    nu[i] = v;
                }
            }
            std::mem::swap(&mut z, &mut theta);
        }
        let theta_out = DVector::from_iterator(n, z.iter().map(|&r| fmt.from_raw(r)));
        let first_input = theta_out.rows(0, self.m_inputs).into_owned();
        FgmSolution { theta: theta_out, first_input, iterates_bound_hit: saturated }
    }
}

/// Double-width raw dot product. Integer addition is exact and associative,
/// so regrouping the accumulation changes nothing but throughput.
#[inline]
fn dot_raw_wide(row: &[i64], v: &[i64]) -> i128 {
    let mut acc0: i128 = 0;
    let mut acc1: i128 = 0;
    let mut r2 = row.chunks_exact(2);
    let mut v2 = v.chunks_exact(2);
    for (r, x) in (&mut r2).zip(&mut v2) {
        acc0 += r[0] as i128 * x[0] as i128;
        acc1 += r[1] as i128 * x[1] as i128;
    }
    for (r, x) in r2.remainder().iter().zip(v2.remainder()) {
        acc0 += *r as i128 * *x as i128;
    }
    acc0 + acc1
}

/// Same value as [`dot_raw_wide`] when the construction-time bound
/// ([`FixedData::narrow`]) guarantees the whole sum fits an `i64`; the
/// 32×32→64 products vectorize. Wrapping ops are exact here — the bound
/// rules overflow out — and keep debug overflow checks from blocking SIMD.
#[inline]
fn dot_i32(row: &[i32], v: &[i32]) -> i64 {
    let mut acc = 0i64;
    for (&a, &b) in row.iter().zip(v) {
        acc = acc.wrapping_add((a as i64).wrapping_mul(b as i64));
    }
    acc
}

fn quantize_matrix(m: &DMatrix<f64>, fmt: FixedPointFormat) -> DMatrix<f64> {
    m.map(|v| fmt.quantize(v))
}

/// Extreme eigenvalues of the Hessian the fixed-point datapath effectively
/// uses: the stored constant is `quant(I - H/L)`, so the quantized Hessian is
/// `H_q = L·(I - quant(I - H/L))`. Used for the convexity pre-check.
pub fn quantized_spectrum(h: &DMatrix<f64>, fmt: FixedPointFormat) -> Result<(f64, f64)> {
    let (l, _, _) = spectral_bounds(h)?;
    let dim = h.nrows();
    let m_q = quantize_matrix(&(DMatrix::identity(dim, dim) - h / l), fmt);
    let h_q = (DMatrix::identity(dim, dim) - m_q) * l;
    let (l_q, mu_q, _) = spectral_bounds(&h_q)?;
    Ok((l_q, mu_q))
}

/// Derives the number of integer bits needed so that no Algorithm iterate can
/// overflow, by per-coordinate interval propagation of one iteration of the
/// recurrence with `z, z' ∈ [θ_min, θ_max]` and `|x̂| ≤ state_envelope`.
pub fn derive_fixed_format(
    qp: &CondensedQp,
    n_frac: u32,
    state_envelope: &DVector<f64>,
) -> Result<FixedPointFormat> {
    if qp.theta_min.iter().chain(qp.theta_max.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Domain("box bounds must be finite".into()));
    }
    let bound = iterate_bound(qp, state_envelope)?;
    if !bound.is_finite() {
        return Err(Error::Numerical("nonfinite iterate bound".into()));
    }
    let magnitude = bound.max(1.0).log2().ceil() as u32;
    FixedPointFormat::new((magnitude + 1).max(2), n_frac)
}

/// Interval-arithmetic over-approximation of the largest absolute value
/// appearing anywhere in the recurrence (iterates, gradient, constants).
pub fn iterate_bound(qp: &CondensedQp, state_envelope: &DVector<f64>) -> Result<f64> {
    let beta = compute_beta(qp.l_max, qp.mu)?;
    let n = qp.dim();
    let step = DMatrix::identity(n, n) - &qp.h_mat / qp.l_max;
    let grad = &qp.g_map / qp.l_max;

    let mut bound: f64 = 1.0 + beta;
    for i in 0..n {
        bound = bound.max(qp.theta_min[i].abs()).max(qp.theta_max[i].abs());
    }
    bound = bound.max(step.amax()).max(grad.amax());

    // ν = (1+β)z⁺ - βz with both factors in the box.
    let mut nu_lo = DVector::zeros(n);
    let mut nu_hi = DVector::zeros(n);
    for i in 0..n {
        nu_lo[i] = (1.0 + beta) * qp.theta_min[i] - beta * qp.theta_max[i];
        nu_hi[i] = (1.0 + beta) * qp.theta_max[i] - beta * qp.theta_min[i];
        bound = bound.max(nu_lo[i].abs()).max(nu_hi[i].abs());
    }

    // |g_i| ≤ Σ_j |(G/L)_ij| env_j.
    let mut g_abs = DVector::zeros(n);
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..state_envelope.len() {
            s += grad[(i, j)].abs() * state_envelope[j].abs();
        }
        g_abs[i] = s;
        bound = bound.max(s);
    }

    // Pre-projection θ = Mν - g.
    for i in 0..n {
        let mut lo = -g_abs[i];
        let mut hi = g_abs[i];
        for j in 0..n {
            let m = step[(i, j)];
            if m >= 0.0 {
                lo += m * nu_lo[j];
                hi += m * nu_hi[j];
            } else {
                lo += m * nu_hi[j];
                hi += m * nu_lo[j];
            }
        }
        bound = bound.max(lo.abs()).max(hi.abs());
    }
    Ok(bound)
}
