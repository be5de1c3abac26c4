//! Recursive evaluation of `(kernel ∗ g)(t)` for exponential-sum kernels.
//!
//! Each pole `p` carries one accumulator `f(t) = ∫₀ᵗ e^{p(t−τ)} g(τ) dτ`,
//! advanced by `f ← e^{pΔt} f + (Δt/2)(g_{n+1} + e^{pΔt} g_n)`. The
//! convolution is then `Σ w_j f_j + δ·g(t)`, at O(#poles) cost per step.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::nrbk::{omega_kernel, ExpSumKernel};

#[derive(Debug, Clone)]
pub struct ConvolutionState {
    poles: Vec<Complex64>,
    step_factors: Vec<Complex64>,
    acc: Vec<Complex64>,
    t: f64,
    dt: f64,
    steps: u64,
}

impl ConvolutionState {
    pub fn new(poles: &[Complex64], dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        Ok(ConvolutionState {
            poles: poles.to_vec(),
            step_factors: poles.iter().map(|p| (p * dt).exp()).collect(),
            acc: vec![Complex64::new(0.0, 0.0); poles.len()],
            t: 0.0,
            dt,
            steps: 0,
        })
    }

    pub fn for_kernel(kernel: &ExpSumKernel, dt: f64) -> Result<Self> {
        Self::new(&kernel.rate_poles, dt)
    }

    /// One trapezoidal step from `t` to `t + Δt`, given `g(t)` and `g(t+Δt)`.
    pub fn advance(&mut self, g_n: Complex64, g_np1: Complex64) {
        let h = 0.5 * self.dt;
        for (f, e) in self.acc.iter_mut().zip(&self.step_factors) {
            *f = e * *f + h * (g_np1 + e * g_n);
        }
        self.steps += 1;
        // avoid drift from repeated addition
        self.t = self.steps as f64 * self.dt;
    }

    /// `Σ w_j f_j + delta · g_now` for explicit weights on this state's poles.
    pub fn value_with(&self, weights: &[Complex64], delta: Complex64, g_now: Complex64) -> Complex64 {
        debug_assert_eq!(weights.len(), self.acc.len());
        let mut s = delta * g_now;
        for (w, f) in weights.iter().zip(&self.acc) {
            s += w * f;
        }
        s
    }

    /// `(kernel ∗ g)(t)` including the `δ` term.
    pub fn value(&self, kernel: &ExpSumKernel, g_now: Complex64) -> Result<Complex64> {
        if kernel.rate_poles != self.poles {
            return Err(Error::PoleMismatch(format!(
                "state has {} poles, kernel (l = {}) has {} different poles",
                self.poles.len(),
                kernel.l,
                kernel.rate_poles.len()
            )));
        }
        Ok(self.value_with(&kernel.weights, kernel.delta_coeff, g_now))
    }

    pub fn accumulators(&self) -> &[Complex64] {
        &self.acc
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn step_factors(&self) -> &[Complex64] {
        &self.step_factors
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// One row of a step-halving convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichardsonRow {
    pub dt: f64,
    pub value: f64,
    pub error: f64,
    /// `error(2Δt) / error(Δt)`; `None` for the coarsest step.
    pub ratio: Option<f64>,
}

/// Convergence of the recursive `ω_l ∗ g` at `t_end` for `g(t) = sin(a t)`,
/// against the closed-form convolution, on successively halved steps.
pub fn richardson_study(
    l: usize,
    b: f64,
    c: f64,
    freq: f64,
    t_end: f64,
    dt0: f64,
    levels: usize,
) -> Result<Vec<RichardsonRow>> {
    let kernel = omega_kernel(l, b, c)?;
    let exact = {
        // sin(a t) = (e^{iat} − e^{−iat}) / 2i
        let mut s = kernel.delta_coeff * (freq * t_end).sin();
        for (p, w) in kernel.rate_poles.iter().zip(&kernel.weights) {
            let mode = |om: f64| {
                let iw = Complex64::new(0.0, om);
                ((iw * t_end).exp() - (p * t_end).exp()) / (iw - p)
            };
            s += w * (mode(freq) - mode(-freq)) / Complex64::new(0.0, 2.0);
        }
        s.re
    };
    let g = |t: f64| Complex64::new((freq * t).sin(), 0.0);
    let mut rows: Vec<RichardsonRow> = Vec::with_capacity(levels);
    for k in 0..levels {
        let dt = dt0 / 2f64.powi(k as i32);
        let n = (t_end / dt).round() as u64;
        if ((n as f64) * dt - t_end).abs() > 1e-9 * t_end {
            return Err(Error::InvalidParameter(format!(
                "t_end = {t_end} is not a multiple of dt = {dt}"
            )));
        }
        let mut st = ConvolutionState::for_kernel(&kernel, dt)?;
        for i in 0..n {
            st.advance(g(i as f64 * dt), g((i + 1) as f64 * dt));
        }
        let value = st.value(&kernel, g(t_end))?.re;
        let error = (value - exact).abs();
        let ratio = rows.last().map(|r| r.error / error);
        rows.push(RichardsonRow {
            dt,
            value,
            error,
            ratio,
        });
    }
    Ok(rows)
}
