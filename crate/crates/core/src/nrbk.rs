//! Non-reflecting boundary kernels as exponential sums plus a `δ(t)` term.
//!
//! For each degree `l` three kernels are built on the Bessel zeros:
//!
//! * `σ_l(t) = (c/b) Σ z_j e^{(c/b) z_j t}` over the zeros of `K_{l+1/2}`,
//! * `ω_l(t) = (c/b) Σ z_j² e^{(c/b) z_j t} + (Σ z_j) δ(t)`, the same poles,
//! * `ρ_l(t) = (c/b) Σ z̃_j³/(β+z̃_j²) e^{(c/b) z̃_j t} + Σ z̃_j²/(β+z̃_j²) δ(t)`
//!   over the combined zeros, with `β = l(l+1)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{combined_zeros, k_zeros};

/// Which boundary kernel an [`ExpSumKernel`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Sigma,
    Rho,
    Omega,
}

/// `Σ_j w_j e^{p_j t} + delta_coeff · δ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumKernel {
    pub family: KernelFamily,
    pub l: usize,
    /// `p_j = (c/b) z_j`, units 1/time.
    pub rate_poles: Vec<Complex64>,
    pub weights: Vec<Complex64>,
    pub delta_coeff: Complex64,
    pub b: f64,
    pub c: f64,
}

impl ExpSumKernel {
    /// The smooth part `Σ_j w_j e^{p_j t}`.
    pub fn smooth(&self, t: f64) -> Complex64 {
        self.rate_poles
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * (p * t).exp())
            .sum()
    }

    pub fn len(&self) -> usize {
        self.rate_poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rate_poles.is_empty()
    }

    /// Pole of largest real part (slowest decay).
    pub fn max_real_pole(&self) -> f64 {
        self.rate_poles
            .iter()
            .map(|p| p.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn check_geometry(l: usize, b: f64, c: f64) -> Result<()> {
    if l == 0 {
        return Err(Error::InvalidParameter("kernels require l >= 1".into()));
    }
    if !(b > 0.0 && b.is_finite()) || !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius and wave speed must be positive (b = {b}, c = {c})"
        )));
    }
    Ok(())
}

type KernelCache = Mutex<HashMap<(KernelFamily, usize, u64, u64), Arc<ExpSumKernel>>>;

fn cache() -> &'static KernelCache {
    static CACHE: OnceLock<KernelCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn cached(
    family: KernelFamily,
    l: usize,
    b: f64,
    c: f64,
    build: impl FnOnce() -> Result<ExpSumKernel>,
) -> Result<Arc<ExpSumKernel>> {
    check_geometry(l, b, c)?;
    let key = (family, l, b.to_bits(), c.to_bits());
    if let Some(k) = cache().lock().unwrap().get(&key) {
        return Ok(Arc::clone(k));
    }
    let k = Arc::new(build()?);
    cache().lock().unwrap().insert(key, Arc::clone(&k));
    Ok(k)
}

pub fn sigma_kernel(l: usize, b: f64, c: f64) -> Result<Arc<ExpSumKernel>> {
    cached(KernelFamily::Sigma, l, b, c, || {
        let z = k_zeros(l)?;
        let s = c / b;
        Ok(ExpSumKernel {
            family: KernelFamily::Sigma,
            l,
            rate_poles: z.poles.iter().map(|z| s * z).collect(),
            weights: z.poles.iter().map(|z| s * z).collect(),
            delta_coeff: Complex64::new(0.0, 0.0),
            b,
            c,
        })
    })
}

pub fn rho_kernel(l: usize, b: f64, c: f64) -> Result<Arc<ExpSumKernel>> {
    cached(KernelFamily::Rho, l, b, c, || {
        let z = combined_zeros(l)?;
        let s = c / b;
        let beta = (l * (l + 1)) as f64;
        let mut weights = Vec::with_capacity(z.len());
        let mut delta = Complex64::new(0.0, 0.0);
        for zj in &z.poles {
            let denom = beta + zj * zj;
            if denom.norm() < 1e-10 {
                return Err(Error::Singular(format!(
                    "l(l+1) + z^2 vanishes at combined zero {zj} (l = {l})"
                )));
            }
            weights.push(s * zj * zj * zj / denom);
            delta += zj * zj / denom;
        }
        Ok(ExpSumKernel {
            family: KernelFamily::Rho,
            l,
            rate_poles: z.poles.iter().map(|z| s * z).collect(),
            weights,
            delta_coeff: delta,
            b,
            c,
        })
    })
}

pub fn omega_kernel(l: usize, b: f64, c: f64) -> Result<Arc<ExpSumKernel>> {
    cached(KernelFamily::Omega, l, b, c, || {
        let z = k_zeros(l)?;
        let s = c / b;
        Ok(ExpSumKernel {
            family: KernelFamily::Omega,
            l,
            rate_poles: z.poles.iter().map(|z| s * z).collect(),
            weights: z.poles.iter().map(|z| s * z * z).collect(),
            delta_coeff: z.poles.iter().sum(),
            b,
            c,
        })
    })
}

/// `sin⁶(8t)` written as `Σ a_k e^{i ω_k t}`.
fn test_signal_modes() -> [(f64, f64); 7] {
    // sin⁶x = (10 − 15 cos 2x + 6 cos 4x − cos 6x) / 32, x = 8t
    [
        (0.0, 10.0 / 32.0),
        (16.0, -15.0 / 64.0),
        (-16.0, -15.0 / 64.0),
        (32.0, 6.0 / 64.0),
        (-32.0, 6.0 / 64.0),
        (48.0, -1.0 / 64.0),
        (-48.0, -1.0 / 64.0),
    ]
}

/// `∫₀ᵗ e^{p(t−τ)} e^{iωτ} dτ`.
fn exp_conv_mode(p: Complex64, omega: f64, t: f64) -> Complex64 {
    let iw = Complex64::new(0.0, omega);
    ((iw * t).exp() - (p * t).exp()) / (iw - p)
}

/// `e^{pt} ∗ e^{qt} ∗ e^{iωt}` evaluated at `t`, for `p ≠ q`.
fn double_exp_conv_mode(p: Complex64, q: Complex64, omega: f64, t: f64) -> Complex64 {
    (exp_conv_mode(p, omega, t) - exp_conv_mode(q, omega, t)) / (p - q)
}

/// Relative discrepancy between two exact evaluations of the same
/// convolution, using the test signal `φ(t) = sin⁶(8t)`.
///
/// With `ψ = σ_l ∗ φ − (b/c) φ'`, the value `ρ_l ∗ ψ` is computed from the
/// `ρ` representation (combined zeros) and compared with `ω_l ∗ φ`, which
/// uses the `K` zeros only. All convolutions of exponentials are done in
/// closed form, so the result measures kernel accuracy alone.
pub fn kernel_crosscheck(l: usize, b: f64, c: f64, times: &[f64]) -> Result<Vec<f64>> {
    let sigma = sigma_kernel(l, b, c)?;
    let rho = rho_kernel(l, b, c)?;
    let omega = omega_kernel(l, b, c)?;
    let modes = test_signal_modes();
    let phi = |t: f64| -> Complex64 {
        modes
            .iter()
            .map(|&(w, a)| a * Complex64::new(0.0, w * t).exp())
            .sum()
    };
    let dphi = |t: f64| -> Complex64 {
        modes
            .iter()
            .map(|&(w, a)| a * Complex64::new(0.0, w) * Complex64::new(0.0, w * t).exp())
            .sum()
    };

    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cross-check times must be positive, got {t}"
            )));
        }
        // reference: ω ∗ φ
        let mut reference = omega.delta_coeff * phi(t);
        for (p, w) in omega.rate_poles.iter().zip(&omega.weights) {
            for &(om, a) in &modes {
                reference += w * a * exp_conv_mode(*p, om, t);
            }
        }

        // ψ(t) = σ ∗ φ − (b/c) φ'
        let mut psi = -(b / c) * dphi(t);
        for (p, w) in sigma.rate_poles.iter().zip(&sigma.weights) {
            for &(om, a) in &modes {
                psi += w * a * exp_conv_mode(*p, om, t);
            }
        }

        // ρ ∗ ψ
        let mut value = rho.delta_coeff * psi;
        for (pr, wr) in rho.rate_poles.iter().zip(&rho.weights) {
            let mut inner = Complex64::new(0.0, 0.0);
            for (ps, ws) in sigma.rate_poles.iter().zip(&sigma.weights) {
                for &(om, a) in &modes {
                    inner += ws * a * double_exp_conv_mode(*pr, *ps, om, t);
                }
            }
            for &(om, a) in &modes {
                inner -= (b / c) * a * Complex64::new(0.0, om) * exp_conv_mode(*pr, om, t);
            }
            value += wr * inner;
        }

        if reference.norm() < 1e-300 {
            return Err(Error::Domain(format!(
                "reference convolution vanishes at t = {t}"
            )));
        }
        out.push((value - reference).norm() / reference.norm());
    }
    Ok(out)
}
