//! Scalar and vector spherical harmonics, quadrature transforms on a
//! Gauss–Legendre × uniform sphere grid, and the divergence-free
//! `(u, v)` representation
//!
//! `D = u₀₀ Y₀⁰ e_r + Σ_{l≥1,m} [ (β_l/r) v_lm Y_l^m e_r + (∂_r v_lm + v_lm/r) Ψ_l^m + u_lm Φ_l^m ]`
//!
//! with `β_l = l(l+1)`, `Ψ = ∇_S Y` and `Φ = ∇_S Y ∧ e_r`. Harmonics are
//! orthonormal on the unit sphere with the Condon–Shortley phase, so
//! `Y_l^{-m} = (−1)^m conj(Y_l^m)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Flat index of `(l, m)` in a `(L+1)²` coefficient vector.
#[inline]
pub fn idx(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Number of coefficients up to degree `l_max`.
pub fn n_coeffs(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// `l(l+1)`.
pub fn beta(l: usize) -> f64 {
    (l * (l + 1)) as f64
}

#[inline]
fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Fully normalised associated Legendre functions `P̄_l^m(cos θ)` for
/// `0 ≤ m ≤ l ≤ L` (so that `Y_l^m = P̄_l^m e^{imφ}`), and their θ-derivatives.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub l_max: usize,
    pub theta: f64,
    pub sin_theta: f64,
    p: Vec<f64>,
    dp: Vec<f64>,
}

impl LegendreTable {
    pub fn new(l_max: usize, theta: f64) -> Result<Self> {
        let (x, s) = (theta.cos(), theta.sin());
        if !(theta > 0.0 && theta < PI && s > 0.0) {
            return Err(Error::Domain(format!(
                "harmonics are evaluated off the poles only (θ = {theta})"
            )));
        }
        let n = tri(l_max, l_max) + 1;
        let mut p = vec![0.0; n];
        let mut dp = vec![0.0; n];
        let mut pmm = 1.0 / (4.0 * PI).sqrt();
        for m in 0..=l_max {
            if m > 0 {
                pmm *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
            }
            p[tri(m, m)] = pmm;
            if m < l_max {
                p[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * pmm;
            }
            for l in (m + 2)..=l_max {
                let a = |l: usize| (((4 * l * l - 1) as f64) / ((l * l - m * m) as f64)).sqrt();
                p[tri(l, m)] = a(l) * (x * p[tri(l - 1, m)] - p[tri(l - 2, m)] / a(l - 1));
            }
        }
        for m in 0..=l_max {
            for l in m..=l_max {
                let lf = l as f64;
                let lower = if l > m {
                    (((2 * l + 1) * (l - m) * (l + m)) as f64 / (2 * l - 1) as f64).sqrt()
                        * p[tri(l - 1, m)]
                } else {
                    0.0
                };
                dp[tri(l, m)] = (lf * x * p[tri(l, m)] - lower) / s;
            }
        }
        Ok(LegendreTable {
            l_max,
            theta,
            sin_theta: s,
            p,
            dp,
        })
    }

    /// `P̄_l^{|m|}` (no sign adjustment for negative `m`).
    #[inline]
    pub fn p(&self, l: usize, m: usize) -> f64 {
        self.p[tri(l, m)]
    }

    #[inline]
    pub fn dp(&self, l: usize, m: usize) -> f64 {
        self.dp[tri(l, m)]
    }

    /// `(P̄, ∂_θ P̄)` for any sign of `m`, with the `(−1)^m` of negative orders.
    #[inline]
    fn parts(&self, l: usize, m: i64) -> (f64, f64) {
        let am = m.unsigned_abs() as usize;
        let sign = if m < 0 && am % 2 == 1 { -1.0 } else { 1.0 };
        (sign * self.p(l, am), sign * self.dp(l, am))
    }
}

/// Three complex vectors in the `(e_r, e_θ, e_φ)` frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VshTriple {
    pub y: [Complex64; 3],
    pub psi: [Complex64; 3],
    pub phi: [Complex64; 3],
}

/// `Y_l^m e_r`, `Ψ_l^m = ∇_S Y_l^m` and `Φ_l^m = ∇_S Y_l^m ∧ e_r` at `(θ, φ)`.
pub fn vsh_basis(l: usize, m: i64, theta: f64, phi: f64) -> Result<VshTriple> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::InvalidParameter(format!("|m| = {} exceeds l = {l}", m.abs())));
    }
    let t = LegendreTable::new(l, theta)?;
    let (p, dp) = t.parts(l, m);
    let e = Complex64::from_polar(1.0, m as f64 * phi);
    let y = p * e;
    let dy = dp * e;
    let imy_s = I * m as f64 * y / t.sin_theta;
    Ok(VshTriple {
        y: [y, ZERO, ZERO],
        psi: [ZERO, dy, imy_s],
        phi: [ZERO, imy_s, -dy],
    })
}

/// Spherical `(r, θ, φ)` components to Cartesian.
pub fn spherical_to_cartesian(v: [Complex64; 3], theta: f64, phi: f64) -> [Complex64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [
        v[0] * st * cp + v[1] * ct * cp - v[2] * sp,
        v[0] * st * sp + v[1] * ct * sp + v[2] * cp,
        v[0] * ct - v[1] * st,
    ]
}

/// Samples of a vector field on a [`SphereGrid`] in spherical components,
/// stored θ-major (`i * n_phi + k`).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereField {
    pub r: Vec<Complex64>,
    pub theta: Vec<Complex64>,
    pub phi: Vec<Complex64>,
}

impl SphereField {
    pub fn zeros(n: usize) -> Self {
        SphereField {
            r: vec![ZERO; n],
            theta: vec![ZERO; n],
            phi: vec![ZERO; n],
        }
    }
}

/// Coefficients against `Y e_r`, `Ψ/β` and `Φ/β` (the `l = 0` slot of the
/// tangential parts is unused).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCoeffs {
    pub l_max: usize,
    pub radial: Vec<Complex64>,
    pub psi: Vec<Complex64>,
    pub phi: Vec<Complex64>,
}

/// Divergence-free representation at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct VshCoeffs {
    pub l_max: usize,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub u00: Complex64,
}

/// Gauss–Legendre nodes in `cos θ`, uniform nodes in `φ`, and cached
/// Legendre tables for harmonics up to `l_max`.
pub struct SphereGrid {
    pub l_max: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
    tables: Vec<LegendreTable>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SphereGrid")
            .field("l_max", &self.l_max)
            .field("n_theta", &self.n_theta)
            .field("n_phi", &self.n_phi)
            .finish()
    }
}

impl SphereGrid {
    pub fn new(l_max: usize, n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < l_max + 1 || n_phi < 2 * l_max + 2 {
            return Err(Error::Resolution(format!(
                "degree {l_max} needs n_theta >= {} and n_phi >= {}, got {n_theta} x {n_phi}",
                l_max + 1,
                2 * l_max + 2
            )));
        }
        let (x, w) = gauss_legendre(n_theta);
        let theta: Vec<f64> = x.iter().map(|x| x.acos()).collect();
        let tables = theta
            .iter()
            .map(|&t| LegendreTable::new(l_max, t))
            .collect::<Result<Vec<_>>>()?;
        let mut planner = FftPlanner::new();
        Ok(SphereGrid {
            l_max,
            n_theta,
            n_phi,
            theta,
            weights: w,
            tables,
            fwd: planner.plan_fft_forward(n_phi),
            inv: planner.plan_fft_inverse(n_phi),
        })
    }

    /// Minimal grid for exact transforms of degree-`l_max` fields.
    pub fn minimal(l_max: usize) -> Result<Self> {
        Self::new(l_max, l_max + 1, 2 * l_max + 2)
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn phi(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_phi as f64
    }

    /// `(θ, φ)` of flat sample index `i * n_phi + k`.
    pub fn point(&self, n: usize) -> (f64, f64) {
        (self.theta[n / self.n_phi], self.phi(n % self.n_phi))
    }

    /// Samples `f(θ, φ)` on the grid.
    pub fn sample<F>(&self, mut f: F) -> SphereField
    where
        F: FnMut(f64, f64) -> [Complex64; 3],
    {
        let mut out = SphereField::zeros(self.len());
        for n in 0..self.len() {
            let (t, p) = self.point(n);
            let v = f(t, p);
            out.r[n] = v[0];
            out.theta[n] = v[1];
            out.phi[n] = v[2];
        }
        out
    }

    /// `(2π/n_φ) Σ_k f(θ_i, φ_k) e^{−imφ_k}` for every row; result indexed
    /// `i * n_phi + (m mod n_phi)`.
    fn phi_analysis(&self, data: &[Complex64]) -> Vec<Complex64> {
        let mut buf = data.to_vec();
        self.fwd.process(&mut buf);
        let s = 2.0 * PI / self.n_phi as f64;
        for b in buf.iter_mut() {
            *b *= s;
        }
        buf
    }

    #[inline]
    fn slot(&self, m: i64) -> usize {
        m.rem_euclid(self.n_phi as i64) as usize
    }

    /// Quadrature projections onto `Y e_r`, `Ψ/β` and `Φ/β`.
    pub fn forward(&self, f: &SphereField) -> ForwardCoeffs {
        self.forward_impl(f, false)
    }

    /// As [`forward`](Self::forward) for real-valued fields: only `m ≥ 0`
    /// is computed and `m < 0` follows from `c_{l,−m} = (−1)^m conj(c_{lm})`.
    pub fn forward_real(&self, f: &SphereField) -> ForwardCoeffs {
        self.forward_impl(f, true)
    }

    fn forward_impl(&self, f: &SphereField, real: bool) -> ForwardCoeffs {
        let l_max = self.l_max;
        let nc = n_coeffs(l_max);
        let fr = self.phi_analysis(&f.r);
        let ft = self.phi_analysis(&f.theta);
        let fp = self.phi_analysis(&f.phi);
        let mut radial = vec![ZERO; nc];
        let mut psi = vec![ZERO; nc];
        let mut phi = vec![ZERO; nc];
        let m_lo = if real { 0 } else { -(l_max as i64) };
        for (i, tab) in self.tables.iter().enumerate() {
            let w = self.weights[i];
            let row = i * self.n_phi;
            let inv_s = 1.0 / tab.sin_theta;
            for m in m_lo..=(l_max as i64) {
                let k = row + self.slot(m);
                let (ar, at, ap) = (fr[k] * w, ft[k] * w, fp[k] * w);
                let imv = I * m as f64 * inv_s;
                for l in (m.unsigned_abs() as usize)..=l_max {
                    let (p, dp) = tab.parts(l, m);
                    let j = idx(l, m);
                    radial[j] += p * ar;
                    // conj(Ψ) = (dp, −im p/s) e^{−imφ}; conj(Φ) = (−im p/s, −dp) e^{−imφ}
                    psi[j] += dp * at - imv * p * ap;
                    phi[j] += -imv * p * at - dp * ap;
                }
            }
        }
        for l in 1..=l_max {
            let b = beta(l);
            for m in -(l as i64)..=(l as i64) {
                psi[idx(l, m)] /= b;
                phi[idx(l, m)] /= b;
            }
        }
        psi[0] = ZERO;
        phi[0] = ZERO;
        if real {
            for l in 1..=l_max {
                for m in 1..=(l as i64) {
                    let s = if m % 2 == 0 { 1.0 } else { -1.0 };
                    radial[idx(l, -m)] = s * radial[idx(l, m)].conj();
                    psi[idx(l, -m)] = s * psi[idx(l, m)].conj();
                    phi[idx(l, -m)] = s * phi[idx(l, m)].conj();
                }
            }
        }
        ForwardCoeffs {
            l_max,
            radial,
            psi,
            phi,
        }
    }

    /// `Σ radial·Y e_r + psi·Ψ + phi·Φ`, the inverse of [`forward`](Self::forward)
    /// on band-limited fields.
    pub fn inverse(&self, c: &ForwardCoeffs) -> Result<SphereField> {
        if c.l_max > self.l_max {
            return Err(Error::Resolution(format!(
                "coefficients of degree {} on a degree-{} grid",
                c.l_max, self.l_max
            )));
        }
        let l_max = c.l_max;
        let n = self.len();
        let mut gr = vec![ZERO; n];
        let mut gt = vec![ZERO; n];
        let mut gp = vec![ZERO; n];
        for (i, tab) in self.tables.iter().enumerate() {
            let row = i * self.n_phi;
            let inv_s = 1.0 / tab.sin_theta;
            for m in -(l_max as i64)..=(l_max as i64) {
                let (mut sr, mut st, mut sp) = (ZERO, ZERO, ZERO);
                let imv = I * m as f64 * inv_s;
                for l in (m.unsigned_abs() as usize)..=l_max {
                    let (p, dp) = tab.parts(l, m);
                    let j = idx(l, m);
                    let (a1, a2) = (c.psi[j], c.phi[j]);
                    sr += c.radial[j] * p;
                    st += a1 * dp + a2 * imv * p;
                    sp += a1 * imv * p - a2 * dp;
                }
                let k = row + self.slot(m);
                gr[k] += sr;
                gt[k] += st;
                gp[k] += sp;
            }
        }
        for g in [&mut gr, &mut gt, &mut gp] {
            for row in g.chunks_mut(self.n_phi) {
                self.inv.process(row);
            }
        }
        Ok(SphereField {
            r: gr,
            theta: gt,
            phi: gp,
        })
    }

    /// `(u, v, u₀₀)` of a divergence-free field sampled at radius `r`:
    /// `u_lm = β⁻¹⟨D, Φ⟩`, `v_lm = (r/β)⟨D, Y e_r⟩`.
    pub fn solenoidal_coeffs(&self, f: &SphereField, r: f64) -> VshCoeffs {
        let fc = self.forward(f);
        solenoidal_from_forward(&fc, r)
    }
}

/// Converts forward coefficients at radius `r` to the `(u, v)` form.
pub fn solenoidal_from_forward(fc: &ForwardCoeffs, r: f64) -> VshCoeffs {
    let mut v = vec![ZERO; fc.radial.len()];
    for l in 1..=fc.l_max {
        for m in -(l as i64)..=(l as i64) {
            let j = idx(l, m);
            v[j] = r / beta(l) * fc.radial[j];
        }
    }
    VshCoeffs {
        l_max: fc.l_max,
        u: fc.phi.clone(),
        v,
        u00: fc.radial[0],
    }
}

/// Radial data of one `(l, m)` at a point: `u`, `v`, `∂_r v`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeValues {
    pub u: Complex64,
    pub v: Complex64,
    pub dv: Complex64,
}

/// Evaluates the representation at `(r, θ, φ)` in Cartesian components.
/// `modes` is indexed by [`idx`]. At `r = 0` the limit `v/r → ∂_r v` is used.
pub fn reconstruct(
    l_max: usize,
    modes: &[ModeValues],
    u00: Complex64,
    r: f64,
    theta: f64,
    phi: f64,
) -> Result<[Complex64; 3]> {
    let tab = LegendreTable::new(l_max, theta)?;
    Ok(spherical_to_cartesian(
        reconstruct_spherical(&tab, modes, u00, r, phi),
        theta,
        phi,
    ))
}

/// As [`reconstruct`] with a precomputed table, returning spherical components.
pub fn reconstruct_spherical(
    tab: &LegendreTable,
    modes: &[ModeValues],
    u00: Complex64,
    r: f64,
    phi: f64,
) -> [Complex64; 3] {
    let l_max = tab.l_max;
    let inv_s = 1.0 / tab.sin_theta;
    let y00 = 1.0 / (4.0 * PI).sqrt();
    let mut out = [u00 * y00, ZERO, ZERO];
    for m in -(l_max as i64)..=(l_max as i64) {
        let e = Complex64::from_polar(1.0, m as f64 * phi);
        let imv = I * m as f64 * inv_s;
        let (mut sr, mut st, mut sp) = (ZERO, ZERO, ZERO);
        for l in m.unsigned_abs().max(1) as usize..=l_max {
            let mv = modes[idx(l, m)];
            let v_over_r = if r > 0.0 { mv.v / r } else { mv.dv };
            let (p, dp) = tab.parts(l, m);
            let a1 = mv.dv + v_over_r;
            sr += beta(l) * v_over_r * p;
            st += a1 * dp + mv.u * imv * p;
            sp += a1 * imv * p - mv.u * dp;
        }
        out[0] += sr * e;
        out[1] += st * e;
        out[2] += sp * e;
    }
    out
}
