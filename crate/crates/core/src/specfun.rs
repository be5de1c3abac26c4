//! Modified spherical Bessel functions `k_l(z)` and the complex zeros that
//! become the poles of the boundary kernels.
//!
//! `k_l(z) = (π/2) e^{-z} Σ_{k=0}^{l} (l+k)! / (2^k k! (l-k)!) z^{-(k+1)}`, so
//! `(2/π) e^{z} z^{l+1} k_l(z)` is a monic integer polynomial of degree `l`
//! (the reverse Bessel polynomial). The combination
//! `k_l + z k_l'` equals `-(π/2) e^{-z} z^{-(l+1)} Q(z)` with the monic
//! degree-`l+1` polynomial `Q = zP + lP - zP'`. Its zeros coincide with those
//! of `½K_{l+1/2}(z) + zK'_{l+1/2}(z)`.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use num_bigint::BigInt;

use crate::dd::{horner_with_derivative, Dd};
use crate::error::{Error, Result};
use crate::exact::IntPoly;

/// Largest degree supported by the pole machinery. Coefficients of the
/// degree-`l` polynomial grow like `(2l)!/(2^l l!)` and leave the `f64`
/// range shortly after `l = 150`.
pub const MAX_DEGREE: usize = 120;

/// Residual bound certified for every returned pole.
pub const RESIDUAL_TOL: f64 = 1e-12;

const NEWTON_MAX_ITERS: usize = 50;
const ABERTH_MAX_ITERS: usize = 500;

/// Which Bessel combination a pole set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoleKind {
    /// Zeros of `K_{l+1/2}(z)`.
    K,
    /// Zeros of `½K_{l+1/2}(z) + zK'_{l+1/2}(z)`.
    Combined,
}

impl PoleKind {
    pub fn label(self) -> &'static str {
        match self {
            PoleKind::K => "k",
            PoleKind::Combined => "combined",
        }
    }
}

/// Numerator polynomial of `k_l` (kind `K`) or of `k_l + z k_l'` (kind `Combined`).
#[derive(Debug, Clone)]
pub struct BesselPoly {
    pub l: usize,
    pub kind: PoleKind,
    coeffs_dd: Vec<Dd>,
    exact: IntPoly,
}

impl BesselPoly {
    pub fn new(l: usize, kind: PoleKind) -> Result<Self> {
        if l > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "degree l = {l} exceeds supported maximum {MAX_DEGREE}"
            )));
        }
        let p = reverse_bessel_coeffs(l);
        let pi = reverse_bessel_int_coeffs(l);
        let exact = IntPoly::new(match kind {
            PoleKind::K => pi,
            PoleKind::Combined => (0..=l + 1)
                .map(|j| {
                    let prev = if j == 0 { BigInt::from(0) } else { pi[j - 1].clone() };
                    let cur = if j <= l {
                        &pi[j] * BigInt::from(l as i64 - j as i64)
                    } else {
                        BigInt::from(0)
                    };
                    prev + cur
                })
                .collect(),
        });
        let coeffs_dd = match kind {
            PoleKind::K => p,
            PoleKind::Combined => {
                // Q_j = P_{j-1} + (l - j) P_j
                (0..=l + 1)
                    .map(|j| {
                        let prev = if j == 0 { Dd::ZERO } else { p[j - 1] };
                        let cur = if j <= l {
                            p[j].mul_f64(l as f64 - j as f64)
                        } else {
                            Dd::ZERO
                        };
                        prev + cur
                    })
                    .collect()
            }
        };
        Ok(BesselPoly {
            l,
            kind,
            coeffs_dd,
            exact,
        })
    }

    pub fn degree(&self) -> usize {
        self.coeffs_dd.len() - 1
    }

    /// Ascending coefficients rounded to `f64`.
    pub fn coeffs(&self) -> Vec<f64> {
        self.coeffs_dd.iter().map(|c| c.to_f64()).collect()
    }

    /// Exact integer coefficients, ascending.
    pub fn int_coeffs(&self) -> &[BigInt] {
        self.exact.coeffs()
    }

    /// Value and derivative, accumulated in double-double.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        horner_with_derivative(&self.coeffs_dd, z)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.eval_with_derivative(z).0
    }

    /// Value and derivative computed exactly and rounded once.
    pub fn eval_exact(&self, z: Complex64) -> (Complex64, Complex64) {
        self.exact.eval_with_derivative(z)
    }

    /// `|P(z)| / |P'(z) z|`, the relative Newton step at `z`, from exact values.
    pub fn relative_residual(&self, z: Complex64) -> f64 {
        let (p, dp) = self.eval_exact(z);
        p.norm() / (dp * z).norm()
    }
}

/// Coefficients `c_k = (l+k)!/(2^k k!(l-k)!)` by the overflow-free recurrence
/// `c_{k+1} = c_k (l+k+1)(l-k) / (2(k+1))`.
fn kl_series_coeffs(l: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(l + 1);
    let mut ck = 1.0f64;
    c.push(ck);
    for k in 0..l {
        ck *= ((l + k + 1) * (l - k)) as f64 / (2 * (k + 1)) as f64;
        c.push(ck);
    }
    c
}

fn reverse_bessel_int_coeffs(l: usize) -> Vec<BigInt> {
    let mut series = Vec::with_capacity(l + 1);
    let mut ck = BigInt::from(1);
    series.push(ck.clone());
    for k in 0..l {
        ck = ck * BigInt::from((l + k + 1) * (l - k)) / BigInt::from(2 * (k + 1));
        series.push(ck.clone());
    }
    series.into_iter().rev().collect()
}

/// Ascending double-double coefficients of the monic degree-`l` polynomial
/// `P(z) = Σ_k c_k z^{l-k}`.
fn reverse_bessel_coeffs(l: usize) -> Vec<Dd> {
    let mut series = Vec::with_capacity(l + 1);
    let mut ck = Dd::ONE;
    series.push(ck);
    for k in 0..l {
        ck = ck
            .mul_f64(((l + k + 1) * (l - k)) as f64)
            .div_f64((2 * (k + 1)) as f64);
        series.push(ck);
    }
    // coefficient of z^j is c_{l-j}
    series.into_iter().rev().collect()
}

fn check_arg(z: Complex64) -> Result<()> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("k_l(z) is singular at z = 0".into()));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if z.re < -700.0 {
        return Err(Error::Overflow(format!(
            "e^(-z) overflows for Re(z) = {} < -700",
            z.re
        )));
    }
    Ok(())
}

/// Modified spherical Bessel function of the second kind, `k_l(z)`.
pub fn eval_kl(l: usize, z: Complex64) -> Result<Complex64> {
    check_arg(z)?;
    let c = kl_series_coeffs(l);
    let x = z.inv();
    let mut s = Complex64::new(0.0, 0.0);
    for ck in c.iter().rev() {
        s = (s + ck) * x;
    }
    Ok(FRAC_PI_2 * (-z).exp() * s)
}

/// Derivative `k_l'(z)`.
pub fn eval_kl_deriv(l: usize, z: Complex64) -> Result<Complex64> {
    check_arg(z)?;
    let c = kl_series_coeffs(l);
    let x = z.inv();
    // d/dz [e^{-z} z^{-(k+1)}] = -e^{-z} (z^{-(k+1)} + (k+1) z^{-(k+2)})
    let mut s = Complex64::new(0.0, 0.0);
    for (k, ck) in c.iter().enumerate() {
        let xk1 = x.powu(k as u32 + 1);
        s += ck * (xk1 + (k as f64 + 1.0) * xk1 * x);
    }
    Ok(-FRAC_PI_2 * (-z).exp() * s)
}

/// The complex zeros of one Bessel combination at degree `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    pub l: usize,
    pub kind: PoleKind,
    /// Sorted lexicographically by `(Re, Im)`; conjugate-closed.
    pub poles: Vec<Complex64>,
    /// `|P(z_j)| / |P'(z_j) z_j|` for each pole.
    pub residuals: Vec<f64>,
}

impl PoleSet {
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }
}

type PoleCache = Mutex<HashMap<(usize, PoleKind), Arc<PoleSet>>>;

fn cache() -> &'static PoleCache {
    static CACHE: OnceLock<PoleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The `l` zeros of `K_{l+1/2}`.
pub fn k_zeros(l: usize) -> Result<Arc<PoleSet>> {
    cached_zeros(l, PoleKind::K)
}

/// The `l + 1` zeros of `½K_{l+1/2}(z) + zK'_{l+1/2}(z)`.
pub fn combined_zeros(l: usize) -> Result<Arc<PoleSet>> {
    cached_zeros(l, PoleKind::Combined)
}

pub fn zeros(l: usize, kind: PoleKind) -> Result<Arc<PoleSet>> {
    cached_zeros(l, kind)
}

fn cached_zeros(l: usize, kind: PoleKind) -> Result<Arc<PoleSet>> {
    if l == 0 {
        return Err(Error::InvalidParameter(format!(
            "{} zeros require l >= 1",
            kind.label()
        )));
    }
    if let Some(hit) = cache().lock().unwrap().get(&(l, kind)) {
        return Ok(Arc::clone(hit));
    }
    let set = Arc::new(compute_zeros(l, kind)?);
    cache()
        .lock()
        .unwrap()
        .entry((l, kind))
        .or_insert_with(|| Arc::clone(&set));
    Ok(set)
}

fn compute_zeros(l: usize, kind: PoleKind) -> Result<PoleSet> {
    let poly = BesselPoly::new(l, kind)?;
    let deg = poly.degree();
    let coeffs = poly.coeffs();

    // Scale z = s w so the roots sit near the unit circle: the constant term
    // of a monic polynomial is ± the product of its roots.
    let scale = coeffs[0].abs().powf(1.0 / deg as f64);
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for j in 0..deg {
        companion[(j, deg - 1)] = -coeffs[j] * scale.powi(j as i32 - deg as i32);
    }
    let guesses: Vec<Complex64> = companion
        .complex_eigenvalues()
        .iter()
        .map(|w| w * scale)
        .collect();

    let mut roots = Vec::with_capacity(deg);
    for z0 in aberth(&poly, guesses) {
        roots.push(polish(&poly, z0)?);
    }

    let roots = symmetrize(&poly, roots)?;
    let residuals: Vec<f64> = roots.iter().map(|z| poly.relative_residual(*z)).collect();
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if worst > RESIDUAL_TOL || roots.len() != deg {
        return Err(Error::NoConvergence {
            l,
            kind,
            residual: worst,
        });
    }
    for z in &roots {
        if z.re >= 0.0 {
            return Err(Error::ModelViolation(format!(
                "{} zero {z} at l = {l} is not in the left half-plane",
                kind.label()
            )));
        }
    }
    Ok(PoleSet {
        l,
        kind,
        poles: roots,
        residuals,
    })
}

/// Aberth–Ehrlich simultaneous iteration in double-double. The companion
/// eigenvalues are poor for large `l` (the coefficients span many decades);
/// plain Newton from them can send two starts to the same root, while the
/// Aberth correction repels the iterates from one another.
fn aberth(poly: &BesselPoly, mut z: Vec<Complex64>) -> Vec<Complex64> {
    let n = z.len();
    let mut done = vec![false; n];
    for _ in 0..ABERTH_MAX_ITERS {
        let mut moved = false;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let (p, dp) = poly.eval_with_derivative(z[k]);
            if p == Complex64::new(0.0, 0.0) {
                done[k] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let w = ratio / (1.0 - ratio * repulsion);
            z[k] -= w;
            if w.norm() <= 1e-11 * z[k].norm() {
                done[k] = true;
            } else {
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    z
}

/// Newton with exact evaluation to land on the correctly rounded root.
fn polish(poly: &BesselPoly, mut z: Complex64) -> Result<Complex64> {
    for _ in 0..NEWTON_MAX_ITERS {
        let (p, dp) = poly.eval_exact(z);
        let step = p / dp;
        z -= step;
        if step.norm() <= 2.0 * f64::EPSILON * z.norm() {
            break;
        }
    }
    let residual = poly.relative_residual(z);
    if residual <= RESIDUAL_TOL {
        Ok(z)
    } else {
        Err(Error::NoConvergence {
            l: poly.l,
            kind: poly.kind,
            residual,
        })
    }
}

/// Pairs roots into exact conjugates and sorts by `(Re, Im)`.
fn symmetrize(poly: &BesselPoly, roots: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let deg = roots.len();
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for z in roots {
        if z.im.abs() <= 1e-10 * z.norm() {
            real.push(polish_real(poly, z.re));
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    if upper.len() != lower.len() {
        return Err(Error::NoConvergence {
            l: poly.l,
            kind: poly.kind,
            residual: f64::INFINITY,
        });
    }
    // Each upper root must have a distinct partner in the lower half-plane.
    let mut taken = vec![false; lower.len()];
    for z in &upper {
        let (idx, dist) = lower
            .iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .map(|(i, w)| (i, (w - z.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty lower set");
        if dist > 1e-6 * z.norm() {
            return Err(Error::NoConvergence {
                l: poly.l,
                kind: poly.kind,
                residual: dist / z.norm(),
            });
        }
        taken[idx] = true;
    }
    let mut out: Vec<Complex64> = real.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    for z in upper {
        out.push(z);
        out.push(z.conj());
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    for w in out.windows(2) {
        if (w[0] - w[1]).norm() <= 1e-8 * w[0].norm() {
            return Err(Error::NoConvergence {
                l: poly.l,
                kind: poly.kind,
                residual: f64::INFINITY,
            });
        }
    }
    debug_assert_eq!(out.len(), deg);
    Ok(out)
}

fn polish_real(poly: &BesselPoly, mut x: f64) -> f64 {
    for _ in 0..4 {
        let (p, dp) = poly.eval_exact(Complex64::new(x, 0.0));
        let step = p.re / dp.re;
        x -= step;
        if step.abs() <= 2.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::Dd;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent oracle: the finite sum with factorials formed directly in
    /// double-double and complex arithmetic carried in double-double.
    fn kl_oracle(l: usize, z: Complex64) -> Complex64 {
        use crate::dd::CDd;
        let fact = |n: usize| (1..=n).fold(Dd::ONE, |acc, k| acc.mul_f64(k as f64));
        let x = {
            let d = z.norm_sqr();
            c(z.re / d, -z.im / d)
        };
        let xd = CDd::from_c64(x);
        let mut pow = xd;
        let mut sum = CDd::ZERO;
        for k in 0..=l {
            let mut coeff = fact(l + k);
            // divide by 2^k k! (l-k)!
            coeff = coeff.div_f64(2f64.powi(k as i32));
            for d in 1..=k {
                coeff = coeff.div_f64(d as f64);
            }
            for d in 1..=(l - k) {
                coeff = coeff.div_f64(d as f64);
            }
            sum = sum + CDd::real(coeff) * pow;
            pow = pow * xd;
        }
        FRAC_PI_2 * (-z).exp() * sum.to_c64()
    }

    #[test]
    fn k0_closed_form() {
        let v = eval_kl(0, c(1.0, 0.0)).unwrap();
        assert!((v.re - 0.5778636748954609).abs() < 1e-15);
        assert_eq!(v.im, 0.0);
        assert!((v.re - PI / 2.0 * (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn k1_is_twice_k0_at_one() {
        let k0 = eval_kl(0, c(1.0, 0.0)).unwrap();
        let k1 = eval_kl(1, c(1.0, 0.0)).unwrap();
        assert!((k1 - 2.0 * k0).norm() < 1e-15);
    }

    #[test]
    fn k10_matches_extended_precision_sum() {
        let z = c(2.5, 1.0);
        let v = eval_kl(10, z).unwrap();
        let o = kl_oracle(10, z);
        assert!((v - o).norm() / o.norm() < 1e-12, "{v} vs {o}");
    }

    #[test]
    fn polynomial_matches_series_over_range() {
        for l in [1usize, 7, 20, 50] {
            for &r in &[0.5, 3.0, 17.0, 50.0] {
                for &arg in &[-1.2, 0.3, 1.2] {
                    let z = Complex64::from_polar(r, arg);
                    let poly = BesselPoly::new(l, PoleKind::K).unwrap();
                    let via_poly =
                        FRAC_PI_2 * (-z).exp() * poly.eval(z) / z.powu(l as u32 + 1);
                    let o = kl_oracle(l, z);
                    assert!((via_poly - o).norm() / o.norm() < 1e-13, "l={l} z={z}");
                }
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let z = c(1.7, -0.4);
        let h = 1e-6;
        for l in [0usize, 3, 9] {
            let fd = (eval_kl(l, z + h).unwrap() - eval_kl(l, z - h).unwrap()) / (2.0 * h);
            let d = eval_kl_deriv(l, z).unwrap();
            assert!((fd - d).norm() / d.norm() < 1e-8);
        }
    }

    #[test]
    fn zero_argument_is_a_domain_error() {
        assert!(matches!(eval_kl(3, c(0.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(eval_kl(3, c(-800.0, 1.0)), Err(Error::Overflow(_))));
    }

    #[test]
    fn small_degree_polynomials() {
        assert_eq!(BesselPoly::new(2, PoleKind::K).unwrap().coeffs(), vec![3.0, 3.0, 1.0]);
        assert_eq!(
            BesselPoly::new(1, PoleKind::Combined).unwrap().coeffs(),
            vec![1.0, 1.0, 1.0]
        );
        // l = 0: the combined numerator is just z
        assert_eq!(
            BesselPoly::new(0, PoleKind::Combined).unwrap().coeffs(),
            vec![0.0, 1.0]
        );
    }

    #[test]
    fn k_zeros_l1_and_l2() {
        let z1 = k_zeros(1).unwrap();
        assert_eq!(z1.poles, vec![c(-1.0, 0.0)]);
        let z2 = k_zeros(2).unwrap();
        let s3 = 3f64.sqrt();
        assert!((z2.poles[0] - c(-1.5, -s3 / 2.0)).norm() < 1e-15);
        assert!((z2.poles[1] - c(-1.5, s3 / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn combined_zeros_l1() {
        let z = combined_zeros(1).unwrap();
        let s3 = 3f64.sqrt();
        assert_eq!(z.len(), 2);
        assert!((z.poles[0] - c(-0.5, -s3 / 2.0)).norm() < 1e-15);
        assert!((z.poles[1] - c(-0.5, s3 / 2.0)).norm() < 1e-15);
        assert!(z.poles.iter().all(|p| p.re == -0.5 || (p.re + 0.5).abs() < 1e-15));
    }

    #[test]
    fn combined_zeros_l5_against_direct_bessel_evaluation() {
        let set = combined_zeros(5).unwrap();
        assert_eq!(set.len(), 6);
        for z in &set.poles {
            // ½K + zK' ∝ k_l + z k_l'; normalise by the size of the two terms.
            let k = eval_kl(5, *z).unwrap();
            let dk = eval_kl_deriv(5, *z).unwrap();
            let f = k + z * dk;
            let scale = k.norm() + (z * dk).norm();
            assert!(f.norm() / scale < 1e-12, "{z}: {}", f.norm() / scale);
        }
    }

    #[test]
    fn l40_eye_shape_bounds() {
        let set = k_zeros(40).unwrap();
        assert_eq!(set.len(), 40);
        let max_im = set.poles.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let min_re = set.poles.iter().map(|z| z.re).fold(0.0, f64::min);
        assert!(max_im < 41.0, "max |Im| = {max_im}");
        assert!(min_re > -27.2, "min Re = {min_re}");
        assert!(set.poles.iter().all(|z| z.re < 0.0));
    }

    #[test]
    fn l_zero_rejected() {
        assert!(k_zeros(0).is_err());
        assert!(combined_zeros(0).is_err());
    }

    #[test]
    fn families_are_disjoint() {
        for l in 1..=50 {
            let kz = k_zeros(l).unwrap();
            let cz = combined_zeros(l).unwrap();
            for z in &kz.poles {
                let nearest = cz.poles.iter().map(|w| (w - z).norm()).fold(f64::MAX, f64::min);
                assert!(nearest > 1e-3, "l={l} z={z}");
            }
        }
    }

    #[test]
    fn residuals_certified_through_l50() {
        for l in 1..=50 {
            for kind in [PoleKind::K, PoleKind::Combined] {
                let set = zeros(l, kind).unwrap();
                assert_eq!(set.len(), if kind == PoleKind::K { l } else { l + 1 });
                assert!(set.max_residual() <= RESIDUAL_TOL, "l={l} {kind:?}");
            }
        }
    }

    #[test]
    fn integer_and_double_double_coefficients_agree() {
        use num_traits::ToPrimitive;
        for l in [3usize, 25, 60] {
            for kind in [PoleKind::K, PoleKind::Combined] {
                let p = BesselPoly::new(l, kind).unwrap();
                for (a, b) in p.int_coeffs().iter().zip(p.coeffs()) {
                    let a = a.to_f64().unwrap();
                    assert!((a - b).abs() <= 1e-15 * a.abs());
                }
            }
        }
    }

    #[test]
    fn deterministic_ordering() {
        let a = compute_zeros(17, PoleKind::Combined).unwrap();
        let b = compute_zeros(17, PoleKind::Combined).unwrap();
        assert_eq!(a, b);
        for w in a.poles.windows(2) {
            assert!(w[0].re < w[1].re || (w[0].re == w[1].re && w[0].im < w[1].im));
        }
    }
}
