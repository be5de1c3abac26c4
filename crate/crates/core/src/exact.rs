//! Exact evaluation of integer polynomials at `f64` points.
//!
//! Every finite `f64` is a dyadic rational, so `P(z)` for integer
//! coefficients can be computed without rounding and only the final result is
//! rounded. This removes the cancellation that limits any fixed-precision
//! Horner scheme when the terms are many orders larger than the sum.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

/// `x = m · 2^e` with integer `m`.
fn dyadic(x: f64) -> (BigInt, i64) {
    if x == 0.0 {
        return (BigInt::zero(), 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    (BigInt::from(sign) * BigInt::from(mant), e)
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Rounds `n · 2^(-shift)` to `f64`.
fn scaled_to_f64(n: &BigInt, shift: i64) -> f64 {
    let bits = n.bits() as i64;
    if bits <= 64 {
        return ldexp(n.to_f64().unwrap_or(0.0), -shift);
    }
    let drop = bits - 64;
    let top: BigInt = n >> (drop as usize);
    ldexp(top.to_f64().unwrap_or(0.0), drop - shift)
}

/// Integer coefficients, ascending.
#[derive(Debug, Clone)]
pub(crate) struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(coeffs: Vec<BigInt>) -> Self {
        assert!(!coeffs.is_empty());
        IntPoly { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    /// `P(z)` and `P'(z)`, each exact before the final rounding.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let (mut x, ex) = dyadic(z.re);
        let (mut y, ey) = dyadic(z.im);
        let mut e = if z.re == 0.0 {
            ey
        } else if z.im == 0.0 {
            ex
        } else {
            ex.min(ey)
        };
        if z.re != 0.0 {
            x <<= (ex - e) as usize;
        }
        if z.im != 0.0 {
            y <<= (ey - e) as usize;
        }
        if e > 0 {
            x <<= e as usize;
            y <<= e as usize;
            e = 0;
        }
        let s = (-e) as usize;
        let d = self.coeffs.len() - 1;

        // Homogenised Horner: acc ends as 2^{s d} P(z).
        let mut pr = self.coeffs[d].clone();
        let mut pi = BigInt::zero();
        // derivative accumulator ends as 2^{s (d-1)} P'(z)
        let mut dr = BigInt::zero();
        let mut di = BigInt::zero();
        for j in (0..d).rev() {
            // derivative coefficient (j+1) c_{j+1} at power j, scale 2^{s(d-1-j)}
            let c = &self.coeffs[j + 1] * BigInt::from(j + 1);
            let (nr, ni) = (&dr * &x - &di * &y, &dr * &y + &di * &x);
            dr = nr + (c << (s * (d - 1 - j)));
            di = ni;
            let (nr, ni) = (&pr * &x - &pi * &y, &pr * &y + &pi * &x);
            pr = nr + (&self.coeffs[j] << (s * (d - j)));
            pi = ni;
        }
        let sd = (s * d) as i64;
        let p = Complex64::new(scaled_to_f64(&pr, sd), scaled_to_f64(&pi, sd));
        let dp = if d == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            let sd1 = (s * (d - 1)) as i64;
            Complex64::new(scaled_to_f64(&dr, sd1), scaled_to_f64(&di, sd1))
        };
        (p, dp)
    }
}
