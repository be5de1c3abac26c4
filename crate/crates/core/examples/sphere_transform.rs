//! Expands a plane wave sampled on a sphere in vector spherical harmonics
//! and rebuilds it from the divergence-free coefficients.

use num_complex::Complex64;
use tdnrbc::vsh::{idx, n_coeffs, reconstruct, solenoidal_from_forward, spherical_to_cartesian, ModeValues, SphereGrid};

/// `D = cos(k r sinθ cosφ) e_z` and its radial derivative, in spherical components.
fn wave(k: f64, r: f64, th: f64, ph: f64) -> ([Complex64; 3], [Complex64; 3]) {
    let x = r * th.sin() * ph.cos();
    let s = (k * x).cos();
    let ds = -k * (k * x).sin() * th.sin() * ph.cos();
    let ez = [th.cos(), -th.sin(), 0.0];
    let f = |a: f64| ez.map(|e| Complex64::new(a * e, 0.0));
    (f(s), f(ds))
}

fn main() -> tdnrbc::Result<()> {
    let (l_max, r, k) = (24, 0.95, 8.0);
    let grid = SphereGrid::new(l_max, 2 * l_max + 2, 4 * l_max + 4)?;
    let f = grid.sample(|th, ph| wave(k, r, th, ph).0);
    let fr = grid.sample(|th, ph| wave(k, r, th, ph).1);
    let c = solenoidal_from_forward(&grid.forward(&f), r);
    let cr = solenoidal_from_forward(&grid.forward(&fr), r);
    let modes: Vec<ModeValues> = (0..n_coeffs(l_max))
        .map(|j| ModeValues { u: c.u[j], v: c.v[j], dv: c.v[j] / r + cr.v[j] })
        .collect();
    // the field is odd under θ → π − θ and even under φ → φ + π, so only odd l appear
    for l in [1, 3, 5, 9, 15, 23] {
        let energy: f64 = (-(l as i64)..=l as i64).map(|m| c.v[idx(l, m)].norm_sqr()).sum();
        println!("l = {l:>2}: Σ_m |v_lm|² = {energy:.3e}");
    }
    let mut worst: f64 = 0.0;
    for (th, ph) in [(0.3, 0.2), (1.2, 2.5), (2.0, 4.0), (2.8, 5.9)] {
        let got = reconstruct(l_max, &modes, c.u00, r, th, ph)?;
        let want = spherical_to_cartesian(wave(k, r, th, ph).0, th, ph);
        for d in 0..3 {
            worst = worst.max((got[d] - want[d]).norm());
        }
    }
    println!("max reconstruction error at sample points: {worst:.2e}");
    Ok(())
}
