//! Incident plane waves `D = s(x, t) e_z` travelling along `+x`, and their
//! vector-spherical-harmonic coefficient streams on the sphere `r = R3`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::vsh::{beta, idx, n_coeffs, ForwardCoeffs, SphereField, SphereGrid};

/// Scalar profile `s` and its derivatives at one point and time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Profile {
    pub s: f64,
    pub dx: f64,
    pub dt: f64,
    pub dtt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Incident {
    /// `A (1 − e^{−10t}) cos(kx − ωt)`.
    Monochromatic { k: f64, omega: f64, amplitude: f64 },
    /// `A cos(k(x − t)) exp(−(x − t + t_c)²/q)`.
    Pulse { k: f64, amplitude: f64, tc: f64, q: f64 },
}

impl Incident {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Incident::Monochromatic { k, omega, amplitude } => k > 0.0 && omega > 0.0 && amplitude.is_finite(),
            Incident::Pulse { k, amplitude, tc, q } => k > 0.0 && q > 0.0 && tc.is_finite() && amplitude.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid incident wave {self:?}")))
        }
    }

    pub fn amplitude(&self) -> f64 {
        match *self {
            Incident::Monochromatic { amplitude, .. } | Incident::Pulse { amplitude, .. } => amplitude,
        }
    }

    pub fn with_amplitude(self, a: f64) -> Self {
        match self {
            Incident::Monochromatic { k, omega, .. } => Incident::Monochromatic { k, omega, amplitude: a },
            Incident::Pulse { k, tc, q, .. } => Incident::Pulse { k, amplitude: a, tc, q },
        }
    }

    pub fn wavenumber(&self) -> f64 {
        match *self {
            Incident::Monochromatic { k, .. } | Incident::Pulse { k, .. } => k,
        }
    }

    pub fn profile(&self, x: f64, t: f64) -> Profile {
        match *self {
            Incident::Monochromatic { k, omega, amplitude: a } => {
                let decay = (-10.0 * t).exp();
                let (env, env1, env2) = (1.0 - decay, 10.0 * decay, -100.0 * decay);
                let (sn, cs) = (k * x - omega * t).sin_cos();
                Profile {
                    s: a * env * cs,
                    dx: -a * env * k * sn,
                    dt: a * (env1 * cs + env * omega * sn),
                    dtt: a * (env2 * cs + 2.0 * env1 * omega * sn - env * omega * omega * cs),
                }
            }
            Incident::Pulse { k, amplitude: a, tc, q } => {
                // f(ξ) with ξ = x − t: ∂_x = f', ∂_t = −f', ∂_tt = f''
                let xi = x - t;
                let u = xi + tc;
                let g = (-u * u / q).exp();
                let g1 = -2.0 * u / q * g;
                let g2 = (4.0 * u * u / (q * q) - 2.0 / q) * g;
                let (sn, cs) = (k * xi).sin_cos();
                let f0 = cs * g;
                let f1 = -k * sn * g + cs * g1;
                let f2 = -k * k * cs * g - 2.0 * k * sn * g1 + cs * g2;
                Profile {
                    s: a * f0,
                    dx: a * f1,
                    dt: -a * f1,
                    dtt: a * f2,
                }
            }
        }
    }

    /// Cartesian field at `p`.
    pub fn field(&self, p: [f64; 3], t: f64) -> [f64; 3] {
        [0.0, 0.0, self.profile(p[0], t).s]
    }
}

/// Data of one `(l, m)` on the sphere: the `Φ` coefficient `g` and the
/// `∇×Φ` coefficient `h`, with `∂_r` and time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeData {
    pub g: Complex64,
    pub dr_g: Complex64,
    pub dt_g: Complex64,
    pub dtt_g: Complex64,
    pub h: Complex64,
    pub dr_h: Complex64,
    pub dt_h: Complex64,
    pub dtt_h: Complex64,
}

/// Transforms the incident field on `r = radius` into per-mode data.
#[derive(Debug)]
pub struct IncidentTransform {
    pub incident: Incident,
    pub radius: f64,
    grid: SphereGrid,
}

impl IncidentTransform {
    /// The grid is oversampled beyond `L` by the wave's angular bandwidth at
    /// `radius` so that modes above `L` do not alias into the kept ones.
    pub fn new(incident: Incident, radius: f64, l_max: usize) -> Result<Self> {
        incident.validate()?;
        let extra = (incident.wavenumber() * radius).ceil() as usize + 16;
        let n_theta = l_max + 1 + extra;
        let grid = SphereGrid::new(l_max, n_theta, 2 * n_theta)?;
        Ok(IncidentTransform { incident, radius, grid })
    }

    pub fn with_grid(incident: Incident, radius: f64, grid: SphereGrid) -> Result<Self> {
        incident.validate()?;
        Ok(IncidentTransform { incident, radius, grid })
    }

    pub fn l_max(&self) -> usize {
        self.grid.l_max
    }

    fn fields(&self, t: f64) -> [SphereField; 4] {
        let n = self.grid.len();
        let mut out = [SphereField::zeros(n), SphereField::zeros(n), SphereField::zeros(n), SphereField::zeros(n)];
        for i in 0..n {
            let (th, ph) = self.grid.point(i);
            let (st, ct) = th.sin_cos();
            let radial = st * ph.cos();
            let pr = self.incident.profile(self.radius * radial, t);
            // z-polarised: (D_r, D_θ, D_φ) = s (cos θ, −sin θ, 0)
            for (f, s) in out.iter_mut().zip([pr.s, pr.dx * radial, pr.dt, pr.dtt]) {
                f.r[i] = Complex64::new(s * ct, 0.0);
                f.theta[i] = Complex64::new(-s * st, 0.0);
            }
        }
        out
    }

    /// Per-mode data at time `t`, indexed by [`idx`]; the `l = 0` slot is zero.
    pub fn mode_data(&self, t: f64) -> Vec<ModeData> {
        let [d, dr, dt, dtt]: [ForwardCoeffs; 4] = self.fields(t).map(|f| self.grid.forward_real(&f));
        let r = self.radius;
        let mut out = vec![ModeData::default(); n_coeffs(self.l_max())];
        for l in 1..=self.l_max() {
            let b = beta(l);
            for m in -(l as i64)..=(l as i64) {
                let j = idx(l, m);
                out[j] = ModeData {
                    g: d.phi[j],
                    dr_g: dr.phi[j],
                    dt_g: dt.phi[j],
                    dtt_g: dtt.phi[j],
                    h: r / b * d.radial[j],
                    dr_h: d.radial[j] / b + r / b * dr.radial[j],
                    dt_h: r / b * dt.radial[j],
                    dtt_h: r / b * dtt.radial[j],
                };
            }
        }
        out
    }
}
