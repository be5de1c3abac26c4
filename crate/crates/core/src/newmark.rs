//! Newmark time stepping of the semi-discrete mode system
//! `M V̈ + B V̇ + C V + G − (c/b) B (σ ∗ V) = F`.
//!
//! The boundary convolution is discretised by the trapezoidal rule on the
//! kernel's exponential modes, which puts its `V^{n+1}` part on the left-hand
//! side. The Drude memory `G^{n+1}` uses data at `t_n` only, so the system
//! matrix is constant and factorised once.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{BandCholesky, SymBand};
use crate::sem1d::{DrudeLayer, Mesh1D, ModeSystem};
use crate::vsh::beta;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewmarkParams {
    pub gamma: f64,
    pub beta: f64,
    pub dt: f64,
}

impl Default for NewmarkParams {
    fn default() -> Self {
        NewmarkParams {
            gamma: 0.5,
            beta: 0.25,
            dt: 1e-3,
        }
    }
}

impl NewmarkParams {
    /// Accepts only the unconditionally stable range
    /// `γ ≥ 1/2`, `β ≥ (1/2 + γ)²/4`.
    pub fn validate(&self) -> Result<()> {
        let NewmarkParams { gamma, beta, dt } = *self;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if !(gamma >= 0.5 && beta >= 0.25 * (0.5 + gamma).powi(2) - 1e-15) {
            return Err(Error::InvalidParameter(format!(
                "Newmark parameters γ = {gamma}, β = {beta} are not unconditionally stable"
            )));
        }
        Ok(())
    }
}

/// Boundary row: `B = damping · e_i e_iᵀ` and the exponential-sum kernel
/// entering as `−(c/b) B (σ ∗ V_i)`.
#[derive(Debug, Clone)]
pub struct BoundaryRow {
    pub index: usize,
    pub damping: f64,
    /// `c/b`.
    pub coupling: f64,
    pub poles: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

/// Drude memory term `scale ∫ (ϑ ∗ v) φ_i`.
#[derive(Debug, Clone)]
pub struct DrudeTerm {
    pub mesh: Arc<Mesh1D>,
    pub layer: Arc<DrudeLayer>,
    pub scale: f64,
}

/// Factorised stepping operator of one mode system, shared by every right-hand side.
#[derive(Debug, Clone)]
pub struct ModeIntegrator {
    params: NewmarkParams,
    mass: SymBand,
    c_matrix: SymBand,
    mass_factor: BandCholesky,
    system_factor: BandCholesky,
    boundary: Option<BoundaryRow>,
    // e^{p_j Δt}, α₂^j = w_j e^{p_j Δt}, α₁ = Σ w_j, α₂ = Σ α₂^j
    step_factors: Vec<Complex64>,
    alpha2j: Vec<Complex64>,
    alpha2: Complex64,
    drude: Option<DrudeTerm>,
    drude_lambda: Vec<[Complex64; 2]>,
    // unknown held at zero
    pinned: Option<usize>,
}

/// State `(V, V̇, V̈)` at `t_n` with the convolution memories.
#[derive(Debug, Clone)]
pub struct ModeState {
    pub v: Vec<Complex64>,
    pub vdot: Vec<Complex64>,
    pub vddot: Vec<Complex64>,
    /// `V_j = ∫₀ᵗ e^{p_j(t−τ)} V_boundary(τ) dτ`.
    pub boundary_acc: Vec<Complex64>,
    /// Per Drude node, accumulators of the two exponential modes.
    pub drude_acc: Vec<[Complex64; 2]>,
    /// Solution sampled at the Drude nodes.
    pub drude_samples: Vec<Complex64>,
    pub steps: u64,
    rhs: Vec<Complex64>,
    predictor: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl ModeState {
    pub fn time(&self, dt: f64) -> f64 {
        self.steps as f64 * dt
    }

    pub fn norm(&self) -> f64 {
        self.v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl ModeIntegrator {
    /// Integrator for a mode system, with the Drude layer of one medium if the
    /// geometry has a cloak.
    pub fn new(sys: &ModeSystem, params: NewmarkParams, drude: Option<Arc<DrudeLayer>>) -> Result<Self> {
        let g = sys.geometry;
        if g.cloak.is_some() != drude.is_some() {
            return Err(Error::InvalidParameter(
                "a Drude layer is required exactly when the geometry has a cloak".into(),
            ));
        }
        let boundary = BoundaryRow {
            index: sys.boundary,
            damping: sys.boundary_damping,
            coupling: g.c / g.b,
            poles: sys.sigma.rate_poles.clone(),
            weights: sys.sigma.weights.clone(),
        };
        let drude = drude.map(|layer| DrudeTerm {
            mesh: sys.mesh.clone(),
            layer,
            scale: beta(sys.l) * g.c * g.c,
        });
        let (mut mass, mut c_matrix) = (sys.mass.clone(), sys.c_matrix.clone());
        // every l ≥ 1 coefficient vanishes at the origin
        let pinned = (sys.mesh.node(0) == 0.0).then_some(0);
        if let Some(i) = pinned {
            mass.pin(i, 1.0);
            c_matrix.pin(i, 0.0);
        }
        let mut int = Self::from_matrices(mass, c_matrix, Some(boundary), drude, params)?;
        int.pinned = pinned;
        Ok(int)
    }

    pub fn from_matrices(
        mass: SymBand,
        c_matrix: SymBand,
        boundary: Option<BoundaryRow>,
        drude: Option<DrudeTerm>,
        params: NewmarkParams,
    ) -> Result<Self> {
        params.validate()?;
        let NewmarkParams { gamma, beta, dt } = params;
        let mut system = mass.plus_scaled(beta * dt * dt, &c_matrix);
        let (mut step_factors, mut alpha2j) = (Vec::new(), Vec::new());
        let mut alpha2 = ZERO;
        if let Some(bd) = &boundary {
            let alpha1: Complex64 = bd.weights.iter().sum();
            step_factors = bd.poles.iter().map(|p| (p * dt).exp()).collect();
            alpha2j = bd.weights.iter().zip(&step_factors).map(|(w, e)| w * e).collect();
            alpha2 = alpha2j.iter().sum();
            // the kernel is conjugate-closed, so α₁ is real
            let diag = bd.damping * (gamma * dt - 0.5 * bd.coupling * alpha1.re * beta * dt * dt * dt);
            system.add(bd.index, bd.index, diag);
        }
        let drude_lambda = drude.as_ref().map_or(Vec::new(), |d| d.layer.step_factors(dt));
        Ok(ModeIntegrator {
            params,
            mass_factor: BandCholesky::factor(&mass)?,
            system_factor: BandCholesky::factor(&system)?,
            mass,
            c_matrix,
            boundary,
            step_factors,
            alpha2j,
            alpha2,
            drude,
            drude_lambda,
            pinned: None,
        })
    }

    pub fn params(&self) -> NewmarkParams {
        self.params
    }

    pub fn n_dofs(&self) -> usize {
        self.mass.dim()
    }

    /// State at `t = 0` with `V̈⁰` from the equation itself: `M V̈⁰ = F⁰ − B V̇⁰ − C V⁰`.
    pub fn init_state(&self, v0: Vec<Complex64>, vdot0: Vec<Complex64>, f0: &[Complex64]) -> ModeState {
        let n = self.n_dofs();
        assert!(v0.len() == n && vdot0.len() == n && f0.len() == n);
        let mut vddot = self.c_matrix.mul(&v0);
        for (a, f) in vddot.iter_mut().zip(f0) {
            *a = f - *a;
        }
        if let Some(bd) = &self.boundary {
            vddot[bd.index] -= bd.damping * vdot0[bd.index];
        }
        if let Some(p) = self.pinned {
            vddot[p] = ZERO;
        }
        self.mass_factor.solve_in_place(&mut vddot);
        let nodes = self.drude.as_ref().map_or(0, |d| d.layer.len());
        let mut drude_samples = vec![ZERO; nodes];
        if let Some(d) = &self.drude {
            d.layer.sample(&d.mesh, &v0, &mut drude_samples);
        }
        ModeState {
            v: v0,
            vdot: vdot0,
            vddot,
            boundary_acc: vec![ZERO; self.step_factors.len()],
            drude_acc: vec![[ZERO; 2]; nodes],
            drude_samples,
            steps: 0,
            rhs: vec![ZERO; n],
            predictor: vec![ZERO; n],
            scratch: vec![ZERO; n],
        }
    }

    pub fn zero_state(&self) -> ModeState {
        let n = self.n_dofs();
        self.init_state(vec![ZERO; n], vec![ZERO; n], &vec![ZERO; n])
    }

    /// Drude load `G^{n+1}` from the state at `t_n`.
    pub fn drude_load(&self, st: &ModeState) -> Vec<Complex64> {
        let mut g = vec![ZERO; self.n_dofs()];
        if let Some(d) = &self.drude {
            d.layer.load_into(&d.mesh, d.scale, &st.drude_samples, &st.drude_acc, &self.drude_lambda, self.params.dt, &mut g);
        }
        g
    }

    /// `(σ ∗ V_boundary)(t_n)` from the state's accumulators.
    pub fn boundary_convolution(&self, st: &ModeState) -> Complex64 {
        self.boundary.as_ref().map_or(ZERO, |bd| {
            bd.weights.iter().zip(&st.boundary_acc).map(|(w, f)| w * f).sum()
        })
    }

    /// Advances `st` from `t_n` to `t_{n+1}` given the load `F^{n+1}`
    /// (without the Drude term, which is formed here).
    pub fn step(&self, st: &mut ModeState, f_next: &[Complex64]) {
        let NewmarkParams { gamma, beta, dt } = self.params;
        let n = self.n_dofs();
        let bdt2 = beta * dt * dt;

        // right-hand side βΔt² (F − G − W) + (M + γΔt B) Ṽ
        let rhs = &mut st.rhs;
        rhs.copy_from_slice(f_next);
        if let Some(d) = &self.drude {
            d.layer.load_into(&d.mesh, -d.scale, &st.drude_samples, &st.drude_acc, &self.drude_lambda, dt, rhs);
        }
        for i in 0..n {
            st.predictor[i] = st.v[i] + dt * st.vdot[i] + dt * dt * (0.5 - beta) * st.vddot[i];
            rhs[i] *= bdt2;
        }
        self.mass.mul_into(&st.predictor, &mut st.scratch);
        for i in 0..n {
            rhs[i] += st.scratch[i];
        }
        let mut boundary_old = ZERO;
        if let Some(bd) = &self.boundary {
            let k = bd.index;
            boundary_old = st.v[k];
            let hist: Complex64 = self.alpha2j.iter().zip(&st.boundary_acc).map(|(a, f)| a * f).sum();
            let w = bd.damping
                * ((1.0 - gamma) * dt * st.vddot[k] + st.vdot[k]
                    - 0.5 * self.alpha2 * bd.coupling * dt * st.v[k]
                    - bd.coupling * hist);
            rhs[k] += -bdt2 * w + gamma * dt * bd.damping * st.predictor[k];
        }
        if let Some(p) = self.pinned {
            rhs[p] = ZERO;
        }
        self.system_factor.solve_in_place(rhs);

        for i in 0..n {
            let vdd = (rhs[i] - st.predictor[i]) / bdt2;
            st.vdot[i] += dt * ((1.0 - gamma) * st.vddot[i] + gamma * vdd);
            st.vddot[i] = vdd;
            st.v[i] = rhs[i];
        }
        if let Some(bd) = &self.boundary {
            let new = st.v[bd.index];
            for (f, e) in st.boundary_acc.iter_mut().zip(&self.step_factors) {
                *f = e * *f + 0.5 * dt * (new + e * boundary_old);
            }
        }
        if let Some(d) = &self.drude {
            let old = std::mem::take(&mut st.drude_samples);
            let mut new = vec![ZERO; old.len()];
            d.layer.sample(&d.mesh, &st.v, &mut new);
            d.layer.advance(&mut st.drude_acc, &old, &new, &self.drude_lambda, dt);
            st.drude_samples = new;
        }
        st.steps += 1;
    }
}
