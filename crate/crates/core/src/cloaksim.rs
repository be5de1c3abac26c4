//! Scenario driver: integrates every `(l, m)` mode of the cloak problem,
//! reconstructs `D` on the `z = 0` plane and records shielding diagnostics.
//!
//! Two radial sequences are integrated per mode. The `v` sequence (the
//! `∇×Φ` coefficient) sees the Drude medium 1 and the incident data `h`.
//! The `u` sequence (the `Φ` coefficient) is integrated in the scaled form
//! `ũ = ε u` outside the cloak layer, which obeys the same equations as `v`
//! with medium 2 and data `ε g`. Both share one factorised matrix per `l`.

use std::f64::consts::PI;
use std::sync::Arc;

use log::{debug, info};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::incident::{Incident, IncidentTransform, ModeData};
use crate::newmark::{ModeIntegrator, ModeState, NewmarkParams};
use crate::sem1d::{DrudeLayer, Geometry, Mesh1D, ModeSystem};
use crate::vsh::{beta, idx, n_coeffs, reconstruct_spherical, spherical_to_cartesian, LegendreTable, ModeValues};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const INSTABILITY_FACTOR: f64 = 1e6;

/// Space-time resolution of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub elements: usize,
    pub degree: usize,
    pub l_max: usize,
    pub dt: f64,
    pub t_end: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            elements: 20,
            degree: 20,
            l_max: 40,
            dt: 1e-3,
            t_end: 11.0,
            gamma: 0.5,
            beta: 0.25,
        }
    }
}

impl Discretization {
    /// Reduced resolution that runs the default scenarios in minutes.
    pub fn desk() -> Self {
        Discretization {
            degree: 12,
            l_max: 24,
            dt: 2e-3,
            ..Default::default()
        }
    }

    pub fn newmark(&self) -> NewmarkParams {
        NewmarkParams {
            gamma: self.gamma,
            beta: self.beta,
            dt: self.dt,
        }
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn step_of(&self, t: f64) -> u64 {
        (t / self.dt).round() as u64
    }
}

/// Square `n × n` sample grid over `[−extent, extent]²` in the `z = 0` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceSpec {
    pub n: usize,
    pub extent: f64,
}

impl Default for SliceSpec {
    fn default() -> Self {
        SliceSpec { n: 201, extent: 1.0 }
    }
}

impl SliceSpec {
    pub fn coordinate(&self, i: usize) -> f64 {
        if self.n <= 1 {
            0.0
        } else {
            -self.extent + 2.0 * self.extent * i as f64 / (self.n - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub incident: Incident,
    pub geometry: Geometry,
    pub disc: Discretization,
    pub snapshot_times: Vec<f64>,
    pub slice: SliceSpec,
    /// Time between diagnostics rows.
    pub diagnostics_interval: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            incident: Incident::Monochromatic {
                k: 40.0,
                omega: 40.0,
                amplitude: 1.0,
            },
            geometry: Geometry::default(),
            disc: Discretization::default(),
            snapshot_times: vec![9.0, 11.0],
            slice: SliceSpec::default(),
            diagnostics_interval: 0.1,
        }
    }
}

impl Scenario {
    /// Monochromatic incidence detuned to wavenumber `k = ω`.
    pub fn monochromatic(k: f64) -> Self {
        Scenario {
            incident: Incident::Monochromatic {
                k,
                omega: k,
                amplitude: 1.0,
            },
            ..Default::default()
        }
    }

    /// Gaussian-modulated plane pulse with the cloak's outer radius `r2`.
    pub fn pulse(r2: f64) -> Self {
        let mut s = Scenario {
            incident: Incident::Pulse {
                k: 40.0,
                amplitude: 1.0,
                tc: 4.0,
                q: 0.5,
            },
            ..Default::default()
        };
        if let Some(c) = s.geometry.cloak.as_mut() {
            c.r2 = r2;
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.incident.validate()?;
        self.geometry.validate()?;
        self.disc.newmark().validate()?;
        let d = &self.disc;
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if d.elements == 0 || d.degree == 0 || d.l_max == 0 {
            return bad("E, N and L must be positive".into());
        }
        if !(d.t_end > 0.0 && d.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", d.t_end));
        }
        if let Some(&t) = self.snapshot_times.iter().find(|&&t| !(0.0..=d.t_end).contains(&t)) {
            return bad(format!("snapshot time {t} outside [0, {}]", d.t_end));
        }
        if !(self.slice.extent > 0.0 && self.slice.extent.is_finite()) {
            return bad(format!("slice extent must be positive, got {}", self.slice.extent));
        }
        if !(self.diagnostics_interval > 0.0) {
            return bad(format!("diagnostics interval must be positive, got {}", self.diagnostics_interval));
        }
        Ok(())
    }

    /// Radius of the ball over which the shielding metric is taken.
    pub fn shield_radius(&self) -> f64 {
        0.9 * self.geometry.cloak.unwrap_or_default().r1
    }

    fn region(&self, r: f64) -> Region {
        let g = &self.geometry;
        if r > g.r3 {
            return Region::ScatteredShell;
        }
        match &g.cloak {
            Some(c) if r < c.r1 => Region::Cloaked,
            Some(c) if r <= c.r2 => Region::CloakLayer,
            _ => Region::FreeSpace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Cloaked,
    CloakLayer,
    FreeSpace,
    ScatteredShell,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::Cloaked => "cloaked",
            Region::CloakLayer => "cloak",
            Region::FreeSpace => "free",
            Region::ScatteredShell => "shell",
        }
    }
}

/// Radial coefficient vectors of every mode at one time, as integrated: on
/// the shell `(R3, b)` they hold the scattered field plus the lift
/// `lift · (b − r)/(b − R3)`, and `u_scaled` is `ε u` outside the cloak layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalField {
    pub time: f64,
    pub l_max: usize,
    /// Indexed by [`idx`]; the `l = 0` entry is empty.
    pub u_scaled: Vec<Vec<Complex64>>,
    pub v: Vec<Vec<Complex64>>,
    pub u_lift: Vec<Complex64>,
    pub v_lift: Vec<Complex64>,
}

/// Total field reconstructed on the slice grid; points with `r > b` are omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub time: f64,
    pub points: Vec<SlicePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlicePoint {
    pub x: f64,
    pub y: f64,
    pub region: Region,
    /// Cartesian components.
    pub d: [Complex64; 3],
}

impl FieldSnapshot {
    /// `max |Re D_z| / A` over points with `r < radius`.
    pub fn shielding(&self, radius: f64, amplitude: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.x.hypot(p.y) < radius)
            .map(|p| p.d[2].re.abs())
            .fold(0.0, f64::max)
            / amplitude.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub time: f64,
    /// `max |Re D_z| / A` on probes inside the shielding radius.
    pub shielding: f64,
    /// `½ ∫ |D|²` over `r < R1`.
    pub interior_energy: f64,
    /// `½ ∫ |D|²` over `R2 < r < R3`.
    pub exterior_energy: f64,
    /// Largest scattered `|D|` in the shell, relative to `A`.
    pub scattered: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<FieldSnapshot>,
    pub fields: Vec<ModalField>,
    pub diagnostics: Vec<DiagnosticsRow>,
}

/// Mesh, per-degree matrices and Drude tables of a scenario.
pub struct Model {
    pub scenario: Scenario,
    pub mesh: Arc<Mesh1D>,
    pub systems: Vec<Arc<ModeSystem>>,
    drude: Option<[Arc<DrudeLayer>; 2]>,
}

impl Model {
    pub fn build(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let d = &scenario.disc;
        let g = scenario.geometry;
        let mesh = Arc::new(g.mesh(d.elements, d.degree)?);
        let drude = match &g.cloak {
            Some(p) => Some([
                Arc::new(DrudeLayer::new(&mesh, p, 1)?),
                Arc::new(DrudeLayer::new(&mesh, p, 2)?),
            ]),
            None => None,
        };
        let systems = (1..=d.l_max)
            .into_par_iter()
            .map(|l| ModeSystem::assemble(l, mesh.clone(), g).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(Model {
            scenario: scenario.clone(),
            mesh,
            systems,
            drude,
        })
    }

    /// `(u, v, ∂_r v)` of every mode at radius `r`; on the shell these are
    /// the scattered parts.
    pub fn mode_values(&self, field: &ModalField, r: f64) -> Result<Vec<ModeValues>> {
        self.values_and_region(field, r).map(|(v, _)| v)
    }

    // the region is that of the element used, so breakpoints stay consistent
    fn values_and_region(&self, field: &ModalField, r: f64) -> Result<(Vec<ModeValues>, Region)> {
        let (e, vals, ders) = self.mesh.basis_at(r)?;
        let base = self.mesh.dof(e, 0);
        let (lo, hi) = self.mesh.element_bounds(e);
        let region = self.scenario.region(0.5 * (lo + hi));
        let g = &self.scenario.geometry;
        let inv_eps = if region == Region::CloakLayer { 1.0 } else { 1.0 / g.epsilon_t() };
        let (ell, dell) = if region == Region::ScatteredShell {
            ((g.b - r) / (g.b - g.r3), -1.0 / (g.b - g.r3))
        } else {
            (0.0, 0.0)
        };
        let mut out = vec![ModeValues::default(); n_coeffs(field.l_max)];
        for (j, mv) in out.iter_mut().enumerate().skip(1) {
            let (us, vs) = (&field.u_scaled[j][base..], &field.v[j][base..]);
            let (mut u, mut v, mut dv) = (ZERO, ZERO, ZERO);
            for k in 0..vals.len() {
                u += vals[k] * us[k];
                v += vals[k] * vs[k];
                dv += ders[k] * vs[k];
            }
            let (lu, lv) = (field.u_lift[j], field.v_lift[j]);
            *mv = ModeValues {
                u: (u - lu * ell) * inv_eps,
                v: v - lv * ell,
                dv: dv - lv * dell,
            };
        }
        Ok((out, region))
    }

    /// Total field at `(r cos φ, r sin φ, 0)` in Cartesian components.
    pub fn field_at(&self, field: &ModalField, table: &LegendreTable, r: f64, phi: f64) -> Result<[Complex64; 3]> {
        let (modes, region) = self.values_and_region(field, r)?;
        let sph = reconstruct_spherical(table, &modes, ZERO, r, phi);
        let mut d = spherical_to_cartesian(sph, PI / 2.0, phi);
        if region == Region::ScatteredShell {
            let inc = self.scenario.incident.field([r * phi.cos(), r * phi.sin(), 0.0], field.time);
            for k in 0..3 {
                d[k] += inc[k];
            }
        }
        Ok(d)
    }

    /// Largest scattered `|D|` on equatorial rings through the shell `(R3, b]`.
    pub fn shell_scattered_peak(&self, field: &ModalField, table: &LegendreTable) -> Result<f64> {
        let g = &self.scenario.geometry;
        let mut peak: f64 = 0.0;
        for i in 1..=4 {
            let r = g.r3 + (g.b - g.r3) * i as f64 / 4.0;
            for k in 0..48 {
                let phi = 2.0 * PI * k as f64 / 48.0;
                let modes = self.mode_values(field, r)?;
                let d = reconstruct_spherical(table, &modes, ZERO, r, phi);
                peak = peak.max(d.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
            }
        }
        Ok(peak)
    }

    pub fn equator_table(&self) -> Result<LegendreTable> {
        LegendreTable::new(self.scenario.disc.l_max, PI / 2.0)
    }

    /// Samples the total field on the scenario's slice grid.
    pub fn slice(&self, field: &ModalField, spec: &SliceSpec) -> Result<FieldSnapshot> {
        let table = self.equator_table()?;
        let b = self.scenario.geometry.b;
        let coords: Vec<(f64, f64)> = (0..spec.n)
            .flat_map(|j| (0..spec.n).map(move |i| (i, j)))
            .map(|(i, j)| (spec.coordinate(i), spec.coordinate(j)))
            .filter(|(x, y)| x.hypot(*y) <= b)
            .collect();
        let points = coords
            .par_iter()
            .map(|&(x, y)| {
                let r = x.hypot(y);
                let d = self.field_at(field, &table, r, y.atan2(x))?;
                Ok(SlicePoint {
                    x,
                    y,
                    region: self.scenario.region(r),
                    d,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldSnapshot {
            time: field.time,
            points,
        })
    }

    /// `½ ∫_{lo<r<hi} |D|² dV` from the modal representation; the shell
    /// holds the scattered part only.
    pub fn region_energy(&self, field: &ModalField, lo: f64, hi: f64) -> Result<f64> {
        let mesh = &self.mesh;
        let mut total = 0.0;
        for e in mesh.elements_within(lo, hi) {
            for q in 0..mesh.quad_len() {
                let (r, w) = mesh.quad_point(e, q);
                let modes = self.mode_values(field, r)?;
                let mut s = 0.0;
                for l in 1..=field.l_max {
                    let b = beta(l);
                    for m in -(l as i64)..=(l as i64) {
                        let mv = modes[idx(l, m)];
                        let vr = mv.v / r;
                        s += b * b * vr.norm_sqr() + b * (mv.dv + vr).norm_sqr() + b * mv.u.norm_sqr();
                    }
                }
                total += 0.5 * w * r * r * s;
            }
        }
        Ok(total)
    }

    fn probes(&self) -> Vec<(f64, f64)> {
        let rho = self.scenario.shield_radius();
        let mut out = vec![(0.0, 0.0)];
        for i in 1..=6 {
            let r = rho * i as f64 / 6.5;
            for k in 0..24 {
                out.push((r, 2.0 * PI * k as f64 / 24.0));
            }
        }
        out
    }

    fn diagnostics(&self, field: &ModalField, table: &LegendreTable) -> Result<DiagnosticsRow> {
        let amp = self.scenario.incident.amplitude().abs();
        let mut peak: f64 = 0.0;
        for (r, phi) in self.probes() {
            peak = peak.max(self.field_at(field, table, r, phi)?[2].re.abs());
        }
        let g = &self.scenario.geometry;
        let cloak = g.cloak.unwrap_or_default();
        let (r1, r2) = if g.cloak.is_some() { (cloak.r1, cloak.r2) } else { (cloak.r1, cloak.r1) };
        let rel = |x: f64| if amp > 0.0 { x / amp } else { 0.0 };
        Ok(DiagnosticsRow {
            time: field.time,
            shielding: rel(peak),
            interior_energy: self.region_energy(field, 0.0, r1)?,
            exterior_energy: self.region_energy(field, r2, g.r3)?,
            scattered: rel(self.shell_scattered_peak(field, table)?),
        })
    }
}

/// Integration state of all `m` for one degree `l`.
struct DegreeWorker {
    l: usize,
    sys: Arc<ModeSystem>,
    int_v: ModeIntegrator,
    int_u: ModeIntegrator,
    v: Vec<ModeState>,
    u: Vec<ModeState>,
    load: Vec<Complex64>,
}

impl DegreeWorker {
    fn new(model: &Model, sys: Arc<ModeSystem>, data0: &[ModeData]) -> Result<Self> {
        let params = model.scenario.disc.newmark();
        let (dv, du) = match &model.drude {
            Some([a, b]) => (Some(a.clone()), Some(b.clone())),
            None => (None, None),
        };
        let int_v = ModeIntegrator::new(&sys, params, dv)?;
        let int_u = ModeIntegrator::new(&sys, params, du)?;
        let eps = model.scenario.geometry.epsilon_t();
        let l = sys.l;
        let (mut v, mut u) = (Vec::new(), Vec::new());
        for m in -(l as i64)..=(l as i64) {
            let d = data0[idx(l, m)];
            v.push(int_v.init_state(sys.lifting(d.h), sys.lifting(d.dt_h), &sys.load(d.h, d.dr_h, d.dtt_h)));
            u.push(int_u.init_state(
                sys.lifting(eps * d.g),
                sys.lifting(eps * d.dt_g),
                &sys.load(eps * d.g, eps * d.dr_g, eps * d.dtt_g),
            ));
        }
        Ok(DegreeWorker {
            l,
            load: vec![ZERO; sys.n_dofs()],
            sys,
            int_v,
            int_u,
            v,
            u,
        })
    }

    fn step(&mut self, data: &[ModeData], eps: f64, limit: f64, t: f64) -> Result<()> {
        let l = self.l;
        for (k, m) in (-(l as i64)..=(l as i64)).enumerate() {
            let d = data[idx(l, m)];
            self.sys.load_into(d.h, d.dr_h, d.dtt_h, &mut self.load);
            self.int_v.step(&mut self.v[k], &self.load);
            self.sys.load_into(eps * d.g, eps * d.dr_g, eps * d.dtt_g, &mut self.load);
            self.int_u.step(&mut self.u[k], &self.load);
            for st in [&self.v[k], &self.u[k]] {
                let norm = st.norm();
                if !(norm <= limit) {
                    return Err(Error::Instability { l, m, t, norm });
                }
            }
        }
        Ok(())
    }
}

fn capture(model: &Model, workers: &[DegreeWorker], data: &[ModeData], t: f64) -> ModalField {
    let l_max = model.scenario.disc.l_max;
    let eps = model.scenario.geometry.epsilon_t();
    let n = n_coeffs(l_max);
    let mut u_scaled = vec![Vec::new(); n];
    let mut v = vec![Vec::new(); n];
    for w in workers {
        let l = w.l;
        for (k, m) in (-(l as i64)..=(l as i64)).enumerate() {
            v[idx(l, m)] = w.v[k].v.clone();
            u_scaled[idx(l, m)] = w.u[k].v.clone();
        }
    }
    ModalField {
        time: t,
        l_max,
        u_scaled,
        v,
        u_lift: data.iter().map(|d| eps * d.g).collect(),
        v_lift: data.iter().map(|d| d.h).collect(),
    }
}

/// Integrates the scenario to `t_end`.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let model = Model::build(scenario)?;
    run_model(&model)
}

pub fn run_model(model: &Model) -> Result<RunOutput> {
    let sc = &model.scenario;
    let d = sc.disc;
    let eps = sc.geometry.epsilon_t();
    let transform = IncidentTransform::new(sc.incident, sc.geometry.r3, d.l_max)?;
    let mut data = transform.mode_data(0.0);
    let mut workers = model
        .systems
        .par_iter()
        .map(|s| DegreeWorker::new(model, s.clone(), &data))
        .collect::<Result<Vec<_>>>()?;
    let limit = INSTABILITY_FACTOR * sc.incident.amplitude().abs() * (model.mesh.n_dofs() as f64).sqrt();
    let table = model.equator_table()?;

    let steps = d.steps();
    let diag_every = ((sc.diagnostics_interval / d.dt).round() as u64).max(1);
    let mut snap_steps: Vec<u64> = sc.snapshot_times.iter().map(|&t| d.step_of(t)).collect();
    snap_steps.sort_unstable();
    snap_steps.dedup();

    let mut out = RunOutput {
        snapshots: Vec::new(),
        fields: Vec::new(),
        diagnostics: Vec::new(),
    };
    info!(
        "running {} steps of {} modes on {} radial unknowns",
        steps,
        n_coeffs(d.l_max) - 1,
        model.mesh.n_dofs()
    );
    for n in 0..=steps {
        if n > 0 {
            let t = n as f64 * d.dt;
            data = transform.mode_data(t);
            workers
                .par_iter_mut()
                .try_for_each(|w| w.step(&data, eps, limit, t))?;
        }
        let is_snap = snap_steps.binary_search(&n).is_ok();
        if n % diag_every == 0 || is_snap {
            let t = n as f64 * d.dt;
            let field = capture(model, &workers, &data, t);
            if n % diag_every == 0 {
                let row = model.diagnostics(&field, &table)?;
                debug!("t = {t:.4}: S = {:.3e}", row.shielding);
                out.diagnostics.push(row);
            }
            if is_snap {
                info!("snapshot at t = {t}");
                out.snapshots.push(model.slice(&field, &sc.slice)?);
                out.fields.push(field);
            }
        }
    }
    Ok(out)
}
