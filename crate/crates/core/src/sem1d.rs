//! Radial spectral-element discretisation of one `(l, m)` mode of the
//! cloak problem on `0 < r < b`.
//!
//! The mesh is conforming to the cloak radii `R1`, `R2`, the scattered-field
//! interface `R3` and the artificial boundary `b`. Each element carries a
//! degree-`N` Lagrange basis on Gauss–Lobatto nodes; integrals use `N + 2`
//! Gauss–Legendre points per element, which is exact for the `r²`-weighted
//! mass matrix and never samples the cloak endpoints.
//!
//! The semi-discrete system is
//! `M V̈ + B V̇ + C V + G − (c/b) B (σ_l ∗ V) = F`
//! where `B = c b² e_N e_Nᵀ` carries the boundary condition, `G` the Drude
//! memory of the cloak and `F` the incident data lifted off the jump at `R3`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::drude::{theta_kernel, DrudeKernel, DrudeParams};
use crate::error::{Error, Result};
use crate::linalg::SymBand;
use crate::nrbk::{sigma_kernel, ExpSumKernel};
use crate::quadrature::{gauss_legendre, gauss_lobatto, LagrangeBasis};
use crate::vsh::beta;

const BREAK_TOL: f64 = 1e-12;

/// Continuous piecewise-polynomial space on `0 = r_0 < … < r_E = b`.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    breaks: Vec<f64>,
    degree: usize,
    basis: LagrangeBasis,
    quad_x: Vec<f64>,
    quad_w: Vec<f64>,
    // reference basis values / derivatives at quadrature points, [q][j]
    phi_q: Vec<Vec<f64>>,
    dphi_q: Vec<Vec<f64>>,
}

impl Mesh1D {
    /// Splits `[0, b]` at the given interior radii and distributes `elements`
    /// over the segments in proportion to their length, at least one each.
    pub fn new(interfaces: &[f64], b: f64, elements: usize, degree: usize) -> Result<Self> {
        let mut ends = vec![0.0];
        ends.extend_from_slice(interfaces);
        ends.push(b);
        if ends.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Mesh(format!("segment ends must increase strictly: {ends:?}")));
        }
        let segs = ends.len() - 1;
        if elements < segs {
            return Err(Error::Mesh(format!("{elements} elements cannot cover {segs} segments")));
        }
        // largest-remainder apportionment, at least one element per segment
        let quota: Vec<f64> = ends.windows(2).map(|w| (w[1] - w[0]) / b * elements as f64).collect();
        let mut count: Vec<usize> = quota.iter().map(|q| (q.floor() as usize).max(1)).collect();
        let mut order: Vec<usize> = (0..segs).collect();
        order.sort_by(|&i, &j| {
            let (fi, fj) = (quota[i] - count[i] as f64, quota[j] - count[j] as f64);
            fj.total_cmp(&fi).then(i.cmp(&j))
        });
        let mut k = 0;
        while count.iter().sum::<usize>() < elements {
            count[order[k % segs]] += 1;
            k += 1;
        }
        while count.iter().sum::<usize>() > elements {
            // take from the segment with the most elements
            let i = (0..segs).max_by_key(|&i| (count[i], std::cmp::Reverse(i))).unwrap();
            count[i] -= 1;
        }
        let mut breaks = vec![0.0];
        for (s, &n) in count.iter().enumerate() {
            let (a, z) = (ends[s], ends[s + 1]);
            for k in 1..=n {
                breaks.push(if k == n { z } else { a + (z - a) * k as f64 / n as f64 });
            }
        }
        Self::from_breakpoints(breaks, degree)
    }

    pub fn from_breakpoints(breaks: Vec<f64>, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::Mesh("polynomial degree must be at least 1".into()));
        }
        if breaks.len() < 2 || breaks[0] != 0.0 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Mesh(format!("breakpoints must start at 0 and increase: {breaks:?}")));
        }
        let (nodes, _) = gauss_lobatto(degree);
        let basis = LagrangeBasis::new(&nodes);
        let (quad_x, quad_w) = gauss_legendre(degree + 2);
        let phi_q = quad_x.iter().map(|&x| basis.values(x)).collect();
        let dphi_q = quad_x.iter().map(|&x| basis.derivatives(x)).collect();
        Ok(Mesh1D {
            breaks,
            degree,
            basis,
            quad_x,
            quad_w,
            phi_q,
            dphi_q,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn elements(&self) -> usize {
        self.breaks.len() - 1
    }

    pub fn n_dofs(&self) -> usize {
        self.elements() * self.degree + 1
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn outer_radius(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    /// Global index of local node `j` of element `e`.
    pub fn dof(&self, e: usize, j: usize) -> usize {
        e * self.degree + j
    }

    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        (self.breaks[e], self.breaks[e + 1])
    }

    pub fn node(&self, i: usize) -> f64 {
        let e = (i / self.degree).min(self.elements() - 1);
        let j = i - e * self.degree;
        let (a, b) = self.element_bounds(e);
        let x = self.basis.nodes()[j];
        if j == 0 {
            a
        } else if j == self.degree {
            b
        } else {
            0.5 * (a + b) + 0.5 * (b - a) * x
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_dofs()).map(|i| self.node(i)).collect()
    }

    /// Index of the degree of freedom sitting on breakpoint `r`, if any.
    pub fn index_of(&self, r: f64) -> Option<usize> {
        let tol = BREAK_TOL * self.outer_radius();
        self.breaks
            .iter()
            .position(|&x| (x - r).abs() <= tol)
            .map(|e| e * self.degree)
    }

    /// Element containing `r` and the reference coordinate in `[-1, 1]`.
    pub fn locate(&self, r: f64) -> Result<(usize, f64)> {
        let b = self.outer_radius();
        if !(0.0..=b * (1.0 + BREAK_TOL)).contains(&r) {
            return Err(Error::Domain(format!("radius {r} outside [0, {b}]")));
        }
        let e = self.breaks.partition_point(|&x| x <= r).clamp(1, self.elements()) - 1;
        let (a, z) = self.element_bounds(e);
        Ok((e, ((2.0 * r - a - z) / (z - a)).clamp(-1.0, 1.0)))
    }

    /// Element, basis values and `d/dr` of the basis at radius `r`.
    pub fn basis_at(&self, r: f64) -> Result<(usize, Vec<f64>, Vec<f64>)> {
        let (e, x) = self.locate(r)?;
        let (a, z) = self.element_bounds(e);
        let jac = 2.0 / (z - a);
        let vals = self.basis.values(x);
        let ders = self.basis.derivatives(x).into_iter().map(|d| d * jac).collect();
        Ok((e, vals, ders))
    }

    /// Value and radial derivative of the finite-element function `coeffs` at `r`.
    pub fn eval(&self, coeffs: &[Complex64], r: f64) -> Result<(Complex64, Complex64)> {
        let (e, vals, ders) = self.basis_at(r)?;
        let base = self.dof(e, 0);
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for j in 0..=self.degree {
            v += vals[j] * coeffs[base + j];
            d += ders[j] * coeffs[base + j];
        }
        Ok((v, d))
    }

    pub fn quad_len(&self) -> usize {
        self.quad_x.len()
    }

    /// Physical point and weight of quadrature node `q` in element `e`.
    pub fn quad_point(&self, e: usize, q: usize) -> (f64, f64) {
        let (a, z) = self.element_bounds(e);
        let h = 0.5 * (z - a);
        (a + h * (1.0 + self.quad_x[q]), h * self.quad_w[q])
    }

    /// Reference basis values at quadrature node `q`.
    pub fn quad_values(&self, q: usize) -> &[f64] {
        &self.phi_q[q]
    }

    /// Elements whose closure lies inside `[lo, hi]`.
    pub fn elements_within(&self, lo: f64, hi: f64) -> Vec<usize> {
        let tol = BREAK_TOL * self.outer_radius();
        (0..self.elements())
            .filter(|&e| {
                let (a, z) = self.element_bounds(e);
                a >= lo - tol && z <= hi + tol
            })
            .collect()
    }

    /// `Σ_e ∫ f(r) φ_i φ_j` and `Σ_e ∫ g(r) φ_i' φ_j'` accumulated into `out`.
    fn assemble_into(
        &self,
        out: &mut SymBand,
        elements: &[usize],
        mass_weight: impl Fn(f64) -> f64,
        stiff_weight: impl Fn(f64) -> f64,
    ) {
        let n = self.degree;
        for &e in elements {
            let (a, z) = self.element_bounds(e);
            let jac = 2.0 / (z - a);
            for q in 0..self.quad_len() {
                let (r, w) = self.quad_point(e, q);
                let (fm, fs) = (w * mass_weight(r), w * stiff_weight(r) * jac * jac);
                let (phi, dphi) = (&self.phi_q[q], &self.dphi_q[q]);
                for i in 0..=n {
                    for j in 0..=i {
                        let v = fm * phi[i] * phi[j] + fs * dphi[i] * dphi[j];
                        if v != 0.0 {
                            out.add(self.dof(e, i), self.dof(e, j), v);
                        }
                    }
                }
            }
        }
    }

    /// `∫ f(r) φ_i dr` over the listed elements.
    fn load_into(&self, out: &mut [f64], elements: &[usize], f: impl Fn(f64) -> f64) {
        for &e in elements {
            for q in 0..self.quad_len() {
                let (r, w) = self.quad_point(e, q);
                let fw = w * f(r);
                for (i, p) in self.phi_q[q].iter().enumerate() {
                    out[self.dof(e, i)] += fw * p;
                }
            }
        }
    }
}

/// Physical layout of the truncated problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Wave speed.
    pub c: f64,
    /// Radius of the artificial boundary.
    pub b: f64,
    /// Radius where the incident field is switched on.
    pub r3: f64,
    /// Cloak parameters; `None` is free space.
    pub cloak: Option<DrudeParams>,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            c: 1.0,
            b: 1.0,
            r3: 0.95,
            cloak: Some(DrudeParams::default()),
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("wave speed must be positive, got {}", self.c));
        }
        if !(self.r3 > 0.0 && self.r3 < self.b && self.b.is_finite()) {
            return bad(format!("need 0 < R3 < b, got R3 = {}, b = {}", self.r3, self.b));
        }
        if let Some(p) = &self.cloak {
            p.validate()?;
            if p.r2 >= self.r3 {
                return bad(format!("cloak radius R2 = {} must be below R3 = {}", p.r2, self.r3));
            }
        }
        Ok(())
    }

    /// Interior breakpoints the mesh must contain.
    pub fn interfaces(&self) -> Vec<f64> {
        match &self.cloak {
            Some(p) => vec![p.r1, p.r2, self.r3],
            None => vec![self.r3],
        }
    }

    pub fn mesh(&self, elements: usize, degree: usize) -> Result<Mesh1D> {
        self.validate()?;
        Mesh1D::new(&self.interfaces(), self.b, elements, degree)
    }

    /// Mass/stiffness weight inside the cloak (the transverse parameter), 1 elsewhere.
    pub fn epsilon_t(&self) -> f64 {
        self.cloak.map_or(1.0, |p| p.epsilon_t())
    }

    /// Linear profile `(b − r)/(b − R3)` on the shell, zero inside `R3`.
    pub fn lifting_profile(&self, r: f64) -> f64 {
        if r > self.r3 {
            (self.b - r) / (self.b - self.r3)
        } else {
            0.0
        }
    }
}

/// Boundary and lifting data shared by every `m` of one `l`.
#[derive(Debug, Clone)]
pub struct LoadVectors {
    /// Coefficient vector of `∂²_t h`.
    pub d2t: Vec<f64>,
    /// Coefficient vector of `h`.
    pub value: Vec<f64>,
    /// Coefficient vector of `∂_r h`.
    pub dr: Vec<f64>,
}

/// Time-independent matrices of one degree `l`.
#[derive(Debug, Clone)]
pub struct ModeSystem {
    pub l: usize,
    pub geometry: Geometry,
    pub mesh: Arc<Mesh1D>,
    pub mass: SymBand,
    pub stiffness: SymBand,
    /// `C = A + c² b E_NN + interface terms`.
    pub c_matrix: SymBand,
    /// Nonzero entry `c b²` of `B = c b² E_NN`.
    pub boundary_damping: f64,
    pub sigma: Arc<ExpSumKernel>,
    pub loads: LoadVectors,
    pub i1: Option<usize>,
    pub i2: Option<usize>,
    pub i3: usize,
    pub boundary: usize,
}

impl ModeSystem {
    pub fn assemble(l: usize, mesh: Arc<Mesh1D>, geometry: Geometry) -> Result<Self> {
        if l == 0 {
            return Err(Error::InvalidParameter("mode systems start at l = 1".into()));
        }
        geometry.validate()?;
        let Geometry { c, b, r3, cloak } = geometry;
        if (mesh.outer_radius() - b).abs() > BREAK_TOL * b {
            return Err(Error::Mesh(format!("mesh ends at {}, boundary is at {b}", mesh.outer_radius())));
        }
        let need = |r: f64, name: &str| {
            mesh.index_of(r)
                .ok_or_else(|| Error::Mesh(format!("{name} = {r} is not a mesh breakpoint")))
        };
        let i3 = need(r3, "R3")?;
        let (i1, i2) = match &cloak {
            Some(p) => (Some(need(p.r1, "R1")?), Some(need(p.r2, "R2")?)),
            None => (None, None),
        };
        let n = mesh.n_dofs();
        let boundary = n - 1;
        let bl = beta(l);
        let c2 = c * c;
        let eps = geometry.epsilon_t();
        let all: Vec<usize> = (0..mesh.elements()).collect();
        let (inside, outside): (Vec<usize>, Vec<usize>) = match &cloak {
            Some(p) => {
                let shell = mesh.elements_within(p.r1, p.r2);
                (shell.clone(), all.iter().copied().filter(|e| !shell.contains(e)).collect())
            }
            None => (Vec::new(), all.clone()),
        };

        let p = mesh.degree();
        let mut mass = SymBand::zeros(n, p);
        mesh.assemble_into(&mut mass, &outside, |r| r * r, |_| 0.0);
        mesh.assemble_into(&mut mass, &inside, |r| eps * r * r, |_| 0.0);

        let mut stiffness = SymBand::zeros(n, p);
        mesh.assemble_into(&mut stiffness, &outside, |_| c2 * bl, |r| c2 * r * r);
        mesh.assemble_into(&mut stiffness, &inside, |_| c2 * bl, |r| c2 * r * r / eps);

        let mut c_matrix = stiffness.clone();
        c_matrix.add(boundary, boundary, c2 * b);
        if let (Some(p), Some(i1), Some(i2)) = (&cloak, i1, i2) {
            // natural interface terms from the derivative jumps, per unit outer-side derivative
            let k = c2 * (eps - 1.0) / eps;
            c_matrix.add(i1, i1, k * p.r1);
            c_matrix.add(i2, i2, -k * p.r2);
        }

        let shell = mesh.elements_within(r3, b);
        let span = b - r3;
        let mut d2t = vec![0.0; n];
        mesh.load_into(&mut d2t, &shell, |r| r * r * (b - r) / span);
        let mut value = vec![0.0; n];
        mesh.load_into(&mut value, &shell, |r| {
            // r² (2c²/(r(b − r)) + c²β/r²) (b − r)/(b − R3)
            2.0 * c2 * r / span + c2 * bl * (b - r) / span
        });
        value[i3] += c2 * r3 * r3 / span;
        value[boundary] -= c2 * b * b / span;
        let mut dr = vec![0.0; n];
        dr[i3] = c2 * r3 * r3;

        Ok(ModeSystem {
            l,
            geometry,
            mesh,
            mass,
            stiffness,
            c_matrix,
            boundary_damping: c * b * b,
            sigma: sigma_kernel(l, b, c)?,
            loads: LoadVectors { d2t, value, dr },
            i1,
            i2,
            i3,
            boundary,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    /// Load vector for jump data `h`, `∂_r h` and `∂²_t h` at `R3`.
    pub fn load_into(&self, h: Complex64, dr_h: Complex64, d2t_h: Complex64, out: &mut [Complex64]) {
        let LoadVectors { d2t, value, dr } = &self.loads;
        for (i, o) in out.iter_mut().enumerate() {
            *o = d2t[i] * d2t_h + value[i] * h + dr[i] * dr_h;
        }
    }

    pub fn load(&self, h: Complex64, dr_h: Complex64, d2t_h: Complex64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_dofs()];
        self.load_into(h, dr_h, d2t_h, &mut out);
        out
    }

    /// Nodal values of `h · (b − r)/(b − R3)` on the shell.
    pub fn lifting(&self, h: Complex64) -> Vec<Complex64> {
        (0..self.n_dofs())
            .map(|i| h * self.geometry.lifting_profile(self.mesh.node(i)))
            .collect()
    }

    /// Removes the lifting from a lifted solution, leaving the scattered field on the shell.
    pub fn unlift(&self, v: &mut [Complex64], h: Complex64) {
        for (i, x) in v.iter_mut().enumerate().skip(self.i3 + 1) {
            *x -= h * self.geometry.lifting_profile(self.mesh.node(i));
        }
    }

    /// `½ (V̇ᴴ M V̇ + Vᴴ A V)`.
    pub fn energy(&self, v: &[Complex64], vdot: &[Complex64]) -> f64 {
        0.5 * (self.mass.form(vdot, vdot).re + self.stiffness.form(v, v).re)
    }
}

/// One Drude quadrature node of the cloak.
#[derive(Debug, Clone, Copy)]
pub struct DrudeNode {
    pub element: usize,
    pub q: usize,
    pub r: f64,
    pub weight: f64,
    pub kernel: DrudeKernel,
}

/// Drude kernels of medium `k` at every quadrature node of the cloak.
#[derive(Debug, Clone)]
pub struct DrudeLayer {
    pub k: usize,
    pub nodes: Vec<DrudeNode>,
}

impl DrudeLayer {
    pub fn new(mesh: &Mesh1D, params: &DrudeParams, k: usize) -> Result<Self> {
        let mut nodes = Vec::new();
        for e in mesh.elements_within(params.r1, params.r2) {
            for q in 0..mesh.quad_len() {
                let (r, weight) = mesh.quad_point(e, q);
                nodes.push(DrudeNode {
                    element: e,
                    q,
                    r,
                    weight,
                    kernel: theta_kernel(params, r, k)?,
                });
            }
        }
        if nodes.is_empty() {
            return Err(Error::Mesh("no mesh element lies inside the cloak".into()));
        }
        Ok(DrudeLayer { k, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Per-node step factors `λ_k = e^{iζ^k Δt}`.
    pub fn step_factors(&self, dt: f64) -> Vec<[Complex64; 2]> {
        self.nodes
            .iter()
            .map(|n| {
                let [p0, p1] = n.kernel.poles();
                [(p0 * dt).exp(), (p1 * dt).exp()]
            })
            .collect()
    }

    /// Values of the finite-element function `v` at the layer's nodes.
    pub fn sample(&self, mesh: &Mesh1D, v: &[Complex64], out: &mut [Complex64]) {
        for (o, n) in out.iter_mut().zip(&self.nodes) {
            let base = mesh.dof(n.element, 0);
            *o = mesh
                .quad_values(n.q)
                .iter()
                .zip(&v[base..])
                .map(|(p, x)| p * x)
                .sum();
        }
    }

    /// Adds `G^{n+1} = scale ∫ (ϑ ∗ v)(t_{n+1}) φ_i` to `out`, using only
    /// data at `t_n`: the node samples `v_n` and the accumulators
    /// `acc = (e^{iζ⁰·} ∗ v, e^{iζ¹·} ∗ v)` at `t_n`.
    pub fn load_into(
        &self,
        mesh: &Mesh1D,
        scale: f64,
        v_n: &[Complex64],
        acc: &[[Complex64; 2]],
        lam: &[[Complex64; 2]],
        dt: f64,
        out: &mut [Complex64],
    ) {
        for (i, n) in self.nodes.iter().enumerate() {
            let [l0, l1] = lam[i];
            let [a0, a1] = acc[i];
            let conv = n.kernel.weight * (l0 * a0 - l1 * a1 + 0.5 * dt * (l0 - l1) * v_n[i]);
            let f = conv * (scale * n.weight);
            let base = mesh.dof(n.element, 0);
            for (o, p) in out[base..].iter_mut().zip(mesh.quad_values(n.q)) {
                *o += f * p;
            }
        }
    }

    /// Trapezoidal update of the accumulators from `t_n` to `t_{n+1}`.
    pub fn advance(
        &self,
        acc: &mut [[Complex64; 2]],
        v_n: &[Complex64],
        v_np1: &[Complex64],
        lam: &[[Complex64; 2]],
        dt: f64,
    ) {
        let h = 0.5 * dt;
        for i in 0..self.nodes.len() {
            for s in 0..2 {
                acc[i][s] = lam[i][s] * acc[i][s] + h * (v_np1[i] + lam[i][s] * v_n[i]);
            }
        }
    }

    /// `(ϑ ∗ v)` at each node from the current accumulators.
    pub fn convolution(&self, acc: &[[Complex64; 2]]) -> Vec<Complex64> {
        self.nodes
            .iter()
            .zip(acc)
            .map(|(n, a)| n.kernel.weight * (a[0] - a[1]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::BandCholesky;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn mesh_is_interface_conforming() {
        let g = Geometry::default();
        let m = g.mesh(20, 6).unwrap();
        assert_eq!(m.elements(), 20);
        assert_eq!(m.n_dofs(), 20 * 6 + 1);
        for r in [0.15, 0.35, 0.95, 1.0] {
            assert!(m.index_of(r).is_some(), "{r}");
        }
        // proportional split of 20 elements over lengths .15/.2/.6/.05
        let counts: Vec<usize> = [(0.0, 0.15), (0.15, 0.35), (0.35, 0.95), (0.95, 1.0)]
            .iter()
            .map(|&(a, b)| m.elements_within(a, b).len())
            .collect();
        assert_eq!(counts, vec![3, 4, 12, 1]);
        assert!(Mesh1D::new(&[0.5, 0.4], 1.0, 4, 3).is_err());
        assert!(Mesh1D::new(&[0.1, 0.2, 0.3], 1.0, 3, 3).is_err());
    }

    #[test]
    fn nodes_and_locate_agree() {
        let m = Geometry::default().mesh(8, 5).unwrap();
        for i in 0..m.n_dofs() {
            let r = m.node(i);
            let mut v = vec![c(0.0); m.n_dofs()];
            v[i] = c(1.0);
            let (x, _) = m.eval(&v, r).unwrap();
            assert!((x - c(1.0)).norm() < 1e-12, "node {i} at {r}");
        }
        assert!(m.locate(1.5).is_err());
    }

    #[test]
    fn fem_function_derivative() {
        let m = Geometry::default().mesh(6, 8).unwrap();
        let f = |r: f64| (3.0 * r).sin();
        let v: Vec<Complex64> = m.nodes().iter().map(|&r| c(f(r))).collect();
        for &r in &[0.03, 0.2, 0.5, 0.97] {
            let (x, d) = m.eval(&v, r).unwrap();
            assert!((x.re - f(r)).abs() < 1e-7);
            assert!((d.re - 3.0 * (3.0 * r).cos()).abs() < 1e-5);
        }
    }

    // independent dense oracle: high-order Gauss–Legendre on each element,
    // basis from fresh Lagrange interpolation
    fn dense_oracle(mesh: &Mesh1D, w_mass: impl Fn(f64) -> f64, w_stiff: impl Fn(f64) -> f64, w_zero: impl Fn(f64) -> f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = mesh.n_dofs();
        let mut mm = vec![vec![0.0; n]; n];
        let mut aa = vec![vec![0.0; n]; n];
        let (gx, gw) = gauss_legendre(3 * mesh.degree() + 5);
        let (nodes, _) = gauss_lobatto(mesh.degree());
        let basis = LagrangeBasis::new(&nodes);
        for e in 0..mesh.elements() {
            let (a, z) = mesh.element_bounds(e);
            let h = 0.5 * (z - a);
            for (x, w) in gx.iter().zip(&gw) {
                let r = a + h * (1.0 + x);
                let phi = basis.values(*x);
                let dphi: Vec<f64> = basis.derivatives(*x).iter().map(|d| d / h).collect();
                for i in 0..=mesh.degree() {
                    for j in 0..=mesh.degree() {
                        let (gi, gj) = (mesh.dof(e, i), mesh.dof(e, j));
                        mm[gi][gj] += w * h * w_mass(r) * phi[i] * phi[j];
                        aa[gi][gj] += w * h * (w_stiff(r) * dphi[i] * dphi[j] + w_zero(r) * phi[i] * phi[j]);
                    }
                }
            }
        }
        (mm, aa)
    }

    #[test]
    fn vacuum_matrices_match_dense_oracle() {
        let g = Geometry { cloak: None, ..Geometry::default() };
        let mesh = Arc::new(g.mesh(5, 7).unwrap());
        let l = 3;
        let sys = ModeSystem::assemble(l, mesh.clone(), g).unwrap();
        let bl = beta(l);
        let (mm, aa) = dense_oracle(&mesh, |r| r * r, |r| r * r, |_| bl);
        let (md, ad) = (sys.mass.to_dense(), sys.stiffness.to_dense());
        let scale = sys.stiffness.max_abs();
        for i in 0..mesh.n_dofs() {
            for j in 0..mesh.n_dofs() {
                assert!((md[i][j] - mm[i][j]).abs() <= 1e-12 * sys.mass.max_abs());
                assert!((ad[i][j] - aa[i][j]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn cloak_matrices_match_dense_oracle() {
        let g = Geometry::default();
        let mesh = Arc::new(g.mesh(8, 6).unwrap());
        let sys = ModeSystem::assemble(2, mesh.clone(), g).unwrap();
        let p = g.cloak.unwrap();
        let eps = p.epsilon_t();
        let inside = |r: f64| r > p.r1 && r < p.r2;
        let (mm, aa) = dense_oracle(
            &mesh,
            |r| if inside(r) { eps * r * r } else { r * r },
            |r| if inside(r) { r * r / eps } else { r * r },
            |_| beta(2),
        );
        let (md, ad) = (sys.mass.to_dense(), sys.stiffness.to_dense());
        for i in 0..mesh.n_dofs() {
            for j in 0..mesh.n_dofs() {
                assert!((md[i][j] - mm[i][j]).abs() <= 1e-12 * sys.mass.max_abs());
                assert!((ad[i][j] - aa[i][j]).abs() <= 1e-12 * sys.stiffness.max_abs());
            }
        }
    }

    #[test]
    fn interface_and_boundary_corrections() {
        let g = Geometry::default();
        let mesh = Arc::new(g.mesh(8, 4).unwrap());
        let sys = ModeSystem::assemble(1, mesh, g).unwrap();
        let p = g.cloak.unwrap();
        let eps = p.epsilon_t();
        let (i1, i2, nb) = (sys.i1.unwrap(), sys.i2.unwrap(), sys.boundary);
        let d1 = sys.c_matrix.get(i1, i1) - sys.stiffness.get(i1, i1);
        let d2 = sys.c_matrix.get(i2, i2) - sys.stiffness.get(i2, i2);
        let db = sys.c_matrix.get(nb, nb) - sys.stiffness.get(nb, nb);
        assert!(d1 > 0.0 && d2 < 0.0);
        assert!((d1 - (eps - 1.0) / eps * p.r1).abs() < 1e-14);
        assert!((d2 + (eps - 1.0) / eps * p.r2).abs() < 1e-14);
        assert!((db - 1.0).abs() < 1e-14);
        assert_eq!(sys.boundary_damping, 1.0);
    }

    #[test]
    fn matrices_symmetric_and_definite() {
        let g = Geometry::default();
        let mesh = Arc::new(g.mesh(12, 8).unwrap());
        for l in [1, 4, 20] {
            let sys = ModeSystem::assemble(l, mesh.clone(), g).unwrap();
            assert!(BandCholesky::factor(&sys.mass).is_ok());
            // A is positive definite for l ≥ 1 because of the β_l term
            assert!(BandCholesky::factor(&sys.stiffness).is_ok());
        }
    }

    #[test]
    fn zero_jump_gives_zero_load() {
        let g = Geometry::default();
        let sys = ModeSystem::assemble(1, Arc::new(g.mesh(8, 4).unwrap()), g).unwrap();
        assert!(sys.load(c(0.0), c(0.0), c(0.0)).iter().all(|x| *x == c(0.0)));
    }

    #[test]
    fn load_matches_dense_quadrature() {
        // constant h, l = 1: F_i = ∫_{R3}^{b} r² f(r) φ_i + point terms
        let g = Geometry { b: 1.2, c: 1.5, ..Geometry::default() };
        let mesh = Arc::new(g.mesh(9, 5).unwrap());
        let sys = ModeSystem::assemble(1, mesh.clone(), g).unwrap();
        let (h, dh) = (0.7, -0.4);
        let f = sys.load(c(h), c(dh), c(0.0));
        let (b, r3, cc) = (g.b, g.r3, g.c);
        let c2 = cc * cc;
        let n = mesh.n_dofs();
        let mut oracle = vec![0.0; n];
        let (gx, gw) = gauss_legendre(40);
        for e in mesh.elements_within(r3, b) {
            let (a, z) = mesh.element_bounds(e);
            for (x, w) in gx.iter().zip(&gw) {
                let r = a + 0.5 * (z - a) * (1.0 + x);
                let lift = (b - r) / (b - r3);
                let f2 = (2.0 * c2 / (r * (b - r)) + c2 * beta(1) / (r * r)) * h * lift;
                let (_, vals, _) = mesh.basis_at(r).unwrap();
                for j in 0..=mesh.degree() {
                    oracle[mesh.dof(e, j)] += 0.5 * (z - a) * w * r * r * f2 * vals[j];
                }
            }
        }
        oracle[sys.i3] += (dh + h / (b - r3)) * c2 * r3 * r3;
        oracle[n - 1] -= h / (b - r3) * c2 * b * b;
        for i in 0..n {
            assert!((f[i].re - oracle[i]).abs() < 1e-12, "{i}: {} vs {}", f[i].re, oracle[i]);
        }
    }

    #[test]
    fn lifting_round_trip() {
        let g = Geometry::default();
        let sys = ModeSystem::assemble(2, Arc::new(g.mesh(10, 4).unwrap()), g).unwrap();
        let h = Complex64::new(0.3, -1.1);
        let mut v = sys.lifting(h);
        assert_eq!(v[sys.i3], c(0.0));
        assert!((v[sys.i3 + 1] - h * g.lifting_profile(sys.mesh.node(sys.i3 + 1))).norm() < 1e-15);
        sys.unlift(&mut v, h);
        assert!(v.iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn drude_layer_avoids_cloak_edges() {
        let g = Geometry::default();
        let mesh = g.mesh(20, 10).unwrap();
        let p = g.cloak.unwrap();
        for k in [1, 2] {
            let layer = DrudeLayer::new(&mesh, &p, k).unwrap();
            assert_eq!(layer.len(), 4 * 12);
            for n in &layer.nodes {
                assert!(n.r > p.r1 && n.r < p.r2);
                assert!(n.kernel.zeta0.im > 0.0 && n.kernel.zeta1.im > 0.0);
            }
        }
    }

    #[test]
    fn drude_load_zero_at_rest() {
        let g = Geometry::default();
        let mesh = g.mesh(8, 4).unwrap();
        let layer = DrudeLayer::new(&mesh, &g.cloak.unwrap(), 1).unwrap();
        let lam = layer.step_factors(1e-3);
        let acc = vec![[c(0.0); 2]; layer.len()];
        let vq = vec![c(0.0); layer.len()];
        let mut out = vec![c(0.0); mesh.n_dofs()];
        layer.load_into(&mesh, 2.0, &vq, &acc, &lam, 1e-3, &mut out);
        assert!(out.iter().all(|x| *x == c(0.0)));
    }

    #[test]
    fn drude_convolution_of_constant() {
        // ϑ ∗ 1 = w [(e^{iζ⁰t} − 1)/(iζ⁰) − (e^{iζ¹t} − 1)/(iζ¹)], second order in Δt
        let p = DrudeParams::new(5.0, 0.5, 0.5, 0.15, 0.35).unwrap();
        let g = Geometry { cloak: Some(p), ..Geometry::default() };
        let mesh = g.mesh(8, 3).unwrap();
        let layer = DrudeLayer::new(&mesh, &p, 1).unwrap();
        let t_end = 1.0;
        let err = |dt: f64| {
            let lam = layer.step_factors(dt);
            let mut acc = vec![[c(0.0); 2]; layer.len()];
            let ones = vec![c(1.0); layer.len()];
            let steps = (t_end / dt).round() as usize;
            let mut last = vec![c(0.0); layer.len()];
            for _ in 0..steps {
                // the explicit prediction of ϑ ∗ v at t_{n+1} must equal the update
                let mut pred = vec![c(0.0); mesh.n_dofs()];
                layer.load_into(&mesh, 1.0, &ones, &acc, &lam, dt, &mut pred);
                layer.advance(&mut acc, &ones, &ones, &lam, dt);
                last = layer.convolution(&acc);
                let mut check = vec![c(0.0); mesh.n_dofs()];
                for (i, n) in layer.nodes.iter().enumerate() {
                    let base = mesh.dof(n.element, 0);
                    for (j, ph) in mesh.quad_values(n.q).iter().enumerate() {
                        check[base + j] += last[i] * n.weight * ph;
                    }
                }
                for (x, y) in pred.iter().zip(&check) {
                    assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
                }
            }
            layer
                .nodes
                .iter()
                .zip(&last)
                .map(|(n, v)| {
                    let [p0, p1] = n.kernel.poles();
                    let exact = n.kernel.weight * (((p0 * t_end).exp() - 1.0) / p0 - ((p1 * t_end).exp() - 1.0) / p1);
                    (v - exact).norm()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(0.01) / err(0.005);
        assert!((3.6..=4.4).contains(&ratio), "ratio {ratio}");
    }
}
