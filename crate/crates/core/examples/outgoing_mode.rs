//! A single vacuum mode started as a Gaussian bump leaves through the
//! non-reflecting boundary at `b = 1`; the energy left behind is printed.

use std::sync::Arc;

use num_complex::Complex64;
use tdnrbc::newmark::{ModeIntegrator, NewmarkParams};
use tdnrbc::sem1d::{Geometry, ModeSystem};

fn main() -> tdnrbc::Result<()> {
    let g = Geometry { cloak: None, ..Geometry::default() };
    let mesh = Arc::new(g.mesh(20, 12)?);
    for l in [1, 5, 10] {
        let sys = ModeSystem::assemble(l, mesh.clone(), g)?;
        let int = ModeIntegrator::new(&sys, NewmarkParams { dt: 2e-3, ..Default::default() }, None)?;
        let v0: Vec<Complex64> = mesh
            .nodes()
            .iter()
            .map(|&r| Complex64::new((-((r - 0.5) / 0.08).powi(2)).exp(), 0.0))
            .collect();
        let zero = vec![Complex64::new(0.0, 0.0); v0.len()];
        let mut st = int.init_state(v0, zero.clone(), &zero);
        let e0 = sys.energy(&st.v, &st.vdot);
        print!("l = {l:>2}: energy");
        for step in 1..=1500 {
            int.step(&mut st, &zero);
            if step % 250 == 0 {
                print!(" {:.2e}", sys.energy(&st.v, &st.vdot) / e0);
            }
        }
        println!();
    }
    Ok(())
}
