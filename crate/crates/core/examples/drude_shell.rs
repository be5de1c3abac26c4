//! Permittivity profile of the cloak, the Drude roots, and the resulting
//! time-domain kernels across the shell.

use tdnrbc::drude::{drude_permittivity, epsilon_r, theta_kernel, DrudeParams};

fn main() -> tdnrbc::Result<()> {
    let p = DrudeParams::default();
    println!("ε_t = {:.4}", p.epsilon_t());
    println!("{:>6} {:>9} {:>24} {:>24} {:>10}", "r", "ε(r)", "ζ⁰", "ζ¹", "ε₁ − ε");
    for i in 1..=8 {
        let r = p.r1 + (p.r2 - p.r1) * i as f64 / 8.0;
        let e = epsilon_r(&p, r)?;
        let th = theta_kernel(&p, r, 1)?;
        let mismatch = (drude_permittivity(&p, r, 1, p.omega_c)? - e).norm();
        println!(
            "{r:>6.3} {e:>9.5} {:>+11.5} {:>+11.3e}i {:>+11.5} {:>+11.3e}i {mismatch:>10.1e}",
            th.zeta0.re, th.zeta0.im, th.zeta1.re, th.zeta1.im
        );
    }
    let th = theta_kernel(&p, 0.25, 1)?;
    println!("\nϑ₁(0.25, t):");
    for t in [0.0, 0.01, 0.1, 1.0, 10.0] {
        let v = th.value(t);
        println!("  t = {t:>5}: {:+.6e} {:+.6e}i", v.re, v.im);
    }
    Ok(())
}
