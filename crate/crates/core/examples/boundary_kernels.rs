//! Exponential-sum boundary kernels and the cross-check of their two
//! representations on the test signal `sin⁶(8t)`.

use tdnrbc::nrbk::{kernel_crosscheck, omega_kernel, rho_kernel, sigma_kernel};

fn main() -> tdnrbc::Result<()> {
    let (b, c) = (3.0, 5.0);
    for l in [1, 4] {
        let s = sigma_kernel(l, b, c)?;
        let r = rho_kernel(l, b, c)?;
        let o = omega_kernel(l, b, c)?;
        println!("l = {l}");
        println!("  σ(0) = {:.6}, slowest decay rate {:.4}", s.smooth(0.0).re, -s.max_real_pole());
        println!("  ρ: {} poles, delta coefficient {:.3e}", r.len(), r.delta_coeff.norm());
        println!("  ω: delta coefficient {:.6}", o.delta_coeff.re);
    }
    let ts = [1.0, 2.0, 4.0, 10.0];
    println!("\n  l  {:>10} {:>10} {:>10} {:>10}", "t=1", "t=2", "t=4", "t=10");
    for l in [1, 5, 10, 15, 30, 50] {
        let e = kernel_crosscheck(l, b, c, &ts)?;
        println!("{l:>3}  {:>10.2e} {:>10.2e} {:>10.2e} {:>10.2e}", e[0], e[1], e[2], e[3]);
    }
    Ok(())
}
