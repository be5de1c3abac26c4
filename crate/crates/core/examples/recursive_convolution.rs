//! Running `ω_l ∗ g` with one accumulator per pole, and its step-halving study.

use num_complex::Complex64;
use tdnrbc::convolve::{richardson_study, ConvolutionState};
use tdnrbc::nrbk::omega_kernel;

fn main() -> tdnrbc::Result<()> {
    let kernel = omega_kernel(5, 1.0, 1.0)?;
    let dt = 0.01;
    let g = |t: f64| Complex64::new((2.0 * t).sin(), 0.0);
    let mut state = ConvolutionState::for_kernel(&kernel, dt)?;
    for n in 0..200 {
        let t = n as f64 * dt;
        state.advance(g(t), g(t + dt));
        if (n + 1) % 50 == 0 {
            let t = state.time();
            println!("t = {t:.2}: (ω ∗ g)(t) = {:.10}", state.value(&kernel, g(t))?.re);
        }
    }
    println!("\n{:>10} {:>12} {:>8}", "dt", "error", "ratio");
    for row in richardson_study(5, 1.0, 1.0, 2.0, 2.0, 0.02, 5)? {
        let ratio = row.ratio.map_or(String::from("-"), |r| format!("{r:.4}"));
        println!("{:>10.5} {:>12.3e} {:>8}", row.dt, row.error, ratio);
    }
    Ok(())
}
