//! A short, coarse cloak run: matched against detuned incidence, comparing
//! the peak field inside the cloaked ball.
//!
//! `cargo run --release --example cloak_scenario`

use tdnrbc::cloaksim::{run, Discretization, Scenario};

fn main() -> tdnrbc::Result<()> {
    let disc = Discretization { degree: 8, l_max: 12, dt: 2e-3, t_end: 4.0, ..Discretization::desk() };
    for (name, base) in [("matched k = 40", Scenario::default()), ("detuned k = 38", Scenario::monochromatic(38.0))] {
        let sc = Scenario { disc, snapshot_times: vec![], diagnostics_interval: 0.5, ..base };
        let out = run(&sc)?;
        println!("{name}");
        for d in &out.diagnostics {
            println!(
                "  t = {:>4.1}: S = {:.3e}, interior energy {:.3e}, exterior energy {:.3e}",
                d.time, d.shielding, d.interior_energy, d.exterior_energy
            );
        }
    }
    Ok(())
}
