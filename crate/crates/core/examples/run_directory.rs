//! Parses a scenario from config text, runs it into a directory, and
//! re-samples the saved field on a finer grid.
//!
//! `cargo run --release --example run_directory -- /tmp/tdnrbc-run`

use std::path::PathBuf;

use tdnrbc::config::{parse_config, render_config};
use tdnrbc::output::{export_slice, simulate};

const CONFIG: &str = "\
incident.type = pulse
incident.k = 20
incident.tc = 1.5
disc.E = 12
disc.N = 6
disc.L = 8
disc.dt = 0.004
disc.t_end = 2
snapshots = [1, 2]
slice.n = 41
diagnostics.interval = 0.25
";

fn main() -> tdnrbc::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("tdnrbc-run"), PathBuf::from);
    let scenario = parse_config(CONFIG)?;
    println!("resolved config:\n{}", render_config(&scenario));
    let summary = simulate(&scenario, &dir)?;
    for (t, s) in &summary.shielding {
        println!("t = {t}: S = {s:.3e}");
    }
    let field = dir.join("fields").join("t_2.000.bin");
    let fine = export_slice(&field, Some(101), Some(0.5))?;
    println!("{} points re-sampled from {}", fine.points.len(), field.display());
    Ok(())
}
