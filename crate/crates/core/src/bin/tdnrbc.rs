use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use tdnrbc::config::load_config;
use tdnrbc::convolve::richardson_study;
use tdnrbc::output::{export_slice, kernel_table_csv, richardson_csv, simulate, slice_csv, write_atomic, zeros_csv};
use tdnrbc::specfun::PoleKind;

#[derive(Parser)]
#[command(version, about = "Time-domain non-reflecting boundary kernels and spherical cloak simulator")]
struct Cli {
    /// Worker threads for the mode loop; TDNRBC_THREADS takes precedence.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    K,
    Combined,
}

#[derive(Subcommand)]
enum Command {
    /// Pole tables `l,j,re,im,residual` for 1 ≤ l ≤ lmax.
    Zeros {
        #[arg(long, value_enum, default_value = "k")]
        kind: Kind,
        #[arg(long, default_value_t = 10)]
        lmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative discrepancy `l,t,e` between the two evaluations of the boundary convolution.
    KernelTest {
        #[arg(long, default_value_t = 3.0)]
        b: f64,
        #[arg(long, default_value_t = 5.0)]
        c: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,15,30,50")]
        l: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,10")]
        t: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Step-halving study of the recursive convolution against its closed form.
    ConvolveTest {
        #[arg(long, default_value_t = 5)]
        l: usize,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Frequency `a` of the signal `sin(a t)`.
        #[arg(long, default_value_t = 2.0)]
        freq: f64,
        #[arg(long, default_value_t = 2.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        #[arg(long, default_value_t = 5)]
        levels: usize,
    },
    /// Runs a cloak scenario into a run directory.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-samples a saved modal field on a new slice grid.
    SliceExport {
        /// A `fields/t_*.bin` file from a run directory.
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        extent: Option<f64>,
        /// Writes region labels and every complex component.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<Option<usize>> {
    match std::env::var("TDNRBC_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("TDNRBC_THREADS must be a positive integer, got `{v}`"),
        },
        Err(_) => Ok(flag),
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(n) = thread_count(cli.threads)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Zeros { kind, lmax, out } => {
            let kind = match kind {
                Kind::K => PoleKind::K,
                Kind::Combined => PoleKind::Combined,
            };
            emit(&zeros_csv(kind, lmax)?, out.as_ref())
        }
        Command::KernelTest { b, c, l, t, out } => emit(&kernel_table_csv(b, c, &l, &t)?, out.as_ref()),
        Command::ConvolveTest { l, b, c, freq, t_end, dt, levels } => {
            emit(&richardson_csv(&richardson_study(l, b, c, freq, t_end, dt, levels)?), None)
        }
        Command::Simulate { config, out } => {
            let scenario = load_config(&config).with_context(|| format!("reading {}", config.display()))?;
            let summary = simulate(&scenario, &out)?;
            for (t, s) in summary.shielding {
                info!("t = {t}: shielding S = {s:.4e}");
            }
            Ok(())
        }
        Command::SliceExport { field, n, extent, full, out } => {
            let snap = export_slice(&field, n, extent).with_context(|| format!("reading {}", field.display()))?;
            emit(&slice_csv(&snap, full), out.as_ref())
        }
    }
}
