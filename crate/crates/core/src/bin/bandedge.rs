use bandedge::cli::{resolve_out_dir, run, ExperimentConfig};
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectral toolkit for lattice Schrödinger operators: band extrema, lattice
/// Green functions, Birman–Schwinger spectra, bound-state solves, counting
/// checks, absorption asymptotics, and the full verification suite.
#[derive(Parser)]
#[command(name = "bandedge", version, about)]
struct Args {
    /// Subcommand: extrema | green | bs-spectrum | solve | count |
    /// asymptotics | bargmann | verify-all
    subcommand: String,
    /// Path to the JSON experiment config.
    config: PathBuf,
    /// Output directory (overrides BANDEDGE_OUT and the config).
    #[arg(long)]
    out: Option<String>,
    /// Cap the worker-pool parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cfg = match ExperimentConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let out_dir = resolve_out_dir(args.out.as_deref(), &cfg);
    match run(&args.subcommand, &cfg, &out_dir) {
        Ok(summary) => {
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(summary.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error in stage `{}`: {e}", args.subcommand);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
