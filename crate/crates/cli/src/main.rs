use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use harvest_cli::config::RunConfig;
use harvest_cli::{run, Command};

/// Continuation and verification of harvested logistic steady states.
#[derive(Debug, Parser)]
#[command(name = "bifurcate", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Proceed even when the model hypotheses fail.
    #[arg(long)]
    force: bool,
    /// Output directory, overriding `[output] directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = std::env::var("BIFURCATE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("bifurcate: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = RunConfig::load(&args.config).and_then(|cfg| run(args.command, &cfg, args.out.as_deref(), args.force));
    match outcome {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("bifurcate: {e}");
            ExitCode::from(1)
        }
    }
}
