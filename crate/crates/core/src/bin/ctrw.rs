use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ctrw::cli::{config_hash, load_config, run, write_error, Mode, Overrides};

/// Run a CTRW simulation, solver or validation suite from a TOML config.
#[derive(Parser, Debug)]
#[command(name = "ctrw", version)]
struct Args {
    /// Path to the run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override `ensemble.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Unknown config keys are errors (default).
    #[arg(long, overrides_with = "lenient")]
    strict: bool,
    /// Unknown config keys are warnings.
    #[arg(long, overrides_with = "strict")]
    lenient: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mode = if args.lenient { Mode::Lenient } else { Mode::Strict };
    let overrides = Overrides {
        seed: args.seed,
        workers: args.workers,
        out: args.out.clone(),
    };
    let fallback_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let parsed = match load_config(&args.config, mode, &overrides) {
        Ok(p) => p,
        Err(e) => return fail(&fallback_dir, None, &e),
    };
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    let hash = config_hash(&parsed.config);
    let dir = parsed.config.output.dir.clone();
    match run(&parsed.config, parsed.warnings.clone()) {
        Ok(report) => {
            for w in report.warnings.iter().skip(parsed.warnings.len()) {
                eprintln!("warning: {w}");
            }
            for a in &report.artifacts {
                println!("{}", a.display());
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("validation failed");
                ExitCode::from(1)
            }
        }
        Err(e) => fail(&dir, Some(&hash), &e),
    }
}

fn fail(dir: &std::path::Path, hash: Option<&str>, e: &ctrw::Error) -> ExitCode {
    eprintln!("error: {e}");
    if let Err(w) = write_error(dir, hash, e) {
        eprintln!("error: could not write error record: {w}");
    }
    ExitCode::from(2)
}
