use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tvvi_cli::{emit, parse_config, run_with_threads, Format, RunError};

/// Runs a tracking or dynamics experiment described by a configuration file.
#[derive(Debug, Parser)]
#[command(name = "tvvi", version)]
struct Args {
    /// Experiment configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output file; overrides `output.path`. Standard output when neither is set.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output encoding; overrides `output.format`.
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,

    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for scan commands.
    #[arg(long, env = "TVVI_THREADS")]
    threads: Option<usize>,

    /// Exit with status 3 when a run diverges.
    #[arg(long)]
    fail_on_divergence: bool,
}

fn run(args: Args) -> Result<i32, RunError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::File { path: args.config.clone(), source: e.into() })?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
        if let Some(star) = &mut cfg.star {
            star.scan.seed = seed;
        }
    }
    if args.fail_on_divergence {
        cfg.run.fail_on_divergence = true;
    }
    if let Some(f) = &args.format {
        cfg.output.format = f.parse::<Format>().expect("restricted by clap");
    }
    if let Some(out) = args.out {
        cfg.output.path = Some(out);
    }
    let outcome = run_with_threads(&cfg, args.threads.filter(|n| *n > 0))?;
    emit(&outcome.table, cfg.output.format, cfg.output.path.as_deref())?;
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e @ RunError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
