//! `nlgp --config run.json [--output-dir DIR] [--seed N]`
//!
//! Exit status: 0 success, 1 config or runtime error, 2 non-convergence,
//! 3 numerical blowup.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::RunConfig;
use run::Failure;

#[derive(Debug, Parser)]
#[command(name = "nlgp", version, about = "Traveling waves of the nonlocal Gross-Pitaevskii equation")]
struct Args {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// overrides `output_dir` of the config
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// overrides `seed` of the config
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &Args) -> Result<(RunConfig, nlgp::InteractionKernel, nlgp::Grid, PathBuf), Failure> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(Failure::Config)?;
    if let Some(d) = &args.output_dir {
        cfg.output_dir = Some(d.clone());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let (kernel, grid) = cfg.validate().map_err(Failure::Config)?;
    let dir = cfg.output_dir.clone().ok_or_else(|| Failure::Config("no output_dir in config and no --output-dir".into()))?;
    Ok((cfg, kernel, grid, dir))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    // clap's own usage errors would exit with 2, which is reserved
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = load(&args).and_then(|(cfg, kernel, grid, dir)| {
        log::info!("{} on {} (N = {}, L = {})", config::name(cfg.command), kernel.name(), grid.n_points(), grid.length());
        run::execute(&cfg, &kernel, &grid, &dir)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("nlgp: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
