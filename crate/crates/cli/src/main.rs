//! `spikeinit`: run one experiment and write its CSV, manifest and plot.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 for numerical
//! failures, 1 for anything else (I/O).

mod config;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{Experiment, ExperimentConfig, Resolved};

#[derive(Parser, Debug)]
#[command(name = "spikeinit", version, about = "Firing-rate and gradient experiments for discrete-time LIF networks")]
struct Args {
    /// Experiment to run; overrides the config file.
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// TOML file of parameter overrides (a written manifest works too).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads for Monte-Carlo repeats (default: all cores).
    #[arg(long, env = "SPIKEINIT_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();

    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let mut cfg = match &args.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => return fail(2, &e),
        },
        None => ExperimentConfig::default(),
    };
    cfg.experiment = args.experiment.or(cfg.experiment);
    cfg.seed = args.seed.or(cfg.seed);
    cfg.repeats = args.repeats.or(cfg.repeats);

    let resolved = match Resolved::from_config(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(2, &e),
    };
    let table = match experiments::run(&resolved) {
        Ok(t) => t,
        Err(e) => {
            let code = if e.is_config_error() { 2 } else { 3 };
            return fail(code, &format!("{}: {e}", resolved.experiment));
        }
    };
    match output::write_all(&args.out, &resolved, &table) {
        Ok(w) => {
            println!("{}", w.csv.display());
            println!("{}", w.manifest.display());
            if let Some(p) = w.plot {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(1, &e),
    }
}

fn fail(code: u8, e: &dyn std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}
