mod config;
mod density;
mod fail;
mod fit;
mod hyper;
mod output;
mod prior_predictive;
mod simulate;

use clap::Parser;
use config::{Command, RunConfig};
use fail::{Failure, Fallible};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Group-R2 prior diagnostics, posterior fits and simulation studies.
///
/// Every run writes `manifest.json` to the output directory. Passing it back
/// with `--config` reproduces the run's files exactly.
#[derive(Debug, Parser)]
#[command(name = "groupr2", version)]
struct Cli {
    command: Command,
    /// TOML config, or JSON if the name ends in `.json`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "GROUPR2_WORKERS")]
    workers: Option<usize>,
    /// Fit without groups: one Dirichlet over all predictors.
    #[arg(long)]
    nongrouped: bool,
}

fn resolve(cli: &Cli) -> Fallible<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(c) = cfg.command {
        if c != cli.command {
            return Err(Failure::usage(format!("config is for {c:?} but the command is {:?}", cli.command)));
        }
    }
    cfg.command = Some(cli.command);
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.nongrouped {
        cfg.fit.nongrouped = true;
    }
    config::absolutize(&mut cfg)?;
    cfg.sampler.with_seed(cfg.seed).validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Fallible<()> {
    let cfg = resolve(cli)?;
    let workers = match cli.workers {
        Some(0) => return Err(Failure::usage("--workers must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::usage(format!("creating {}: {e}", cli.out.display())))?;
    output::write_json(&cli.out.join("manifest.json"), &cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    let out: &Path = &cli.out;
    pool.install(|| match cli.command {
        Command::PriorPredictive => prior_predictive::run(&cfg, out),
        Command::Density => density::run(&cfg, out),
        Command::Fit => fit::run(&cfg, out),
        Command::Simulate => simulate::run(&cfg, out),
        Command::Hyper => hyper::run(&cfg, out),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { fail::EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
