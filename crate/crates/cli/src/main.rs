//! `torbesov`: configuration-driven experiment runner for the toroidal
//! operator calculus.
//!
//! Exit codes: 0 = all verdicts pass, 1 = a verdict failed (report still
//! written), 2 = configuration or usage error.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "torbesov",
    version,
    about = "Toroidal pseudodifferential calculus experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides TORBESOV_OUT and the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap the rayon worker pool.
        #[arg(long)]
        threads: Option<usize>,
        /// Print every series point, not just the verdict table.
        #[arg(long)]
        verbose: bool,
    },
    /// Run the built-in small-geometry identity battery.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn init_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        // Ignore the error if a pool already exists (tests, repeat calls).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
}

fn resolve_out_dir(flag: Option<PathBuf>, config: Option<&RunConfig>) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if let Ok(env_dir) = std::env::var("TORBESOV_OUT") {
        if !env_dir.is_empty() {
            return PathBuf::from(env_dir);
        }
    }
    if let Some(cfg) = config {
        if let Some(out) = &cfg.output {
            if let Some(dir) = &out.dir {
                return PathBuf::from(dir);
            }
        }
    }
    PathBuf::from("out")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
            verbose,
        } => {
            init_threads(threads);
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(msg) => {
                    eprintln!("config error: {msg}");
                    return ExitCode::from(2);
                }
            };
            let report = match runner::run_experiment(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    if let torbesov::Error::SmoothnessRange { .. } = e {
                        eprintln!("hint: the continuity hypothesis requires 0 < s < r");
                    }
                    return ExitCode::from(2);
                }
            };
            let prefix = cfg
                .output
                .as_ref()
                .and_then(|o| o.prefix.clone())
                .unwrap_or_else(|| cfg.experiment.to_string());
            let out_dir = resolve_out_dir(out, Some(&cfg));
            match runner::write_artifacts(&report, Some(&cfg), &out_dir, &prefix) {
                Ok(paths) => {
                    runner::print_summary(&report, verbose);
                    for p in paths {
                        println!("wrote {}", p.display());
                    }
                }
                Err(e) => {
                    eprintln!("output error: {e:#}");
                    return ExitCode::from(2);
                }
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Selftest { out, threads } => {
            init_threads(threads);
            let report = match runner::selftest_report() {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            runner::print_summary(&report, false);
            if let Some(dir) = out {
                if let Err(e) = runner::write_artifacts(&report, None, &dir, "selftest") {
                    eprintln!("output error: {e:#}");
                    return ExitCode::from(2);
                }
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}
