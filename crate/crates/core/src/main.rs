use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dpsbp_wave::cli::{self, error_kind};
use dpsbp_wave::Error;

#[derive(Parser)]
#[command(name = "dpsbp-wave", version, about = "Space-time SBP solver for the damped wave equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (falls back to DPSBP_THREADS).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check the operator assumptions of one order.
    Certify {
        #[arg(long)]
        order: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn fail(e: &Error) -> ExitCode {
    let record = serde_json::json!({ "error": error_kind(e), "message": e.to_string() });
    eprintln!("{record}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Cli::parse();
    match args.command {
        Command::Run { config, out, threads } => {
            let threads = match cli::resolve_threads(threads) {
                Ok(t) => t,
                Err(e) => return fail(&e),
            };
            if let Some(n) = threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            let cfg = match cli::parse_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let out = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            match cli::run(&cfg, &out) {
                Ok(summary) => {
                    for (flavor, rate) in &summary.rates {
                        println!("{flavor}: rate {rate:.4}");
                    }
                    if let Some(e) = summary.final_error {
                        println!("final error {e:.6e}");
                    }
                    if summary.certification_passed == Some(false) {
                        eprintln!("{}", serde_json::json!({ "error": "certification", "message": "see certify.csv" }));
                        return ExitCode::FAILURE;
                    }
                    println!("wrote {} files to {}", summary.files.len(), out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Certify { order, out } => {
            if let Err(e) = std::fs::create_dir_all(&out) {
                return fail(&e.into());
            }
            match cli::certify(order, &out) {
                Ok((reports, _)) => {
                    for r in &reports {
                        println!("{}", r.summary());
                    }
                    if reports.iter().all(|r| r.all_passed()) {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}
