//! Command-line entry point: `sis-inverse <verb> --config <path>`.

use std::process::ExitCode;

use clap::Parser;

use sis_inverse::config::parse_config;
use sis_inverse::run::{run, RunOptions, Verb};

/// SIS reaction-diffusion toolkit: forward runs, adjoint checks,
/// coefficient inversion and regularization sweeps.
#[derive(Parser, Debug)]
#[command(name = "sis-inverse", version, about)]
struct Cli {
    /// Run verb: forward, adjoint-check, invert or sweep.
    verb: Verb,

    /// Path to the run configuration file.
    #[arg(long)]
    config: String,

    /// Output directory (overrides output.dir from the config).
    #[arg(long)]
    out: Option<String>,

    /// Twin seed override (overrides twin.seed from the config).
    #[arg(long)]
    seed: Option<u64>,

    /// Export every n-th trajectory slice in forward runs
    /// (0 exports only the final slice).
    #[arg(long, default_value_t = 0)]
    slices: usize,
}

fn main() -> ExitCode {
    // Usage problems count as validation failures (exit 1); --help and
    // --version keep their conventional success status.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let text = match std::fs::read_to_string(&cli.config) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read config {}: {e}", cli.config);
            return ExitCode::from(1);
        }
    };
    let config = match parse_config(&text) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let opts = RunOptions {
        out: cli.out,
        seed: cli.seed,
        slices: cli.slices,
    };
    match run(cli.verb, &config, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
