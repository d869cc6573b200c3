//! `serkit` — batch analytics for speech-emotion research pipelines.
//!
//! Subcommands cover feature extraction, representation probing, transcript
//! evaluation, classification/regression metrics, Fréchet-audio-distance
//! pseudo-labeling, the semi-supervised training loop, consolidated
//! reports, and a bundled numerical self-test.
//!
//! Exit codes: 0 success, 1 input or contract error (with an error JSON on
//! stderr), 2 internal invariant violation.

use clap::Parser;
use serkit_cli::{commands, out};

#[derive(Parser)]
#[command(name = "serkit", version, about = "Speech-emotion analytics toolkit")]
struct Cli {
    /// Worker threads for per-file parallel work (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: commands::Command,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own usage text; keep exit code 1 for all
            // argument problems, 0 for --help/--version
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            out::emit_error("contract", &format!("worker pool: {e}"));
            std::process::exit(1);
        }
    }
    let result = std::panic::catch_unwind(|| commands::run(cli.command));
    match result {
        Ok(Ok(())) => {}
        Ok(Err(e)) => {
            out::emit_error(e.kind(), &e.to_string());
            std::process::exit(1);
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            out::emit_error("internal", &msg);
            std::process::exit(2);
        }
    }
}
