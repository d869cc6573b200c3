//! Subcommand definitions and dispatch.

pub mod asr;
pub mod fad;
pub mod features;
pub mod metrics;
pub mod probe;
pub mod report;
pub mod selftest;
pub mod semisl;

use clap::Subcommand;
use serkit::error::Result;

#[derive(Subcommand)]
pub enum Command {
    /// Extract paralinguistic features from WAV files.
    #[command(subcommand)]
    Features(features::FeaturesCmd),
    /// CCA similarity probing of representation matrices.
    #[command(subcommand)]
    Probe(probe::ProbeCmd),
    /// Transcript quality metrics and word-level analytics.
    #[command(subcommand)]
    Asr(asr::AsrCmd),
    /// Classification / regression / sentiment-score metrics.
    #[command(subcommand)]
    Metrics(metrics::MetricsCmd),
    /// Fréchet audio distance scoring and pseudo-labeling.
    #[command(subcommand)]
    Fad(fad::FadCmd),
    /// Semi-supervised training loop and baselines.
    #[command(subcommand)]
    Semisl(semisl::SemislCmd),
    /// Consolidate upstream JSON artifacts into one report.
    Report(report::ReportArgs),
    /// Run the bundled numerical oracle suite.
    Selftest,
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Features(cmd) => features::run(cmd),
        Command::Probe(cmd) => probe::run(cmd),
        Command::Asr(cmd) => asr::run(cmd),
        Command::Metrics(cmd) => metrics::run(cmd),
        Command::Fad(cmd) => fad::run(cmd),
        Command::Semisl(cmd) => semisl::run(cmd),
        Command::Report(args) => report::run(args),
        Command::Selftest => selftest::run(),
    }
}
