//! `serkit report` — one consolidated JSON from upstream artifact files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use serkit::error::{Error, Result};

use crate::out;

#[derive(Args, Serialize)]
pub struct ReportArgs {
    /// ASR system report JSONs (from `asr eval`).
    #[arg(long = "asr", num_args = 0..)]
    asr: Vec<PathBuf>,
    /// Probe summary JSONs.
    #[arg(long = "probe", num_args = 0..)]
    probe: Vec<PathBuf>,
    /// FAD report JSONs.
    #[arg(long = "fad", num_args = 0..)]
    fad: Vec<PathBuf>,
    /// Semi-supervised run metrics JSONs.
    #[arg(long = "semisl", num_args = 0..)]
    semisl: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Consolidated {
    tool: &'static str,
    version: &'static str,
    asr: BTreeMap<String, serde_json::Value>,
    probe: BTreeMap<String, serde_json::Value>,
    fad: BTreeMap<String, serde_json::Value>,
    semisl: BTreeMap<String, serde_json::Value>,
}

fn load_all(paths: &[PathBuf]) -> Result<BTreeMap<String, serde_json::Value>> {
    let mut map = BTreeMap::new();
    for path in paths {
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&body)
            .map_err(|e| Error::format("JSON", format!("{}: {e}", path.display())))?;
        let key = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        map.insert(key, value);
    }
    Ok(map)
}

pub fn run(args: ReportArgs) -> Result<()> {
    if args.asr.is_empty() && args.probe.is_empty() && args.fad.is_empty() && args.semisl.is_empty()
    {
        return Err(Error::contract("no inputs; pass --asr/--probe/--fad/--semisl files"));
    }
    let report = Consolidated {
        tool: "serkit",
        version: env!("CARGO_PKG_VERSION"),
        asr: load_all(&args.asr)?,
        probe: load_all(&args.probe)?,
        fad: load_all(&args.fad)?,
        semisl: load_all(&args.semisl)?,
    };
    out::write_json(&args.out, &report)?;
    out::echo_config(&args.out, "report", &args)?;
    println!("{}", args.out.display());
    Ok(())
}
