//! `serkit fad` — Fréchet-audio-distance score tables and pseudo-labels.
//!
//! Embedding layout: `--labeled <dir>` holds one subdirectory per class,
//! each containing `<encoder>.emat` (or `.csv`) with the class's pooled
//! embeddings; `--unlabeled` is either a directory of `<encoder>.emat`
//! files or, with a single encoder, one matrix file. `fad label` can also
//! skip embeddings entirely and label a precomputed `--scores` grid CSV
//! (header `encoder,Class1,Class2,...`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use serde::Serialize;
use serkit::error::{Error, Result};
use serkit::fad::{
    assign_pseudo_label, fit_gaussian, score_table, FadScoreTable, GaussianStats, PseudoLabel,
};
use serkit::matrix::read_matrix;

use crate::out;

#[derive(Subcommand)]
pub enum FadCmd {
    /// Compute the encoder × class FAD grid.
    Score(ScoreArgs),
    /// Compute (or ingest) the grid and assign the argmin pseudo-label.
    Label(LabelArgs),
}

#[derive(Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    labeled: PathBuf,
    #[arg(long)]
    unlabeled: PathBuf,
    /// Comma-separated encoder names (file stems under the class dirs).
    #[arg(long, value_delimiter = ',')]
    encoders: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    /// Covariance shrinkage toward the diagonal, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    shrinkage: f64,
    /// Also emit per-encoder min-max-normalized averages.
    #[arg(long)]
    normalized: bool,
}

#[derive(Args, Serialize)]
pub struct LabelArgs {
    /// Precomputed grid CSV: header `encoder,Class...`, one row per encoder.
    #[arg(long, conflicts_with_all = ["labeled", "unlabeled", "encoders"])]
    scores: Option<PathBuf>,
    #[arg(long, requires = "unlabeled")]
    labeled: Option<PathBuf>,
    #[arg(long, requires = "labeled")]
    unlabeled: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    encoders: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    shrinkage: f64,
    #[arg(long)]
    normalized: bool,
}

#[derive(Serialize)]
struct FadReport {
    table: FadScoreTable,
    label: PseudoLabel,
    normalized_averages: Option<Vec<f64>>,
}

fn matrix_for(dir: &Path, stem: &str) -> Result<PathBuf> {
    for ext in ["emat", "csv"] {
        let candidate = dir.join(format!("{stem}.{ext}"));
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(Error::contract(format!("no {stem}.emat or {stem}.csv under {}", dir.display())))
}

fn fit_dir(
    labeled: &Path,
    unlabeled: &Path,
    encoders: &[String],
    shrinkage: f64,
) -> Result<FadScoreTable> {
    if encoders.is_empty() {
        return Err(Error::contract("--encoders must name at least one encoder"));
    }
    let mut classes = Vec::new();
    let entries = std::fs::read_dir(labeled).map_err(|e| Error::io(labeled, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(labeled, e))?;
        if entry.path().is_dir() {
            classes.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    classes.sort();
    if classes.is_empty() {
        return Err(Error::contract(format!(
            "no class subdirectories under {}",
            labeled.display()
        )));
    }
    let mut labeled_stats: BTreeMap<String, BTreeMap<String, GaussianStats>> = BTreeMap::new();
    for class in &classes {
        let mut per_encoder = BTreeMap::new();
        for encoder in encoders {
            let path = matrix_for(&labeled.join(class), encoder)?;
            per_encoder.insert(encoder.clone(), fit_gaussian(&read_matrix(&path)?, shrinkage)?);
        }
        labeled_stats.insert(class.clone(), per_encoder);
    }
    let mut unlabeled_stats = BTreeMap::new();
    if unlabeled.is_dir() {
        for encoder in encoders {
            let path = matrix_for(unlabeled, encoder)?;
            unlabeled_stats
                .insert(encoder.clone(), fit_gaussian(&read_matrix(&path)?, shrinkage)?);
        }
    } else {
        if encoders.len() != 1 {
            return Err(Error::contract(
                "--unlabeled as a single file requires exactly one encoder",
            ));
        }
        unlabeled_stats.insert(
            encoders[0].clone(),
            fit_gaussian(&read_matrix(unlabeled)?, shrinkage)?,
        );
    }
    score_table(&labeled_stats, &unlabeled_stats)
}

/// Parse a grid CSV: header row `encoder,ClassA,ClassB,...`, then one row
/// per encoder with its scores.
fn read_grid(path: &Path) -> Result<FadScoreTable> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = body.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format("FAD grid", "empty file"))?;
    let cells: Vec<&str> = header.split(',').map(str::trim).collect();
    if cells.len() < 2 {
        return Err(Error::format("FAD grid", "header needs encoder column plus classes"));
    }
    let classes: Vec<String> = cells[1..].iter().map(|s| s.to_string()).collect();
    let mut encoders = Vec::new();
    let mut scores = Vec::new();
    for (idx, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != classes.len() + 1 {
            return Err(Error::format_at(
                "FAD grid",
                idx + 1,
                format!("expected {} cells, got {}", classes.len() + 1, cells.len()),
            ));
        }
        encoders.push(cells[0].to_string());
        let row: std::result::Result<Vec<f64>, _> =
            cells[1..].iter().map(|c| c.parse::<f64>()).collect();
        scores.push(row.map_err(|e| Error::format_at("FAD grid", idx + 1, e.to_string()))?);
    }
    FadScoreTable::from_grid(encoders, classes, scores)
}

pub fn run(cmd: FadCmd) -> Result<()> {
    match cmd {
        FadCmd::Score(args) => {
            let table = fit_dir(&args.labeled, &args.unlabeled, &args.encoders, args.shrinkage)?;
            let label = assign_pseudo_label(&table)?;
            let normalized_averages = args.normalized.then(|| table.normalized_averages());
            out::write_json(&args.out, &FadReport { table, label, normalized_averages })?;
            out::echo_config(&args.out, "fad score", &args)?;
            println!("{}", args.out.display());
            Ok(())
        }
        FadCmd::Label(args) => {
            let table = match (&args.scores, &args.labeled, &args.unlabeled) {
                (Some(grid), None, None) => read_grid(grid)?,
                (None, Some(labeled), Some(unlabeled)) => {
                    fit_dir(labeled, unlabeled, &args.encoders, args.shrinkage)?
                }
                _ => {
                    return Err(Error::contract(
                        "pass either --scores or --labeled with --unlabeled",
                    ))
                }
            };
            let label = assign_pseudo_label(&table)?;
            let normalized_averages = args.normalized.then(|| table.normalized_averages());
            out::write_json(&args.out, &FadReport { table, label, normalized_averages })?;
            out::echo_config(&args.out, "fad label", &args)?;
            println!("{}", args.out.display());
            Ok(())
        }
    }
}
