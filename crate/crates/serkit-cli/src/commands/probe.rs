//! `serkit probe` — CCA similarity sweeps, pairwise layer matrices,
//! hierarchical diffs, and emotion-conditioned scores.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::Serialize;
use serkit::cca::{
    emotion_conditioned_cca, hierarchical_cca_diff, layer_similarity_sweep,
    pairwise_layer_correlation, Reduction, DEFAULT_REG,
};
use serkit::dsp::{hierarchical_aggregate, AggregateLevel};
use serkit::error::{Error, Result};
use serkit::matrix::{read_matrix, write_csv_matrix_to, Matrix};

use crate::out;

#[derive(Subcommand)]
pub enum ProbeCmd {
    /// Per-layer similarity against one feature matrix.
    Sweep(SweepArgs),
    /// Symmetric layer × layer similarity matrix.
    Pairwise(PairwiseArgs),
    /// Frame/phone/word similarity differences for one representation.
    Hier(HierArgs),
    /// Per-class similarity from class-keyed matrix directories.
    Emotion(EmotionArgs),
}

fn parse_reduction(s: &str) -> Result<Reduction> {
    match s {
        "mean" => Ok(Reduction::Mean),
        "top1" => Ok(Reduction::Top1),
        other => Err(Error::contract(format!("unknown reduction {other:?} (mean|top1)"))),
    }
}

#[derive(Args, Serialize)]
pub struct SweepArgs {
    /// Feature matrix (CSV or EMAT).
    #[arg(long)]
    features: PathBuf,
    /// Layer matrices in layer order.
    #[arg(long = "layer", required = true, num_args = 1..)]
    layers: Vec<PathBuf>,
    #[arg(long)]
    out_csv: PathBuf,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long, default_value = "mean")]
    reduction: String,
    #[arg(long, default_value_t = DEFAULT_REG)]
    reg: f64,
}

#[derive(Serialize)]
struct SweepReport {
    reduction: String,
    reg: f64,
    scores: Vec<f64>,
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let reduction = parse_reduction(&args.reduction)?;
    let features = read_matrix(&args.features)?;
    let layers: Vec<Matrix> = args.layers.iter().map(|p| read_matrix(p)).collect::<Result<_>>()?;
    let sweep = layer_similarity_sweep(&layers, &features, args.reg, reduction)?;
    let mut csv = String::from("layer,similarity\n");
    for (i, s) in sweep.scores.iter().enumerate() {
        csv.push_str(&format!("{i},{s}\n"));
    }
    out::write_atomic(&args.out_csv, csv.as_bytes())?;
    if let Some(json) = &args.out_json {
        out::write_json(
            json,
            &SweepReport { reduction: args.reduction.clone(), reg: args.reg, scores: sweep.scores },
        )?;
    }
    out::echo_config(&args.out_csv, "probe sweep", &args)?;
    println!("{}", args.out_csv.display());
    Ok(())
}

#[derive(Args, Serialize)]
pub struct PairwiseArgs {
    /// Layer matrices in layer order (repeat the flag; at least two layers).
    #[arg(long = "layer", required = true, num_args = 1..)]
    layers: Vec<PathBuf>,
    #[arg(long)]
    out_csv: PathBuf,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long, default_value = "mean")]
    reduction: String,
    #[arg(long, default_value_t = DEFAULT_REG)]
    reg: f64,
}

#[derive(Serialize)]
struct PairwiseReport {
    reduction: String,
    reg: f64,
    layers: usize,
    /// Row-major symmetric similarity matrix.
    matrix: Vec<Vec<f64>>,
}

fn run_pairwise(args: PairwiseArgs) -> Result<()> {
    let reduction = parse_reduction(&args.reduction)?;
    let layers: Vec<Matrix> = args.layers.iter().map(|p| read_matrix(p)).collect::<Result<_>>()?;
    let matrix = pairwise_layer_correlation(&layers, args.reg, reduction)?;
    let mut body = Vec::new();
    write_csv_matrix_to(&matrix, &mut body).map_err(|e| Error::io(&args.out_csv, e))?;
    out::write_atomic(&args.out_csv, &body)?;
    if let Some(json) = &args.out_json {
        let rows = matrix.iter_rows().map(<[f64]>::to_vec).collect();
        out::write_json(
            json,
            &PairwiseReport {
                reduction: args.reduction.clone(),
                reg: args.reg,
                layers: layers.len(),
                matrix: rows,
            },
        )?;
    }
    out::echo_config(&args.out_csv, "probe pairwise", &args)?;
    println!("{}", args.out_csv.display());
    Ok(())
}

#[derive(Args, Serialize)]
pub struct HierArgs {
    /// Representation matrix (frame-aligned).
    #[arg(long)]
    reps: PathBuf,
    /// Frame-level feature matrix; phone and word levels are derived.
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "mean")]
    reduction: String,
    #[arg(long, default_value_t = DEFAULT_REG)]
    reg: f64,
}

fn run_hier(args: HierArgs) -> Result<()> {
    let reduction = parse_reduction(&args.reduction)?;
    let reps = read_matrix(&args.reps)?;
    let frame = read_matrix(&args.features)?;
    let phone = hierarchical_aggregate(&frame, AggregateLevel::Phone)?;
    let word = hierarchical_aggregate(&frame, AggregateLevel::Word)?;
    let diff = hierarchical_cca_diff(&reps, &frame, &phone, &word, args.reg, reduction)?;
    out::write_json(&args.out, &diff)?;
    out::echo_config(&args.out, "probe hier", &args)?;
    println!("{}", args.out.display());
    Ok(())
}

#[derive(Args, Serialize)]
pub struct EmotionArgs {
    /// Directory of <class>.emat/<class>.csv representation matrices.
    #[arg(long)]
    reps_dir: PathBuf,
    /// Directory of <class>.emat/<class>.csv feature matrices.
    #[arg(long)]
    features_dir: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    min_rows: usize,
    #[arg(long, default_value = "mean")]
    reduction: String,
    #[arg(long, default_value_t = DEFAULT_REG)]
    reg: f64,
}

#[derive(Serialize)]
struct EmotionReport {
    scores: BTreeMap<String, f64>,
    skipped: Vec<String>,
}

fn read_class_dir(dir: &PathBuf) -> Result<BTreeMap<String, Matrix>> {
    let mut map = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if ext != "emat" && ext != "csv" {
            continue;
        }
        let class = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Error::contract(format!("unnameable file {}", path.display())))?;
        map.insert(class, read_matrix(&path)?);
    }
    if map.is_empty() {
        return Err(Error::contract(format!("no .emat/.csv matrices in {}", dir.display())));
    }
    Ok(map)
}

fn run_emotion(args: EmotionArgs) -> Result<()> {
    let reduction = parse_reduction(&args.reduction)?;
    let reps = read_class_dir(&args.reps_dir)?;
    let feats = read_class_dir(&args.features_dir)?;
    let result = emotion_conditioned_cca(&reps, &feats, args.min_rows, args.reg, reduction)?;
    out::write_json(&args.out, &EmotionReport { scores: result.scores, skipped: result.skipped })?;
    out::echo_config(&args.out, "probe emotion", &args)?;
    println!("{}", args.out.display());
    Ok(())
}

pub fn run(cmd: ProbeCmd) -> Result<()> {
    match cmd {
        ProbeCmd::Sweep(args) => run_sweep(args),
        ProbeCmd::Pairwise(args) => run_pairwise(args),
        ProbeCmd::Hier(args) => run_hier(args),
        ProbeCmd::Emotion(args) => run_emotion(args),
    }
}
