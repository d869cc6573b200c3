//! `serkit features` — WAV feature extraction, hierarchical aggregation,
//! and percentile bucketing.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serkit::dsp::{
    bucketize_by_percentile, extract_features, hierarchical_aggregate, AggregateLevel, DspConfig,
    FrameConfig, PitchConfig, WindowKind,
};
use serkit::error::{Error, Result};
use serkit::matrix::{read_matrix, write_csv_matrix_to, write_emat_to, Matrix};

use crate::out;

fn write_matrix_atomic(matrix: &Matrix, path: &Path, emat: bool) -> Result<()> {
    let mut body = Vec::new();
    if emat {
        write_emat_to(matrix, &mut body).map_err(|e| Error::io(path, e))?;
    } else {
        write_csv_matrix_to(matrix, &mut body).map_err(|e| Error::io(path, e))?;
    }
    out::write_atomic(path, &body)
}

#[derive(Subcommand)]
pub enum FeaturesCmd {
    /// Extract the per-frame feature matrix plus jitter/shimmer sidecar.
    Extract(ExtractArgs),
    /// Aggregate a frame-level matrix to phone or word level.
    Aggregate(AggregateArgs),
    /// Bucket a single column of values into low/mid/high percentile bands.
    Bucketize(BucketizeArgs),
}

#[derive(Args, Serialize)]
pub struct ExtractArgs {
    /// Input WAV files (16-bit PCM mono).
    #[arg(long = "wav", required = true, num_args = 1..)]
    wavs: Vec<PathBuf>,
    /// Output file for a single input (CSV, or EMAT with --emat).
    #[arg(long, conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    /// Output directory for batch extraction (<stem>.features.csv + <stem>.sidecar.json).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the feature matrix as EMAT instead of CSV.
    #[arg(long)]
    emat: bool,
    /// Average stereo channels instead of rejecting them.
    #[arg(long)]
    downmix: bool,
    #[arg(long, default_value_t = 25.0)]
    frame_ms: f64,
    #[arg(long, default_value_t = 10.0)]
    hop_ms: f64,
    /// Analysis window: hann or hamming.
    #[arg(long, default_value = "hann")]
    window: String,
    #[arg(long, default_value_t = 60.0)]
    f0_min: f64,
    #[arg(long, default_value_t = 500.0)]
    f0_max: f64,
    #[arg(long, default_value_t = 0.45)]
    voicing_threshold: f64,
    #[arg(long, default_value_t = 40)]
    n_mfcc: usize,
    #[arg(long, default_value_t = 64)]
    n_mels: usize,
}

#[derive(Serialize)]
struct Sidecar {
    source: String,
    sample_rate: u32,
    frames: usize,
    jitter_local: Option<f64>,
    shimmer_local: Option<f64>,
    skipped_formant_frames: usize,
    unavailable: Vec<String>,
}

fn dsp_config(args: &ExtractArgs) -> Result<DspConfig> {
    Ok(DspConfig {
        frame: FrameConfig {
            frame_len_ms: args.frame_ms,
            hop_ms: args.hop_ms,
            window: WindowKind::parse(&args.window)?,
        },
        pitch: PitchConfig {
            f0_min: args.f0_min,
            f0_max: args.f0_max,
            voicing_threshold: args.voicing_threshold,
            ..PitchConfig::default()
        },
        n_mfcc: args.n_mfcc,
        n_mels: args.n_mels,
        hnr_floor_db: -100.0,
    })
}

fn extract_one(
    wav: &Path,
    matrix_out: &Path,
    sidecar_out: &Path,
    args: &ExtractArgs,
    cfg: &DspConfig,
) -> Result<()> {
    let audio = serkit::audio::read_wav(wav, args.downmix)?;
    let features = extract_features(&audio, cfg)?;
    // EMAT carries no column names; the documented order is fixed
    write_matrix_atomic(&features.matrix, matrix_out, args.emat)?;
    let sidecar = Sidecar {
        source: wav.display().to_string(),
        sample_rate: audio.sample_rate,
        frames: features.matrix.rows(),
        jitter_local: features.jitter_local,
        shimmer_local: features.shimmer_local,
        skipped_formant_frames: features.skipped_formant_frames,
        unavailable: features.unavailable,
    };
    out::write_json(sidecar_out, &sidecar)
}

fn run_extract(args: ExtractArgs) -> Result<()> {
    let cfg = dsp_config(&args)?;
    let ext = if args.emat { "emat" } else { "csv" };
    let jobs: Vec<(PathBuf, PathBuf, PathBuf)> = match (&args.out, &args.out_dir) {
        (Some(out), None) => {
            if args.wavs.len() != 1 {
                return Err(Error::contract("--out requires exactly one --wav; use --out-dir for batches"));
            }
            let sidecar = out.with_extension("sidecar.json");
            vec![(args.wavs[0].clone(), out.clone(), sidecar)]
        }
        (None, Some(dir)) => args
            .wavs
            .iter()
            .map(|wav| {
                let stem = wav
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "audio".to_string());
                (
                    wav.clone(),
                    dir.join(format!("{stem}.features.{ext}")),
                    dir.join(format!("{stem}.sidecar.json")),
                )
            })
            .collect(),
        _ => return Err(Error::contract("pass exactly one of --out or --out-dir")),
    };
    let primary = jobs[0].1.clone();
    jobs.par_iter()
        .map(|(wav, matrix_out, sidecar_out)| extract_one(wav, matrix_out, sidecar_out, &args, &cfg))
        .collect::<Result<Vec<()>>>()?;
    out::echo_config(&primary, "features extract", &args)?;
    for (_, matrix_out, _) in &jobs {
        println!("{}", matrix_out.display());
    }
    Ok(())
}

#[derive(Args, Serialize)]
pub struct AggregateArgs {
    /// Frame-level matrix (CSV or EMAT).
    #[arg(long)]
    input: PathBuf,
    /// Target level: phone (5 frames) or word (5 phones).
    #[arg(long)]
    level: String,
    #[arg(long)]
    out: PathBuf,
    /// Write EMAT instead of CSV.
    #[arg(long)]
    emat: bool,
}

fn run_aggregate(args: AggregateArgs) -> Result<()> {
    let level = match args.level.as_str() {
        "phone" => AggregateLevel::Phone,
        "word" => AggregateLevel::Word,
        other => return Err(Error::contract(format!("unknown level {other:?} (phone|word)"))),
    };
    let input = read_matrix(&args.input)?;
    let output = hierarchical_aggregate(&input, level)?;
    write_matrix_atomic(&output, &args.out, args.emat)?;
    out::echo_config(&args.out, "features aggregate", &args)?;
    println!("{}", args.out.display());
    Ok(())
}

#[derive(Args, Serialize)]
pub struct BucketizeArgs {
    /// Single-column CSV (or any matrix; use --column to select).
    #[arg(long)]
    input: PathBuf,
    /// Column index when the input has several.
    #[arg(long, default_value_t = 0)]
    column: usize,
    #[arg(long, default_value_t = 30.0)]
    low_pct: f64,
    #[arg(long, default_value_t = 30.0)]
    high_pct: f64,
    /// Output CSV: value,bucket
    #[arg(long)]
    out: PathBuf,
}

fn run_bucketize(args: BucketizeArgs) -> Result<()> {
    let matrix = read_matrix(&args.input)?;
    if args.column >= matrix.cols() {
        return Err(Error::contract(format!(
            "column {} out of range for {} columns",
            args.column,
            matrix.cols()
        )));
    }
    let values: Vec<f64> = (0..matrix.rows()).map(|r| matrix.get(r, args.column)).collect();
    let buckets = bucketize_by_percentile(&values, args.low_pct, args.high_pct)?;
    let mut body = String::from("value,bucket\n");
    for (v, b) in values.iter().zip(&buckets) {
        body.push_str(&format!("{v},{}\n", b.label()));
    }
    out::write_atomic(&args.out, body.as_bytes())?;
    out::echo_config(&args.out, "features bucketize", &args)?;
    println!("{}", args.out.display());
    Ok(())
}

pub fn run(cmd: FeaturesCmd) -> Result<()> {
    match cmd {
        FeaturesCmd::Extract(args) => run_extract(args),
        FeaturesCmd::Aggregate(args) => run_aggregate(args),
        FeaturesCmd::Bucketize(args) => run_bucketize(args),
    }
}
