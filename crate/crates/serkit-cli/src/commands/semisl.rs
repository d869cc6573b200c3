//! `serkit semisl run` — the semi-supervised loop driven by a TOML config.
//!
//! The config names feature matrices (rows aligned with an ids file), a
//! gold-label CSV, acoustic/linguistic pseudo-label CSVs (or directives to
//! derive them), split fractions, seeds, and classifier hyperparameters.
//! Outputs: history CSV plus a final metrics JSON, and the resolved config.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serkit::error::{Error, Result};
use serkit::fad::{assign_pseudo_label, fit_gaussian, score_table, GaussianStats};
use serkit::matrix::read_matrix;
use serkit::semisl::{
    majority_vote, run_baseline, run_loop, select_high_confidence, BaselineConfig, BaselineKind,
    BaselinePool, DataPool, IterationHistory, LabeledExample, LoopConfig, PseudoLabelRecord,
    TrainConfig, TwoViewSplit, UnlabeledExample,
};

use crate::out;

#[derive(Subcommand)]
pub enum SemislCmd {
    /// Run the loop (or a baseline) as declared by the config.
    Run(RunArgs),
}

#[derive(Args, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Override the config's baseline selection
    /// (none|supervised_full|supervised_limited|decision_merging|co_training).
    #[arg(long)]
    baseline: Option<String>,
    /// Derive acoustic pseudo-labels with the FAD path instead of reading
    /// them from a CSV (uses the [acoustic_derive] config section).
    #[arg(long)]
    derive_acoustic: bool,
    /// Majority-vote linguistic labels over these CSVs (overrides the
    /// config's linguistic sources).
    #[arg(long = "vote", num_args = 1..)]
    vote: Vec<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    seed: u64,
    #[serde(default)]
    baseline: Option<String>,
    data: DataSection,
    split: SplitSection,
    #[serde(default)]
    classifier: ClassifierSection,
    #[serde(default, rename = "loop")]
    loop_cfg: LoopSection,
    #[serde(default)]
    baseline_opts: BaselineOpts,
    #[serde(default)]
    acoustic_derive: Option<AcousticDerive>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    ids: PathBuf,
    audio_features: PathBuf,
    #[serde(default)]
    text_features: Option<PathBuf>,
    gold_labels: PathBuf,
    #[serde(default)]
    acoustic_labels: Option<PathBuf>,
    #[serde(default)]
    linguistic_labels: Option<PathBuf>,
    /// Voted with strict majority when present.
    #[serde(default)]
    linguistic_votes: Vec<PathBuf>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SplitSection {
    labeled_fraction: f64,
    validation_fraction: f64,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct ClassifierSection {
    epochs: usize,
    learning_rate: f64,
    l2: f64,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        ClassifierSection { epochs: t.epochs, learning_rate: t.learning_rate, l2: t.l2 }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct LoopSection {
    max_iters: usize,
    patience: usize,
    removal_rate: f64,
}

impl Default for LoopSection {
    fn default() -> Self {
        let l = LoopConfig::default();
        LoopSection { max_iters: l.max_iters, patience: l.patience, removal_rate: l.removal_rate }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct BaselineOpts {
    threshold: f64,
}

impl Default for BaselineOpts {
    fn default() -> Self {
        BaselineOpts { threshold: 0.5 }
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct AcousticDerive {
    labeled_dir: PathBuf,
    unlabeled_dir: PathBuf,
    encoders: Vec<String>,
    #[serde(default)]
    shrinkage: f64,
}

fn read_ids(path: &Path) -> Result<Vec<String>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ids: Vec<String> = body.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
    if ids.is_empty() {
        return Err(Error::contract(format!("no ids in {}", path.display())));
    }
    let unique: BTreeSet<&String> = ids.iter().collect();
    if unique.len() != ids.len() {
        return Err(Error::contract(format!("duplicate ids in {}", path.display())));
    }
    Ok(ids)
}

/// Read an `id,label` CSV (optional header) into a map.
fn read_label_csv(path: &Path) -> Result<BTreeMap<String, String>> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (idx, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if idx == 0 && cells == ["id", "label"] {
            continue;
        }
        if cells.len() != 2 {
            return Err(Error::format_at("label CSV", idx + 1, "expected id,label"));
        }
        if map.insert(cells[0].to_string(), cells[1].to_string()).is_some() {
            return Err(Error::format_at(
                "label CSV",
                idx + 1,
                format!("duplicate id {:?}", cells[0]),
            ));
        }
    }
    if map.is_empty() {
        return Err(Error::contract(format!("no labels in {}", path.display())));
    }
    Ok(map)
}

/// FAD acoustic path: per-utterance embeddings under
/// `<unlabeled_dir>/<encoder>/<id>.emat` are labeled against pooled class
/// embeddings under `<labeled_dir>/<class>/<encoder>.emat`.
fn derive_acoustic_labels(
    spec: &AcousticDerive,
    ids: &[String],
) -> Result<BTreeMap<String, String>> {
    let mut classes = Vec::new();
    let entries =
        std::fs::read_dir(&spec.labeled_dir).map_err(|e| Error::io(&spec.labeled_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&spec.labeled_dir, e))?;
        if entry.path().is_dir() {
            classes.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    classes.sort();
    if classes.is_empty() {
        return Err(Error::contract("no class subdirectories for acoustic derivation"));
    }
    let mut labeled_stats: BTreeMap<String, BTreeMap<String, GaussianStats>> = BTreeMap::new();
    for class in &classes {
        let mut per_encoder = BTreeMap::new();
        for encoder in &spec.encoders {
            let path = spec.labeled_dir.join(class).join(format!("{encoder}.emat"));
            per_encoder
                .insert(encoder.clone(), fit_gaussian(&read_matrix(&path)?, spec.shrinkage)?);
        }
        labeled_stats.insert(class.clone(), per_encoder);
    }
    let mut labels = BTreeMap::new();
    for id in ids {
        let mut unlabeled_stats = BTreeMap::new();
        let mut missing = false;
        for encoder in &spec.encoders {
            let path = spec.unlabeled_dir.join(encoder).join(format!("{id}.emat"));
            if !path.is_file() {
                missing = true;
                break;
            }
            unlabeled_stats
                .insert(encoder.clone(), fit_gaussian(&read_matrix(&path)?, spec.shrinkage)?);
        }
        if missing {
            continue;
        }
        let table = score_table(&labeled_stats, &unlabeled_stats)?;
        labels.insert(id.clone(), assign_pseudo_label(&table)?.class);
    }
    Ok(labels)
}

#[derive(Serialize)]
struct FinalMetrics<'a> {
    mode: String,
    seed: u64,
    history: Option<&'a IterationHistory>,
    baseline: Option<&'a serkit::semisl::BaselineReport>,
    labeled: usize,
    high_conf: usize,
    low_conf: usize,
    validation: usize,
}

fn history_csv(history: &IterationHistory) -> String {
    let mut csv = String::from("iteration,validation_ua,high_conf,low_conf,promoted,removed\n");
    for r in &history.iterations {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iteration, r.validation_ua, r.high_conf, r.low_conf, r.promoted, r.removed
        ));
    }
    csv
}

fn run_run(args: RunArgs) -> Result<()> {
    let body = std::fs::read_to_string(&args.config).map_err(|e| Error::io(&args.config, e))?;
    let config: RunConfig = toml::from_str(&body).map_err(|e| {
        Error::Format { format: "TOML", line: None, detail: e.to_string() }
    })?;
    if !(0.0..=1.0).contains(&config.split.labeled_fraction)
        || !(0.0..=1.0).contains(&config.split.validation_fraction)
    {
        return Err(Error::contract("split fractions must lie in [0, 1]"));
    }

    let ids = read_ids(&config.data.ids)?;
    let audio = read_matrix(&config.data.audio_features)?;
    if audio.rows() != ids.len() {
        return Err(Error::contract(format!(
            "audio features have {} rows for {} ids",
            audio.rows(),
            ids.len()
        )));
    }
    let text = config.data.text_features.as_deref().map(read_matrix).transpose()?;
    if let Some(t) = &text {
        if t.rows() != ids.len() {
            return Err(Error::contract(format!(
                "text features have {} rows for {} ids",
                t.rows(),
                ids.len()
            )));
        }
    }
    let dim_a = audio.cols();
    // early fusion: concatenate audio and text embeddings per row
    let features: Vec<Vec<f64>> = (0..ids.len())
        .map(|r| {
            let mut row = audio.row(r).to_vec();
            if let Some(t) = &text {
                row.extend_from_slice(t.row(r));
            }
            row
        })
        .collect();

    let gold = read_label_csv(&config.data.gold_labels)?;
    let acoustic: BTreeMap<String, String> = if args.derive_acoustic {
        let spec = config.acoustic_derive.as_ref().ok_or_else(|| {
            Error::contract("--derive-acoustic needs an [acoustic_derive] config section")
        })?;
        derive_acoustic_labels(spec, &ids)?
    } else if let Some(path) = &config.data.acoustic_labels {
        read_label_csv(path)?
    } else {
        BTreeMap::new()
    };
    let vote_files: &[PathBuf] =
        if args.vote.is_empty() { &config.data.linguistic_votes } else { &args.vote };
    let linguistic: BTreeMap<String, Option<String>> = if !vote_files.is_empty() {
        let sets: Vec<BTreeMap<String, String>> =
            vote_files.iter().map(|p| read_label_csv(p)).collect::<Result<_>>()?;
        majority_vote(&sets)?
    } else if let Some(path) = &config.data.linguistic_labels {
        read_label_csv(path)?
            .into_iter()
            .map(|(k, v)| (k, Some(v)))
            .collect()
    } else {
        BTreeMap::new()
    };

    // deterministic split: shuffle gold-labeled ids, carve validation, then
    // the labeled fraction; everything else is the unlabeled pool
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut gold_ids: Vec<&String> = ids.iter().filter(|id| gold.contains_key(*id)).collect();
    gold_ids.shuffle(&mut rng);
    let n_valid = ((gold_ids.len() as f64) * config.split.validation_fraction).round() as usize;
    let n_labeled =
        (((gold_ids.len() - n_valid) as f64) * config.split.labeled_fraction).round() as usize;
    let valid_set: BTreeSet<&String> = gold_ids.iter().take(n_valid).copied().collect();
    let labeled_set: BTreeSet<&String> =
        gold_ids.iter().skip(n_valid).take(n_labeled).copied().collect();

    let idx_of: HashMap<&String, usize> = ids.iter().zip(0..).collect();
    let mut labeled = Vec::new();
    let mut validation = Vec::new();
    let mut unlabeled = Vec::new();
    let mut records = Vec::new();
    let mut missing_acoustic = 0usize;
    for id in &ids {
        let row = features[idx_of[id]].clone();
        if valid_set.contains(id) {
            validation.push(LabeledExample { id: id.clone(), features: row, label: gold[id].clone() });
        } else if labeled_set.contains(id) {
            labeled.push(LabeledExample { id: id.clone(), features: row, label: gold[id].clone() });
        } else {
            match acoustic.get(id) {
                Some(a) => {
                    records.push(PseudoLabelRecord {
                        id: id.clone(),
                        acoustic: a.clone(),
                        linguistic: linguistic.get(id).cloned().flatten(),
                        model: None,
                    });
                    unlabeled.push(UnlabeledExample { id: id.clone(), features: row });
                }
                None => missing_acoustic += 1,
            }
        }
    }

    let baseline_name = args.baseline.clone().or(config.baseline.clone());
    let train = TrainConfig {
        epochs: config.classifier.epochs,
        learning_rate: config.classifier.learning_rate,
        l2: config.classifier.l2,
    };

    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let metrics_path = args.out_dir.join("metrics.json");

    match baseline_name.as_deref() {
        None | Some("none") => {
            // multi-view selection splits the unlabeled pool
            let (high_pairs, low_ids) = select_high_confidence(&records);
            let low_set: BTreeSet<&String> = low_ids.iter().collect();
            let high_labels: BTreeMap<&String, &String> =
                high_pairs.iter().map(|(id, label)| (id, label)).collect();
            let mut high_conf = Vec::new();
            let mut low_conf = Vec::new();
            for e in unlabeled {
                if let Some(label) = high_labels.get(&e.id) {
                    high_conf.push(LabeledExample {
                        id: e.id,
                        features: e.features,
                        label: (*label).clone(),
                    });
                } else if low_set.contains(&e.id) {
                    low_conf.push(e);
                }
            }
            let pool = DataPool::new(labeled, high_conf, low_conf, validation)?;
            let loop_cfg = LoopConfig {
                max_iters: config.loop_cfg.max_iters,
                patience: config.loop_cfg.patience,
                removal_rate: config.loop_cfg.removal_rate,
                seed: config.seed,
                train,
            };
            let history = run_loop(&pool, &records, &loop_cfg)?;
            out::write_atomic(&args.out_dir.join("history.csv"), history_csv(&history).as_bytes())?;
            out::write_json(
                &metrics_path,
                &FinalMetrics {
                    mode: "loop".to_string(),
                    seed: config.seed,
                    history: Some(&history),
                    baseline: None,
                    labeled: pool.labeled.len(),
                    high_conf: pool.high_conf.len(),
                    low_conf: pool.low_conf.len(),
                    validation: pool.validation.len(),
                },
            )?;
        }
        Some(name) => {
            let kind = BaselineKind::parse(name)?;
            let full_gold: Vec<LabeledExample> = ids
                .iter()
                .filter(|id| !valid_set.contains(id) && gold.contains_key(*id))
                .map(|id| LabeledExample {
                    id: id.clone(),
                    features: features[idx_of[id]].clone(),
                    label: gold[id].clone(),
                })
                .collect();
            let pool = BaselinePool {
                labeled: labeled.clone(),
                unlabeled,
                full_gold,
                validation: validation.clone(),
            };
            let two_view = text.as_ref().map(|_| TwoViewSplit { dim_a });
            let cfg = BaselineConfig {
                threshold: config.baseline_opts.threshold,
                max_iters: config.loop_cfg.max_iters,
                patience: config.loop_cfg.patience,
                seed: config.seed,
                train,
            };
            let report = run_baseline(kind, &pool, two_view, &cfg)?;
            let mut csv = String::from("iteration,validation_ua\n");
            for (i, ua) in report.ua_trajectory.iter().enumerate() {
                csv.push_str(&format!("{},{}\n", i + 1, ua));
            }
            out::write_atomic(&args.out_dir.join("history.csv"), csv.as_bytes())?;
            out::write_json(
                &metrics_path,
                &FinalMetrics {
                    mode: format!("baseline:{name}"),
                    seed: config.seed,
                    history: None,
                    baseline: Some(&report),
                    labeled: pool.labeled.len(),
                    high_conf: 0,
                    low_conf: pool.unlabeled.len(),
                    validation: pool.validation.len(),
                },
            )?;
        }
    }
    if missing_acoustic > 0 {
        eprintln!(
            "{}",
            serde_json::json!({
                "warning": format!("{missing_acoustic} unlabeled ids lacked an acoustic pseudo-label and were dropped")
            })
        );
    }

    #[derive(Serialize)]
    struct Resolved<'a> {
        args: &'a RunArgs,
        config: &'a RunConfig,
    }
    out::echo_config(&metrics_path, "semisl run", &Resolved { args: &args, config: &config })?;
    println!("{}", metrics_path.display());
    Ok(())
}

pub fn run(cmd: SemislCmd) -> Result<()> {
    match cmd {
        SemislCmd::Run(args) => run_run(args),
    }
}
