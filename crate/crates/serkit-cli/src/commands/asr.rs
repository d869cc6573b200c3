//! `serkit asr eval` — per-system transcript reports from a JSONL manifest.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::Serialize;
use serkit::asr::{
    align, bucketize_affect, class_stats, confidence_summary, gleu_counts, length_binned_wer,
    per_emotion_wer, AffectBand, BleuSegment, ClassStats, ConfidenceSummary, EditAlignment,
    LengthBinRow, PerEmotionWer, UtteranceEval, WerPooling,
};
use serkit::error::{Error, Result};
use serkit::lexicon::{read_affect_lexicon, read_class_lexicon, ClassLexicon};
use serkit::manifest::{read_manifest, UtteranceRecord};

use crate::out;

#[derive(Subcommand)]
pub enum AsrCmd {
    /// Evaluate every ASR system found in the manifest.
    Eval(EvalArgs),
}

#[derive(Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// TSV word → class tags lexicon (enables WR/ER/CR tables).
    #[arg(long)]
    class_lexicon: Option<PathBuf>,
    /// TSV word → valence/arousal/dominance lexicon (enables affect tables).
    #[arg(long)]
    affect_lexicon: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    max_n: usize,
    /// Laplace-smooth BLEU n-gram counts.
    #[arg(long)]
    smooth_bleu: bool,
    /// Report per-emotion WER as the mean of per-utterance WERs instead of
    /// pooled edit counts.
    #[arg(long)]
    per_utterance_wer: bool,
    /// Class tag counted as "Noun" in the per-emotion table.
    #[arg(long, default_value = "Noun")]
    noun_tag: String,
}

#[derive(Serialize)]
struct SystemReport {
    system: String,
    utterances: usize,
    missing_hypothesis: usize,
    wer: f64,
    cer: f64,
    bleu: f64,
    gleu: f64,
    /// Utterances with an empty hypothesis, excluded from BLEU/GLEU.
    empty_hypothesis_skipped: usize,
    class_stats: Option<ClassStats>,
    affect_stats: Option<ClassStats>,
    length_bins: Vec<LengthBinRow>,
    per_emotion: PerEmotionWer,
    confidence_summary: ConfidenceSummary,
}

/// Affect buckets become a derived class system ("V_low" … "D_high") so the
/// WR/ER/CR machinery applies unchanged.
fn affect_class_lexicon(
    affect: &serkit::lexicon::AffectLexicon,
    records: &[UtteranceRecord],
) -> Result<ClassLexicon> {
    let declared: BTreeSet<String> = ["V", "A", "D"]
        .iter()
        .flat_map(|dim| {
            ["low", "mid", "high"].iter().map(move |band| format!("{dim}_{band}"))
        })
        .collect();
    let mut map: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut seen = BTreeSet::new();
    for record in records {
        for word in &record.reference_tokens {
            if !seen.insert(word.clone()) {
                continue;
            }
            let buckets = bucketize_affect(affect, word);
            let mut tags = BTreeSet::new();
            for (dim, band) in [
                ("V", buckets.valence),
                ("A", buckets.arousal),
                ("D", buckets.dominance),
            ] {
                let label = match band {
                    AffectBand::Low => "low",
                    AffectBand::Mid => "mid",
                    AffectBand::High => "high",
                    AffectBand::Unknown => continue,
                };
                tags.insert(format!("{dim}_{label}"));
            }
            if !tags.is_empty() {
                map.insert(word.clone(), tags);
            }
        }
    }
    ClassLexicon::from_map(map, declared)
}

fn class_stats_csv(stats: &ClassStats) -> String {
    let mut csv = String::from("class,WR_pct,ER_pct,CR_pct,words,errors\n");
    for row in &stats.rows {
        csv.push_str(&format!(
            "{},{:.4},{:.4},{:.4},{},{}\n",
            row.class,
            row.word_ratio * 100.0,
            row.error_ratio * 100.0,
            row.class_error_rate * 100.0,
            row.word_count,
            row.error_count
        ));
    }
    csv
}

fn evaluate_system(
    system: &str,
    records: &[UtteranceRecord],
    class_lex: Option<&ClassLexicon>,
    affect_lex: Option<&ClassLexicon>,
    args: &EvalArgs,
) -> Result<SystemReport> {
    let mut alignments: Vec<EditAlignment> = Vec::new();
    let mut evals_meta: Vec<(Option<String>, Option<Vec<f64>>)> = Vec::new();
    let mut missing_hypothesis = 0usize;
    let mut empty_skipped = 0usize;
    let mut char_edits = 0usize;
    let mut char_total = 0usize;
    let mut bleu_segments: Vec<(Vec<Vec<String>>, Vec<String>)> = Vec::new();
    let mut gleu_matching = 0usize;
    let mut gleu_hyp = 0usize;
    let mut gleu_ref = 0usize;

    for record in records {
        let Some(hyp) = record.hypotheses.get(system) else {
            missing_hypothesis += 1;
            continue;
        };
        if record.reference_tokens.is_empty() {
            return Err(Error::contract(format!(
                "utterance {:?}: reference tokenizes to nothing",
                record.id
            )));
        }
        let alignment = align(&record.reference_tokens, &hyp.tokens);
        // character-level tallies (spaces removed)
        let chars = |tokens: &[String]| -> Vec<String> {
            tokens
                .iter()
                .flat_map(|t| t.chars())
                .map(|c| c.to_string())
                .collect()
        };
        let ref_chars = chars(&record.reference_tokens);
        let hyp_chars = chars(&hyp.tokens);
        char_edits += align(&ref_chars, &hyp_chars).edits();
        char_total += ref_chars.len();

        if hyp.tokens.is_empty() {
            empty_skipped += 1;
        } else {
            bleu_segments.push((vec![record.reference_tokens.clone()], hyp.tokens.clone()));
            let g = gleu_counts(&record.reference_tokens, &hyp.tokens, args.max_n);
            gleu_matching += g.matching;
            gleu_hyp += g.hypothesis_ngrams;
            gleu_ref += g.reference_ngrams;
        }
        evals_meta.push((record.emotion.clone(), hyp.confidences.clone()));
        alignments.push(alignment);
    }
    if alignments.is_empty() {
        return Err(Error::contract(format!("system {system:?} has no scored utterances")));
    }

    let total_edits: usize = alignments.iter().map(|a| a.edits()).sum();
    let total_ref: usize = alignments.iter().map(|a| a.reference_len).sum();
    let wer = total_edits as f64 / total_ref as f64;
    let cer = char_edits as f64 / char_total as f64;

    let segments: Vec<BleuSegment<'_, String>> = bleu_segments
        .iter()
        .map(|(refs, hyp)| BleuSegment { references: refs, hypothesis: hyp })
        .collect();
    let bleu = if segments.is_empty() {
        0.0
    } else {
        serkit::asr::bleu_corpus(&segments, args.max_n, args.smooth_bleu)?
    };
    let gleu = if gleu_hyp == 0 || gleu_ref == 0 {
        0.0
    } else {
        (gleu_matching as f64 / gleu_hyp as f64).min(gleu_matching as f64 / gleu_ref as f64)
    };

    let alignment_refs: Vec<&EditAlignment> = alignments.iter().collect();
    let evals: Vec<UtteranceEval<'_>> = alignments
        .iter()
        .zip(&evals_meta)
        .map(|(alignment, (emotion, confidences))| UtteranceEval {
            alignment,
            emotion: emotion.as_deref(),
            confidences: confidences.as_deref(),
        })
        .collect();

    let pooling = if args.per_utterance_wer {
        WerPooling::MeanPerUtterance
    } else {
        WerPooling::Pooled
    };
    let empty_lexicon = ClassLexicon::from_map(HashMap::new(), BTreeSet::new())?;
    let per_emotion = per_emotion_wer(
        &evals,
        class_lex.unwrap_or(&empty_lexicon),
        &args.noun_tag,
        pooling,
    )?;

    Ok(SystemReport {
        system: system.to_string(),
        utterances: alignments.len(),
        missing_hypothesis,
        wer,
        cer,
        bleu,
        gleu,
        empty_hypothesis_skipped: empty_skipped,
        class_stats: class_lex.map(|lex| class_stats(&alignment_refs, lex)),
        affect_stats: affect_lex.map(|lex| class_stats(&alignment_refs, lex)),
        length_bins: length_binned_wer(&alignment_refs)?,
        per_emotion,
        confidence_summary: confidence_summary(&evals)?,
    })
}

fn sanitize(system: &str) -> String {
    system
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let records = read_manifest(&args.manifest)?;
    if records.is_empty() {
        return Err(Error::contract("empty manifest"));
    }
    let class_lex = args
        .class_lexicon
        .as_deref()
        .map(|p| read_class_lexicon(p, None))
        .transpose()?;
    let affect_raw = args.affect_lexicon.as_deref().map(read_affect_lexicon).transpose()?;
    let affect_lex = affect_raw
        .as_ref()
        .map(|lex| affect_class_lexicon(lex, &records))
        .transpose()?;

    let systems: BTreeSet<String> = records
        .iter()
        .flat_map(|r| r.hypotheses.keys().cloned())
        .collect();
    if systems.is_empty() {
        return Err(Error::contract("manifest contains no hypotheses"));
    }

    let mut reports = BTreeMap::new();
    for system in &systems {
        let report =
            evaluate_system(system, &records, class_lex.as_ref(), affect_lex.as_ref(), &args)?;
        let stem = sanitize(system);
        out::write_json(&args.out_dir.join(format!("{stem}.report.json")), &report)?;
        if let Some(stats) = &report.class_stats {
            out::write_atomic(
                &args.out_dir.join(format!("{stem}.class_stats.csv")),
                class_stats_csv(stats).as_bytes(),
            )?;
        }
        if let Some(stats) = &report.affect_stats {
            out::write_atomic(
                &args.out_dir.join(format!("{stem}.affect_stats.csv")),
                class_stats_csv(stats).as_bytes(),
            )?;
        }
        let mut bins = String::from("bin,ratio_pct,wer_pct,utterances\n");
        for row in &report.length_bins {
            bins.push_str(&format!(
                "{},{:.4},{},{}\n",
                row.bin,
                row.ratio * 100.0,
                row.wer.map(|w| format!("{:.4}", w * 100.0)).unwrap_or_default(),
                row.utterances
            ));
        }
        out::write_atomic(&args.out_dir.join(format!("{stem}.length_bins.csv")), bins.as_bytes())?;
        let mut emo = String::from("emotion,wer_pct,noun_ratio_pct,short_utterance_pct,utterances\n");
        for row in &report.per_emotion.rows {
            emo.push_str(&format!(
                "{},{:.4},{:.4},{:.4},{}\n",
                row.emotion,
                row.wer * 100.0,
                row.noun_ratio * 100.0,
                row.short_utterance_ratio * 100.0,
                row.utterances
            ));
        }
        out::write_atomic(&args.out_dir.join(format!("{stem}.per_emotion.csv")), emo.as_bytes())?;
        reports.insert(system.clone(), report);
    }

    let index_path = args.out_dir.join("systems.json");
    let index: Vec<&String> = reports.keys().collect();
    out::write_json(&index_path, &index)?;
    out::echo_config(&index_path, "asr eval", &args)?;
    for system in reports.keys() {
        println!("{}", args.out_dir.join(format!("{}.report.json", sanitize(system))).display());
    }
    Ok(())
}

pub fn run(cmd: AsrCmd) -> Result<()> {
    match cmd {
        AsrCmd::Eval(args) => run_eval(args),
    }
}
