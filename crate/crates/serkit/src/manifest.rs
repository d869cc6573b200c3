//! JSONL utterance manifests and transcript tokenization.
//!
//! One JSON object per line with keys:
//! `id` (string, unique), `ref` (string or token array), `hyps`
//! (map system → string or token array), optional `audio` (path),
//! `emotion` (string), `split` ("train"|"valid"|"test"), and `conf`
//! (map system → per-token confidence array aligned with that system's
//! hypothesis tokens).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Dataset split tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "valid" | "dev" => Ok(Split::Valid),
            "test" => Ok(Split::Test),
            other => Err(Error::contract(format!("unknown split value {other:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

/// One ASR system's output for an utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub raw: String,
    pub tokens: Vec<String>,
    /// Per-token confidence in [0, 1], aligned with `tokens`.
    pub confidences: Option<Vec<f64>>,
}

/// One corpus row: reference transcript plus per-system hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceRecord {
    pub id: String,
    pub audio_path: Option<PathBuf>,
    pub reference_raw: String,
    pub reference_tokens: Vec<String>,
    /// Keyed by system id; BTreeMap keeps iteration deterministic.
    pub hypotheses: BTreeMap<String, Hypothesis>,
    pub emotion: Option<String>,
    pub split: Option<Split>,
}

/// Tokenization used for all transcript metrics: lowercase, replace
/// punctuation with spaces, split on whitespace. The apostrophe is kept by
/// default so contractions survive as single tokens.
#[derive(Debug, Clone)]
pub struct TokenizeOptions {
    /// Characters treated as punctuation (replaced by a space).
    pub punctuation: Vec<char>,
}

impl Default for TokenizeOptions {
    fn default() -> Self {
        let punctuation = r##"!"#$%&()*+,-./:;<=>?@[\]^_`{|}~"##.chars().collect();
        TokenizeOptions { punctuation }
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_with(text, &TokenizeOptions::default())
}

pub fn tokenize_with(text: &str, opts: &TokenizeOptions) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.chars() {
        if opts.punctuation.contains(&c) {
            cleaned.push(' ');
        } else {
            for lc in c.to_lowercase() {
                cleaned.push(lc);
            }
        }
    }
    cleaned.split_whitespace().map(str::to_string).collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TextOrTokens {
    Text(String),
    Tokens(Vec<String>),
}

impl TextOrTokens {
    fn into_raw(self) -> String {
        match self {
            TextOrTokens::Text(s) => s,
            TextOrTokens::Tokens(t) => t.join(" "),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    #[serde(rename = "ref")]
    reference: TextOrTokens,
    hyps: BTreeMap<String, TextOrTokens>,
    audio: Option<PathBuf>,
    emotion: Option<String>,
    split: Option<String>,
    conf: Option<BTreeMap<String, Vec<f64>>>,
}

/// Read a JSONL manifest. Order-preserving; errors on duplicate ids,
/// confidence/hypothesis length mismatches, confidences outside [0, 1],
/// and unknown split values.
pub fn read_manifest(path: &Path) -> Result<Vec<UtteranceRecord>> {
    read_manifest_with(path, &TokenizeOptions::default())
}

pub fn read_manifest_with(path: &Path, opts: &TokenizeOptions) -> Result<Vec<UtteranceRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format_at("manifest", lineno, e.to_string()))?;
        if !seen.insert(raw.id.clone()) {
            return Err(Error::format_at("manifest", lineno, format!("duplicate id {:?}", raw.id)));
        }
        let split = raw
            .split
            .as_deref()
            .map(Split::parse)
            .transpose()
            .map_err(|e| Error::format_at("manifest", lineno, e.to_string()))?;
        let reference_raw = raw.reference.into_raw();
        let reference_tokens = tokenize_with(&reference_raw, opts);
        let mut hypotheses = BTreeMap::new();
        for (system, hyp) in raw.hyps {
            let raw_text = hyp.into_raw();
            let tokens = tokenize_with(&raw_text, opts);
            let confidences = match raw.conf.as_ref().and_then(|c| c.get(&system)) {
                Some(conf) => {
                    if conf.len() != tokens.len() {
                        return Err(Error::format_at(
                            "manifest",
                            lineno,
                            format!(
                                "system {system:?}: {} confidences for {} hypothesis tokens",
                                conf.len(),
                                tokens.len()
                            ),
                        ));
                    }
                    if let Some(bad) = conf.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                        return Err(Error::format_at(
                            "manifest",
                            lineno,
                            format!("system {system:?}: confidence {bad} outside [0, 1]"),
                        ));
                    }
                    Some(conf.clone())
                }
                None => None,
            };
            hypotheses.insert(system, Hypothesis { raw: raw_text, tokens, confidences });
        }
        if let Some(conf) = &raw.conf {
            if let Some(orphan) = conf.keys().find(|k| !hypotheses.contains_key(*k)) {
                return Err(Error::format_at(
                    "manifest",
                    lineno,
                    format!("conf entry for unknown system {orphan:?}"),
                ));
            }
        }
        records.push(UtteranceRecord {
            id: raw.id,
            audio_path: raw.audio,
            reference_raw,
            reference_tokens,
            hypotheses,
            emotion: raw.emotion,
            split,
        });
    }
    Ok(records)
}
