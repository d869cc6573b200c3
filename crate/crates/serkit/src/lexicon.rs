//! TSV word lexicons: word-class tags and affective (VAD) scores.
//!
//! Class lexicon lines: `word<TAB>Tag1,Tag2`. Affect lexicon lines:
//! `word<TAB>valence<TAB>arousal<TAB>dominance` with scores in [1, 9].
//! Keys are case-folded; a later line for the same word overrides the
//! earlier one and bumps a warning counter.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// The word classes used by the transcript analytics tables.
pub const DEFAULT_CLASS_TAGS: [&str; 7] = ["Noun", "Verb", "Adj", "Adv", "Wh", "Func", "Stop"];

/// Reserved pseudo-class for reference words absent from the lexicon.
pub const UNCLASSIFIED_CLASS: &str = "unclassified";

/// Reserved pseudo-class carrying insertion errors (no reference word).
pub const INSERTION_CLASS: &str = "insertion";

/// Word → set of class tags.
#[derive(Debug, Clone)]
pub struct ClassLexicon {
    map: HashMap<String, BTreeSet<String>>,
    declared: BTreeSet<String>,
    pub duplicate_overrides: usize,
}

impl ClassLexicon {
    /// Build from an in-memory map (keys are case-folded). Used for derived
    /// class systems such as affect buckets.
    pub fn from_map(
        map: HashMap<String, BTreeSet<String>>,
        declared: BTreeSet<String>,
    ) -> Result<Self> {
        for (word, tags) in &map {
            if tags.is_empty() {
                return Err(Error::contract(format!("empty tag set for {word:?}")));
            }
            if let Some(bad) = tags.iter().find(|t| !declared.contains(*t)) {
                return Err(Error::contract(format!("tag {bad:?} not in declared set")));
            }
        }
        let map = map.into_iter().map(|(k, v)| (k.to_lowercase(), v)).collect();
        Ok(ClassLexicon { map, declared, duplicate_overrides: 0 })
    }

    pub fn classes_of(&self, word: &str) -> Option<&BTreeSet<String>> {
        self.map.get(&word.to_lowercase())
    }

    /// The closed tag set this lexicon was validated against.
    pub fn declared_tags(&self) -> &BTreeSet<String> {
        &self.declared
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Valence/arousal/dominance scores, each in [1, 9].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affect {
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
}

/// Word → affect scores.
#[derive(Debug, Clone)]
pub struct AffectLexicon {
    map: HashMap<String, Affect>,
    pub duplicate_overrides: usize,
}

impl AffectLexicon {
    pub fn affect_of(&self, word: &str) -> Option<Affect> {
        self.map.get(&word.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Read a class lexicon, validating tags against `allowed` (defaults to
/// [`DEFAULT_CLASS_TAGS`]).
pub fn read_class_lexicon(path: &Path, allowed: Option<&[String]>) -> Result<ClassLexicon> {
    let declared: BTreeSet<String> = match allowed {
        Some(tags) => tags.iter().cloned().collect(),
        None => DEFAULT_CLASS_TAGS.iter().map(|s| s.to_string()).collect(),
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut duplicate_overrides = 0;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.splitn(2, '\t');
        let word = parts
            .next()
            .filter(|w| !w.is_empty())
            .ok_or_else(|| Error::format_at("lexicon", lineno, "missing word"))?;
        let tags_field = parts
            .next()
            .ok_or_else(|| Error::format_at("lexicon", lineno, "missing tag field"))?;
        let tags: BTreeSet<String> = tags_field
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
        if tags.is_empty() {
            return Err(Error::format_at("lexicon", lineno, "empty tag set"));
        }
        if let Some(bad) = tags.iter().find(|t| !declared.contains(*t)) {
            return Err(Error::format_at(
                "lexicon",
                lineno,
                format!("tag {bad:?} not in declared set {declared:?}"),
            ));
        }
        if map.insert(word.to_lowercase(), tags).is_some() {
            duplicate_overrides += 1;
        }
    }
    Ok(ClassLexicon { map, declared, duplicate_overrides })
}

/// Read an affect lexicon. Errors on scores outside [1, 9].
pub fn read_affect_lexicon(path: &Path) -> Result<AffectLexicon> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    let mut duplicate_overrides = 0;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::format_at(
                "lexicon",
                lineno,
                format!("expected word + 3 scores, got {} fields", fields.len()),
            ));
        }
        let parse = |s: &str, name: &str| -> Result<f64> {
            let v: f64 = s.trim().parse().map_err(|_| {
                Error::format_at("lexicon", lineno, format!("non-numeric {name} score {s:?}"))
            })?;
            if !(1.0..=9.0).contains(&v) {
                return Err(Error::format_at(
                    "lexicon",
                    lineno,
                    format!("{name} score {v} outside [1, 9]"),
                ));
            }
            Ok(v)
        };
        let affect = Affect {
            valence: parse(fields[1], "valence")?,
            arousal: parse(fields[2], "arousal")?,
            dominance: parse(fields[3], "dominance")?,
        };
        if map.insert(fields[0].to_lowercase(), affect).is_some() {
            duplicate_overrides += 1;
        }
    }
    Ok(AffectLexicon { map, duplicate_overrides })
}
