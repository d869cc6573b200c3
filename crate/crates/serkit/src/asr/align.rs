//! Levenshtein alignment between reference and hypothesis token sequences.

use crate::error::{Error, Result};

/// One step of an alignment path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditOp {
    Match { reference: String, hypothesis: String },
    Substitution { reference: String, hypothesis: String },
    Deletion { reference: String },
    Insertion { hypothesis: String },
}

/// Minimal-cost alignment with its operation counts.
#[derive(Debug, Clone)]
pub struct EditAlignment {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub matches: usize,
    pub reference_len: usize,
    pub hypothesis_len: usize,
    pub ops: Vec<EditOp>,
}

impl EditAlignment {
    pub fn edits(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Align with unit costs. Backtrace ties are broken by preferring
/// match > substitution > deletion > insertion, so the op sequence is
/// deterministic even where several minimal paths exist.
pub fn align<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> EditAlignment {
    let n = reference.len();
    let m = hypothesis.len();
    let width = m + 1;
    let mut dp = vec![0usize; (n + 1) * width];
    for (j, cell) in dp.iter_mut().enumerate().take(width) {
        *cell = j;
    }
    for i in 1..=n {
        dp[i * width] = i;
        for j in 1..=m {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            let diag = dp[(i - 1) * width + j - 1] + usize::from(!same);
            let del = dp[(i - 1) * width + j] + 1;
            let ins = dp[i * width + j - 1] + 1;
            dp[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    let mut counts = (0usize, 0usize, 0usize, 0usize); // (S, D, I, matches)
    while i > 0 || j > 0 {
        let here = dp[i * width + j];
        let same = i > 0 && j > 0 && reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
        if same && dp[(i - 1) * width + j - 1] == here {
            ops.push(EditOp::Match {
                reference: reference[i - 1].as_ref().to_string(),
                hypothesis: hypothesis[j - 1].as_ref().to_string(),
            });
            counts.3 += 1;
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && dp[(i - 1) * width + j - 1] + 1 == here {
            ops.push(EditOp::Substitution {
                reference: reference[i - 1].as_ref().to_string(),
                hypothesis: hypothesis[j - 1].as_ref().to_string(),
            });
            counts.0 += 1;
            i -= 1;
            j -= 1;
        } else if i > 0 && dp[(i - 1) * width + j] + 1 == here {
            ops.push(EditOp::Deletion { reference: reference[i - 1].as_ref().to_string() });
            counts.1 += 1;
            i -= 1;
        } else {
            ops.push(EditOp::Insertion { hypothesis: hypothesis[j - 1].as_ref().to_string() });
            counts.2 += 1;
            j -= 1;
        }
    }
    ops.reverse();
    EditAlignment {
        substitutions: counts.0,
        deletions: counts.1,
        insertions: counts.2,
        matches: counts.3,
        reference_len: n,
        hypothesis_len: m,
        ops,
    }
}

/// (S + D + I) / N over the reference length. Errors on an empty reference.
pub fn wer(alignment: &EditAlignment) -> Result<f64> {
    if alignment.reference_len == 0 {
        return Err(Error::contract("WER undefined for empty reference"));
    }
    Ok(alignment.edits() as f64 / alignment.reference_len as f64)
}

/// Character error rate: WER over character sequences with spaces removed.
pub fn cer<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> Result<f64> {
    let chars = |tokens: &[S]| -> Vec<String> {
        tokens
            .iter()
            .flat_map(|t| t.as_ref().chars().filter(|c| !c.is_whitespace()).collect::<Vec<_>>())
            .map(String::from)
            .collect()
    };
    let ref_chars = chars(reference);
    let hyp_chars = chars(hypothesis);
    if ref_chars.is_empty() {
        return Err(Error::contract("CER undefined for empty reference"));
    }
    wer(&align(&ref_chars, &hyp_chars))
}
