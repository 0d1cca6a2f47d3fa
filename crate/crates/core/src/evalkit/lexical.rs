//! Missing and redundant words, multiset-wise, normalized by the number
//! of reference words.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use super::EvalError;

pub const DEFAULT_BIN_WIDTH: usize = 10;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LengthBin {
    /// Reference lengths `lo..hi`.
    pub lo: usize,
    pub hi: usize,
    pub sentences: usize,
    pub ref_words: usize,
    pub hyp_words: usize,
    pub missing: usize,
    pub redundant: usize,
}

impl LengthBin {
    fn rate(&self, x: usize) -> f64 {
        if self.ref_words == 0 {
            0.0
        } else {
            x as f64 / self.ref_words as f64
        }
    }

    pub fn missing_rate(&self) -> f64 {
        self.rate(self.missing)
    }

    pub fn redundant_rate(&self) -> f64 {
        self.rate(self.redundant)
    }

    pub fn length_ratio(&self) -> f64 {
        self.rate(self.hyp_words)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LexicalErrorReport {
    pub missing_rate: f64,
    pub redundant_rate: f64,
    pub length_ratio: f64,
    pub bin_width: usize,
    pub bins: Vec<LengthBin>,
}

impl LexicalErrorReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_lo,bin_hi,sentences,ref_words,hyp_words,missing_rate,redundant_rate,length_ratio\n");
        for b in &self.bins {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.6},{:.6},{:.6}",
                b.lo,
                b.hi,
                b.sentences,
                b.ref_words,
                b.hyp_words,
                b.missing_rate(),
                b.redundant_rate(),
                b.length_ratio()
            );
        }
        s
    }
}

impl std::fmt::Display for LexicalErrorReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "missing {:.4}  redundant {:.4}  length ratio {:.4}",
            self.missing_rate, self.redundant_rate, self.length_ratio
        )?;
        writeln!(
            f,
            "{:>9} {:>6} {:>9} {:>9} {:>8}",
            "ref len", "sents", "missing", "redund", "ratio"
        )?;
        for b in &self.bins {
            writeln!(
                f,
                "{:>9} {:>6} {:>9.4} {:>9.4} {:>8.4}",
                format!("{}-{}", b.lo, b.hi - 1),
                b.sentences,
                b.missing_rate(),
                b.redundant_rate(),
                b.length_ratio()
            )?;
        }
        Ok(())
    }
}

/// `(missing, redundant)` counts for one sentence pair.
pub fn sentence_errors<H: AsRef<str>, R: AsRef<str>>(hyp: &[H], reference: &[R]) -> (usize, usize) {
    let mut bag: HashMap<&str, i64> = HashMap::new();
    for w in reference {
        *bag.entry(w.as_ref()).or_default() += 1;
    }
    for w in hyp {
        *bag.entry(w.as_ref()).or_default() -= 1;
    }
    let missing = bag.values().filter(|&&c| c > 0).sum::<i64>() as usize;
    let redundant = bag.values().filter(|&&c| c < 0).map(|c| -c).sum::<i64>() as usize;
    (missing, redundant)
}

pub fn lexical_errors<H: AsRef<str>, R: AsRef<str>>(
    hyps: &[Vec<H>],
    refs: &[Vec<R>],
    bin_width: usize,
) -> Result<LexicalErrorReport, EvalError> {
    if hyps.len() != refs.len() {
        return Err(EvalError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if bin_width == 0 {
        return Err(EvalError::BinWidth);
    }
    let mut total = LengthBin::default();
    let mut bins: BTreeMap<usize, LengthBin> = BTreeMap::new();
    for (h, r) in hyps.iter().zip(refs) {
        let (m, x) = sentence_errors(h, r);
        let k = r.len() / bin_width;
        let b = bins.entry(k).or_insert_with(|| LengthBin {
            lo: k * bin_width,
            hi: (k + 1) * bin_width,
            ..LengthBin::default()
        });
        for t in [b, &mut total] {
            t.sentences += 1;
            t.ref_words += r.len();
            t.hyp_words += h.len();
            t.missing += m;
            t.redundant += x;
        }
    }
    Ok(LexicalErrorReport {
        missing_rate: total.missing_rate(),
        redundant_rate: total.redundant_rate(),
        length_ratio: total.length_ratio(),
        bin_width,
        bins: bins.into_values().collect(),
    })
}
