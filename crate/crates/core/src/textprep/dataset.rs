//! TSV datasets: `input<TAB>target[<TAB>bag]`, each side space-separated
//! subwords. The optional third column holds the input subwords grouped by
//! word; it is written when the input itself was shuffled at subword
//! granularity and word boundaries can no longer be read off the input.

use std::fmt::Write as _;

use super::bpe::group_words;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("dataset line {line}: expected 2 or 3 tab-separated columns, got {got}")]
    Columns { line: usize, got: usize },
    #[error("dataset line {line}: empty target")]
    EmptyTarget { line: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub input: Vec<String>,
    pub target: Vec<String>,
    pub bag: Option<Vec<String>>,
}

impl Example {
    /// Input words as subword groups, used to build decoding constraints.
    pub fn constraint_words(&self) -> Vec<Vec<String>> {
        group_words(self.bag.as_deref().unwrap_or(&self.input))
    }
}

fn split(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

pub fn parse_dataset(text: &str) -> Result<Vec<Example>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if !(2..=3).contains(&cols.len()) {
            return Err(DatasetError::Columns {
                line: i + 1,
                got: cols.len(),
            });
        }
        let target = split(cols[1]);
        if target.is_empty() {
            return Err(DatasetError::EmptyTarget { line: i + 1 });
        }
        out.push(Example {
            input: split(cols[0]),
            target,
            bag: cols.get(2).map(|c| split(c)),
        });
    }
    Ok(out)
}

pub fn format_dataset(examples: &[Example]) -> String {
    let mut out = String::new();
    for ex in examples {
        let _ = write!(out, "{}\t{}", ex.input.join(" "), ex.target.join(" "));
        if let Some(bag) = &ex.bag {
            let _ = write!(out, "\t{}", bag.join(" "));
        }
        out.push('\n');
    }
    out
}

/// One tokenized sentence per line.
pub fn parse_corpus(text: &str) -> Vec<Vec<String>> {
    text.lines().map(split).filter(|s| !s.is_empty()).collect()
}
