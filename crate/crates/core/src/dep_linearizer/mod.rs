//! Dependency trees to PENMAN input sequences, full or partial.

pub mod partial;
pub mod penman;
pub mod tree;

pub use partial::{partial_grid, sample_partial, GridCell, LEVELS};
pub use penman::{
    parse_available, parse_penman, serialize_available, serialize_penman, PenmanError, PenmanMode,
};
pub use tree::{parse_conll, parse_conll_many, DepNode, DepTree, TreeError};

use crate::rng::derive_seed;
use crate::textprep::{BpeMerges, Example};

/// How each tree is turned into an input sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Linearization {
    Mode(PenmanMode),
    /// Sample tags and arcs with the given retention probabilities, then
    /// render whatever survived.
    Partial {
        p_pos: f64,
        p_dep: f64,
    },
}

fn segment_words<S: AsRef<str>>(words: &[S], bpe: Option<&BpeMerges>) -> Vec<String> {
    match bpe {
        Some(m) => m.apply_sentence(words),
        None => words.iter().map(|w| w.as_ref().to_string()).collect(),
    }
}

/// One dataset row per tree. Sentence `i` uses sub-stream `i` of `seed`.
///
/// The input is the PENMAN sequence, the target the segmented surface
/// sentence, and the bag the input words' subwords in emission order (so
/// that constraints ignore brackets, tags and labels).
pub fn linearize_dataset(
    trees: &[DepTree],
    how: Linearization,
    seed: u64,
    bpe: Option<&BpeMerges>,
) -> Result<Vec<Example>, PenmanError> {
    trees
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let s = derive_seed(seed, i as u64);
            let (input, emitted) = match how {
                Linearization::Mode(mode) => {
                    let toks = serialize_penman(t, mode, s, bpe)?;
                    let words = parse_penman(&toks, mode)?.words();
                    (toks, words)
                }
                Linearization::Partial { p_pos, p_dep } => {
                    let p = sample_partial(t, p_pos, p_dep, derive_seed(s, 1));
                    let toks = serialize_available(&p, s, bpe)?;
                    let words = parse_available(&toks)?.words();
                    (toks, words)
                }
            };
            Ok(Example {
                input,
                target: segment_words(&t.words(), bpe),
                bag: Some(segment_words(&emitted, bpe)),
            })
        })
        .collect()
}
