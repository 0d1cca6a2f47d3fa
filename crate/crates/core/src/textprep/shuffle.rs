use serde::{Deserialize, Serialize};

use super::bpe::BpeMerges;
use super::dataset::Example;
use crate::rng::{derive_seed, SeededRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// Permute whole words before segmentation.
    Word,
    /// Permute subwords after segmentation.
    Subword,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleSpec {
    pub seed: u64,
    pub granularity: Granularity,
}

impl ShuffleSpec {
    pub fn words(seed: u64) -> Self {
        Self {
            seed,
            granularity: Granularity::Word,
        }
    }

    pub fn subwords(seed: u64) -> Self {
        Self {
            seed,
            granularity: Granularity::Subword,
        }
    }
}

/// Seeded uniform permutation of `items`.
pub fn permute<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    SeededRng::new(seed)
        .permutation(items.len())
        .into_iter()
        .map(|i| items[i].clone())
        .collect()
}

/// Shuffles a sentence and returns the segmented token sequence.
///
/// With word granularity each word's subwords stay contiguous. Without
/// `bpe` every word is a single token and both granularities coincide.
pub fn shuffle<S: AsRef<str>>(
    words: &[S],
    bpe: Option<&BpeMerges>,
    spec: ShuffleSpec,
) -> Vec<String> {
    let segmented: Vec<Vec<String>> = words
        .iter()
        .map(|w| match bpe {
            Some(m) => m.apply(w.as_ref()),
            None => vec![w.as_ref().to_string()],
        })
        .collect();
    match spec.granularity {
        Granularity::Word => permute(&segmented, spec.seed)
            .into_iter()
            .flatten()
            .collect(),
        Granularity::Subword => {
            let flat: Vec<String> = segmented.into_iter().flatten().collect();
            permute(&flat, spec.seed)
        }
    }
}

/// Emits every example once followed by `k` copies whose input words are
/// freshly permuted. Targets are left untouched.
pub fn make_augmented(examples: &[Example], k: usize, seed: u64) -> Vec<Example> {
    let mut out = Vec::with_capacity(examples.len() * (k + 1));
    for (i, ex) in examples.iter().enumerate() {
        out.push(ex.clone());
        let words = ex.constraint_words();
        for j in 0..k {
            let s = derive_seed(seed, (i as u64) << 16 | j as u64);
            let input: Vec<String> = permute(&words, s).into_iter().flatten().collect();
            out.push(Example {
                input,
                target: ex.target.clone(),
                bag: None,
            });
        }
    }
    out
}
