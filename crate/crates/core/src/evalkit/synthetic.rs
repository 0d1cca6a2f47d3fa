//! Synthetic corpora for desk-scale experiments.

use crate::rng::SeededRng;

const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
const NUCLEI: [&str; 5] = ["a", "e", "i", "o", "u"];

/// `n` sentences of 4 to 12 words drawn uniformly from a lexicon of
/// `lexicon` pseudo-words (1 to 3 CV syllables). Sentences are distinct,
/// so a high-order n-gram model trained on them memorizes each one.
pub fn memorized_corpus(n: usize, lexicon: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = SeededRng::new(seed);
    let mut words = std::collections::BTreeSet::new();
    while words.len() < lexicon.max(1) {
        let syl = 1 + rng.below(3);
        let w: String = (0..syl)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS[rng.below(ONSETS.len())],
                    NUCLEI[rng.below(NUCLEI.len())]
                )
            })
            .collect();
        words.insert(w);
    }
    let words: Vec<String> = words.into_iter().collect();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let len = 4 + rng.below(9);
        let s: Vec<String> = (0..len)
            .map(|_| words[rng.below(words.len())].clone())
            .collect();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}
