//! Corpus preparation: PTB escape normalization, BPE, seeded shuffling,
//! augmentation and the TSV dataset format.

pub mod bpe;
pub mod dataset;
pub mod ptb;
pub mod shuffle;
pub mod vocab;

pub use bpe::{
    detokenize, group_words, join_word, learn_bpe, learn_bpe_vocab, word_frequencies, BpeError,
    BpeMerges, CONTINUATION_MARKER,
};
pub use dataset::{format_dataset, parse_corpus, parse_dataset, DatasetError, Example};
pub use ptb::{normalize_ptb, normalize_sentence};
pub use shuffle::{make_augmented, permute, shuffle, Granularity, ShuffleSpec};
pub use vocab::{TokenId, Vocab, VocabError, BOS, EOS, NULL, UNK};

/// Default BPE vocabulary size.
pub const DEFAULT_VOCAB_SIZE: usize = 8000;

/// Builds a vocabulary (with specials) covering every token of `examples`.
pub fn dataset_vocab(examples: &[Example]) -> Vocab {
    let mut v = Vocab::with_specials();
    for ex in examples {
        for t in ex.input.iter().chain(&ex.target) {
            v.insert(t);
        }
    }
    v
}
