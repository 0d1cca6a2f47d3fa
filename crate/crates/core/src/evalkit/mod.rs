//! Evaluation: BLEU, lexical errors, permutation sensitivity and beam
//! sweeps. Reports serialize to JSON and print as aligned text.

pub mod bleu;
pub mod lexical;
pub mod sensitivity;
pub mod sweep;
pub mod synthetic;

pub use bleu::{corpus_bleu, BleuReport};
pub use lexical::{
    lexical_errors, sentence_errors, LengthBin, LexicalErrorReport, DEFAULT_BIN_WIDTH,
};
pub use sensitivity::{permute_example, permuted_dev_set, sensitivity, SensitivityReport};
pub use sweep::{beam_sweep, SweepCell, SweepSetting, SweepTable};
pub use synthetic::memorized_corpus;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{hyps} hypotheses for {refs} references")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("empty corpus")]
    Empty,
    #[error("bin width must be positive")]
    BinWidth,
    #[error("sensitivity needs at least 2 seeds, got {0}")]
    TooFewSeeds(usize),
    #[error("decoding failed: {0}")]
    Decode(String),
}
