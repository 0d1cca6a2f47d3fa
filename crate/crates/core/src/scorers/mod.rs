//! Next-token scorers `p(y_t | y_<t, x)`.
//!
//! A [`Scorer`] maps a prefix (starting with `<s>`) and an input token
//! sequence to a dense vector of natural-log probabilities over its
//! vocabulary. Implementations must be safe for concurrent read-only
//! queries.

pub mod external;
pub mod ngram;
pub mod protocol;

pub use external::ExternalScorer;
pub use ngram::{train_ngram, NgramError, NgramModel, Smoothing};

use crate::textprep::{TokenId, Vocab};

#[derive(Debug, thiserror::Error)]
pub enum ScorerError {
    #[error("scorer {scorer}: transport failure: {source}")]
    Transport {
        scorer: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scorer {scorer}: no reply within {timeout_ms} ms")]
    Timeout { scorer: String, timeout_ms: u128 },
    #[error("scorer {scorer}: malformed reply: {detail}")]
    Malformed { scorer: String, detail: String },
    #[error("scorer {scorer}: remote error: {message}")]
    Remote { scorer: String, message: String },
    #[error("scorer {scorer}: protocol version mismatch (expected {expected}, got {got})")]
    Version {
        scorer: String,
        expected: u32,
        got: u32,
    },
    #[error("scorer {scorer}: invalid vocabulary: {source}")]
    Vocab {
        scorer: String,
        #[source]
        source: crate::textprep::VocabError,
    },
    #[error("scorer {scorer}: prefix must start with <s>")]
    BadPrefix { scorer: String },
}

pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;

    fn vocab(&self) -> &Vocab;

    fn next_logprobs(&self, prefix: &[TokenId], input: &[TokenId])
        -> Result<Vec<f64>, ScorerError>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn vocab(&self) -> &Vocab {
        (**self).vocab()
    }
    fn next_logprobs(
        &self,
        prefix: &[TokenId],
        input: &[TokenId],
    ) -> Result<Vec<f64>, ScorerError> {
        (**self).next_logprobs(prefix, input)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn vocab(&self) -> &Vocab {
        (**self).vocab()
    }
    fn next_logprobs(
        &self,
        prefix: &[TokenId],
        input: &[TokenId],
    ) -> Result<Vec<f64>, ScorerError> {
        (**self).next_logprobs(prefix, input)
    }
}

/// Assigns `1/|V|` to every token.
#[derive(Clone, Debug)]
pub struct UniformScorer {
    vocab: Vocab,
}

impl UniformScorer {
    pub fn new(vocab: Vocab) -> Self {
        Self { vocab }
    }
}

impl Scorer for UniformScorer {
    fn name(&self) -> &str {
        "uniform"
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_logprobs(
        &self,
        _prefix: &[TokenId],
        _input: &[TokenId],
    ) -> Result<Vec<f64>, ScorerError> {
        let n = self.vocab.len();
        Ok(vec![-(n as f64).ln(); n])
    }
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
