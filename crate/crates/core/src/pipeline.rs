//! Dataset-level decoding: encode, constrain, search, decode, re-join.

use rayon::prelude::*;

use crate::constraint_tree::{ConstraintError, ConstraintTree};
use crate::decoder::{beam_search, DecodeConfig, DecodeError, SearchSpace};
use crate::scorers::Scorer;
use crate::textprep::{detokenize, Example, TokenId};

#[derive(Debug, thiserror::Error)]
pub enum OrderError {
    #[error("example {index}: {source}")]
    Decode {
        index: usize,
        #[source]
        source: DecodeError,
    },
    #[error("example {index}: {source}")]
    Constraint {
        index: usize,
        #[source]
        source: ConstraintError,
    },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ordered {
    pub subwords: Vec<String>,
    pub words: Vec<String>,
    /// `-inf` when no hypothesis finished.
    pub logscore: f64,
}

/// Orders examples with one scorer and decoding configuration.
///
/// Input subwords missing from the scorer vocabulary are encoded as
/// `<unk>`; in the output each `<unk>` is replaced by the original
/// out-of-vocabulary subwords in input order.
pub struct Orderer<'a> {
    scorer: &'a dyn Scorer,
    config: DecodeConfig,
}

impl<'a> Orderer<'a> {
    pub fn new(scorer: &'a dyn Scorer, config: DecodeConfig) -> Self {
        Self { scorer, config }
    }

    pub fn config(&self) -> &DecodeConfig {
        &self.config
    }

    pub fn order_one(&self, index: usize, ex: &Example) -> Result<Ordered, OrderError> {
        let vocab = self.scorer.vocab();
        let input = vocab.encode(&ex.input);
        let tree = match self.config.mode {
            SearchSpace::Constrained => {
                let words: Vec<Vec<TokenId>> = ex
                    .constraint_words()
                    .iter()
                    .map(|w| vocab.encode(w))
                    .collect();
                Some(
                    ConstraintTree::build(&words)
                        .map_err(|source| OrderError::Constraint { index, source })?,
                )
            }
            SearchSpace::Unconstrained => None,
        };
        let hyps = beam_search(&input, self.scorer, &self.config, tree.as_ref())
            .map_err(|source| OrderError::Decode { index, source })?;
        let Some(best) = hyps.first() else {
            return Ok(Ordered {
                subwords: Vec::new(),
                words: Vec::new(),
                logscore: f64::NEG_INFINITY,
            });
        };
        let eos = vocab.eos().unwrap_or(TokenId::MAX);
        let mut subwords = vocab.decode(best.output(eos));
        if let Some(unk) = vocab.unk() {
            let mut oov = ex
                .constraint_words()
                .into_iter()
                .flatten()
                .filter(|t| vocab.id(t).is_none())
                .collect::<Vec<_>>()
                .into_iter();
            for (tok, id) in subwords.iter_mut().zip(best.output(eos)) {
                if *id == unk {
                    if let Some(orig) = oov.next() {
                        *tok = orig;
                    }
                }
            }
        }
        Ok(Ordered {
            words: detokenize(&subwords),
            subwords,
            logscore: best.logscore,
        })
    }

    /// Orders every example on `workers` threads (0 = all cores). Results
    /// come back in input order.
    pub fn order_all(
        &self,
        examples: &[Example],
        workers: usize,
    ) -> Result<Vec<Ordered>, OrderError> {
        let run = || {
            examples
                .par_iter()
                .enumerate()
                .map(|(i, ex)| self.order_one(i, ex))
                .collect::<Result<Vec<_>, _>>()
        };
        if workers == 1 {
            return examples
                .iter()
                .enumerate()
                .map(|(i, ex)| self.order_one(i, ex))
                .collect();
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| OrderError::Pool(e.to_string()))?
            .install(run)
    }
}
