//! Beam search over `prod_t p(y_t | y_<t, x)` with an optional
//! permutation constraint.
//!
//! Constrained search only expands tokens allowed by the hypothesis'
//! [`ConstraintState`] (everything else has probability zero) and finishes
//! a hypothesis exactly when its constraint is exhausted, so every result
//! is a permutation of the input words and no end-of-sentence token is
//! scored. Unconstrained search expands the whole vocabulary (minus
//! `<s>`, `<unk>` and `<null>`) and finishes on `</s>` or at `max_len`.
//!
//! Ordering is total and platform-independent: candidates rank by score
//! (`f64::total_cmp`), then smaller token id, then older hypothesis;
//! finished hypotheses rank by score, then lexicographically smaller
//! token sequence.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::constraint_tree::{ConstraintState, ConstraintTree};
use crate::scorers::{Scorer, ScorerError};
use crate::textprep::TokenId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchSpace {
    Constrained,
    Unconstrained,
}

impl std::str::FromStr for SearchSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constrained" => Ok(Self::Constrained),
            "unconstrained" => Ok(Self::Unconstrained),
            _ => Err(format!("unknown search space {s:?}")),
        }
    }
}

impl std::fmt::Display for SearchSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Constrained => "constrained",
            Self::Unconstrained => "unconstrained",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeConfig {
    pub beam_size: usize,
    pub mode: SearchSpace,
    /// Rank finished hypotheses by `logscore / length` (unconstrained only).
    pub length_norm: bool,
    /// Defaults to `2 * input length + 10` when unconstrained; constrained
    /// search always runs to the input's subword count.
    pub max_len: Option<usize>,
    /// Replace the input with a single `<null>` token.
    pub null_input: bool,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_size: 64,
            mode: SearchSpace::Constrained,
            length_norm: true,
            max_len: None,
            null_input: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("beam size must be at least 1")]
    BeamSize,
    #[error("empty input")]
    EmptyInput,
    #[error("constrained decoding requires a constraint tree")]
    MissingConstraint,
    #[error("scorer vocabulary lacks {0}")]
    MissingSpecial(&'static str),
    #[error("scorer returned {got} log-probabilities for a vocabulary of {expected}")]
    ScoreLength { expected: usize, got: usize },
    #[error(transparent)]
    Scorer(#[from] ScorerError),
}

#[derive(Clone, Debug)]
pub struct Hypothesis {
    /// Starts with `<s>`; ends with `</s>` when finished on it.
    pub tokens: Vec<TokenId>,
    pub logscore: f64,
    pub constraint: Option<ConstraintState>,
    pub finished: bool,
}

impl Hypothesis {
    /// Number of generated tokens (excluding `<s>`, including `</s>`).
    pub fn generated_len(&self) -> usize {
        self.tokens.len().saturating_sub(1)
    }

    /// Generated tokens without `<s>` and a trailing `</s>`.
    pub fn output(&self, eos: TokenId) -> &[TokenId] {
        let out = &self.tokens[1.min(self.tokens.len())..];
        match out.last() {
            Some(&t) if t == eos => &out[..out.len() - 1],
            _ => out,
        }
    }

    fn rank_key(&self, normalize: bool) -> f64 {
        if normalize {
            self.logscore / self.generated_len().max(1) as f64
        } else {
            self.logscore
        }
    }
}

/// The input actually shown to the scorer.
pub fn effective_input(
    input: &[TokenId],
    scorer: &dyn Scorer,
    config: &DecodeConfig,
) -> Result<Vec<TokenId>, DecodeError> {
    if config.null_input {
        let null = scorer
            .vocab()
            .null()
            .ok_or(DecodeError::MissingSpecial("<null>"))?;
        Ok(vec![null])
    } else if input.is_empty() {
        Err(DecodeError::EmptyInput)
    } else {
        Ok(input.to_vec())
    }
}

fn finished_order(a: &(f64, &Hypothesis), b: &(f64, &Hypothesis)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| a.1.tokens.cmp(&b.1.tokens))
}

pub fn beam_search(
    input: &[TokenId],
    scorer: &dyn Scorer,
    config: &DecodeConfig,
    constraint: Option<&ConstraintTree>,
) -> Result<Vec<Hypothesis>, DecodeError> {
    if config.beam_size == 0 {
        return Err(DecodeError::BeamSize);
    }
    let input = effective_input(input, scorer, config)?;
    let vocab = scorer.vocab();
    let bos = vocab.bos().ok_or(DecodeError::MissingSpecial("<s>"))?;
    let constrained = config.mode == SearchSpace::Constrained;
    let tree = match (constrained, constraint) {
        (true, Some(t)) => Some(t),
        (true, None) => return Err(DecodeError::MissingConstraint),
        (false, _) => None,
    };
    let eos = match tree {
        Some(_) => vocab.eos(),
        None => Some(vocab.eos().ok_or(DecodeError::MissingSpecial("</s>"))?),
    };
    let normalize = !constrained && config.length_norm;
    let max_len = match tree {
        Some(t) => config.max_len.unwrap_or(0).max(t.subword_count()),
        None => config.max_len.unwrap_or(2 * input.len() + 10),
    };
    let banned: Vec<TokenId> = [vocab.bos(), vocab.unk(), vocab.null()]
        .into_iter()
        .flatten()
        .collect();

    let mut live = vec![Hypothesis {
        tokens: vec![bos],
        logscore: 0.0,
        constraint: tree.map(|t| t.initial_state()),
        finished: false,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for _step in 0..max_len {
        if live.is_empty() {
            break;
        }
        // (score, token, parent index)
        let mut cands: Vec<(f64, TokenId, usize)> = Vec::new();
        for (hi, h) in live.iter().enumerate() {
            let lp = scorer.next_logprobs(&h.tokens, &input)?;
            if lp.len() != vocab.len() {
                return Err(DecodeError::ScoreLength {
                    expected: vocab.len(),
                    got: lp.len(),
                });
            }
            match (tree, &h.constraint) {
                (Some(t), Some(state)) => {
                    for tok in t.valid_next(state) {
                        let s = lp.get(tok as usize).copied().unwrap_or(f64::NEG_INFINITY);
                        cands.push((h.logscore + s, tok, hi));
                    }
                }
                _ => {
                    let mut own: Vec<(f64, TokenId, usize)> = lp
                        .iter()
                        .enumerate()
                        .filter(|&(t, &s)| {
                            s > f64::NEG_INFINITY && !banned.contains(&(t as TokenId))
                        })
                        .map(|(t, &s)| (h.logscore + s, t as TokenId, hi))
                        .collect();
                    if own.len() > config.beam_size {
                        own.select_nth_unstable_by(config.beam_size - 1, cand_order);
                        own.truncate(config.beam_size);
                    }
                    cands.extend(own);
                }
            }
        }
        cands.sort_by(cand_order);

        let mut next = Vec::with_capacity(config.beam_size);
        for (score, tok, hi) in cands {
            if next.len() == config.beam_size {
                break;
            }
            let parent = &live[hi];
            let mut tokens = Vec::with_capacity(parent.tokens.len() + 1);
            tokens.extend_from_slice(&parent.tokens);
            tokens.push(tok);
            let (state, done) = match (tree, &parent.constraint) {
                (Some(t), Some(st)) => {
                    let ns = t.advance(st, tok);
                    let done = t.is_exhausted(&ns);
                    (Some(ns), done)
                }
                _ => (None, Some(tok) == eos),
            };
            let h = Hypothesis {
                tokens,
                logscore: score,
                constraint: state,
                finished: done,
            };
            if done {
                finished.push(h);
            } else {
                next.push(h);
            }
        }
        live = next;

        if finished.len() >= config.beam_size {
            prune(&mut finished, config.beam_size, normalize);
            let worst = finished.last().map(|h| h.rank_key(normalize));
            let best_live = live
                .iter()
                .map(|h| {
                    if normalize {
                        h.logscore / max_len as f64
                    } else {
                        h.logscore
                    }
                })
                .max_by(f64::total_cmp);
            match (worst, best_live) {
                (Some(w), Some(b)) if b < w => break,
                (_, None) => break,
                _ => {}
            }
        }
    }
    // Out of steps: whatever is still live ends here.
    for mut h in live {
        h.finished = true;
        finished.push(h);
    }
    prune(&mut finished, config.beam_size, normalize);
    Ok(finished)
}

fn cand_order(a: &(f64, TokenId, usize), b: &(f64, TokenId, usize)) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| a.1.cmp(&b.1))
        .then_with(|| a.2.cmp(&b.2))
}

fn prune(finished: &mut Vec<Hypothesis>, beam: usize, normalize: bool) {
    let mut keyed: Vec<(f64, Hypothesis)> = finished
        .drain(..)
        .map(|h| (h.rank_key(normalize), h))
        .collect();
    keyed.sort_by(|a, b| finished_order(&(a.0, &a.1), &(b.0, &b.1)));
    keyed.truncate(beam);
    finished.extend(keyed.into_iter().map(|(_, h)| h));
}

/// Sum of stepwise log-probabilities of each candidate (tokens after the
/// implicit `<s>`), accumulated in the same order as beam search.
pub fn rescore(
    candidates: &[Vec<TokenId>],
    scorer: &dyn Scorer,
    input: &[TokenId],
) -> Result<Vec<f64>, DecodeError> {
    let bos = scorer
        .vocab()
        .bos()
        .ok_or(DecodeError::MissingSpecial("<s>"))?;
    candidates
        .iter()
        .map(|cand| {
            let mut prefix = vec![bos];
            let mut total = 0.0;
            for &tok in cand {
                let lp = scorer.next_logprobs(&prefix, input)?;
                total += lp.get(tok as usize).copied().unwrap_or(f64::NEG_INFINITY);
                prefix.push(tok);
            }
            Ok(total)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorers::{train_ngram, Smoothing, UniformScorer};
    use crate::textprep::Vocab;

    #[test]
    fn single_word_constrained() {
        let mut v = Vocab::with_specials();
        let hi = v.insert("hi");
        let lm = train_ngram(&[vec![hi]], v, 2, Smoothing::default()).unwrap();
        let tree = ConstraintTree::build(&[vec![hi]]).unwrap();
        let out = beam_search(&[hi], &lm, &DecodeConfig::default(), Some(&tree)).unwrap();
        assert_eq!(out[0].output(1), &[hi]);
        let expect = lm.logprob(&[0], hi);
        assert_eq!(out[0].logscore, expect);
        assert_eq!(out.len(), 1);
    }

    struct EosFirst(Vocab);

    impl Scorer for EosFirst {
        fn name(&self) -> &str {
            "eos-first"
        }
        fn vocab(&self) -> &Vocab {
            &self.0
        }
        fn next_logprobs(&self, _p: &[TokenId], _i: &[TokenId]) -> Result<Vec<f64>, ScorerError> {
            let mut lp = vec![f64::NEG_INFINITY; self.0.len()];
            lp[1] = 0.0;
            Ok(lp)
        }
    }

    #[test]
    fn unconstrained_eos_first_gives_empty_output() {
        let mut v = Vocab::with_specials();
        let a = v.insert("a");
        let cfg = DecodeConfig {
            mode: SearchSpace::Unconstrained,
            beam_size: 4,
            ..DecodeConfig::default()
        };
        let out = beam_search(&[a], &EosFirst(v), &cfg, None).unwrap();
        assert_eq!(out[0].output(1), &[] as &[TokenId]);
        assert_eq!(out[0].logscore, 0.0);
    }

    #[test]
    fn config_errors() {
        let v = Vocab::with_specials();
        let s = UniformScorer::new(v);
        let cfg = DecodeConfig {
            beam_size: 0,
            ..DecodeConfig::default()
        };
        assert!(matches!(
            beam_search(&[4], &s, &cfg, None),
            Err(DecodeError::BeamSize)
        ));
        assert!(matches!(
            beam_search(&[4], &s, &DecodeConfig::default(), None),
            Err(DecodeError::MissingConstraint)
        ));
        assert!(matches!(
            beam_search(&[], &s, &DecodeConfig::default(), None),
            Err(DecodeError::EmptyInput)
        ));
    }

    #[test]
    fn rescore_uniform_closed_form() {
        let mut v = Vocab::with_specials();
        for t in ["a", "b", "c", "d"] {
            v.insert(t);
        }
        let s = UniformScorer::new(v);
        let r = rescore(&[vec![4, 5, 6]], &s, &[4]).unwrap();
        assert!((r[0] - 3.0 * (1.0f64 / 8.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn rescore_mle_bigram() {
        let mut v = Vocab::with_specials();
        let a = v.insert("a");
        let b = v.insert("b");
        let c = v.insert("c");
        let lm = train_ngram(&[vec![a, b], vec![a, c]], v, 2, Smoothing::Mle).unwrap();
        let r = rescore(&[vec![a, b, 1]], &lm, &[a]).unwrap();
        // log 1 + log 0.5 + log p(</s>|b) = log 0.5
        assert_eq!(r[0], 0.5f64.ln());
    }
}
