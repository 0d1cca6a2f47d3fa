//! Count-based n-gram language model (unconditional scorer).
//!
//! Sequences are padded with `order - 1` copies of `<s>` and terminated
//! with one `</s>`. Two estimators are supported:
//!
//! * `mle`: relative frequencies; an unseen context backs off to its
//!   longest seen suffix.
//! * `kneser_ney`: interpolated absolute discounting. The highest order
//!   uses raw counts, lower orders use continuation counts (number of
//!   distinct left extensions), and the recursion bottoms out in a uniform
//!   distribution over the full vocabulary, so every token gets positive
//!   mass.
//!
//! Models persist as sorted, tab-separated plain text:
//!
//! ```text
//! ngram v1 order=3
//! vocab    <s> </s> <unk> <null> a b ...
//! <s> <s>    a    2
//! ```
//!
//! Only highest-order counts are stored; everything else is derived on
//! load, so the smoothing method is chosen at load time.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Scorer, ScorerError};
use crate::textprep::{TokenId, Vocab};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Smoothing {
    Mle,
    KneserNey { discount: f64 },
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::KneserNey { discount: 0.75 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum NgramError {
    #[error("n-gram order must be at least 1")]
    Order,
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("vocabulary must contain <s>, </s> and <unk>")]
    Specials,
    #[error("Kneser-Ney discount must lie in (0, 1), got {0}")]
    Discount(f64),
    #[error("token id {0} outside vocabulary")]
    TokenId(TokenId),
    #[error("model file line {line}: {detail}")]
    Format { line: usize, detail: String },
}

#[derive(Clone, Debug, Default)]
struct Dist {
    /// Sorted by token id.
    next: Vec<(TokenId, u64)>,
    total: u64,
}

/// Immutable after training; safe for concurrent queries.
#[derive(Clone, Debug)]
pub struct NgramModel {
    order: usize,
    vocab: Vocab,
    smoothing: Smoothing,
    bos: TokenId,
    unk: TokenId,
    /// Highest-order counts keyed by full n-gram.
    ngrams: BTreeMap<Vec<TokenId>, u64>,
    /// `levels[m]`: distributions for contexts of length `m`; raw counts at
    /// the top level (and everywhere under MLE), continuation counts below.
    levels: Vec<HashMap<Vec<TokenId>, Dist>>,
}

pub fn train_ngram(
    corpus: &[Vec<TokenId>],
    vocab: Vocab,
    order: usize,
    smoothing: Smoothing,
) -> Result<NgramModel, NgramError> {
    if order < 1 {
        return Err(NgramError::Order);
    }
    if corpus.is_empty() {
        return Err(NgramError::EmptyCorpus);
    }
    let (bos, eos) = match (vocab.bos(), vocab.eos(), vocab.unk()) {
        (Some(b), Some(e), Some(_)) => (b, e),
        _ => return Err(NgramError::Specials),
    };
    let mut ngrams: BTreeMap<Vec<TokenId>, u64> = BTreeMap::new();
    for sent in corpus {
        if let Some(&bad) = sent.iter().find(|&&t| t as usize >= vocab.len()) {
            return Err(NgramError::TokenId(bad));
        }
        let mut padded = vec![bos; order - 1];
        padded.extend_from_slice(sent);
        padded.push(eos);
        for w in padded.windows(order) {
            *ngrams.entry(w.to_vec()).or_default() += 1;
        }
    }
    NgramModel::from_counts(vocab, order, ngrams, smoothing)
}

impl NgramModel {
    fn from_counts(
        vocab: Vocab,
        order: usize,
        ngrams: BTreeMap<Vec<TokenId>, u64>,
        smoothing: Smoothing,
    ) -> Result<Self, NgramError> {
        if let Smoothing::KneserNey { discount } = smoothing {
            if !(discount > 0.0 && discount < 1.0) {
                return Err(NgramError::Discount(discount));
            }
        }
        let (bos, unk) = match (vocab.bos(), vocab.unk(), vocab.eos()) {
            (Some(b), Some(u), Some(_)) => (b, u),
            _ => return Err(NgramError::Specials),
        };
        let kn = matches!(smoothing, Smoothing::KneserNey { .. });

        // raw[m][context][w] and, for KN, the set of distinct left
        // extensions of each (m+1)-gram.
        let mut raw: Vec<HashMap<Vec<TokenId>, BTreeMap<TokenId, u64>>> =
            vec![HashMap::new(); order];
        let mut cont: Vec<HashMap<Vec<TokenId>, BTreeMap<TokenId, u64>>> =
            vec![HashMap::new(); order];
        for (gram, &c) in &ngrams {
            for m in 0..order {
                let suffix = &gram[order - 1 - m..];
                let (ctx, w) = suffix.split_at(m);
                *raw[m]
                    .entry(ctx.to_vec())
                    .or_default()
                    .entry(w[0])
                    .or_default() += c;
            }
        }
        if kn && order > 1 {
            // Continuation count of k-gram g = #distinct v with (v g) seen.
            for m in 0..order - 1 {
                let mut seen: HashMap<Vec<TokenId>, std::collections::BTreeSet<TokenId>> =
                    HashMap::new();
                for gram in ngrams.keys() {
                    let ext = &gram[order - 2 - m..];
                    seen.entry(ext[1..].to_vec()).or_default().insert(ext[0]);
                }
                for (g, lefts) in seen {
                    let (ctx, w) = g.split_at(m);
                    cont[m]
                        .entry(ctx.to_vec())
                        .or_default()
                        .insert(w[0], lefts.len() as u64);
                }
            }
        }
        let to_dist = |map: HashMap<Vec<TokenId>, BTreeMap<TokenId, u64>>| {
            map.into_iter()
                .map(|(ctx, next)| {
                    let total = next.values().sum();
                    (
                        ctx,
                        Dist {
                            next: next.into_iter().collect(),
                            total,
                        },
                    )
                })
                .collect::<HashMap<_, _>>()
        };
        let levels = raw
            .into_iter()
            .zip(cont)
            .enumerate()
            .map(|(m, (r, c))| {
                if kn && m + 1 < order {
                    to_dist(c)
                } else {
                    to_dist(r)
                }
            })
            .collect();
        Ok(Self {
            order,
            vocab,
            smoothing,
            bos,
            unk,
            ngrams,
            levels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Same counts, different estimator.
    pub fn with_smoothing(&self, smoothing: Smoothing) -> Result<Self, NgramError> {
        Self::from_counts(
            self.vocab.clone(),
            self.order,
            self.ngrams.clone(),
            smoothing,
        )
    }

    fn context(&self, prefix: &[TokenId]) -> Vec<TokenId> {
        let n = self.order - 1;
        let v = self.vocab.len() as TokenId;
        let tail = &prefix[prefix.len().saturating_sub(n)..];
        let mut ctx = vec![self.bos; n - tail.len()];
        ctx.extend(tail.iter().map(|&t| if t < v { t } else { self.unk }));
        ctx
    }

    /// Probability vector (not log) for the context ending `prefix`.
    pub fn distribution(&self, prefix: &[TokenId]) -> Vec<f64> {
        let ctx = self.context(prefix);
        let v = self.vocab.len();
        match self.smoothing {
            Smoothing::Mle => {
                let mut p = vec![0.0; v];
                for m in (0..self.order).rev() {
                    if let Some(d) = self.levels[m].get(&ctx[ctx.len() - m..]) {
                        for &(w, c) in &d.next {
                            p[w as usize] = c as f64 / d.total as f64;
                        }
                        break;
                    }
                }
                p
            }
            Smoothing::KneserNey { discount } => {
                let mut p = vec![1.0 / v as f64; v];
                for m in 0..self.order {
                    let Some(d) = self.levels[m].get(&ctx[ctx.len() - m..]) else {
                        continue;
                    };
                    let total = d.total as f64;
                    let gamma = discount * d.next.len() as f64 / total;
                    for x in p.iter_mut() {
                        *x *= gamma;
                    }
                    for &(w, c) in &d.next {
                        p[w as usize] += (c as f64 - discount) / total;
                    }
                }
                p
            }
        }
    }

    pub fn logprob(&self, prefix: &[TokenId], token: TokenId) -> f64 {
        self.distribution(prefix)
            .get(token as usize)
            .copied()
            .unwrap_or(0.0)
            .ln()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "ngram v1 order={}\nvocab\t{}\n",
            self.order,
            self.vocab.tokens().join(" ")
        );
        let mut lines: Vec<String> = self
            .ngrams
            .iter()
            .map(|(g, c)| {
                let (ctx, w) = g.split_at(self.order - 1);
                format!(
                    "{}\t{}\t{}",
                    self.vocab.decode(ctx).join(" "),
                    self.vocab.token(w[0]).unwrap_or_default(),
                    c
                )
            })
            .collect();
        lines.sort();
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }

    pub fn parse(text: &str, smoothing: Smoothing) -> Result<Self, NgramError> {
        let fmt = |line: usize, detail: &str| NgramError::Format {
            line,
            detail: detail.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| fmt(1, "missing header"))?;
        let order: usize = header
            .strip_prefix("ngram v1 order=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| fmt(1, "expected \"ngram v1 order=N\""))?;
        if order < 1 {
            return Err(NgramError::Order);
        }
        let (_, vline) = lines.next().ok_or_else(|| fmt(2, "missing vocab line"))?;
        let vocab = vline
            .strip_prefix("vocab\t")
            .ok_or_else(|| fmt(2, "expected \"vocab<TAB>tokens\""))
            .and_then(|s| Vocab::from_tokens(s.split(' ')).map_err(|e| fmt(2, &e.to_string())))?;
        let mut ngrams = BTreeMap::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(fmt(i + 1, "expected context<TAB>token<TAB>count"));
            }
            let lookup = |t: &str| {
                vocab
                    .id(t)
                    .ok_or_else(|| fmt(i + 1, &format!("unknown token {t:?}")))
            };
            let mut gram: Vec<TokenId> = Vec::with_capacity(order);
            if order > 1 {
                for t in cols[0].split(' ') {
                    gram.push(lookup(t)?);
                }
            } else if !cols[0].is_empty() {
                return Err(fmt(i + 1, "unigram context must be empty"));
            }
            if gram.len() != order - 1 {
                return Err(fmt(i + 1, "context length does not match order"));
            }
            gram.push(lookup(cols[1])?);
            let c: u64 = cols[2].parse().map_err(|_| fmt(i + 1, "bad count"))?;
            *ngrams.entry(gram).or_default() += c;
        }
        if ngrams.is_empty() {
            return Err(NgramError::EmptyCorpus);
        }
        Self::from_counts(vocab, order, ngrams, smoothing)
    }
}

impl Scorer for NgramModel {
    fn name(&self) -> &str {
        "ngram"
    }

    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn next_logprobs(
        &self,
        prefix: &[TokenId],
        _input: &[TokenId],
    ) -> Result<Vec<f64>, ScorerError> {
        if prefix.first() != Some(&self.bos) {
            return Err(ScorerError::BadPrefix {
                scorer: self.name().to_string(),
            });
        }
        Ok(self.distribution(prefix).into_iter().map(f64::ln).collect())
    }
}
