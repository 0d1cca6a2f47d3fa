//! Case-sensitive, single-reference corpus BLEU-4 without smoothing.

use std::collections::HashMap;

use serde::Serialize;

use super::EvalError;

pub const MAX_ORDER: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BleuReport {
    /// In `[0, 100]`.
    pub bleu: f64,
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl std::fmt::Display for BleuReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "BLEU = {:.2}, {:.1}/{:.1}/{:.1}/{:.1} (BP={:.3}, ratio={:.3}, hyp_len={}, ref_len={})",
            self.bleu,
            100.0 * self.precisions[0],
            100.0 * self.precisions[1],
            100.0 * self.precisions[2],
            100.0 * self.precisions[3],
            self.brevity_penalty,
            if self.ref_len == 0 {
                0.0
            } else {
                self.hyp_len as f64 / self.ref_len as f64
            },
            self.hyp_len,
            self.ref_len,
        )
    }
}

fn ngram_counts<S: AsRef<str>>(toks: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut m = HashMap::new();
    if toks.len() >= n {
        for w in toks.windows(n) {
            *m.entry(w.iter().map(|t| t.as_ref()).collect()).or_default() += 1;
        }
    }
    m
}

pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(
    hyps: &[Vec<H>],
    refs: &[Vec<R>],
) -> Result<BleuReport, EvalError> {
    if hyps.len() != refs.len() {
        return Err(EvalError::LengthMismatch {
            hyps: hyps.len(),
            refs: refs.len(),
        });
    }
    if hyps.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut matched = [0usize; MAX_ORDER];
    let mut total = [0usize; MAX_ORDER];
    let (mut c, mut r) = (0, 0);
    for (h, rf) in hyps.iter().zip(refs) {
        c += h.len();
        r += rf.len();
        for n in 1..=MAX_ORDER {
            let hc = ngram_counts(h, n);
            let rc = ngram_counts(rf, n);
            for (g, k) in &hc {
                matched[n - 1] += (*k).min(rc.get(g).copied().unwrap_or(0));
                total[n - 1] += k;
            }
        }
    }
    let mut precisions = [0.0; MAX_ORDER];
    for n in 0..MAX_ORDER {
        if total[n] > 0 {
            precisions[n] = matched[n] as f64 / total[n] as f64;
        }
    }
    let brevity_penalty = if c == 0 {
        0.0
    } else if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    let bleu = if precisions.iter().all(|&p| p > 0.0) {
        let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        100.0 * brevity_penalty * mean_log.exp()
    } else {
        0.0
    };
    Ok(BleuReport {
        bleu,
        precisions,
        brevity_penalty,
        hyp_len: c,
        ref_len: r,
    })
}
