//! Byte-pair encoding with a word-internal continuation marker.
//!
//! Subwords that do not end a word are rendered with a trailing `_`
//! ("li_ kes"), the final subword of a word is rendered bare. Internally
//! the last symbol of a word carries an end-of-word suffix `</w>`, which is
//! also how it appears in merges files.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::fmt::Write as _;

pub const CONTINUATION_MARKER: &str = "_";
const END_OF_WORD: &str = "</w>";

#[derive(Debug, thiserror::Error)]
pub enum BpeError {
    #[error("merges line {line}: expected \"left right\", got {text:?}")]
    BadMergeLine { line: usize, text: String },
}

type Pair = (String, String);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BpeMerges {
    merges: Vec<Pair>,
    ranks: HashMap<Pair, usize>,
}

impl BpeMerges {
    pub fn from_pairs<I: IntoIterator<Item = (String, String)>>(pairs: I) -> Self {
        let mut m = Self::default();
        for p in pairs {
            if !m.ranks.contains_key(&p) {
                m.ranks.insert(p.clone(), m.merges.len());
                m.merges.push(p);
            }
        }
        m
    }

    /// Parses a merges file: one `left right` rule per line, highest
    /// priority first. Blank lines and a leading `#version` line are skipped.
    pub fn parse(text: &str) -> Result<Self, BpeError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || (i == 0 && line.starts_with("#version")) {
                continue;
            }
            let mut parts = line.split(' ');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => {
                    pairs.push((l.to_string(), r.to_string()))
                }
                _ => {
                    return Err(BpeError::BadMergeLine {
                        line: i + 1,
                        text: line.to_string(),
                    })
                }
            }
        }
        Ok(Self::from_pairs(pairs))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (l, r) in &self.merges {
            let _ = writeln!(out, "{l} {r}");
        }
        out
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn merges(&self) -> &[Pair] {
        &self.merges
    }

    /// Segments one word into rendered subwords.
    pub fn apply(&self, word: &str) -> Vec<String> {
        let mut symbols = initial_symbols(word);
        while symbols.len() > 1 {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())))
                .min()
                .copied();
            let Some(rank) = best else { break };
            let (l, r) = &self.merges[rank];
            symbols = merge_symbols(&symbols, l, r);
        }
        symbols.iter().map(|s| render(s)).collect()
    }

    pub fn apply_sentence<S: AsRef<str>>(&self, words: &[S]) -> Vec<String> {
        words.iter().flat_map(|w| self.apply(w.as_ref())).collect()
    }
}

/// Learns up to `num_merges` merge rules by repeatedly merging the most
/// frequent adjacent symbol pair (ties go to the lexicographically smallest
/// pair). Stops early when no pair occurs at least twice.
pub fn learn_bpe<I, S>(word_freqs: I, num_merges: usize) -> BpeMerges
where
    I: IntoIterator<Item = (S, u64)>,
    S: AsRef<str>,
{
    let mut agg: BTreeMap<String, u64> = BTreeMap::new();
    for (w, f) in word_freqs {
        if !w.as_ref().is_empty() && f > 0 {
            *agg.entry(w.as_ref().to_string()).or_default() += f;
        }
    }
    let mut words: Vec<(Vec<String>, u64)> = agg
        .into_iter()
        .map(|(w, f)| (initial_symbols(&w), f))
        .collect();

    let mut counts: HashMap<Pair, u64> = HashMap::new();
    let mut where_: HashMap<Pair, HashSet<usize>> = HashMap::new();
    for (i, (syms, f)) in words.iter().enumerate() {
        for w in syms.windows(2) {
            let p = (w[0].clone(), w[1].clone());
            *counts.entry(p.clone()).or_default() += f;
            where_.entry(p).or_default().insert(i);
        }
    }
    let mut heap: BinaryHeap<HeapEntry> = counts
        .iter()
        .map(|(p, &c)| HeapEntry(c, Reverse(p.clone())))
        .collect();

    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let Some(HeapEntry(count, Reverse(pair))) = heap.pop() else {
            break;
        };
        if counts.get(&pair).copied().unwrap_or(0) != count {
            continue; // stale
        }
        if count < 2 {
            break;
        }
        let affected: Vec<usize> = where_
            .remove(&pair)
            .map(|s| {
                let mut v: Vec<_> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .unwrap_or_default();
        let mut touched: HashSet<Pair> = HashSet::new();
        for i in affected {
            let (syms, f) = &words[i];
            let f = *f;
            for w in syms.windows(2) {
                let p = (w[0].clone(), w[1].clone());
                if let Some(c) = counts.get_mut(&p) {
                    *c -= f;
                }
                if let Some(set) = where_.get_mut(&p) {
                    set.remove(&i);
                }
                touched.insert(p);
            }
            let merged = merge_symbols(syms, &pair.0, &pair.1);
            for w in merged.windows(2) {
                let p = (w[0].clone(), w[1].clone());
                *counts.entry(p.clone()).or_default() += f;
                where_.entry(p.clone()).or_default().insert(i);
                touched.insert(p);
            }
            words[i].0 = merged;
        }
        counts.remove(&pair);
        for p in touched {
            if let Some(&c) = counts.get(&p) {
                if c > 0 {
                    heap.push(HeapEntry(c, Reverse(p)));
                }
            }
        }
        merges.push(pair);
    }
    BpeMerges::from_pairs(merges)
}

/// Learns merges so that the symbol inventory reaches roughly `vocab_size`
/// (initial characters plus one new symbol per merge).
pub fn learn_bpe_vocab<I, S>(word_freqs: I, vocab_size: usize) -> BpeMerges
where
    I: IntoIterator<Item = (S, u64)>,
    S: AsRef<str>,
{
    let freqs: Vec<(String, u64)> = word_freqs
        .into_iter()
        .map(|(w, f)| (w.as_ref().to_string(), f))
        .collect();
    let base: HashSet<String> = freqs.iter().flat_map(|(w, _)| initial_symbols(w)).collect();
    learn_bpe(freqs, vocab_size.saturating_sub(base.len()))
}

pub fn word_frequencies<S: AsRef<str>>(sentences: &[Vec<S>]) -> BTreeMap<String, u64> {
    let mut freqs = BTreeMap::new();
    for s in sentences {
        for w in s {
            *freqs.entry(w.as_ref().to_string()).or_default() += 1;
        }
    }
    freqs
}

pub fn is_continuation(subword: &str) -> bool {
    subword.len() > CONTINUATION_MARKER.len() && subword.ends_with(CONTINUATION_MARKER)
}

/// Groups rendered subwords into words. A trailing group that never saw a
/// word-final subword is kept as its own word.
pub fn group_words<S: AsRef<str>>(subwords: &[S]) -> Vec<Vec<String>> {
    let mut words = Vec::new();
    let mut cur = Vec::new();
    for s in subwords {
        let s = s.as_ref();
        cur.push(s.to_string());
        if !is_continuation(s) {
            words.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    words
}

pub fn join_word<S: AsRef<str>>(subwords: &[S]) -> String {
    subwords
        .iter()
        .map(|s| {
            let s = s.as_ref();
            if is_continuation(s) {
                &s[..s.len() - CONTINUATION_MARKER.len()]
            } else {
                s
            }
        })
        .collect()
}

/// Re-joins rendered subwords into words.
pub fn detokenize<S: AsRef<str>>(subwords: &[S]) -> Vec<String> {
    group_words(subwords).iter().map(|w| join_word(w)).collect()
}

fn initial_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    chars
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            if i + 1 == n {
                format!("{c}{END_OF_WORD}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

fn merge_symbols(symbols: &[String], l: &str, r: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == l && symbols[i + 1] == r {
            out.push(format!("{l}{r}"));
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

fn render(symbol: &str) -> String {
    match symbol.strip_suffix(END_OF_WORD) {
        Some(s) => s.to_string(),
        None => format!("{symbol}{CONTINUATION_MARKER}"),
    }
}

#[derive(PartialEq, Eq)]
struct HeapEntry(u64, Reverse<Pair>);

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0).then_with(|| self.1.cmp(&other.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
