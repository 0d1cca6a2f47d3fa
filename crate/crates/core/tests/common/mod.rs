//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use wordorder::dep_linearizer::{DepNode, DepTree};
use wordorder::rng::SeededRng;
use wordorder::scorers::Scorer;
use wordorder::textprep::{TokenId, Vocab};

/// Nondeterministic multiset tracker: a set of (unused words, partial word)
/// configurations, advanced by brute force over the word list.
#[derive(Clone, Debug)]
pub struct Tracker {
    words: Vec<Vec<TokenId>>,
    states: BTreeSet<(Vec<bool>, Vec<TokenId>)>,
}

impl Tracker {
    pub fn new(words: &[Vec<TokenId>]) -> Self {
        let mut states = BTreeSet::new();
        states.insert((vec![false; words.len()], Vec::new()));
        Self {
            words: words.to_vec(),
            states,
        }
    }

    pub fn valid_next(&self) -> BTreeSet<TokenId> {
        let mut out = BTreeSet::new();
        for (used, partial) in &self.states {
            for (i, w) in self.words.iter().enumerate() {
                if !used[i] && w.len() > partial.len() && w.starts_with(partial) {
                    out.insert(w[partial.len()]);
                }
            }
        }
        out
    }

    pub fn advance(&mut self, tok: TokenId) {
        let mut next = BTreeSet::new();
        for (used, partial) in &self.states {
            let mut p = partial.clone();
            p.push(tok);
            for (i, w) in self.words.iter().enumerate() {
                if used[i] || !w.starts_with(&p) {
                    continue;
                }
                if w.len() == p.len() {
                    let mut u = used.clone();
                    u[i] = true;
                    // canonicalize: equal words are interchangeable
                    canonical_used(&self.words, &mut u);
                    next.insert((u, Vec::new()));
                } else {
                    next.insert((used.clone(), p.clone()));
                }
            }
        }
        self.states = next;
    }

    pub fn is_exhausted(&self) -> bool {
        self.states
            .iter()
            .any(|(u, p)| p.is_empty() && u.iter().all(|&b| b))
    }
}

fn canonical_used(words: &[Vec<TokenId>], used: &mut [bool]) {
    let mut per: BTreeMap<&Vec<TokenId>, (usize, Vec<usize>)> = BTreeMap::new();
    for (i, w) in words.iter().enumerate() {
        let e = per.entry(w).or_default();
        e.1.push(i);
        if used[i] {
            e.0 += 1;
        }
    }
    for (_, (k, idx)) in per {
        for (j, i) in idx.into_iter().enumerate() {
            used[i] = j < k;
        }
    }
}

/// Distinct token sequences obtained by concatenating every permutation of
/// `words`.
pub fn all_orders(words: &[Vec<TokenId>]) -> BTreeSet<Vec<TokenId>> {
    fn rec(
        words: &[Vec<TokenId>],
        used: &mut Vec<bool>,
        cur: &mut Vec<TokenId>,
        out: &mut BTreeSet<Vec<TokenId>>,
    ) {
        if used.iter().all(|&u| u) {
            out.insert(cur.clone());
            return;
        }
        let mut tried = BTreeSet::new();
        for i in 0..words.len() {
            if used[i] || !tried.insert(&words[i]) {
                continue;
            }
            used[i] = true;
            let n = cur.len();
            cur.extend(&words[i]);
            rec(words, used, cur, out);
            cur.truncate(n);
            used[i] = false;
        }
    }
    let mut out = BTreeSet::new();
    rec(
        words,
        &mut vec![false; words.len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// Left-to-right sum of scorer log-probabilities after `<s>`.
pub fn sequence_score(scorer: &dyn Scorer, seq: &[TokenId], input: &[TokenId]) -> f64 {
    let bos = scorer.vocab().bos().unwrap();
    let mut prefix = vec![bos];
    let mut total = 0.0;
    for &t in seq {
        total += scorer.next_logprobs(&prefix, input).unwrap()[t as usize];
        prefix.push(t);
    }
    total
}

/// Best permutation by score; ties go to the smaller token sequence.
pub fn brute_force_argmax(
    scorer: &dyn Scorer,
    words: &[Vec<TokenId>],
    input: &[TokenId],
) -> (Vec<TokenId>, f64) {
    let mut best: Option<(Vec<TokenId>, f64)> = None;
    for seq in all_orders(words) {
        let s = sequence_score(scorer, &seq, input);
        // BTreeSet iterates in ascending order, so a strict improvement is
        // required to replace an earlier (smaller) sequence.
        if best.as_ref().is_none_or(|(_, b)| s.total_cmp(b).is_gt()) {
            best = Some((seq, s));
        }
    }
    best.unwrap()
}

/// Corpus BLEU-4 written directly from the definition.
pub fn bleu_oracle(hyps: &[Vec<String>], refs: &[Vec<String>]) -> f64 {
    let mut num = [0f64; 4];
    let mut den = [0f64; 4];
    let mut c = 0f64;
    let mut r = 0f64;
    for (h, rf) in hyps.iter().zip(refs) {
        c += h.len() as f64;
        r += rf.len() as f64;
        for n in 1..=4 {
            let grams = |s: &[String]| -> Vec<String> {
                if s.len() < n {
                    return vec![];
                }
                (0..=s.len() - n)
                    .map(|i| s[i..i + n].join("\u{1}"))
                    .collect()
            };
            let hg = grams(h);
            let mut rg = grams(rf);
            den[n - 1] += hg.len() as f64;
            for g in hg {
                if let Some(pos) = rg.iter().position(|x| *x == g) {
                    rg.swap_remove(pos);
                    num[n - 1] += 1.0;
                }
            }
        }
    }
    let mut prod = 1.0;
    for n in 0..4 {
        if num[n] == 0.0 {
            return 0.0;
        }
        prod *= num[n] / den[n];
    }
    let bp = if c >= r { 1.0 } else { (1.0 - r / c).exp() };
    100.0 * bp * prod.powf(0.25)
}

/// Every labeled tree on `n` vertices, decoded from Prüfer sequences.
pub fn all_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n < 2 {
        return vec![vec![]];
    }
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let mut out = Vec::new();
    let total = n.pow((n - 2) as u32);
    for code in 0..total {
        let mut seq = Vec::with_capacity(n - 2);
        let mut c = code;
        for _ in 0..n - 2 {
            seq.push(c % n);
            c /= n;
        }
        let mut degree = vec![1usize; n];
        for &s in &seq {
            degree[s] += 1;
        }
        let mut edges = Vec::with_capacity(n - 1);
        for &s in &seq {
            let leaf = (0..n).find(|&i| degree[i] == 1).unwrap();
            edges.push((leaf.min(s), leaf.max(s)));
            degree[leaf] -= 1;
            degree[s] -= 1;
        }
        let rest: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
        edges.push((rest[0], rest[1]));
        edges.sort_unstable();
        out.push(edges);
    }
    out
}

/// A random tree over `n` nodes with random root, forms drawn from
/// `forms`, tags and labels from small inventories.
pub fn random_tree(rng: &mut SeededRng, n: usize, forms: &[&str]) -> DepTree {
    const TAGS: [&str; 6] = ["NN", "VBZ", "DT", "JJ", ":", "-LRB-"];
    const LABELS: [&str; 5] = ["sub", "obj", "det", "amod", "punct"];
    let order = rng.permutation(n);
    let mut nodes: Vec<DepNode> = (0..n)
        .map(|_| DepNode {
            form: forms[rng.below(forms.len())].to_string(),
            pos: Some(TAGS[rng.below(TAGS.len())].to_string()),
            head: None,
            label: None,
        })
        .collect();
    for k in 1..n {
        let child = order[k];
        let head = order[rng.below(k)];
        nodes[child].head = Some(head);
        nodes[child].label = Some(LABELS[rng.below(LABELS.len())].to_string());
    }
    nodes[order[0]].label = Some("root".to_string());
    DepTree::new(nodes).unwrap()
}

/// Vocabulary with specials plus `names`.
pub fn vocab_of<S: AsRef<str>>(names: &[S]) -> Vocab {
    let mut v = Vocab::with_specials();
    for n in names {
        v.insert(n.as_ref());
    }
    v
}

/// Multiset of strings.
pub fn bag<S: AsRef<str>>(xs: &[S]) -> HashMap<String, usize> {
    let mut m = HashMap::new();
    for x in xs {
        *m.entry(x.as_ref().to_string()).or_default() += 1;
    }
    m
}
