mod common;

use proptest::prelude::*;

use common::{bag, random_tree, vocab_of, Tracker};
use wordorder::constraint_tree::ConstraintTree;
use wordorder::decoder::{beam_search, rescore, DecodeConfig, SearchSpace};
use wordorder::dep_linearizer::{
    parse_available, parse_conll_many, parse_penman, sample_partial, serialize_available,
    serialize_penman, PenmanMode,
};
use wordorder::evalkit::{corpus_bleu, lexical_errors, sentence_errors};
use wordorder::probe::{mst, tree_distances};
use wordorder::rng::SeededRng;
use wordorder::scorers::{logsumexp, train_ngram, Scorer, Smoothing};
use wordorder::textprep::{
    detokenize, format_dataset, learn_bpe, parse_dataset, permute, shuffle, word_frequencies,
    Example, Granularity, ShuffleSpec, TokenId,
};

const FORMS: [&str; 7] = ["the", "cat", "sat", "on", "a", "mat", "(x)"];

fn word_strategy() -> impl Strategy<Value = String> {
    "[a-e]{1,5}"
}

fn sentence_strategy(max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word_strategy(), 1..=max)
}

fn id_words(max_words: usize) -> impl Strategy<Value = Vec<Vec<TokenId>>> {
    // small alphabet so that prefixes and whole words repeat
    prop::collection::vec(prop::collection::vec(4u32..8, 1..=3), 1..=max_words)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_walks_match_tracker(words in id_words(6), seed in any::<u64>()) {
        let tree = ConstraintTree::build(&words).unwrap();
        let mut state = tree.initial_state();
        let mut tracker = Tracker::new(&words);
        let mut rng = SeededRng::new(seed);
        let total: usize = words.iter().map(Vec::len).sum();
        let mut emitted = Vec::new();
        for _ in 0..total {
            let valid = tree.valid_next(&state);
            prop_assert_eq!(valid.clone(), tracker.valid_next().into_iter().collect::<Vec<_>>());
            prop_assert!(!valid.is_empty());
            let t = valid[rng.below(valid.len())];
            state = tree.advance(&state, t);
            tracker.advance(t);
            emitted.push(t);
        }
        prop_assert!(tree.is_exhausted(&state));
        prop_assert!(tracker.is_exhausted());
        prop_assert!(tree.valid_next(&state).is_empty());
        let mut a: Vec<TokenId> = words.concat();
        a.sort_unstable();
        emitted.sort_unstable();
        prop_assert_eq!(a, emitted);
    }

    #[test]
    fn constrained_decode_is_a_permutation(sent in sentence_strategy(6), beam in 1usize..6) {
        let vocab = vocab_of(&sent);
        let ids = vec![vocab.encode(&sent)];
        let m = train_ngram(&ids, vocab, 2, Smoothing::default()).unwrap();
        let words: Vec<Vec<TokenId>> = sent.iter().map(|w| vec![m.vocab().id(w).unwrap()]).collect();
        let tree = ConstraintTree::build(&words).unwrap();
        let input: Vec<TokenId> = words.concat();
        let config = DecodeConfig { beam_size: beam, ..DecodeConfig::default() };
        let hyps = beam_search(&input, &m, &config, Some(&tree)).unwrap();
        prop_assert!(!hyps.is_empty());
        let eos = m.vocab().eos().unwrap();
        for h in &hyps {
            let out = h.output(eos).to_vec();
            let mut a = out.clone();
            a.sort_unstable();
            let mut b = input.clone();
            b.sort_unstable();
            prop_assert_eq!(a, b);
            let r = rescore(&[out], &m, &input).unwrap()[0];
            prop_assert!((r - h.logscore).abs() < 1e-9);
            prop_assert!(h.logscore <= 0.0);
        }
        for w in hyps.windows(2) {
            prop_assert!(w[0].logscore >= w[1].logscore);
        }
        let again = beam_search(&input, &m, &config, Some(&tree)).unwrap();
        let key = |v: &[wordorder::decoder::Hypothesis]| {
            v.iter().map(|h| (h.tokens.clone(), h.logscore.to_bits())).collect::<Vec<_>>()
        };
        prop_assert_eq!(key(&hyps), key(&again));
    }

    #[test]
    fn unconstrained_scores_are_additive(sents in prop::collection::vec(sentence_strategy(5), 1..4), beam in 1usize..5) {
        let mut names: Vec<String> = sents.concat();
        names.sort();
        let vocab = vocab_of(&names);
        let ids: Vec<Vec<TokenId>> = sents.iter().map(|s| vocab.encode(s)).collect();
        let m = train_ngram(&ids, vocab, 3, Smoothing::default()).unwrap();
        let input = ids[0].clone();
        let config = DecodeConfig { beam_size: beam, mode: SearchSpace::Unconstrained, ..DecodeConfig::default() };
        let hyps = beam_search(&input, &m, &config, None).unwrap();
        let eos = m.vocab().eos().unwrap();
        for h in &hyps {
            let mut toks = h.output(eos).to_vec();
            if h.tokens.last() == Some(&eos) {
                toks.push(eos);
            }
            let r = rescore(&[toks], &m, &input).unwrap()[0];
            prop_assert!((r - h.logscore).abs() < 1e-9);
            prop_assert!(h.generated_len() <= 2 * input.len() + 10);
        }
    }

    #[test]
    fn kn_distributions_normalize(sents in prop::collection::vec(sentence_strategy(5), 1..5), order in 1usize..5, probe in sentence_strategy(4)) {
        let vocab = vocab_of(&sents.concat());
        let ids: Vec<Vec<TokenId>> = sents.iter().map(|s| vocab.encode(s)).collect();
        let m = train_ngram(&ids, vocab, order, Smoothing::default()).unwrap();
        let mut prefix = vec![m.vocab().bos().unwrap()];
        prefix.extend(m.vocab().encode(&probe));
        for k in 1..=prefix.len() {
            let lp = m.next_logprobs(&prefix[..k], &[]).unwrap();
            prop_assert!(logsumexp(&lp).abs() < 1e-9);
            prop_assert!(lp.iter().all(|x| !x.is_nan() && *x <= 0.0));
        }
    }

    #[test]
    fn shuffles_preserve_the_bag(sent in sentence_strategy(10), seed in any::<u64>(), merges in 0usize..20) {
        let bpe = learn_bpe(word_frequencies(std::slice::from_ref(&sent)), merges);
        let target = bpe.apply_sentence(&sent);
        for g in [Granularity::Word, Granularity::Subword] {
            let s = shuffle(&sent, Some(&bpe), ShuffleSpec { seed, granularity: g });
            prop_assert_eq!(bag(&s), bag(&target));
        }
        let w = shuffle(&sent, Some(&bpe), ShuffleSpec::words(seed));
        prop_assert_eq!(bag(&detokenize(&w)), bag(&sent));
        let p = permute(&sent, seed);
        prop_assert_eq!(bag(&p), bag(&sent));
        prop_assert_eq!(permute(&sent, seed), p);
    }

    #[test]
    fn bpe_round_trips(sents in prop::collection::vec(sentence_strategy(8), 1..6), merges in 0usize..40) {
        let bpe = learn_bpe(word_frequencies(&sents), merges);
        for s in &sents {
            let seg = bpe.apply_sentence(s);
            prop_assert_eq!(&detokenize(&seg), s);
        }
    }

    #[test]
    fn dataset_text_round_trips(rows in prop::collection::vec((sentence_strategy(5), sentence_strategy(5), prop::option::of(sentence_strategy(5))), 1..6)) {
        let ex: Vec<Example> = rows
            .into_iter()
            .map(|(input, target, bag)| Example { input, target, bag })
            .collect();
        prop_assert_eq!(parse_dataset(&format_dataset(&ex)).unwrap(), ex);
    }

    #[test]
    fn penman_round_trips(seed in any::<u64>(), n in 1usize..12, shuffle_seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let tree = random_tree(&mut rng, n, &FORMS);
        for mode in PenmanMode::ALL {
            let toks = serialize_penman(&tree, mode, shuffle_seed, None).unwrap();
            let back = parse_penman(&toks, mode).unwrap();
            prop_assert_eq!(back.words().len(), n);
            let mut a = back.words();
            let mut b = tree.words();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
            if mode == PenmanMode::Full {
                prop_assert_eq!(back.canonical(), tree.canonical());
            }
        }
        let conll = tree.to_conll();
        prop_assert_eq!(&parse_conll_many(&conll).unwrap()[0], &tree);
    }

    #[test]
    fn partial_trees_are_forests(seed in any::<u64>(), n in 1usize..12, p_pos in 0.0f64..=1.0, p_dep in 0.0f64..=1.0, s in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let tree = random_tree(&mut rng, n, &FORMS);
        let part = sample_partial(&tree, p_pos, p_dep, s);
        prop_assert!(part.validate_forest().is_ok());
        prop_assert_eq!(part.words(), tree.words());
        for (a, b) in part.nodes.iter().zip(&tree.nodes) {
            prop_assert!(a.pos.is_none() || a.pos == b.pos);
            prop_assert!(a.head.is_none() || a.head == b.head);
            prop_assert_eq!(a.label.is_some(), a.head.is_some());
        }
        let toks = serialize_available(&part, s, None).unwrap();
        prop_assert_eq!(parse_available(&toks).unwrap().canonical(), part.canonical());
    }

    #[test]
    fn mst_spans_and_distances_are_metric(seed in any::<u64>(), n in 1usize..10) {
        let mut rng = SeededRng::new(seed);
        let tree = random_tree(&mut rng, n, &FORMS);
        let d = tree_distances(&tree);
        for i in 0..n {
            prop_assert_eq!(d[[i, i]], 0.0);
            for j in 0..n {
                prop_assert_eq!(d[[i, j]], d[[j, i]]);
                for k in 0..n {
                    prop_assert!(d[[i, k]] <= d[[i, j]] + d[[j, k]]);
                }
            }
        }
        // gold distances decode back to the gold tree
        let mut edges = mst(d.view());
        edges.sort_unstable();
        prop_assert_eq!(edges, tree.edges());
    }

    #[test]
    fn bleu_and_error_bounds(pairs in prop::collection::vec((sentence_strategy(8), sentence_strategy(8)), 1..6)) {
        let (hyps, refs): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let b = corpus_bleu(&hyps, &refs).unwrap().bleu;
        prop_assert!((0.0..=100.0 + 1e-9).contains(&b));
        prop_assert!((corpus_bleu(&refs, &refs).unwrap().bleu - 100.0).abs() < 1e-9 || refs.iter().all(|r| r.len() < 4));
        let lex = lexical_errors(&hyps, &refs, 3).unwrap();
        prop_assert!((0.0..=1.0).contains(&lex.missing_rate));
        prop_assert!(lex.redundant_rate >= 0.0);
        for (h, r) in hyps.iter().zip(&refs) {
            let (miss, red) = sentence_errors(h, r);
            prop_assert!(miss <= r.len() && red <= h.len());
            prop_assert_eq!(r.len() - miss, h.len() - red);
        }
    }
}
