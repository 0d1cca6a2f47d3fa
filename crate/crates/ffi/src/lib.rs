//! C ABI over the `wordorder` library.
//!
//! Every function returns a [`WoStatus`] and passes results through
//! out-pointers. Text crosses the boundary as NUL-terminated UTF-8:
//! sentences are space-separated subwords, corpora are newline-separated
//! sentences. Strings handed out by the library are released with
//! [`wo_string_free`]; handles with their own `_free` function. After a
//! failure, [`wo_last_error`] describes it on the calling thread.
//!
//! Handles are not synchronized: share a model between threads only for
//! read-only calls, and keep each constraint state on one thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wordorder::constraint_tree::{ConstraintState, ConstraintTree};
use wordorder::decoder::{rescore, DecodeConfig, SearchSpace};
use wordorder::evalkit::corpus_bleu;
use wordorder::pipeline::Orderer;
use wordorder::scorers::{train_ngram, NgramModel, Scorer, Smoothing};
use wordorder::textprep::{Example, TokenId, Vocab};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Decode = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WoSmoothing {
    Mle = 0,
    KneserNey = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WoDecodeOptions {
    pub beam_size: u32,
    pub constrained: bool,
    pub length_norm: bool,
    /// 0 selects the default.
    pub max_len: u32,
    pub null_input: bool,
}

impl From<WoDecodeOptions> for DecodeConfig {
    fn from(o: WoDecodeOptions) -> Self {
        DecodeConfig {
            beam_size: o.beam_size as usize,
            mode: if o.constrained {
                SearchSpace::Constrained
            } else {
                SearchSpace::Unconstrained
            },
            length_norm: o.length_norm,
            max_len: (o.max_len > 0).then_some(o.max_len as usize),
            null_input: o.null_input,
        }
    }
}

pub struct WoNgramModel {
    inner: NgramModel,
}

pub struct WoConstraintTree {
    inner: ConstraintTree,
}

pub struct WoConstraintState {
    inner: ConstraintState,
}

#[derive(Debug, thiserror::Error)]
enum FfiError {
    #[error("null pointer: {0}")]
    Null(&'static str),
    #[error("{0} is not valid UTF-8")]
    Utf8(&'static str),
    #[error("{0}")]
    Argument(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Decode(String),
    #[error("buffer holds {cap} items, {need} needed")]
    Buffer { cap: usize, need: usize },
}

impl FfiError {
    fn status(&self) -> WoStatus {
        match self {
            FfiError::Null(_) => WoStatus::NullPointer,
            FfiError::Utf8(_) => WoStatus::InvalidUtf8,
            FfiError::Argument(_) => WoStatus::InvalidArgument,
            FfiError::Parse(_) => WoStatus::Parse,
            FfiError::Decode(_) => WoStatus::Decode,
            FfiError::Buffer { .. } => WoStatus::BufferTooSmall,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), FfiError>>(f: F) -> WoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            WoStatus::Ok
        }
        Ok(Err(e)) => {
            set_last_error(e.to_string());
            e.status()
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            WoStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| FfiError::Utf8(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or(FfiError::Null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, FfiError> {
    p.as_mut().ok_or(FfiError::Null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &'static str) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Null(what));
    }
    out.write(value);
    Ok(())
}

fn c_string(s: String) -> Result<*mut c_char, FfiError> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| FfiError::Argument("output contains a NUL byte".to_string()))
}

/// Copies `items` into a caller buffer; on overflow reports the needed
/// length through `len` and fails.
unsafe fn fill(
    items: &[TokenId],
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> Result<(), FfiError> {
    put(len, items.len(), "len")?;
    if items.len() > cap {
        return Err(FfiError::Buffer {
            cap,
            need: items.len(),
        });
    }
    if !items.is_empty() {
        if buf.is_null() {
            return Err(FfiError::Null("buf"));
        }
        ptr::copy_nonoverlapping(items.as_ptr(), buf, items.len());
    }
    Ok(())
}

fn smoothing(kind: WoSmoothing, discount: f64) -> Smoothing {
    match kind {
        WoSmoothing::Mle => Smoothing::Mle,
        WoSmoothing::KneserNey => Smoothing::KneserNey { discount },
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn wo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn wo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn wo_decode_options_default() -> WoDecodeOptions {
    let d = DecodeConfig::default();
    WoDecodeOptions {
        beam_size: d.beam_size as u32,
        constrained: d.mode == SearchSpace::Constrained,
        length_norm: d.length_norm,
        max_len: 0,
        null_input: d.null_input,
    }
}

/// Trains an n-gram model on a newline-separated corpus. The vocabulary is
/// the corpus tokens plus the special tokens.
///
/// # Safety
/// `corpus` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_ngram_train(
    corpus: *const c_char,
    order: u32,
    kind: WoSmoothing,
    discount: f64,
    out: *mut *mut WoNgramModel,
) -> WoStatus {
    guard(|| {
        let sents: Vec<Vec<String>> = text(corpus, "corpus")?
            .lines()
            .map(words)
            .filter(|s| !s.is_empty())
            .collect();
        let mut vocab = Vocab::with_specials();
        for t in sents.iter().flatten() {
            vocab.insert(t);
        }
        let ids: Vec<Vec<TokenId>> = sents.iter().map(|s| vocab.encode(s)).collect();
        let model = train_ngram(&ids, vocab, order as usize, smoothing(kind, discount))
            .map_err(|e| FfiError::Argument(e.to_string()))?;
        put(
            out,
            Box::into_raw(Box::new(WoNgramModel { inner: model })),
            "out",
        )
    })
}

/// Parses a model file's contents.
///
/// # Safety
/// `model_text` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_ngram_load(
    model_text: *const c_char,
    kind: WoSmoothing,
    discount: f64,
    out: *mut *mut WoNgramModel,
) -> WoStatus {
    guard(|| {
        let model = NgramModel::parse(text(model_text, "model_text")?, smoothing(kind, discount))
            .map_err(|e| FfiError::Parse(e.to_string()))?;
        put(
            out,
            Box::into_raw(Box::new(WoNgramModel { inner: model })),
            "out",
        )
    })
}

/// Serializes a model; free the result with [`wo_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_ngram_to_text(
    model: *const WoNgramModel,
    out: *mut *mut c_char,
) -> WoStatus {
    guard(|| {
        let m = handle(model, "model")?;
        put(out, c_string(m.inner.to_text())?, "out")
    })
}

/// # Safety
/// `model` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn wo_ngram_free(model: *mut WoNgramModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_ngram_vocab_size(
    model: *const WoNgramModel,
    out: *mut usize,
) -> WoStatus {
    guard(|| {
        let m = handle(model, "model")?;
        put(out, m.inner.vocab().len(), "out")
    })
}

/// Maps subwords to model token ids (unknown subwords to `<unk>`).
///
/// # Safety
/// `model` must be a live handle, `subwords` a valid C string, `buf` valid
/// for `cap` writes and `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_ngram_encode(
    model: *const WoNgramModel,
    subwords: *const c_char,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> WoStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let ids = m.inner.vocab().encode(&words(text(subwords, "subwords")?));
        fill(&ids, buf, cap, len)
    })
}

/// Log-probability of a subword sequence (without end of sentence).
///
/// # Safety
/// `model` must be a live handle, `subwords` a valid C string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_ngram_score(
    model: *const WoNgramModel,
    subwords: *const c_char,
    out: *mut f64,
) -> WoStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let ids = m.inner.vocab().encode(&words(text(subwords, "subwords")?));
        let s = rescore(&[ids], &m.inner, &[]).map_err(|e| FfiError::Decode(e.to_string()))?;
        put(out, s[0], "out")
    })
}

/// Orders one input sentence. `out_words` receives the best output as
/// space-separated words (free with [`wo_string_free`]); `out_logscore`
/// may be NULL.
///
/// # Safety
/// `model` must be a live handle, `input` a valid C string, `options`
/// NULL (defaults) or valid, and `out_words` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_order(
    model: *const WoNgramModel,
    input: *const c_char,
    options: *const WoDecodeOptions,
    out_words: *mut *mut c_char,
    out_logscore: *mut f64,
) -> WoStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let input = words(text(input, "input")?);
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| wo_decode_options_default());
        if opts.beam_size == 0 {
            return Err(FfiError::Argument(
                "beam_size must be at least 1".to_string(),
            ));
        }
        if out_words.is_null() {
            return Err(FfiError::Null("out_words"));
        }
        let ex = Example {
            target: input.clone(),
            input,
            bag: None,
        };
        let ordered = Orderer::new(&m.inner, opts.into())
            .order_one(0, &ex)
            .map_err(|e| FfiError::Decode(e.to_string()))?;
        let s = c_string(ordered.words.join(" "))?;
        out_words.write(s);
        if !out_logscore.is_null() {
            out_logscore.write(ordered.logscore);
        }
        Ok(())
    })
}

/// Corpus BLEU (0 to 100) of newline-separated hypotheses against
/// newline-separated references, tokens split on whitespace.
///
/// # Safety
/// `hyps` and `refs` must be valid C strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_bleu(
    hyps: *const c_char,
    refs: *const c_char,
    out: *mut f64,
) -> WoStatus {
    guard(|| {
        let h: Vec<Vec<String>> = text(hyps, "hyps")?.lines().map(words).collect();
        let r: Vec<Vec<String>> = text(refs, "refs")?.lines().map(words).collect();
        let report = corpus_bleu(&h, &r).map_err(|e| FfiError::Argument(e.to_string()))?;
        put(out, report.bleu, "out")
    })
}

/// Builds a prefix tree over `n_words` words; word `i` is the next
/// `word_lens[i]` ids of `ids`.
///
/// # Safety
/// `ids` must be valid for the sum of `word_lens` reads, `word_lens` for
/// `n_words` reads, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_constraint_tree_new(
    ids: *const u32,
    word_lens: *const usize,
    n_words: usize,
    out: *mut *mut WoConstraintTree,
) -> WoStatus {
    guard(|| {
        let lens: &[usize] = if n_words == 0 {
            &[]
        } else if word_lens.is_null() {
            return Err(FfiError::Null("word_lens"));
        } else {
            std::slice::from_raw_parts(word_lens, n_words)
        };
        let total = lens
            .iter()
            .try_fold(0usize, |a, &l| a.checked_add(l))
            .ok_or_else(|| FfiError::Argument("word lengths overflow".to_string()))?;
        let flat: &[u32] = if total == 0 {
            &[]
        } else if ids.is_null() {
            return Err(FfiError::Null("ids"));
        } else {
            std::slice::from_raw_parts(ids, total)
        };
        let mut words = Vec::with_capacity(n_words);
        let mut at = 0;
        for &l in lens {
            words.push(&flat[at..at + l]);
            at += l;
        }
        let tree = ConstraintTree::build(&words).map_err(|e| FfiError::Argument(e.to_string()))?;
        put(
            out,
            Box::into_raw(Box::new(WoConstraintTree { inner: tree })),
            "out",
        )
    })
}

/// # Safety
/// `tree` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn wo_constraint_tree_free(tree: *mut WoConstraintTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Total subword count over all words.
///
/// # Safety
/// `tree` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_constraint_tree_subword_count(
    tree: *const WoConstraintTree,
    out: *mut usize,
) -> WoStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        put(out, t.inner.subword_count(), "out")
    })
}

fn check_pair(tree: &WoConstraintTree, state: &WoConstraintState) -> Result<(), FfiError> {
    let n = tree.inner.nodes().len();
    if state.inner.branches().any(|b| b.remaining.len() != n) {
        return Err(FfiError::Argument(
            "state belongs to a different tree".to_string(),
        ));
    }
    Ok(())
}

/// Fresh traversal state at the root.
///
/// # Safety
/// `tree` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_constraint_state_new(
    tree: *const WoConstraintTree,
    out: *mut *mut WoConstraintState,
) -> WoStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        let s = WoConstraintState {
            inner: t.inner.initial_state(),
        };
        put(out, Box::into_raw(Box::new(s)), "out")
    })
}

/// # Safety
/// `state` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_constraint_state_clone(
    state: *const WoConstraintState,
    out: *mut *mut WoConstraintState,
) -> WoStatus {
    guard(|| {
        let s = handle(state, "state")?;
        let c = WoConstraintState {
            inner: s.inner.clone(),
        };
        put(out, Box::into_raw(Box::new(c)), "out")
    })
}

/// # Safety
/// `state` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn wo_constraint_state_free(state: *mut WoConstraintState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Valid next ids in ascending order. When `cap` is too small, `len`
/// still receives the required length.
///
/// # Safety
/// Handles must be live, `buf` valid for `cap` writes and `len` valid.
#[no_mangle]
pub unsafe extern "C" fn wo_constraint_valid_next(
    tree: *const WoConstraintTree,
    state: *const WoConstraintState,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> WoStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        let s = handle(state, "state")?;
        check_pair(t, s)?;
        fill(&t.inner.valid_next(&s.inner), buf, cap, len)
    })
}

/// Consumes `token` in place. An invalid token fails with
/// `WO_STATUS_INVALID_ARGUMENT` and leaves the state unchanged.
///
/// # Safety
/// Handles must be live.
#[no_mangle]
pub unsafe extern "C" fn wo_constraint_advance(
    tree: *const WoConstraintTree,
    state: *mut WoConstraintState,
    token: u32,
) -> WoStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        let s = handle_mut(state, "state")?;
        check_pair(t, s)?;
        let next = t.inner.advance(&s.inner, token);
        if next.is_dead() {
            return Err(FfiError::Argument(format!(
                "token {token} is not a valid continuation"
            )));
        }
        s.inner = next;
        Ok(())
    })
}

/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wo_constraint_is_exhausted(
    tree: *const WoConstraintTree,
    state: *const WoConstraintState,
    out: *mut bool,
) -> WoStatus {
    guard(|| {
        let t = handle(tree, "tree")?;
        let s = handle(state, "state")?;
        check_pair(t, s)?;
        put(out, t.inner.is_exhausted(&s.inner), "out")
    })
}
