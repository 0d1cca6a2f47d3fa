//! Command-line entry point.
//!
//! Every subcommand reads an optional JSON [`RunConfig`] (`--config`),
//! applies its flags on top, logs the resolved configuration and writes
//! its primary output to `--output` or stdout. Failures print a single
//! JSON line `{"error": KIND, "message": TEXT}` on stderr and exit nonzero.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

use crate::decoder::SearchSpace;
use crate::dep_linearizer::{
    linearize_dataset, parse_conll_many, Linearization, PenmanMode, LEVELS,
};
use crate::evalkit::{beam_sweep, corpus_bleu, lexical_errors, sensitivity, SweepSetting};
use crate::pipeline::Orderer;
use crate::probe::{
    dataset_from_records, evaluate, probe_report, read_features, train_probe, LayerData,
    ModelLayers, ProbeDataset, ProbeModel,
};
use crate::rng::derive_seed;
use crate::scorers::{train_ngram, ExternalScorer, NgramModel, Scorer, Smoothing};
use crate::textprep::{
    dataset_vocab, detokenize, format_dataset, learn_bpe_vocab, make_augmented, normalize_sentence,
    parse_corpus, parse_dataset, shuffle, word_frequencies, BpeMerges, Example, Granularity,
    ShuffleSpec,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("missing {what}: pass {flag} or set {key} in the config")]
    Missing {
        what: &'static str,
        flag: &'static str,
        key: &'static str,
    },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Scorer(#[from] crate::scorers::ScorerError),
    #[error(transparent)]
    Ngram(#[from] crate::scorers::NgramError),
    #[error(transparent)]
    Order(#[from] crate::pipeline::OrderError),
    #[error(transparent)]
    Eval(#[from] crate::evalkit::EvalError),
    #[error(transparent)]
    Penman(#[from] crate::dep_linearizer::PenmanError),
    #[error(transparent)]
    Tree(#[from] crate::dep_linearizer::TreeError),
    #[error(transparent)]
    Probe(#[from] crate::probe::ProbeError),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Missing { .. } => "missing_argument",
            CliError::Data(_) => "data",
            CliError::Scorer(_) => "scorer",
            CliError::Ngram(_) => "ngram",
            CliError::Order(_) => "decode",
            CliError::Eval(_) => "eval",
            CliError::Penman(_) => "penman",
            CliError::Tree(_) => "tree",
            CliError::Probe(_) => "probe",
        }
    }

    /// The single-line JSON error report.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "wordorder",
    version,
    about = "Word ordering by constrained beam search"
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment and shuffle a tokenized corpus into an input/target dataset.
    Prep(PrepArgs),
    /// Train an n-gram model on dataset targets.
    TrainLm(TrainLmArgs),
    /// Order every dataset input.
    Order(OrderArgs),
    /// Corpus BLEU of hypotheses against references.
    Eval(EvalArgs),
    /// Missing and redundant word rates by reference length.
    Errors(ErrorsArgs),
    /// BLEU spread over differently permuted copies of a dev set.
    Sensitivity(SensitivityArgs),
    /// BLEU grid over beam sizes and search settings.
    Sweep(SweepArgs),
    /// Turn dependency trees into PENMAN input sequences.
    Linearize(LinearizeArgs),
    /// Linearize partially annotated trees.
    SamplePartial(SamplePartialArgs),
    /// Train a structural probe.
    ProbeTrain(ProbeTrainArgs),
    /// Score a trained probe, or train and compare probes across models.
    ProbeEval(ProbeEvalArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Primary output file (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScorerArgs {
    /// N-gram model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Command that speaks the scorer wire protocol on stdio.
    #[arg(long)]
    pub external_scorer: Option<String>,
    /// Decoding threads (0 = all cores).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub beam: Option<usize>,
    /// constrained | unconstrained
    #[arg(long)]
    pub mode: Option<SearchSpace>,
    #[arg(long)]
    pub length_norm: Option<bool>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Replace every input with the null token.
    #[arg(long)]
    pub null_input: bool,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[command(flatten)]
    pub common: Common,
    /// One tokenized sentence per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Existing merges file to apply.
    #[arg(long, conflicts_with = "learn_merges")]
    pub merges: Option<PathBuf>,
    /// Learn merges from the corpus and write them here.
    #[arg(long)]
    pub learn_merges: Option<PathBuf>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// word | subword
    #[arg(long, value_parser = parse_granularity)]
    pub granularity: Option<Granularity>,
    /// Keep inputs in the original order (no seed needed).
    #[arg(long)]
    pub keep_order: bool,
    /// Extra permuted copies per sentence.
    #[arg(long)]
    pub augment: Option<usize>,
    /// Undo Penn Treebank bracket escapes first.
    #[arg(long)]
    pub ptb: bool,
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub order: Option<usize>,
    /// mle | kn
    #[arg(long)]
    pub smoothing: Option<String>,
    #[arg(long)]
    pub discount: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Emit subwords instead of re-joined words.
    #[arg(long)]
    pub subwords: bool,
}

#[derive(Debug, Args)]
pub struct RefArgs {
    /// Hypotheses, one sentence per line.
    #[arg(long)]
    pub hyp: PathBuf,
    /// References, one sentence per line.
    #[arg(long, required_unless_present = "ref_dataset")]
    pub r#ref: Option<PathBuf>,
    /// Take references from a dataset's targets instead.
    #[arg(long, conflicts_with = "ref")]
    pub ref_dataset: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub refs: RefArgs,
}

#[derive(Debug, Args)]
pub struct ErrorsArgs {
    #[command(flatten)]
    pub refs: RefArgs,
    #[arg(long)]
    pub bin_width: Option<usize>,
    /// Write the per-bin table as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Number of permuted copies; seeds default to 1..=K.
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed list: `1..10` (inclusive) or `1,2,3`.
    #[arg(long, value_parser = parse_seed_list)]
    pub seeds: Option<SeedList>,
    /// word | subword
    #[arg(long, value_parser = parse_granularity)]
    pub granularity: Option<Granularity>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub beams: Option<Vec<usize>>,
    /// Subset of the standard settings, e.g. `cond-constrained`.
    #[arg(long, value_delimiter = ',')]
    pub settings: Option<Vec<String>>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct LinearizeArgs {
    #[command(flatten)]
    pub common: Common,
    /// CoNLL trees.
    #[arg(long)]
    pub trees: Option<PathBuf>,
    #[arg(long)]
    pub merges: Option<PathBuf>,
    /// base | brac | pos | udep | ldep | full
    #[arg(long)]
    pub mode: Option<PenmanMode>,
}

#[derive(Debug, Args)]
pub struct SamplePartialArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub trees: Option<PathBuf>,
    #[arg(long)]
    pub merges: Option<PathBuf>,
    #[arg(long, requires = "p_dep")]
    pub p_pos: Option<f64>,
    #[arg(long, requires = "p_pos")]
    pub p_dep: Option<f64>,
    /// Write all nine grid cells into this directory.
    #[arg(long, conflicts_with_all = ["p_pos", "p_dep"])]
    pub grid_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProbeTrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub probe: ProbeArgs,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub trees: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeEvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub probe_config: ProbeArgs,
    /// Trained probe file.
    #[arg(long, conflicts_with = "model")]
    pub probe: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub trees: Option<PathBuf>,
    /// Report mode: `NAME=TRAIN:EVAL[,TRAIN:EVAL...]`, one feature-file
    /// pair per layer. Repeat for each model; the first is the baseline.
    #[arg(long)]
    pub model: Vec<String>,
    #[arg(long, requires = "model")]
    pub train_trees: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub eval_trees: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

fn parse_granularity(s: &str) -> std::result::Result<Granularity, String> {
    match s {
        "word" => Ok(Granularity::Word),
        "subword" => Ok(Granularity::Subword),
        _ => Err(format!("unknown granularity {s:?}")),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

fn parse_seed_list(s: &str) -> std::result::Result<SeedList, String> {
    parse_seeds(s).map(SeedList)
}

/// `a..b` (inclusive) or a comma-separated list.
pub fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|e| format!("bad seed {t:?}: {e}"))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty seed range {s:?}"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}

/// Parses arguments, runs, and turns failures into the JSON error line.
/// Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::Usage(first.to_string()).to_json());
            return 2;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => serde_json::from_str::<RunConfig>(&read(p)?)
            .map_err(|e| CliError::Config(e.to_string()))?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Prep(a) => prep(&mut cfg, a),
        Command::TrainLm(a) => train_lm(&mut cfg, a),
        Command::Order(a) => order(&mut cfg, a),
        Command::Eval(a) => eval(a),
        Command::Errors(a) => errors(&mut cfg, a),
        Command::Sensitivity(a) => sensitivity_cmd(&mut cfg, a),
        Command::Sweep(a) => sweep(&mut cfg, a),
        Command::Linearize(a) => linearize(&mut cfg, a),
        Command::SamplePartial(a) => sample_partial(&mut cfg, a),
        Command::ProbeTrain(a) => probe_train(&mut cfg, a),
        Command::ProbeEval(a) => probe_eval(&mut cfg, a),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".to_string(),
                source,
            }),
    }
}

fn log_config(command: &str, cfg: &RunConfig) {
    log::info!(
        "{command}: resolved config {}",
        serde_json::to_string(cfg).expect("config serializes")
    );
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn need<T: Clone>(
    v: &Option<T>,
    what: &'static str,
    flag: &'static str,
    key: &'static str,
) -> Result<T> {
    v.clone().ok_or(CliError::Missing { what, flag, key })
}

fn need_seed(cfg: &RunConfig) -> Result<u64> {
    need(&cfg.seed, "seed", "--seed", "seed")
}

fn apply_common(cfg: &mut RunConfig, c: &Common) {
    set_opt(&mut cfg.seed, c.seed);
    set_opt(&mut cfg.paths.output, c.output.clone());
}

fn apply_scorer(cfg: &mut RunConfig, a: &ScorerArgs) {
    set_opt(&mut cfg.paths.model, a.model.clone());
    set_opt(&mut cfg.scorer.external, a.external_scorer.clone());
    set_opt(&mut cfg.workers, a.workers);
}

fn apply_decode(cfg: &mut RunConfig, a: &DecodeArgs) {
    set(&mut cfg.decode.beam_size, a.beam);
    set(&mut cfg.decode.mode, a.mode);
    set(&mut cfg.decode.length_norm, a.length_norm);
    set_opt(&mut cfg.decode.max_len, a.max_len);
    if a.null_input {
        cfg.decode.null_input = true;
    }
}

fn apply_probe(cfg: &mut RunConfig, a: &ProbeArgs) {
    set(&mut cfg.probe.rank, a.rank);
    set(&mut cfg.probe.epochs, a.epochs);
    set(&mut cfg.probe.batch_size, a.batch_size);
    set(&mut cfg.probe.lr, a.lr);
}

fn load_scorer(cfg: &RunConfig) -> Result<Box<dyn Scorer>> {
    if let Some(cmd) = &cfg.scorer.external {
        let timeout = Duration::from_secs(cfg.scorer.timeout_secs);
        return Ok(Box::new(ExternalScorer::spawn(cmd, timeout)?));
    }
    let path = need(
        &cfg.paths.model,
        "scorer",
        "--model or --external-scorer",
        "paths.model",
    )?;
    Ok(Box::new(NgramModel::parse(
        &read(&path)?,
        cfg.lm.smoothing,
    )?))
}

fn load_dataset(cfg: &RunConfig) -> Result<Vec<Example>> {
    let path = need(&cfg.paths.dataset, "dataset", "--dataset", "paths.dataset")?;
    parse_dataset(&read(&path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_merges(path: Option<&Path>) -> Result<Option<BpeMerges>> {
    path.map(|p| {
        BpeMerges::parse(&read(p)?).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
    })
    .transpose()
}

fn lines(words: impl IntoIterator<Item = Vec<String>>) -> String {
    words.into_iter().map(|w| w.join(" ") + "\n").collect()
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn prep(cfg: &mut RunConfig, a: PrepArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    set_opt(&mut cfg.paths.corpus, a.corpus);
    set_opt(&mut cfg.paths.merges, a.merges);
    set(&mut cfg.prep.vocab_size, a.vocab_size);
    set(&mut cfg.prep.granularity, a.granularity);
    set(&mut cfg.prep.augment, a.augment);
    cfg.prep.ptb_normalize |= a.ptb;
    log_config("prep", cfg);

    let corpus_path = need(&cfg.paths.corpus, "corpus", "--corpus", "paths.corpus")?;
    let mut corpus = parse_corpus(&read(&corpus_path)?);
    if cfg.prep.ptb_normalize {
        corpus = corpus.iter().map(|s| normalize_sentence(s)).collect();
    }
    let merges = match &a.learn_merges {
        Some(out) => {
            let m = learn_bpe_vocab(word_frequencies(&corpus), cfg.prep.vocab_size);
            write_file(out, &m.to_text())?;
            Some(m)
        }
        None => load_merges(cfg.paths.merges.as_deref())?,
    };
    let seed = if a.keep_order {
        None
    } else {
        Some(need_seed(cfg)?)
    };
    let granularity = cfg.prep.granularity;
    let mut examples: Vec<Example> = corpus
        .iter()
        .enumerate()
        .map(|(i, words)| {
            let target = match &merges {
                Some(m) => m.apply_sentence(words),
                None => words.clone(),
            };
            let input = match seed {
                Some(s) => shuffle(
                    words,
                    merges.as_ref(),
                    ShuffleSpec {
                        seed: derive_seed(s, i as u64),
                        granularity,
                    },
                ),
                None => target.clone(),
            };
            let bag =
                (seed.is_some() && granularity == Granularity::Subword).then(|| target.clone());
            Example { input, target, bag }
        })
        .collect();
    if cfg.prep.augment > 0 {
        let s = need_seed(cfg)?;
        examples = make_augmented(&examples, cfg.prep.augment, derive_seed(s, u64::MAX));
    }
    emit(cfg.paths.output.as_deref(), &format_dataset(&examples))
}

fn train_lm(cfg: &mut RunConfig, a: TrainLmArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    set_opt(&mut cfg.paths.dataset, a.dataset);
    set(&mut cfg.lm.order, a.order);
    match a.smoothing.as_deref() {
        None => {}
        Some("mle") => cfg.lm.smoothing = Smoothing::Mle,
        Some("kn") => cfg.lm.smoothing = Smoothing::default(),
        Some(s) => {
            return Err(CliError::Usage(format!(
                "unknown smoothing {s:?} (expected mle or kn)"
            )))
        }
    }
    if let Some(d) = a.discount {
        cfg.lm.smoothing = Smoothing::KneserNey { discount: d };
    }
    log_config("train-lm", cfg);
    let data = load_dataset(cfg)?;
    let vocab = dataset_vocab(&data);
    let corpus: Vec<_> = data.iter().map(|ex| vocab.encode(&ex.target)).collect();
    let model = train_ngram(&corpus, vocab, cfg.lm.order, cfg.lm.smoothing)?;
    emit(cfg.paths.output.as_deref(), &model.to_text())
}

fn order(cfg: &mut RunConfig, a: OrderArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    apply_scorer(cfg, &a.scorer);
    apply_decode(cfg, &a.decode);
    set_opt(&mut cfg.paths.dataset, a.dataset);
    log_config("order", cfg);
    let data = load_dataset(cfg)?;
    let scorer = load_scorer(cfg)?;
    let out = Orderer::new(scorer.as_ref(), cfg.decode.clone())
        .order_all(&data, cfg.workers.unwrap_or(1))?;
    let text = lines(
        out.into_iter()
            .map(|o| if a.subwords { o.subwords } else { o.words }),
    );
    emit(cfg.paths.output.as_deref(), &text)
}

type Sentences = Vec<Vec<String>>;

fn load_refs(a: &RefArgs) -> Result<(Sentences, Sentences)> {
    let hyps: Vec<Vec<String>> = read(&a.hyp)?
        .lines()
        .map(|l| l.split_whitespace().map(str::to_string).collect())
        .collect();
    let refs = match (&a.r#ref, &a.ref_dataset) {
        (_, Some(p)) => parse_dataset(&read(p)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
            .iter()
            .map(|ex| detokenize(&ex.target))
            .collect(),
        (Some(p), None) => read(p)?
            .lines()
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect(),
        (None, None) => return Err(CliError::Usage("pass --ref or --ref-dataset".to_string())),
    };
    Ok((hyps, refs))
}

fn eval(a: EvalArgs) -> Result<()> {
    let (hyps, refs) = load_refs(&a.refs)?;
    let report = corpus_bleu(&hyps, &refs)?;
    let text = if a.refs.json {
        to_json(&report)
    } else {
        format!("{report}\n")
    };
    emit(a.refs.output.as_deref(), &text)
}

fn errors(cfg: &mut RunConfig, a: ErrorsArgs) -> Result<()> {
    set(&mut cfg.eval.bin_width, a.bin_width);
    log_config("errors", cfg);
    let (hyps, refs) = load_refs(&a.refs)?;
    let report = lexical_errors(&hyps, &refs, cfg.eval.bin_width)?;
    if let Some(p) = &a.csv {
        write_file(p, &report.to_csv())?;
    }
    let text = if a.refs.json {
        to_json(&report)
    } else {
        report.to_string()
    };
    emit(a.refs.output.as_deref(), &text)
}

fn sensitivity_cmd(cfg: &mut RunConfig, a: SensitivityArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    apply_scorer(cfg, &a.scorer);
    apply_decode(cfg, &a.decode);
    set_opt(&mut cfg.paths.dataset, a.dataset);
    set(&mut cfg.sensitivity.granularity, a.granularity);
    match (a.seeds, a.k) {
        (Some(SeedList(s)), k) => {
            if k.is_some_and(|k| k != s.len()) {
                return Err(CliError::Usage(format!(
                    "--k {} but {} seeds given",
                    k.unwrap_or(0),
                    s.len()
                )));
            }
            cfg.sensitivity.seeds = s;
        }
        (None, Some(k)) => cfg.sensitivity.seeds = (1..=k as u64).collect(),
        (None, None) => {}
    }
    if cfg.sensitivity.seeds.is_empty() {
        return Err(CliError::Missing {
            what: "permutation seeds",
            flag: "--seeds or --k",
            key: "sensitivity.seeds",
        });
    }
    log_config("sensitivity", cfg);
    let data = load_dataset(cfg)?;
    let scorer = load_scorer(cfg)?;
    let orderer = Orderer::new(scorer.as_ref(), cfg.decode.clone());
    let workers = cfg.workers.unwrap_or(1);
    let report = sensitivity(
        &data,
        |set| {
            orderer
                .order_all(set, workers)
                .map(|out| out.into_iter().map(|o| o.words).collect())
        },
        &cfg.sensitivity.seeds,
        cfg.sensitivity.granularity,
    )?;
    let text = if a.json {
        to_json(&report)
    } else {
        report.to_string()
    };
    emit(cfg.paths.output.as_deref(), &text)
}

fn sweep(cfg: &mut RunConfig, a: SweepArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    apply_scorer(cfg, &a.scorer);
    set_opt(&mut cfg.paths.dataset, a.dataset);
    set(&mut cfg.sweep.beams, a.beams);
    if cfg.sweep.beams.is_empty() || cfg.sweep.beams.contains(&0) {
        return Err(CliError::Usage(
            "beam sizes must be positive and non-empty".to_string(),
        ));
    }
    let mut settings = SweepSetting::standard();
    if let Some(names) = &a.settings {
        for n in names {
            if !settings.iter().any(|s| &s.name == n) {
                let known: Vec<_> = settings.iter().map(|s| s.name.as_str()).collect();
                return Err(CliError::Usage(format!(
                    "unknown setting {n:?} (known: {})",
                    known.join(", ")
                )));
            }
        }
        settings.retain(|s| names.contains(&s.name));
    }
    log_config("sweep", cfg);
    let data = load_dataset(cfg)?;
    let scorer = load_scorer(cfg)?;
    let table = beam_sweep(
        &data,
        scorer.as_ref(),
        &cfg.sweep.beams,
        &settings,
        cfg.workers.unwrap_or(1),
    )?;
    let text = if a.json {
        to_json(&table)
    } else {
        table.to_string()
    };
    emit(cfg.paths.output.as_deref(), &text)
}

fn load_trees(cfg: &RunConfig) -> Result<Vec<crate::dep_linearizer::DepTree>> {
    let path = need(&cfg.paths.trees, "trees", "--trees", "paths.trees")?;
    Ok(parse_conll_many(&read(&path)?)?)
}

fn linearize(cfg: &mut RunConfig, a: LinearizeArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    set_opt(&mut cfg.paths.trees, a.trees);
    set_opt(&mut cfg.paths.merges, a.merges);
    set(&mut cfg.linearize.mode, a.mode);
    log_config("linearize", cfg);
    let seed = need_seed(cfg)?;
    let trees = load_trees(cfg)?;
    let bpe = load_merges(cfg.paths.merges.as_deref())?;
    let data = linearize_dataset(
        &trees,
        Linearization::Mode(cfg.linearize.mode),
        seed,
        bpe.as_ref(),
    )?;
    emit(cfg.paths.output.as_deref(), &format_dataset(&data))
}

fn check_prob(name: &str, p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(CliError::Usage(format!(
            "{name} must lie in [0, 1], got {p}"
        )))
    }
}

fn sample_partial(cfg: &mut RunConfig, a: SamplePartialArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    set_opt(&mut cfg.paths.trees, a.trees);
    set_opt(&mut cfg.paths.merges, a.merges);
    set_opt(&mut cfg.linearize.p_pos, a.p_pos);
    set_opt(&mut cfg.linearize.p_dep, a.p_dep);
    log_config("sample-partial", cfg);
    let seed = need_seed(cfg)?;
    let trees = load_trees(cfg)?;
    let bpe = load_merges(cfg.paths.merges.as_deref())?;
    if let Some(dir) = &a.grid_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for (i, &p_pos) in LEVELS.iter().enumerate() {
            for (j, &p_dep) in LEVELS.iter().enumerate() {
                let how = Linearization::Partial { p_pos, p_dep };
                let data = linearize_dataset(
                    &trees,
                    how,
                    derive_seed(seed, (i * 3 + j) as u64),
                    bpe.as_ref(),
                )?;
                write_file(
                    &dir.join(format!("partial_pos{p_pos}_dep{p_dep}.tsv")),
                    &format_dataset(&data),
                )?;
            }
        }
        return Ok(());
    }
    let p_pos = check_prob(
        "p_pos",
        need(&cfg.linearize.p_pos, "p_pos", "--p-pos", "linearize.p_pos")?,
    )?;
    let p_dep = check_prob(
        "p_dep",
        need(&cfg.linearize.p_dep, "p_dep", "--p-dep", "linearize.p_dep")?,
    )?;
    let data = linearize_dataset(
        &trees,
        Linearization::Partial { p_pos, p_dep },
        seed,
        bpe.as_ref(),
    )?;
    emit(cfg.paths.output.as_deref(), &format_dataset(&data))
}

fn load_probe_data(features: &Path, trees: &Path) -> Result<ProbeDataset> {
    let trees = parse_conll_many(&read(trees)?)?;
    let records = read_features(&read(features)?)?;
    Ok(dataset_from_records(&records, &trees)?)
}

fn probe_train(cfg: &mut RunConfig, a: ProbeTrainArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    apply_probe(cfg, &a.probe);
    set_opt(&mut cfg.paths.features, a.features);
    set_opt(&mut cfg.paths.trees, a.trees);
    cfg.probe.seed = need_seed(cfg)?;
    log_config("probe-train", cfg);
    let features = need(
        &cfg.paths.features,
        "features",
        "--features",
        "paths.features",
    )?;
    let trees = need(&cfg.paths.trees, "trees", "--trees", "paths.trees")?;
    let data = load_probe_data(&features, &trees)?;
    let (model, log) = train_probe(&data, &cfg.probe)?;
    for (e, l) in log.epoch_losses.iter().enumerate() {
        log::info!("epoch {e}: loss {l:.6}");
    }
    emit(cfg.paths.output.as_deref(), &(model.to_json() + "\n"))
}

fn probe_eval(cfg: &mut RunConfig, a: ProbeEvalArgs) -> Result<()> {
    apply_common(cfg, &a.common);
    apply_probe(cfg, &a.probe_config);
    set_opt(&mut cfg.paths.probe, a.probe);
    set_opt(&mut cfg.paths.features, a.features);
    set_opt(&mut cfg.paths.trees, a.trees);
    if a.model.is_empty() {
        log_config("probe-eval", cfg);
        let probe = need(&cfg.paths.probe, "probe", "--probe", "paths.probe")?;
        let features = need(
            &cfg.paths.features,
            "features",
            "--features",
            "paths.features",
        )?;
        let trees = need(&cfg.paths.trees, "trees", "--trees", "paths.trees")?;
        let model = ProbeModel::from_json(&read(&probe)?)?;
        let data = load_probe_data(&features, &trees)?;
        if data.dim() != Some(model.dim()) {
            return Err(CliError::Data(format!(
                "probe expects {}-dimensional features, got {:?}",
                model.dim(),
                data.dim()
            )));
        }
        let u = evaluate(&model, &data);
        let text = if a.json {
            serde_json::json!({ "uuas": u }).to_string() + "\n"
        } else {
            format!("UUAS {:.2}\n", 100.0 * u)
        };
        return emit(cfg.paths.output.as_deref(), &text);
    }

    cfg.probe.seed = need_seed(cfg)?;
    log_config("probe-eval", cfg);
    let train_trees = parse_conll_many(&read(&need(
        &a.train_trees,
        "train trees",
        "--train-trees",
        "-",
    )?)?)?;
    let eval_trees = parse_conll_many(&read(&need(
        &a.eval_trees,
        "eval trees",
        "--eval-trees",
        "-",
    )?)?)?;
    let mut models = Vec::new();
    for spec in &a.model {
        let (name, layers) = spec.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--model {spec:?}: expected NAME=TRAIN:EVAL[,...]"))
        })?;
        let mut data = Vec::new();
        for layer in layers.split(',') {
            let (tr, ev) = layer.split_once(':').ok_or_else(|| {
                CliError::Usage(format!(
                    "--model {spec:?}: layer {layer:?} is not TRAIN:EVAL"
                ))
            })?;
            data.push(LayerData {
                train: dataset_from_records(&read_features(&read(Path::new(tr))?)?, &train_trees)?,
                eval: dataset_from_records(&read_features(&read(Path::new(ev))?)?, &eval_trees)?,
            });
        }
        models.push(ModelLayers {
            name: name.to_string(),
            layers: data,
        });
    }
    let report = probe_report(&models, &cfg.probe)?;
    let text = if a.json {
        to_json(&report)
    } else {
        report.to_string()
    };
    emit(cfg.paths.output.as_deref(), &text)
}
