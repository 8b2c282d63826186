//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{Corpus, Normalization};
use crate::cost::{self, Alphas, BpeSweepMode, Grid, SweepConfig};
use crate::error::{Error, Result};
use crate::report::{self, RunManifest};
use crate::stats::{self, encode_corpus, DEFAULT_WINDOW};
use crate::tokenize::{self, TokenModel, Tokenizer, TokenizerKind, TrainerConfig};
use crate::unigram::UnigramConfig;

/// Shown in place of the space character when printing pieces.
const VISIBLE_SPACE: char = '\u{2423}';

#[derive(Debug, Parser)]
#[command(name = "vocoptim", version, about = "Choose a subword vocabulary size by minimizing a corpus cost")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sentence, word and alphabet counts of a corpus.
    Stats(StatsArgs),
    /// Evaluate the cost over a grid of vocabulary sizes and report n*.
    Sweep(SweepArgs),
    /// Train one tokenizer and write it to a model file.
    Train(TrainArgs),
    /// Encode text with a saved model.
    Encode(EncodeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Bpe,
    Unigram,
}

impl From<KindArg> for TokenizerKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Bpe => TokenizerKind::Bpe,
            KindArg::Unigram => TokenizerKind::Unigram,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum NormArg {
    #[default]
    None,
    Nfkc,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::None => Normalization::None,
            NormArg::Nfkc => Normalization::Nfkc,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum BpeModeArg {
    #[default]
    Incremental,
    Truncate,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub corpus: PathBuf,
    /// Print a JSON object instead of text.
    #[arg(long)]
    pub json: bool,
    #[arg(long, value_enum, default_value_t)]
    pub normalization: NormArg,
}

#[derive(Debug, Args)]
pub struct TrainerArgs {
    /// Recorded in outputs; both trainers are deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Unigram seed candidates per requested piece.
    #[arg(long, default_value_t = 10)]
    pub seed_multiplier: usize,
    /// Longest unigram candidate piece, in characters.
    #[arg(long, default_value_t = 8)]
    pub max_piece_len: usize,
    /// Fraction of unigram pieces kept per pruning round.
    #[arg(long, default_value_t = 0.75)]
    pub shrink: f64,
    /// EM steps before each unigram pruning round.
    #[arg(long, default_value_t = 2)]
    pub em_iterations: usize,
}

impl TrainerArgs {
    fn config(&self) -> TrainerConfig {
        TrainerConfig {
            seed: self.seed,
            unigram: UnigramConfig {
                seed_multiplier: self.seed_multiplier,
                max_piece_len: self.max_piece_len,
                shrink: self.shrink,
                em_iterations: self.em_iterations,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub tokenizer: KindArg,
    /// Smallest grid size; defaults to the alphabet size.
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub n_max: usize,
    /// Uniform grid step. Without it the grid is dense up to 200 and every
    /// fifth size above.
    #[arg(long)]
    pub step: Option<usize>,
    #[arg(long, default_value = "1,1,1")]
    pub alphas: String,
    /// Number of most and least frequent tokens averaged.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value = "curve.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Derive smaller unigram models by pruning larger ones instead of
    /// training each size from scratch.
    #[arg(long)]
    pub fast_unigram: bool,
    #[arg(long, value_enum, default_value_t)]
    pub bpe_mode: BpeModeArg,
    /// Worker threads; defaults to VOCOPTIM_THREADS or all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    pub normalization: NormArg,
    #[command(flatten)]
    pub trainer: TrainerArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub tokenizer: KindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub normalization: NormArg,
    #[command(flatten)]
    pub trainer: TrainerArgs,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["text", "corpus"])))]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub text: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Print corpus-level statistics instead of pieces.
    #[arg(long)]
    pub stats: bool,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, value_enum, default_value_t)]
    pub normalization: NormArg,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Stats(a) => cmd_stats(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Encode(a) => cmd_encode(&a, out),
    }
}

fn stdout_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct StatsJson<'a> {
    k: usize,
    w: usize,
    w_u: usize,
    alphabet_size: usize,
    alphabet: String,
    path: &'a Path,
}

fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = Corpus::load(&args.corpus, args.normalization.into())?;
    let s = corpus.stats();
    if args.json {
        let json = StatsJson {
            k: s.k,
            w: s.w,
            w_u: s.w_u,
            alphabet_size: s.alphabet_size(),
            alphabet: s.alphabet.iter().collect(),
            path: &args.corpus,
        };
        let text = serde_json::to_string(&json).expect("stats serialize");
        writeln!(out, "{text}").map_err(stdout_err)
    } else {
        writeln!(
            out,
            "k={} w={} w_u={} alphabet={}",
            s.k,
            s.w,
            s.w_u,
            s.alphabet_size()
        )
        .map_err(stdout_err)
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let started_at = now();
    let normalization: Normalization = args.normalization.into();
    let corpus = Corpus::load(&args.corpus, normalization)?;
    let n_min = args
        .n_min
        .unwrap_or_else(|| cost::min_feasible_n(&corpus.stats()));
    let alphas: Alphas = args.alphas.parse()?;
    let mut config = SweepConfig::new(
        args.tokenizer.into(),
        Grid::new(n_min, args.n_max, args.step),
        alphas,
    );
    config.window = args.window;
    config.trainer = args.trainer.config();
    config.fast_unigram = args.fast_unigram;
    config.bpe_mode = match args.bpe_mode {
        BpeModeArg::Incremental => BpeSweepMode::Incremental,
        BpeModeArg::Truncate => BpeSweepMode::Truncate,
    };
    config.workers = args.threads;

    let curve = cost::sweep(&corpus, &config)?;
    write_file(&args.out, &report::curve_csv(&curve))?;
    if let Some(svg) = &args.svg {
        write_file(svg, &report::curve_svg(&curve))?;
    }
    let manifest = RunManifest::new(&corpus, normalization, &config, &curve, started_at, now());
    write_file(&report::manifest_path(&args.out), &manifest.to_json())?;
    if !curve.infeasible.is_empty() {
        log::warn!(
            "{} grid points infeasible, first at n={}",
            curve.infeasible.len(),
            curve.infeasible[0].n
        );
    }
    writeln!(out, "n*={}", curve.n_star).map_err(stdout_err)
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = Corpus::load(&args.corpus, args.normalization.into())?;
    let model = tokenize::train(args.tokenizer.into(), &corpus, args.n, &args.trainer.config())?;
    model.save(&args.out)?;
    writeln!(out, "pieces={}", model.n()).map_err(stdout_err)
}

fn cmd_encode(args: &EncodeArgs, out: &mut dyn Write) -> Result<()> {
    let model = TokenModel::load(&args.model)?;
    let normalization = args.normalization.into();
    let corpus = match (&args.text, &args.corpus) {
        (Some(text), _) => match Corpus::parse(text, normalization, "<text>") {
            Ok(c) => c,
            Err(Error::EmptyCorpus { .. }) => return Ok(()),
            Err(e) => return Err(e),
        },
        (None, Some(path)) => Corpus::load(path, normalization)?,
        (None, None) => unreachable!("clap requires one input"),
    };

    if args.stats {
        let encoded = encode_corpus(&model, &corpus)?;
        let t = stats::term_breakdown(model.n(), &encoded, &corpus.stats(), args.window)?;
        return writeln!(
            out,
            "theta_t={} f_plus={} f_minus={} t2={} t3={}",
            t.theta_t, t.f_plus, t.f_minus, t.t2, t.t3
        )
        .map_err(stdout_err);
    }

    let pieces = model.pieces();
    for (i, sentence) in corpus.sentences().iter().enumerate() {
        let seg = model.encode(sentence).map_err(|e| match e {
            Error::UnencodableCharacter { ch, position, .. } => Error::UnencodableCharacter {
                ch,
                position,
                sentence: Some(i),
            },
            other => other,
        })?;
        let line: Vec<String> = seg
            .token_ids
            .iter()
            .map(|&id| pieces[id as usize].replace(' ', &VISIBLE_SPACE.to_string()))
            .collect();
        writeln!(out, "{}", line.join(" ")).map_err(stdout_err)?;
    }
    Ok(())
}
