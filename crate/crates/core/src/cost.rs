//! The weighted cost over vocabulary sizes and its minimizer.
//!
//! `C(n) = a1 * n + a2 * (f+/f- - 1) + a3 * (theta_t/w - 1)`, evaluated on a
//! grid of `n` and minimized to pick `n*`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bpe::BpeTrainer;
use crate::corpus::{Corpus, CorpusStats};
use crate::error::{Error, Result};
use crate::stats::{self, encode_corpus, freq_summary, TermBreakdown, DEFAULT_WINDOW};
use crate::tokenize::{TokenizerKind, TrainerConfig};
use crate::unigram::{self, SeedTable, UnigramModel};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "VOCOPTIM_THREADS";

/// Non-negative term weights, not all zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alphas {
    a1: f64,
    a2: f64,
    a3: f64,
}

impl Alphas {
    pub fn new(a1: f64, a2: f64, a3: f64) -> Result<Alphas> {
        for a in [a1, a2, a3] {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidAlphas(format!(
                    "weights must be finite and non-negative, got {a}"
                )));
            }
        }
        if a1 + a2 + a3 <= 0.0 {
            return Err(Error::InvalidAlphas("at least one weight must be positive".into()));
        }
        Ok(Alphas { a1, a2, a3 })
    }

    pub fn weights(&self) -> [f64; 3] {
        [self.a1, self.a2, self.a3]
    }

    pub fn scaled(&self, factor: f64) -> Result<Alphas> {
        Alphas::new(self.a1 * factor, self.a2 * factor, self.a3 * factor)
    }
}

impl FromStr for Alphas {
    type Err = Error;

    /// Parses `a1,a2,a3`.
    fn from_str(s: &str) -> Result<Alphas> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidAlphas(format!("expected a1,a2,a3, got '{s}'")));
        }
        let mut w = [0.0; 3];
        for (slot, p) in w.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::InvalidAlphas(format!("'{p}' is not a number")))?;
        }
        Alphas::new(w[0], w[1], w[2])
    }
}

impl fmt::Display for Alphas {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.a1, self.a2, self.a3)
    }
}

pub fn cost(terms: &TermBreakdown, alphas: &Alphas) -> f64 {
    alphas.a1 * terms.t1 + alphas.a2 * terms.t2 + alphas.a3 * terms.t3
}

/// Smallest vocabulary that can encode the corpus losslessly: one piece per
/// character.
pub fn min_feasible_n(stats: &CorpusStats) -> usize {
    stats.alphabet_size()
}

/// Candidate vocabulary sizes.
///
/// With no step, every `n` up to 200 is included and every fifth above it.
/// `n_max` is always part of the grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub n_min: usize,
    pub n_max: usize,
    pub step: Option<usize>,
}

impl Grid {
    pub fn new(n_min: usize, n_max: usize, step: Option<usize>) -> Grid {
        Grid { n_min, n_max, step }
    }

    pub fn points(&self) -> Result<Vec<usize>> {
        if self.n_min > self.n_max {
            return Err(Error::InvalidGrid(format!(
                "n_min {} exceeds n_max {}",
                self.n_min, self.n_max
            )));
        }
        let mut points: Vec<usize> = match self.step {
            Some(0) => return Err(Error::InvalidGrid("step must be at least 1".into())),
            Some(step) => (self.n_min..=self.n_max).step_by(step).collect(),
            None => (self.n_min..=self.n_max)
                .filter(|&n| n <= 200 || n % 5 == 0)
                .collect(),
        };
        if points.last() != Some(&self.n_max) {
            points.push(self.n_max);
        }
        Ok(points)
    }
}

/// A grid point that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Infeasible {
    pub n: usize,
    pub reason: String,
}

/// Term breakdowns over a grid; independent of the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TermSweep {
    pub kind: TokenizerKind,
    pub points: Vec<TermBreakdown>,
    pub infeasible: Vec<Infeasible>,
}

impl TermSweep {
    pub fn curve(&self, alphas: Alphas) -> Result<CostCurve> {
        let points: Vec<CurvePoint> = self
            .points
            .iter()
            .map(|t| CurvePoint {
                terms: t.clone(),
                cost: cost(t, &alphas),
            })
            .collect();
        let n_star = select_nstar(&points)?;
        Ok(CostCurve {
            kind: self.kind,
            alphas,
            points,
            n_star,
            infeasible: self.infeasible.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(flatten)]
    pub terms: TermBreakdown,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostCurve {
    pub kind: TokenizerKind,
    pub alphas: Alphas,
    /// Feasible points, ascending in `n`.
    pub points: Vec<CurvePoint>,
    pub n_star: usize,
    pub infeasible: Vec<Infeasible>,
}

impl CostCurve {
    pub fn point(&self, n: usize) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.terms.n == n)
    }
}

fn same_cost(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// The `n` with the lowest cost. Costs equal up to rounding count as ties,
/// which go to the smaller `n`.
pub fn select_nstar(points: &[CurvePoint]) -> Result<usize> {
    let mut sorted: Vec<&CurvePoint> = points.iter().filter(|p| p.cost.is_finite()).collect();
    sorted.sort_by_key(|p| p.terms.n);
    let mut best: Option<&CurvePoint> = None;
    for p in sorted {
        match best {
            Some(b) if p.cost >= b.cost || same_cost(p.cost, b.cost) => {}
            _ => best = Some(p),
        }
    }
    best.map(|p| p.terms.n).ok_or(Error::EmptyGrid)
}

/// How a BPE sweep obtains per-size statistics. Both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BpeSweepMode {
    /// Read counts off the trainer's running segmentation after each merge.
    #[default]
    Incremental,
    /// Truncate one large model to every grid size and re-encode the corpus.
    Truncate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub kind: TokenizerKind,
    pub grid: Grid,
    pub alphas: Alphas,
    pub window: usize,
    pub trainer: TrainerConfig,
    /// Unigram only: prune one large model down through the grid instead of
    /// training every size from scratch. An approximation.
    pub fast_unigram: bool,
    pub bpe_mode: BpeSweepMode,
    /// Worker threads; falls back to `VOCOPTIM_THREADS`, then all cores.
    pub workers: Option<usize>,
}

impl SweepConfig {
    pub fn new(kind: TokenizerKind, grid: Grid, alphas: Alphas) -> SweepConfig {
        SweepConfig {
            kind,
            grid,
            alphas,
            window: DEFAULT_WINDOW,
            trainer: TrainerConfig::default(),
            fast_unigram: false,
            bpe_mode: BpeSweepMode::default(),
            workers: None,
        }
    }
}

/// Trains, encodes and measures every grid point, then selects `n*`.
pub fn sweep(corpus: &Corpus, config: &SweepConfig) -> Result<CostCurve> {
    sweep_terms(corpus, config)?.curve(config.alphas)
}

/// The weight-independent part of [`sweep`].
pub fn sweep_terms(corpus: &Corpus, config: &SweepConfig) -> Result<TermSweep> {
    if config.window == 0 {
        return Err(Error::InvalidWindow);
    }
    let stats = corpus.stats();
    let n_min = min_feasible_n(&stats);
    if config.grid.n_min < n_min {
        return Err(Error::InfeasibleVocabSize {
            n: config.grid.n_min,
            n_min,
        });
    }
    let points = config.grid.points()?;
    if config.kind == TokenizerKind::Unigram {
        config.trainer.unigram.validate()?;
    }
    let results = with_workers(config.workers, || match config.kind {
        TokenizerKind::Bpe => match config.bpe_mode {
            BpeSweepMode::Incremental => bpe_incremental(corpus, &stats, &points, config.window),
            BpeSweepMode::Truncate => bpe_truncate(corpus, &stats, &points, config.window),
        },
        TokenizerKind::Unigram if config.fast_unigram => {
            unigram_fast(corpus, &stats, &points, config)
        }
        TokenizerKind::Unigram => unigram_retrain(corpus, &stats, &points, config),
    });

    let mut sweep = TermSweep {
        kind: config.kind,
        points: Vec::new(),
        infeasible: Vec::new(),
    };
    for (n, result) in points.into_iter().zip(results) {
        match result {
            Ok(terms) => sweep.points.push(terms),
            Err(e) => {
                log::info!("n={n} infeasible: {e}");
                sweep.infeasible.push(Infeasible {
                    n,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(sweep)
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let workers = workers.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
    });
    match workers.filter(|&w| w > 0) {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {w}-thread pool: {e}");
                f()
            }
        },
        None => f(),
    }
}

fn bpe_incremental(
    corpus: &Corpus,
    stats: &CorpusStats,
    points: &[usize],
    window: usize,
) -> Vec<Result<TermBreakdown>> {
    let mut trainer = BpeTrainer::new(corpus);
    let mut exhausted = false;
    points
        .iter()
        .map(|&n| {
            while !exhausted && trainer.n() < n {
                exhausted = trainer.step().is_none();
            }
            if trainer.n() != n {
                return Err(Error::ExhaustedPairs {
                    n_reached: trainer.n(),
                });
            }
            let summary = freq_summary(trainer.freq(), window)?;
            Ok(stats::terms_from_summary(n, trainer.theta(), &summary, stats.w))
        })
        .collect()
}

fn bpe_truncate(
    corpus: &Corpus,
    stats: &CorpusStats,
    points: &[usize],
    window: usize,
) -> Vec<Result<TermBreakdown>> {
    let n_max = points.iter().copied().max().unwrap_or(0);
    let mut trainer = BpeTrainer::new(corpus);
    while trainer.n() < n_max && trainer.step().is_some() {}
    let full = trainer.model();
    points
        .par_iter()
        .map(|&n| {
            let model = full.truncate(n)?;
            let encoded = encode_corpus(&model, corpus)?;
            stats::term_breakdown(n, &encoded, stats, window)
        })
        .collect()
}

fn unigram_terms(
    model: &UnigramModel,
    corpus: &Corpus,
    stats: &CorpusStats,
    window: usize,
) -> Result<TermBreakdown> {
    let encoded = encode_corpus(model, corpus)?;
    stats::term_breakdown(model.pieces().len(), &encoded, stats, window)
}

fn seed_table(corpus: &Corpus, points: &[usize], config: &SweepConfig) -> SeedTable {
    let n_max = points.iter().copied().max().unwrap_or(0);
    let cfg = &config.trainer.unigram;
    SeedTable::build(corpus, cfg.max_piece_len, n_max.saturating_mul(cfg.seed_multiplier))
}

fn unigram_retrain(
    corpus: &Corpus,
    stats: &CorpusStats,
    points: &[usize],
    config: &SweepConfig,
) -> Vec<Result<TermBreakdown>> {
    let table = seed_table(corpus, points, config);
    points
        .par_iter()
        .map(|&n| {
            let model = unigram::train_unigram_seeded(corpus, n, &config.trainer.unigram, &table)?;
            unigram_terms(&model, corpus, stats, config.window)
        })
        .collect()
}

fn unigram_fast(
    corpus: &Corpus,
    stats: &CorpusStats,
    points: &[usize],
    config: &SweepConfig,
) -> Vec<Result<TermBreakdown>> {
    let cfg = &config.trainer.unigram;
    let table = seed_table(corpus, points, config);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(points[i]));

    let mut models: Vec<Option<Result<UnigramModel>>> = (0..points.len()).map(|_| None).collect();
    let mut current: Option<UnigramModel> = None;
    for i in order {
        let n = points[i];
        let model = match &current {
            None => unigram::train_unigram_seeded(corpus, n, cfg, &table),
            Some(m) => unigram::prune(m, corpus, n, cfg.shrink, cfg.em_iterations)
                .map(|m| unigram::canonical_order(&m)),
        };
        if let Ok(m) = &model {
            current = Some(m.clone());
        }
        models[i] = Some(model);
    }
    models
        .into_par_iter()
        .map(|m| {
            let model = m.expect("every point visited")?;
            unigram_terms(&model, corpus, stats, config.window)
        })
        .collect()
}
