//! Sweep artifacts: the curve CSV, an SVG plot, and the run manifest.

mod svg;

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::corpus::{Corpus, Normalization};
use crate::cost::{Alphas, BpeSweepMode, CostCurve, Grid, Infeasible, SweepConfig};
use crate::tokenize::{TokenizerKind, TrainerConfig};

pub use svg::curve_svg;

pub const CSV_HEADER: &str = "n,theta_t,f_plus,f_minus,t1,t2,t3,cost,is_nstar";

/// One row per feasible grid point. Reals use the shortest decimal that
/// round-trips.
pub fn curve_csv(curve: &CostCurve) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        let t = &p.terms;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            t.n,
            t.theta_t,
            t.f_plus,
            t.f_minus,
            t.n,
            t.t2,
            t.t3,
            p.cost,
            u8::from(t.n == curve.n_star),
        ));
    }
    out
}

/// `curve.csv` -> `curve.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusRecord {
    pub path: PathBuf,
    /// SHA-256 of the normalized sentences, one per line.
    pub sha256: String,
    pub normalization: Normalization,
    pub sentences: usize,
}

/// Everything needed to reproduce a sweep, plus when it ran. Keys serialize
/// in declaration order.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub corpus: CorpusRecord,
    pub tokenizer: TokenizerKind,
    pub trainer: TrainerConfig,
    pub grid: Grid,
    pub alphas: Alphas,
    pub window: usize,
    pub fast_unigram: bool,
    pub bpe_mode: BpeSweepMode,
    pub n_star: usize,
    pub infeasible: Vec<Infeasible>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn new(
        corpus: &Corpus,
        normalization: Normalization,
        config: &SweepConfig,
        curve: &CostCurve,
        started_at: String,
        finished_at: String,
    ) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            corpus: CorpusRecord {
                path: corpus.source_path().to_path_buf(),
                sha256: corpus.content_hash(),
                normalization,
                sentences: corpus.len(),
            },
            tokenizer: config.kind,
            trainer: config.trainer.clone(),
            grid: config.grid.clone(),
            alphas: config.alphas,
            window: config.window,
            fast_unigram: config.fast_unigram,
            bpe_mode: config.bpe_mode,
            n_star: curve.n_star,
            infeasible: curve.infeasible.clone(),
            started_at,
            finished_at,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::sweep;

    #[test]
    fn mini_corpus_csv() {
        let c = Corpus::from_sentences(["ab ab", "ab"]).unwrap();
        let cfg = SweepConfig::new(
            TokenizerKind::Bpe,
            Grid::new(3, 4, None),
            Alphas::new(1.0, 1.0, 1.0).unwrap(),
        );
        let csv = curve_csv(&sweep(&c, &cfg).unwrap());
        assert_eq!(
            csv,
            "n,theta_t,f_plus,f_minus,t1,t2,t3,cost,is_nstar\n\
             3,7,2.3333333333333335,2.3333333333333335,3,0,1.3333333333333335,4.333333333333334,1\n\
             4,4,2,2,4,0,0.33333333333333326,4.333333333333333,0\n"
        );
    }

    #[test]
    fn manifest_keys_in_order() {
        let c = Corpus::from_sentences(["ab ab", "ab"]).unwrap();
        let cfg = SweepConfig::new(
            TokenizerKind::Bpe,
            Grid::new(3, 4, None),
            Alphas::new(1.0, 1.0, 1.0).unwrap(),
        );
        let curve = sweep(&c, &cfg).unwrap();
        let m = RunManifest::new(&c, Normalization::None, &cfg, &curve, "s".into(), "f".into());
        let json = m.to_json();
        let keys = ["tool_version", "corpus", "tokenizer", "trainer", "grid", "alphas", "n_star", "finished_at"];
        let pos: Vec<usize> = keys.iter().map(|k| json.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
        assert_eq!(manifest_path(Path::new("out/curve.csv")), Path::new("out/curve.manifest.json"));
    }
}
