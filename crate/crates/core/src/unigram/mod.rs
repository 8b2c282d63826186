//! Unigram language-model tokenizer.
//!
//! Training seeds a large candidate set from frequent substrings, fits piece
//! probabilities by EM (forward-backward expected counts, exact M-step) and
//! prunes the pieces whose removal costs the least corpus likelihood until
//! the target size is reached. Encoding picks the maximum-probability
//! segmentation.
//!
//! Vocabularies are not nested across sizes, so every size is trained from
//! scratch unless the caller prunes an existing model down with [`prune`].

mod lattice;
mod trie;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

pub use lattice::Lattice;
use lattice::log_add;
use trie::Trie;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::tokenize::{Segmentation, TokenId, Tokenizer};

/// Sentences per work unit. Partial sums are combined in chunk order, so
/// results do not depend on the number of worker threads.
const CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnigramConfig {
    /// Seed candidates per requested piece.
    pub seed_multiplier: usize,
    /// Longest candidate piece, in characters.
    pub max_piece_len: usize,
    /// Fraction of pieces kept by each pruning round.
    pub shrink: f64,
    /// EM steps before each pruning round.
    pub em_iterations: usize,
}

impl Default for UnigramConfig {
    fn default() -> Self {
        UnigramConfig {
            seed_multiplier: 10,
            max_piece_len: 8,
            shrink: 0.75,
            em_iterations: 2,
        }
    }
}

impl UnigramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seed_multiplier == 0 {
            return Err(Error::InvalidConfig("seed_multiplier must be at least 1".into()));
        }
        if self.max_piece_len == 0 {
            return Err(Error::InvalidConfig("max_piece_len must be at least 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "shrink must lie in (0, 1), got {}",
                self.shrink
            )));
        }
        if self.em_iterations == 0 {
            return Err(Error::InvalidConfig("em_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Pieces with natural-log probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct UnigramModel {
    pieces: Vec<String>,
    logprobs: Vec<f64>,
    index: HashMap<String, TokenId>,
    trie: Trie,
    max_piece_chars: usize,
}

impl UnigramModel {
    pub fn new(pieces: Vec<(String, f64)>) -> Result<UnigramModel> {
        let mut index = HashMap::with_capacity(pieces.len());
        let mut max_piece_chars = 0;
        for (i, (p, _)) in pieces.iter().enumerate() {
            if p.is_empty() {
                return Err(Error::ModelFormat {
                    line: 0,
                    message: "empty piece".into(),
                });
            }
            if index.insert(p.clone(), i as TokenId).is_some() {
                return Err(Error::ModelFormat {
                    line: 0,
                    message: format!("duplicate piece {p:?}"),
                });
            }
            max_piece_chars = max_piece_chars.max(p.chars().count());
        }
        let (pieces, logprobs): (Vec<String>, Vec<f64>) = pieces.into_iter().unzip();
        let trie = Trie::new(pieces.iter().map(String::as_str));
        Ok(UnigramModel {
            pieces,
            logprobs,
            index,
            trie,
            max_piece_chars,
        })
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn logprobs(&self) -> &[f64] {
        &self.logprobs
    }

    pub fn piece_id(&self, piece: &str) -> Option<TokenId> {
        self.index.get(piece).copied()
    }

    pub fn max_piece_chars(&self) -> usize {
        self.max_piece_chars
    }

    pub(crate) fn trie(&self) -> &Trie {
        &self.trie
    }

    pub fn is_single_char(&self, id: TokenId) -> bool {
        let mut chars = self.pieces[id as usize].chars();
        chars.next().is_some() && chars.next().is_none()
    }

    fn single_char_count(&self) -> usize {
        (0..self.pieces.len() as TokenId)
            .filter(|&id| self.is_single_char(id))
            .count()
    }

    fn with_logprobs(&self, logprobs: Vec<f64>) -> UnigramModel {
        UnigramModel {
            logprobs,
            ..self.clone()
        }
    }

    /// Keeps the listed pieces (in the given order) and renormalizes.
    ///
    /// Single characters with zero probability are raised to the smallest
    /// nonzero probability among the kept pieces (or among all pieces if none
    /// of the kept ones has any), since the pieces that used to cover them
    /// may be gone.
    fn subset(&self, keep: &[TokenId]) -> UnigramModel {
        let min_finite = |ids: &mut dyn Iterator<Item = TokenId>| {
            ids.map(|id| self.logprobs[id as usize])
                .filter(|lp| lp.is_finite())
                .fold(f64::INFINITY, f64::min)
        };
        let mut floor = min_finite(&mut keep.iter().copied());
        if !floor.is_finite() {
            floor = min_finite(&mut (0..self.pieces.len() as TokenId));
        }
        let raw: Vec<f64> = keep
            .iter()
            .map(|&id| {
                let lp = self.logprobs[id as usize];
                if lp == f64::NEG_INFINITY && self.is_single_char(id) && floor.is_finite() {
                    floor
                } else {
                    lp
                }
            })
            .collect();
        let norm = raw.iter().fold(f64::NEG_INFINITY, |acc, &lp| log_add(acc, lp));
        let pieces = keep
            .iter()
            .zip(&raw)
            .map(|(&id, &lp)| (self.pieces[id as usize].clone(), lp - norm))
            .collect();
        UnigramModel::new(pieces).expect("subset of a valid model")
    }
}

impl Tokenizer for UnigramModel {
    fn pieces(&self) -> &[String] {
        &self.pieces
    }

    fn encode(&self, sentence: &str) -> Result<Segmentation> {
        let lattice = Lattice::new(self, sentence)?;
        let ids = lattice
            .viterbi(&self.logprobs, None)
            .expect("single-character pieces make every position reachable");
        Ok(Segmentation::from(ids))
    }
}

/// Ranked substring candidates of a corpus.
///
/// Multi-character substrings are ranked by `frequency * length` (ties by
/// string order). Single characters are always included, ahead of the
/// ranked candidates.
#[derive(Debug, Clone)]
pub struct SeedTable {
    chars: Vec<(String, u64)>,
    ranked: Vec<(String, u64)>,
    distinct: usize,
}

impl SeedTable {
    /// Counts every substring of up to `max_piece_len` characters, keeping the
    /// `limit` best multi-character candidates.
    pub fn build(corpus: &Corpus, max_piece_len: usize, limit: usize) -> SeedTable {
        let alphabet = corpus.stats().alphabet;
        let mut char_counts: HashMap<char, u64> = HashMap::new();
        for s in corpus.sentences() {
            for c in s.chars() {
                *char_counts.entry(c).or_default() += 1;
            }
        }
        let chars: Vec<(String, u64)> = alphabet
            .iter()
            .map(|c| (c.to_string(), char_counts.get(c).copied().unwrap_or(0)))
            .collect();

        let bounds: Vec<Vec<usize>> = corpus
            .sentences()
            .iter()
            .map(|s| {
                let mut b: Vec<usize> = s.char_indices().map(|(i, _)| i).collect();
                b.push(s.len());
                b
            })
            .collect();

        // One length at a time keeps peak memory to a single length's table.
        let mut distinct = 0;
        let mut ranked: Vec<(&str, u64, usize)> = Vec::new();
        for len in 2..=max_piece_len {
            let mut counts: HashMap<&str, u64> = HashMap::new();
            for (s, b) in corpus.sentences().iter().zip(&bounds) {
                for start in 0..b.len().saturating_sub(len) {
                    *counts.entry(&s[b[start]..b[start + len]]).or_default() += 1;
                }
            }
            if counts.is_empty() {
                break;
            }
            distinct += counts.len();
            ranked.extend(counts.into_iter().map(|(s, c)| (s, c, len)));
            if ranked.len() > limit {
                ranked.select_nth_unstable_by(limit, rank_order);
                ranked.truncate(limit);
            }
        }
        ranked.sort_unstable_by(rank_order);
        SeedTable {
            chars,
            ranked: ranked
                .into_iter()
                .map(|(s, c, _)| (s.to_string(), c))
                .collect(),
            distinct,
        }
    }

    /// Distinct candidate pieces in the corpus, characters included.
    pub fn total(&self) -> usize {
        self.chars.len() + self.distinct
    }

    /// The first `seed_size` candidates (never fewer than the alphabet) with
    /// probabilities proportional to substring frequency.
    pub fn seed(&self, seed_size: usize) -> UnigramModel {
        let extra = seed_size.saturating_sub(self.chars.len());
        let pieces: Vec<&(String, u64)> = self
            .chars
            .iter()
            .chain(self.ranked.iter().take(extra))
            .collect();
        let total: u64 = pieces.iter().map(|(_, c)| c).sum();
        let log_total = (total as f64).ln();
        UnigramModel::new(
            pieces
                .into_iter()
                .map(|(p, c)| (p.clone(), (*c as f64).ln() - log_total))
                .collect(),
        )
        .expect("substrings are distinct")
    }
}

fn rank_order(a: &(&str, u64, usize), b: &(&str, u64, usize)) -> std::cmp::Ordering {
    (b.1 * b.2 as u64)
        .cmp(&(a.1 * a.2 as u64))
        .then_with(|| a.0.cmp(b.0))
}

/// Seed candidates for a corpus: every single character plus the best
/// `seed_size - alphabet` substrings of length `2..=max_piece_len`.
pub fn seed_vocab(corpus: &Corpus, seed_size: usize, max_piece_len: usize) -> UnigramModel {
    SeedTable::build(corpus, max_piece_len, seed_size).seed(seed_size)
}

/// Expected piece counts over the corpus and the corpus log-likelihood.
pub fn expected_counts(model: &UnigramModel, corpus: &Corpus) -> Result<(Vec<f64>, f64)> {
    let n = model.pieces.len();
    let partials: Vec<Result<(Vec<f64>, f64)>> = corpus
        .sentences()
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut expected = vec![0.0; n];
            let mut ll = 0.0;
            for (j, s) in chunk.iter().enumerate() {
                let sentence = ci * CHUNK + j;
                let lattice = Lattice::new(model, s).map_err(|e| with_sentence(e, sentence))?;
                let z = lattice.accumulate_marginals(&model.logprobs, &mut expected);
                if !z.is_finite() {
                    return Err(Error::TrainerDiverged { sentence });
                }
                ll += z;
            }
            Ok((expected, ll))
        })
        .collect();
    let mut expected = vec![0.0; n];
    let mut ll = 0.0;
    for part in partials {
        let (e, l) = part?;
        for (acc, x) in expected.iter_mut().zip(e) {
            *acc += x;
        }
        ll += l;
    }
    Ok((expected, ll))
}

/// One EM iteration at a fixed vocabulary. Returns the re-estimated model and
/// the corpus log-likelihood under the input model.
pub fn em_step(model: &UnigramModel, corpus: &Corpus) -> Result<(UnigramModel, f64)> {
    let (expected, ll) = expected_counts(model, corpus)?;
    let log_total = expected.iter().sum::<f64>().ln();
    let logprobs = expected
        .iter()
        .map(|&c| if c > 0.0 { c.ln() - log_total } else { f64::NEG_INFINITY })
        .collect();
    Ok((model.with_logprobs(logprobs), ll))
}

/// Viterbi piece counts and the number of sentences each piece appears in.
fn viterbi_counts(model: &UnigramModel, corpus: &Corpus) -> Result<(Vec<u64>, Vec<u64>)> {
    let n = model.pieces.len();
    let partials: Vec<Result<(Vec<u64>, Vec<u64>)>> = corpus
        .sentences()
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut freq = vec![0u64; n];
            let mut hits = vec![0u64; n];
            let mut seen = vec![false; n];
            for (j, s) in chunk.iter().enumerate() {
                let seg = model
                    .encode(s)
                    .map_err(|e| with_sentence(e, ci * CHUNK + j))?;
                for &id in &seg.token_ids {
                    freq[id as usize] += 1;
                    if !seen[id as usize] {
                        seen[id as usize] = true;
                        hits[id as usize] += 1;
                    }
                }
                for &id in &seg.token_ids {
                    seen[id as usize] = false;
                }
            }
            Ok((freq, hits))
        })
        .collect();
    let mut freq = vec![0u64; n];
    let mut hits = vec![0u64; n];
    for part in partials {
        let (f, h) = part?;
        for i in 0..n {
            freq[i] += f[i];
            hits[i] += h[i];
        }
    }
    Ok((freq, hits))
}

/// Approximate loss in corpus log-likelihood from removing each piece.
///
/// A removed piece's Viterbi occurrences are assumed to be re-segmented by
/// its best segmentation without it. Pieces never used on a Viterbi path get
/// `-inf`. Single-character pieces get `+inf` since they are never removed.
pub fn removal_losses(model: &UnigramModel, corpus: &Corpus) -> Result<Vec<f64>> {
    let (freq, hits) = viterbi_counts(model, corpus)?;
    let sum: f64 = freq.iter().sum::<u64>() as f64;
    let log_sum = sum.ln();
    let sentences = corpus.len() as f64;
    let losses = (0..model.pieces.len() as TokenId)
        .map(|id| {
            if model.is_single_char(id) {
                return f64::INFINITY;
            }
            let f = freq[id as usize] as f64;
            if f == 0.0 {
                return f64::NEG_INFINITY;
            }
            let lattice = Lattice::new(model, &model.pieces[id as usize]).expect("piece is encodable");
            let alternative = lattice
                .viterbi(&model.logprobs, Some(id))
                .expect("characters remain available");
            let logprob_piece = f.ln() - log_sum;
            let log_sum_alt = (sum + f * (alternative.len() as f64 - 1.0)).ln();
            let logprob_alt: f64 = alternative
                .iter()
                .map(|&a| (freq[a as usize] as f64 + f).ln() - log_sum_alt)
                .sum();
            hits[id as usize] as f64 / sentences * (logprob_piece - logprob_alt)
        })
        .collect();
    Ok(losses)
}

/// Shrinks a model to `target_n` pieces.
///
/// Each round runs `em_iterations` EM steps, then keeps the
/// `max(target_n, shrink * n)` pieces with the largest removal loss.
/// Single-character pieces are always kept. The returned model has had a
/// final EM refresh at its size.
pub fn prune(
    model: &UnigramModel,
    corpus: &Corpus,
    target_n: usize,
    shrink: f64,
    em_iterations: usize,
) -> Result<UnigramModel> {
    let chars = model.single_char_count();
    if target_n < chars {
        return Err(Error::InfeasibleVocabSize {
            n: target_n,
            n_min: chars,
        });
    }
    if target_n > model.pieces.len() {
        return Err(Error::CandidatesExhausted {
            available: model.pieces.len(),
        });
    }
    if !(shrink > 0.0 && shrink < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "shrink must lie in (0, 1), got {shrink}"
        )));
    }
    let mut current = model.clone();
    loop {
        for _ in 0..em_iterations {
            current = em_step(&current, corpus)?.0;
        }
        let n = current.pieces.len();
        if n <= target_n {
            return Ok(current);
        }
        let keep = target_n.max((n as f64 * shrink) as usize);
        let losses = removal_losses(&current, corpus)?;
        let mut order: Vec<TokenId> = (0..n as TokenId).collect();
        order.sort_by(|&a, &b| {
            losses[b as usize]
                .total_cmp(&losses[a as usize])
                .then(a.cmp(&b))
        });
        let mut kept = order[..keep].to_vec();
        kept.sort_unstable();
        log::debug!("prune: {n} -> {keep} pieces");
        current = current.subset(&kept);
    }
}

/// Trains a model with exactly `n` pieces.
pub fn train_unigram(corpus: &Corpus, n: usize, config: &UnigramConfig) -> Result<UnigramModel> {
    config.validate()?;
    let alphabet = corpus.stats().alphabet_size();
    if n < alphabet {
        return Err(Error::InfeasibleVocabSize { n, n_min: alphabet });
    }
    let table = SeedTable::build(
        corpus,
        config.max_piece_len,
        n.saturating_mul(config.seed_multiplier),
    );
    train_unigram_seeded(corpus, n, config, &table)
}

/// [`train_unigram`] with a precomputed seed table, which must have been
/// built with a limit of at least `n * seed_multiplier`.
pub fn train_unigram_seeded(
    corpus: &Corpus,
    n: usize,
    config: &UnigramConfig,
    table: &SeedTable,
) -> Result<UnigramModel> {
    config.validate()?;
    if n < table.chars.len() {
        return Err(Error::InfeasibleVocabSize {
            n,
            n_min: table.chars.len(),
        });
    }
    let seed_size = n.saturating_mul(config.seed_multiplier).min(table.total());
    if seed_size < n {
        return Err(Error::CandidatesExhausted {
            available: table.total(),
        });
    }
    let seeded = table.seed(seed_size);
    let trained = prune(&seeded, corpus, n, config.shrink, config.em_iterations)?;
    Ok(canonical_order(&trained))
}

/// Characters first (in their existing order), then the rest by descending
/// probability.
pub fn canonical_order(model: &UnigramModel) -> UnigramModel {
    let mut ids: Vec<TokenId> = (0..model.pieces.len() as TokenId).collect();
    ids.sort_by(|&a, &b| {
        let (ca, cb) = (model.is_single_char(a), model.is_single_char(b));
        cb.cmp(&ca)
            .then_with(|| {
                if ca {
                    a.cmp(&b)
                } else {
                    model.logprobs[b as usize]
                        .total_cmp(&model.logprobs[a as usize])
                        .then_with(|| model.pieces[a as usize].cmp(&model.pieces[b as usize]))
                }
            })
    });
    UnigramModel::new(
        ids.iter()
            .map(|&id| (model.pieces[id as usize].clone(), model.logprobs[id as usize]))
            .collect(),
    )
    .expect("reordering keeps pieces distinct")
}

fn with_sentence(e: Error, sentence: usize) -> Error {
    match e {
        Error::UnencodableCharacter { ch, position, .. } => Error::UnencodableCharacter {
            ch,
            position,
            sentence: Some(sentence),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(pieces: &[(&str, f64)]) -> UnigramModel {
        UnigramModel::new(pieces.iter().map(|&(p, q)| (p.to_string(), q.ln())).collect()).unwrap()
    }

    fn corpus(lines: &[&str]) -> Corpus {
        Corpus::from_sentences(lines).unwrap()
    }

    fn piece_set(m: &UnigramModel) -> Vec<String> {
        let mut p = m.pieces().to_vec();
        p.sort();
        p
    }

    /// Every segmentation of `s` into pieces of `m`, as id sequences.
    fn all_segmentations(m: &UnigramModel, s: &str) -> Vec<Vec<TokenId>> {
        if s.is_empty() {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for (id, p) in m.pieces().iter().enumerate() {
            if let Some(rest) = s.strip_prefix(p.as_str()) {
                for mut tail in all_segmentations(m, rest) {
                    tail.insert(0, id as TokenId);
                    out.push(tail);
                }
            }
        }
        out
    }

    #[test]
    fn seed_vocab_ranks_by_frequency_times_length() {
        let c = corpus(&["ab ab", "ab"]);
        let m = seed_vocab(&c, 8, 3);
        assert_eq!(m.pieces(), ["a", "b", " ", "ab", " ab", "ab ", "b a", " a"]);
        let p: Vec<f64> = m.logprobs().iter().map(|l| l.exp()).collect();
        // counts a3 b3 _1 ab3 _ab1 ab_1 b_a1 _a1 -> total 14
        assert!((p[0] - 3.0 / 14.0).abs() < 1e-15);
        assert!((p[4] - 1.0 / 14.0).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seed_floor_and_length_cap() {
        let c = corpus(&["ab ab", "ab"]);
        assert_eq!(seed_vocab(&c, 3, 8).pieces(), ["a", "b", " "]);
        assert_eq!(seed_vocab(&c, 100, 1).pieces(), ["a", "b", " "]);
        let table = SeedTable::build(&c, 8, 100);
        assert_eq!(table.total(), 12);
    }

    #[test]
    fn single_character_em_counts_are_raw_counts() {
        let c = corpus(&["ab ab", "ab"]);
        let m = seed_vocab(&c, 3, 8);
        let (expected, ll) = expected_counts(&m, &c).unwrap();
        for (e, want) in expected.iter().zip([3.0, 3.0, 1.0]) {
            assert!((e - want).abs() < 1e-12);
        }
        let direct = 3.0 * (3.0f64 / 7.0).ln() * 2.0 + (1.0f64 / 7.0).ln();
        assert!((ll - direct).abs() < 1e-12);
    }

    #[test]
    fn expected_counts_match_enumeration() {
        let m = model(&[("a", 0.5), ("aa", 0.5)]);
        let c = corpus(&["aaaa"]);
        let segs = all_segmentations(&m, "aaaa");
        assert_eq!(segs.len(), 5);
        let mut z = 0.0;
        let mut want = [0.0f64; 2];
        for seg in &segs {
            let p: f64 = seg.iter().map(|&id| m.logprobs()[id as usize].exp()).product();
            z += p;
            for &id in seg {
                want[id as usize] += p;
            }
        }
        let (got, ll) = expected_counts(&m, &c).unwrap();
        assert!((ll - z.ln()).abs() < 1e-14);
        assert!((got[0] - want[0] / z).abs() < 1e-14);
        assert!((got[1] - want[1] / z).abs() < 1e-14);
        assert!((got[0] - 16.0 / 11.0).abs() < 1e-14);
        assert!((got[1] - 14.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn em_is_monotone_and_normalized() {
        let c = corpus(&["ab ab", "ab", "ba ba ab", "aab"]);
        let mut m = seed_vocab(&c, 20, 4);
        let mut last = f64::NEG_INFINITY;
        for _ in 0..8 {
            let (next, ll) = em_step(&m, &c).unwrap();
            assert!(ll >= last - 1e-9, "{ll} < {last}");
            let total: f64 = next.logprobs().iter().map(|l| l.exp()).sum();
            assert!((total - 1.0).abs() < 1e-6);
            last = ll;
            m = next;
        }
    }

    #[test]
    fn viterbi_prefers_long_piece() {
        let m = model(&[("a", 0.25), ("aa", 0.5), (" ", 0.25)]);
        let seg = m.encode("aaaa").unwrap();
        assert_eq!(seg.token_ids, vec![1, 1]);
        let best: f64 = 2.0 * 0.5f64.ln();
        assert!((best - (-1.386)).abs() < 1e-3);
        assert_eq!(m.decode(&seg.token_ids).unwrap(), "aaaa");
    }

    #[test]
    fn viterbi_single_char_model_is_unique_path() {
        let m = model(&[("a", 0.5), ("b", 0.5)]);
        assert_eq!(m.encode("ab").unwrap().token_ids, vec![0, 1]);
    }

    #[test]
    fn viterbi_ties_prefer_fewer_tokens_then_smaller_ids() {
        // "aa" as one piece scores the same as a + a.
        let m = model(&[("a", 0.5), ("aa", 0.25)]);
        assert_eq!(m.encode("aa").unwrap().token_ids, vec![1]);
        // ab+c vs a+bc: same score and length; id order decides.
        let m = model(&[("a", 0.2), ("b", 0.2), ("c", 0.2), ("bc", 0.2), ("ab", 0.2)]);
        assert_eq!(m.encode("abc").unwrap().token_ids, vec![0, 3]);
    }

    #[test]
    fn prune_to_alphabet_leaves_characters() {
        let c = corpus(&["ab ab", "ab"]);
        let m = prune(&seed_vocab(&c, 8, 3), &c, 3, 0.75, 2).unwrap();
        assert_eq!(piece_set(&m), [" ", "a", "b"]);
    }

    #[test]
    fn prune_at_current_size_only_refreshes() {
        let c = corpus(&["ab ab", "ab"]);
        let seeded = seed_vocab(&c, 8, 3);
        let m = prune(&seeded, &c, 8, 0.75, 2).unwrap();
        assert_eq!(m.pieces(), seeded.pieces());
        let mut refreshed = seeded.clone();
        for _ in 0..2 {
            refreshed = em_step(&refreshed, &c).unwrap().0;
        }
        assert_eq!(m, refreshed);
    }

    #[test]
    fn prune_mini_corpus_keeps_ab() {
        let c = corpus(&["ab ab", "ab"]);
        let seeded = seed_vocab(&c, 8, 3);
        let mut refreshed = seeded.clone();
        for _ in 0..2 {
            refreshed = em_step(&refreshed, &c).unwrap().0;
        }
        let losses = removal_losses(&refreshed, &c).unwrap();
        let ab = refreshed.piece_id("ab").unwrap() as usize;
        for (id, &loss) in losses.iter().enumerate() {
            if id != ab && !refreshed.is_single_char(id as TokenId) {
                assert!(losses[ab] > loss, "{:?} {loss}", refreshed.pieces()[id]);
            }
        }
        let m = prune(&seeded, &c, 4, 0.75, 2).unwrap();
        assert_eq!(piece_set(&m), [" ", "a", "ab", "b"]);
    }

    #[test]
    fn train_mini_corpus() {
        let c = corpus(&["ab ab", "ab"]);
        let short = UnigramConfig {
            max_piece_len: 3,
            ..UnigramConfig::default()
        };
        let m = train_unigram(&c, 4, &short).unwrap();
        assert_eq!(m.pieces(), ["a", "b", " ", "ab"]);
        assert_eq!(m.encode("ab ab").unwrap().token_ids, vec![3, 2, 3]);
        let total: f64 = m.logprobs().iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pruning_revives_underflowed_characters() {
        // EM drives every character of a one-sentence corpus towards zero in
        // favour of the whole-sentence piece; pruning that piece away must
        // leave an encodable model.
        let c = corpus(&["ce deea"]);
        let m = train_unigram(&c, 5, &UnigramConfig::default()).unwrap();
        assert!(m.logprobs().iter().all(|lp| lp.is_finite()));
        assert_eq!(m.encode("ce deea").unwrap().token_ids.len(), 7);
    }

    #[test]
    fn long_candidates_can_win_on_the_mini_corpus() {
        // With 8-character candidates the whole sentence "ab ab" is a piece,
        // and its removal loss beats that of "ab".
        let c = corpus(&["ab ab", "ab"]);
        let m = train_unigram(&c, 4, &UnigramConfig::default()).unwrap();
        assert_eq!(m.pieces(), ["a", "b", " ", "ab ab"]);
    }

    #[test]
    fn train_too_large_reports_candidates() {
        let c = corpus(&["ab ab", "ab"]);
        let err = train_unigram(&c, 13, &UnigramConfig::default()).unwrap_err();
        assert!(matches!(err, Error::CandidatesExhausted { available: 12 }));
        assert_eq!(train_unigram(&c, 12, &UnigramConfig::default()).unwrap().pieces().len(), 12);
    }

    #[test]
    fn missing_space_gets_zero_probability_but_encodes() {
        let c = corpus(&["aaaa"]);
        let m = train_unigram(&c, 3, &UnigramConfig::default()).unwrap();
        let space = m.piece_id(" ").unwrap();
        assert_eq!(m.logprobs()[space as usize], f64::NEG_INFINITY);
        let seg = m.encode("aa aa").unwrap();
        assert_eq!(m.decode(&seg.token_ids).unwrap(), "aa aa");
    }

    #[test]
    fn bad_config_is_rejected() {
        let c = corpus(&["ab"]);
        let cfg = UnigramConfig {
            shrink: 1.0,
            ..UnigramConfig::default()
        };
        assert!(matches!(train_unigram(&c, 3, &cfg), Err(Error::InvalidConfig(_))));
    }
}
