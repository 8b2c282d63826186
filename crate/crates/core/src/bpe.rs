//! Byte-pair encoding over whole sentences.
//!
//! Training starts from the corpus characters and repeatedly merges the
//! adjacent symbol pair with the highest corpus-wide count. Spaces are
//! ordinary symbols, so pairs span word boundaries. Ties go to the pair that
//! occurs first in the corpus (sentence index, then character offset).
//!
//! Merge lists are nested: the model for `n` pieces is a prefix of the model
//! for any larger `n`, which lets a sweep train once and [`BpeModel::truncate`].

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::tokenize::{Segmentation, TokenId, Tokenizer};

type Pair = (TokenId, TokenId);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeRule {
    pub left: String,
    pub right: String,
    pub result: String,
    pub rank: usize,
}

/// Alphabet pieces followed by one piece per merge, in rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    pieces: Vec<String>,
    alphabet_len: usize,
    merges: Vec<Pair>,
    char_ids: HashMap<char, TokenId>,
    ranks: HashMap<Pair, u32>,
}

impl BpeModel {
    /// Builds a model from its alphabet and merges given as id pairs. The
    /// piece created by merge `r` has id `alphabet.len() + r`.
    pub fn from_parts(alphabet: Vec<char>, merges: Vec<Pair>) -> Result<BpeModel> {
        let mut pieces: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
        let mut seen: HashSet<String> = pieces.iter().cloned().collect();
        if seen.len() != pieces.len() {
            return Err(Error::ModelFormat {
                line: 0,
                message: "duplicate alphabet character".into(),
            });
        }
        let mut ranks = HashMap::with_capacity(merges.len());
        for (rank, &(l, r)) in merges.iter().enumerate() {
            let (Some(left), Some(right)) = (pieces.get(l as usize), pieces.get(r as usize)) else {
                return Err(Error::ModelFormat {
                    line: 0,
                    message: format!("merge {rank} refers to an unknown piece"),
                });
            };
            let result = format!("{left}{right}");
            if !seen.insert(result.clone()) {
                return Err(Error::ModelFormat {
                    line: 0,
                    message: format!("merge {rank} duplicates piece {result:?}"),
                });
            }
            pieces.push(result);
            ranks.insert((l, r), rank as u32);
        }
        let char_ids = alphabet
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as TokenId))
            .collect();
        Ok(BpeModel {
            pieces,
            alphabet_len: alphabet.len(),
            merges,
            char_ids,
            ranks,
        })
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }

    pub fn alphabet(&self) -> Vec<char> {
        self.pieces[..self.alphabet_len]
            .iter()
            .filter_map(|p| p.chars().next())
            .collect()
    }

    /// Merges as `(left id, right id)` in rank order.
    pub fn merge_ids(&self) -> &[Pair] {
        &self.merges
    }

    pub fn merges(&self) -> Vec<MergeRule> {
        self.merges
            .iter()
            .enumerate()
            .map(|(rank, &(l, r))| MergeRule {
                left: self.pieces[l as usize].clone(),
                right: self.pieces[r as usize].clone(),
                result: self.pieces[self.alphabet_len + rank].clone(),
                rank,
            })
            .collect()
    }

    /// Keeps only the first `n - alphabet_len` merges.
    pub fn truncate(&self, n: usize) -> Result<BpeModel> {
        if n < self.alphabet_len {
            return Err(Error::InfeasibleVocabSize {
                n,
                n_min: self.alphabet_len,
            });
        }
        if n > self.pieces.len() {
            return Err(Error::ExhaustedPairs {
                n_reached: self.pieces.len(),
            });
        }
        let merges = self.merges[..n - self.alphabet_len].to_vec();
        let ranks = self
            .ranks
            .iter()
            .filter(|(_, &r)| (r as usize) < merges.len())
            .map(|(&p, &r)| (p, r))
            .collect();
        Ok(BpeModel {
            pieces: self.pieces[..n].to_vec(),
            alphabet_len: self.alphabet_len,
            merges,
            char_ids: self.char_ids.clone(),
            ranks,
        })
    }

    fn char_sequence(&self, sentence: &str) -> Result<Vec<TokenId>> {
        sentence
            .chars()
            .enumerate()
            .map(|(position, ch)| {
                self.char_ids
                    .get(&ch)
                    .copied()
                    .ok_or(Error::UnencodableCharacter {
                        ch,
                        position,
                        sentence: None,
                    })
            })
            .collect()
    }
}

impl Tokenizer for BpeModel {
    fn pieces(&self) -> &[String] {
        &self.pieces
    }

    /// Replays merges in rank order. Applying the lowest-ranked pair present
    /// at each step is equivalent, because a merge result can only take part
    /// in merges of higher rank.
    fn encode(&self, sentence: &str) -> Result<Segmentation> {
        let mut syms = self.char_sequence(sentence)?;
        loop {
            let mut best: Option<(u32, usize)> = None;
            for (i, w) in syms.windows(2).enumerate() {
                if let Some(&rank) = self.ranks.get(&(w[0], w[1])) {
                    if best.is_none_or(|(b, _)| rank < b) {
                        best = Some((rank, i));
                    }
                }
            }
            let Some((rank, start)) = best else { break };
            let (a, b) = self.merges[rank as usize];
            let new = (self.alphabet_len + rank as usize) as TokenId;
            let mut out = syms[..start].to_vec();
            let mut i = start;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == a && syms[i + 1] == b {
                    out.push(new);
                    i += 2;
                } else {
                    out.push(syms[i]);
                    i += 1;
                }
            }
            syms = out;
        }
        Ok(Segmentation::from(syms))
    }
}

/// Incremental BPE training state.
///
/// After every step the trainer holds the segmentation of the training corpus
/// under the merges learned so far, which equals what [`BpeModel::encode`]
/// produces for the corresponding truncated model. Piece frequencies and the
/// total token count are kept up to date so a sweep can read corpus
/// statistics at every vocabulary size without re-encoding.
pub struct BpeTrainer {
    alphabet: Vec<char>,
    pieces: Vec<String>,
    piece_chars: Vec<usize>,
    known: HashSet<String>,
    merges: Vec<Pair>,
    seqs: Vec<Vec<TokenId>>,
    pair_counts: HashMap<Pair, i64>,
    pair_where: HashMap<Pair, BTreeSet<u32>>,
    blocked: HashSet<Pair>,
    freq: Vec<u64>,
    theta: u64,
}

impl BpeTrainer {
    pub fn new(corpus: &Corpus) -> BpeTrainer {
        let alphabet = corpus.stats().alphabet;
        let char_ids: HashMap<char, TokenId> = alphabet
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as TokenId))
            .collect();
        let pieces: Vec<String> = alphabet.iter().map(|c| c.to_string()).collect();
        let mut freq = vec![0u64; alphabet.len()];
        let mut pair_counts: HashMap<Pair, i64> = HashMap::new();
        let mut pair_where: HashMap<Pair, BTreeSet<u32>> = HashMap::new();
        let mut seqs = Vec::with_capacity(corpus.len());
        for (si, s) in corpus.sentences().iter().enumerate() {
            let seq: Vec<TokenId> = s.chars().map(|c| char_ids[&c]).collect();
            for &t in &seq {
                freq[t as usize] += 1;
            }
            for w in seq.windows(2) {
                *pair_counts.entry((w[0], w[1])).or_default() += 1;
                pair_where.entry((w[0], w[1])).or_default().insert(si as u32);
            }
            seqs.push(seq);
        }
        let theta = freq.iter().sum();
        BpeTrainer {
            piece_chars: vec![1; pieces.len()],
            known: pieces.iter().cloned().collect(),
            alphabet,
            pieces,
            merges: Vec::new(),
            seqs,
            pair_counts,
            pair_where,
            blocked: HashSet::new(),
            freq,
            theta,
        }
    }

    /// Current vocabulary size.
    pub fn n(&self) -> usize {
        self.pieces.len()
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    /// Occurrences of each piece in the current segmentation of the corpus.
    pub fn freq(&self) -> &[u64] {
        &self.freq
    }

    /// Total tokens in the current segmentation of the corpus.
    pub fn theta(&self) -> u64 {
        self.theta
    }

    /// Tokens per sentence in the current segmentation.
    pub fn betas(&self) -> Vec<usize> {
        self.seqs.iter().map(Vec::len).collect()
    }

    pub fn segmentation(&self, sentence: usize) -> &[TokenId] {
        &self.seqs[sentence]
    }

    pub fn model(&self) -> BpeModel {
        BpeModel::from_parts(self.alphabet.clone(), self.merges.clone())
            .expect("trainer keeps pieces distinct")
    }

    /// Learns one merge. Returns `None` once no eligible pair occurs at least
    /// twice.
    pub fn step(&mut self) -> Option<MergeRule> {
        let (a, b) = self.select_pair()?;
        let new = self.pieces.len() as TokenId;
        let result = format!("{}{}", self.pieces[a as usize], self.pieces[b as usize]);
        self.known.insert(result.clone());
        self.piece_chars
            .push(self.piece_chars[a as usize] + self.piece_chars[b as usize]);
        self.pieces.push(result.clone());
        self.freq.push(0);
        self.merges.push((a, b));
        self.apply_merge(a, b, new);
        Some(MergeRule {
            left: self.pieces[a as usize].clone(),
            right: self.pieces[b as usize].clone(),
            result,
            rank: self.merges.len() - 1,
        })
    }

    fn select_pair(&mut self) -> Option<Pair> {
        loop {
            let mut best = 2i64;
            let mut tied: Vec<Pair> = Vec::new();
            for (&pair, &count) in &self.pair_counts {
                if count < best || self.blocked.contains(&pair) {
                    continue;
                }
                if count > best {
                    best = count;
                    tied.clear();
                }
                tied.push(pair);
            }
            let winner = match tied.len() {
                0 => return None,
                1 => tied[0],
                _ => *tied
                    .iter()
                    .min_by_key(|&&p| self.first_occurrence(p))
                    .expect("non-empty"),
            };
            // A pair whose concatenation is already a piece can never be
            // merged without duplicating that piece.
            let concat = format!(
                "{}{}",
                self.pieces[winner.0 as usize], self.pieces[winner.1 as usize]
            );
            if self.known.contains(&concat) {
                self.blocked.insert(winner);
                continue;
            }
            return Some(winner);
        }
    }

    fn first_occurrence(&self, (a, b): Pair) -> (u32, usize) {
        for &si in self.pair_where.get(&(a, b)).into_iter().flatten() {
            let seq = &self.seqs[si as usize];
            let mut offset = 0;
            for w in seq.windows(2) {
                if w[0] == a && w[1] == b {
                    return (si, offset);
                }
                offset += self.piece_chars[w[0] as usize];
            }
        }
        (u32::MAX, usize::MAX)
    }

    fn apply_merge(&mut self, a: TokenId, b: TokenId, new: TokenId) {
        let sentences = self.pair_where.remove(&(a, b)).unwrap_or_default();
        self.pair_counts.remove(&(a, b));
        let BpeTrainer {
            seqs,
            pair_counts,
            pair_where,
            ..
        } = self;
        let mut replaced = 0u64;
        for si in sentences {
            let seq = &mut seqs[si as usize];
            replaced += merge_sequence(seq, a, b, new, |pair, delta| {
                if pair == (a, b) {
                    return;
                }
                let count = pair_counts.entry(pair).or_default();
                *count += delta;
                if *count == 0 {
                    pair_counts.remove(&pair);
                } else if delta > 0 {
                    pair_where.entry(pair).or_default().insert(si);
                }
            });
        }
        self.freq[a as usize] -= replaced;
        self.freq[b as usize] -= replaced;
        self.freq[new as usize] += replaced;
        self.theta -= replaced;
    }
}

/// Replaces every non-overlapping `(a, b)` left to right, reporting each
/// change to the multiset of adjacent pairs. Returns the replacement count.
fn merge_sequence(
    seq: &mut Vec<TokenId>,
    a: TokenId,
    b: TokenId,
    new: TokenId,
    mut on_delta: impl FnMut(Pair, i64),
) -> u64 {
    let mut out = Vec::with_capacity(seq.len());
    let mut replaced = 0;
    let mut i = 0;
    while i < seq.len() {
        if i + 1 < seq.len() && seq[i] == a && seq[i + 1] == b {
            if let Some(&prev) = out.last() {
                on_delta((prev, a), -1);
                on_delta((prev, new), 1);
            }
            if let Some(&next) = seq.get(i + 2) {
                on_delta((b, next), -1);
                on_delta((new, next), 1);
            }
            out.push(new);
            replaced += 1;
            i += 2;
        } else {
            out.push(seq[i]);
            i += 1;
        }
    }
    *seq = out;
    replaced
}

/// Trains a model with exactly `n_max` pieces.
pub fn train_bpe(corpus: &Corpus, n_max: usize) -> Result<BpeModel> {
    let mut trainer = BpeTrainer::new(corpus);
    if n_max < trainer.n() {
        return Err(Error::InfeasibleVocabSize {
            n: n_max,
            n_min: trainer.n(),
        });
    }
    while trainer.n() < n_max {
        if trainer.step().is_none() {
            return Err(Error::ExhaustedPairs {
                n_reached: trainer.n(),
            });
        }
    }
    Ok(trainer.model())
}

/// Trains until no pair occurs twice and returns the largest model.
pub fn train_bpe_exhaustive(corpus: &Corpus) -> BpeModel {
    let mut trainer = BpeTrainer::new(corpus);
    while trainer.step().is_some() {}
    trainer.model()
}
