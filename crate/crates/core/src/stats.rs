//! Encoded-corpus statistics and the three cost terms.

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, CorpusStats};
use crate::error::{Error, Result};
use crate::tokenize::{TokenId, Tokenizer};

/// Default number of tokens averaged for the most/least frequent means.
pub const DEFAULT_WINDOW: usize = 5;

/// Token counts from encoding every sentence of a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCorpus {
    /// Tokens per sentence.
    pub betas: Vec<usize>,
    /// Total tokens.
    pub theta_t: u64,
    /// Occurrences of each token id, zeros included.
    pub freq: Vec<u64>,
}

impl EncodedCorpus {
    pub fn from_parts(betas: Vec<usize>, freq: Vec<u64>) -> EncodedCorpus {
        let theta_t = freq.iter().sum();
        debug_assert_eq!(theta_t, betas.iter().map(|&b| b as u64).sum::<u64>());
        EncodedCorpus {
            betas,
            theta_t,
            freq,
        }
    }
}

/// Encodes each sentence independently and tallies token occurrences.
pub fn encode_corpus<T>(model: &T, corpus: &Corpus) -> Result<EncodedCorpus>
where
    T: Tokenizer + Sync + ?Sized,
{
    let n = model.n();
    let segs: Vec<Vec<TokenId>> = corpus
        .sentences()
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            model.encode(s).map(|seg| seg.token_ids).map_err(|e| match e {
                Error::UnencodableCharacter { ch, position, .. } => Error::UnencodableCharacter {
                    ch,
                    position,
                    sentence: Some(i),
                },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let mut freq = vec![0u64; n];
    let mut betas = Vec::with_capacity(segs.len());
    for seg in segs {
        betas.push(seg.len());
        for id in seg {
            freq[id as usize] += 1;
        }
    }
    Ok(EncodedCorpus::from_parts(betas, freq))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreqSummary {
    /// Mean count of the most frequent tokens.
    pub f_plus: f64,
    /// Mean count of the least frequent tokens that occur at least once.
    pub f_minus: f64,
    pub window: usize,
    /// Tokens that never occur; excluded from both means.
    pub zero_count_tokens: Vec<TokenId>,
}

/// Means of the `window` highest and lowest nonzero token counts. Counts are
/// sorted descending with ties by ascending token id; both windows shrink to
/// the number of used tokens when fewer exist.
pub fn freq_summary(freq: &[u64], window: usize) -> Result<FreqSummary> {
    if window == 0 {
        return Err(Error::InvalidWindow);
    }
    let mut used: Vec<(TokenId, u64)> = Vec::with_capacity(freq.len());
    let mut zero_count_tokens = Vec::new();
    for (id, &count) in freq.iter().enumerate() {
        if count == 0 {
            zero_count_tokens.push(id as TokenId);
        } else {
            used.push((id as TokenId, count));
        }
    }
    if used.is_empty() {
        return Err(Error::AllTokensUnused);
    }
    used.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let m = window.min(used.len());
    let mean = |xs: &[(TokenId, u64)]| xs.iter().map(|&(_, c)| c).sum::<u64>() as f64 / m as f64;
    Ok(FreqSummary {
        f_plus: mean(&used[..m]),
        f_minus: mean(&used[used.len() - m..]),
        window,
        zero_count_tokens,
    })
}

/// The cost terms at one vocabulary size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermBreakdown {
    pub n: usize,
    /// Vocabulary size.
    pub t1: f64,
    /// Frequency imbalance, `f+ / f- - 1`.
    pub t2: f64,
    /// Token overhead, `theta_t / w - 1`.
    pub t3: f64,
    pub theta_t: u64,
    pub f_plus: f64,
    pub f_minus: f64,
}

pub fn term_breakdown(
    n: usize,
    encoded: &EncodedCorpus,
    stats: &CorpusStats,
    window: usize,
) -> Result<TermBreakdown> {
    let summary = freq_summary(&encoded.freq, window)?;
    Ok(terms_from_summary(n, encoded.theta_t, &summary, stats.w))
}

pub(crate) fn terms_from_summary(
    n: usize,
    theta_t: u64,
    summary: &FreqSummary,
    words: usize,
) -> TermBreakdown {
    TermBreakdown {
        n,
        t1: n as f64,
        t2: summary.f_plus / summary.f_minus - 1.0,
        t3: theta_t as f64 / words as f64 - 1.0,
        theta_t,
        f_plus: summary.f_plus,
        f_minus: summary.f_minus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::{train, TokenizerKind, TrainerConfig};
    use proptest::prelude::*;

    fn mini() -> Corpus {
        Corpus::from_sentences(["ab ab", "ab"]).unwrap()
    }

    #[test]
    fn encode_mini_corpus() {
        let c = mini();
        let m = train(TokenizerKind::Bpe, &c, 4, &TrainerConfig::default()).unwrap();
        let e = encode_corpus(&m, &c).unwrap();
        assert_eq!(e.betas, vec![3, 1]);
        assert_eq!(e.theta_t, 4);
        // a, b, space, ab
        assert_eq!(e.freq, vec![0, 0, 1, 3]);
    }

    #[test]
    fn character_model_counts_characters() {
        let c = Corpus::from_sentences(["hello there", "hi"]).unwrap();
        let stats = c.stats();
        let m = train(TokenizerKind::Bpe, &c, stats.alphabet_size(), &TrainerConfig::default()).unwrap();
        let e = encode_corpus(&m, &c).unwrap();
        assert_eq!(e.theta_t, 13);
    }

    #[test]
    fn double_a_merge_halves_tokens() {
        let c = Corpus::from_sentences(["aaaa"]).unwrap();
        let m = train(TokenizerKind::Bpe, &c, 3, &TrainerConfig::default()).unwrap();
        assert_eq!(encode_corpus(&m, &c).unwrap().theta_t, 2);
    }

    #[test]
    fn unencodable_sentence_is_reported() {
        let m = train(TokenizerKind::Bpe, &mini(), 3, &TrainerConfig::default()).unwrap();
        let other = Corpus::from_sentences(["ab", "abc"]).unwrap();
        match encode_corpus(&m, &other) {
            Err(Error::UnencodableCharacter { ch: 'c', position: 2, sentence: Some(1) }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn summary_excludes_zero_counts() {
        let s = freq_summary(&[0, 0, 1, 3], 5).unwrap();
        assert_eq!(s.f_plus, 2.0);
        assert_eq!(s.f_minus, 2.0);
        assert_eq!(s.zero_count_tokens, vec![0, 1]);
    }

    #[test]
    fn summary_windows() {
        let s = freq_summary(&[10, 9, 8, 7, 6, 5, 4, 3, 2, 1], 5).unwrap();
        assert_eq!((s.f_plus, s.f_minus), (8.0, 3.0));
        let s = freq_summary(&[7, 7, 7], 5).unwrap();
        assert_eq!((s.f_plus, s.f_minus), (7.0, 7.0));
    }

    #[test]
    fn summary_errors() {
        assert!(matches!(freq_summary(&[0, 0], 5), Err(Error::AllTokensUnused)));
        assert!(matches!(freq_summary(&[1], 0), Err(Error::InvalidWindow)));
    }

    #[test]
    fn mini_corpus_terms() {
        let c = mini();
        let m = train(TokenizerKind::Bpe, &c, 4, &TrainerConfig::default()).unwrap();
        let e = encode_corpus(&m, &c).unwrap();
        let t = term_breakdown(4, &e, &c.stats(), DEFAULT_WINDOW).unwrap();
        assert_eq!(t.t1, 4.0);
        assert_eq!(t.t2, 0.0);
        assert!((t.t3 - 1.0 / 3.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn balanced_counts_have_zero_imbalance(count in 1u64..1000, tokens in 1usize..30, window in 1usize..8) {
            let s = freq_summary(&vec![count; tokens], window).unwrap();
            prop_assert_eq!(s.f_plus / s.f_minus - 1.0, 0.0);
        }

        #[test]
        fn plus_is_at_least_minus(freq in prop::collection::vec(0u64..50, 1..40), window in 1usize..8) {
            if let Ok(s) = freq_summary(&freq, window) {
                prop_assert!(s.f_plus >= s.f_minus && s.f_minus > 0.0);
            }
        }
    }
}
