//! Segmentation lattice over one sentence.

use std::cmp::Ordering;

use super::UnigramModel;
use crate::error::{Error, Result};
use crate::tokenize::TokenId;

/// Every piece occurrence in a sentence, grouped by start position (in chars).
#[derive(Debug, Clone)]
pub struct Lattice {
    len: usize,
    /// Edges of position `i` are `edges[offsets[i]..offsets[i + 1]]`.
    offsets: Vec<usize>,
    edges: Vec<(TokenId, usize)>,
}

impl Lattice {
    pub fn new(model: &UnigramModel, sentence: &str) -> Result<Lattice> {
        let chars: Vec<char> = sentence.chars().collect();
        let len = chars.len();
        let mut offsets = Vec::with_capacity(len + 1);
        let mut edges = Vec::with_capacity(len * 2);
        for start in 0..len {
            offsets.push(edges.len());
            model
                .trie()
                .prefixes(&chars[start..], |id, l| edges.push((id, start + l)));
            if edges.get(offsets[start]).is_none_or(|&(_, end)| end != start + 1) {
                return Err(Error::UnencodableCharacter {
                    ch: chars[start],
                    position: start,
                    sentence: None,
                });
            }
        }
        offsets.push(edges.len());
        Ok(Lattice {
            len,
            offsets,
            edges,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Edges `(piece, end)` starting at `pos`.
    pub fn edges_from(&self, pos: usize) -> &[(TokenId, usize)] {
        &self.edges[self.offsets[pos]..self.offsets[pos + 1]]
    }

    fn forward(&self, logprobs: &[f64]) -> Vec<f64> {
        let mut alpha = vec![f64::NEG_INFINITY; self.len + 1];
        alpha[0] = 0.0;
        for start in 0..self.len {
            let a = alpha[start];
            if a == f64::NEG_INFINITY {
                continue;
            }
            for &(id, end) in self.edges_from(start) {
                alpha[end] = log_add(alpha[end], a + logprobs[id as usize]);
            }
        }
        alpha
    }

    fn backward(&self, logprobs: &[f64]) -> Vec<f64> {
        let mut beta = vec![f64::NEG_INFINITY; self.len + 1];
        beta[self.len] = 0.0;
        for start in (0..self.len).rev() {
            let mut acc = f64::NEG_INFINITY;
            for &(id, end) in self.edges_from(start) {
                acc = log_add(acc, logprobs[id as usize] + beta[end]);
            }
            beta[start] = acc;
        }
        beta
    }

    /// Log of the total probability of all segmentations.
    pub fn log_partition(&self, logprobs: &[f64]) -> f64 {
        self.forward(logprobs)[self.len]
    }

    /// Adds each piece's posterior expected count to `expected` and returns
    /// the log partition function. Nothing is added when it is `-inf`.
    pub fn accumulate_marginals(&self, logprobs: &[f64], expected: &mut [f64]) -> f64 {
        let alpha = self.forward(logprobs);
        let z = alpha[self.len];
        if z == f64::NEG_INFINITY {
            return z;
        }
        let beta = self.backward(logprobs);
        for (start, &a) in alpha.iter().enumerate().take(self.len) {
            for &(id, end) in self.edges_from(start) {
                let lp = a + logprobs[id as usize] + beta[end] - z;
                if lp > f64::NEG_INFINITY {
                    expected[id as usize] += lp.exp();
                }
            }
        }
        z
    }

    /// Highest-scoring path, ties broken by fewer pieces and then by the
    /// lexicographically smallest id sequence. `exclude` removes one piece
    /// from consideration.
    pub fn viterbi(&self, logprobs: &[f64], exclude: Option<TokenId>) -> Option<Vec<TokenId>> {
        // best[i]: (score, pieces, first id, end of first piece) of the best suffix from i.
        let mut best: Vec<Option<(f64, usize, TokenId, usize)>> = vec![None; self.len + 1];
        best[self.len] = Some((0.0, 0, TokenId::MAX, self.len));
        for start in (0..self.len).rev() {
            let mut cur: Option<(f64, usize, TokenId, usize)> = None;
            for &(id, end) in self.edges_from(start) {
                if Some(id) == exclude {
                    continue;
                }
                let Some((score, count, _, _)) = best[end] else {
                    continue;
                };
                let cand = (logprobs[id as usize] + score, count + 1, id, end);
                let better = match cur {
                    None => true,
                    Some(c) => compare_scores(cand.0, c.0)
                        .then(c.1.cmp(&cand.1))
                        .then(c.2.cmp(&cand.2))
                        == Ordering::Greater,
                };
                if better {
                    cur = Some(cand);
                }
            }
            best[start] = cur;
        }
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < self.len {
            let (_, _, id, end) = best[pos]?;
            out.push(id);
            pos = end;
        }
        Some(out)
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Orders path scores, treating values within floating-point noise as equal.
pub(crate) fn compare_scores(a: f64, b: f64) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    if !a.is_finite() || !b.is_finite() {
        return a.total_cmp(&b);
    }
    let tol = 1e-12 * a.abs().max(b.abs()).max(1.0);
    if (a - b).abs() <= tol {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_matches_direct() {
        let got = log_add(0.3f64.ln(), 0.2f64.ln());
        assert!((got - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, -1.0), -1.0);
        assert_eq!(log_add(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
        // No overflow far from zero.
        assert!((log_add(-1000.0, -1000.0) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn edges_cover_all_pieces() {
        let m = UnigramModel::new(vec![
            ("a".into(), 0.5f64.ln()),
            ("aa".into(), 0.25f64.ln()),
            ("b".into(), 0.25f64.ln()),
        ])
        .unwrap();
        let l = Lattice::new(&m, "aab").unwrap();
        assert_eq!(l.len(), 3);
        assert_eq!(l.edges_from(0), [(0, 1), (1, 2)]);
        assert_eq!(l.edges_from(1), [(0, 2)]);
        assert_eq!(l.edges_from(2), [(2, 3)]);
        let z = l.log_partition(m.logprobs());
        // a a b + aa b
        let direct = (0.5f64 * 0.5 * 0.25 + 0.25 * 0.25).ln();
        assert!((z - direct).abs() < 1e-14);
    }

    #[test]
    fn excluded_piece_forces_alternative() {
        let m = UnigramModel::new(vec![
            ("a".into(), 0.25f64.ln()),
            ("aa".into(), 0.75f64.ln()),
        ])
        .unwrap();
        let l = Lattice::new(&m, "aa").unwrap();
        assert_eq!(l.viterbi(m.logprobs(), None).unwrap(), vec![1]);
        assert_eq!(l.viterbi(m.logprobs(), Some(1)).unwrap(), vec![0, 0]);
    }
}
