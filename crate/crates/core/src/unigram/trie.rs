//! Character trie for finding every piece that starts at a position.

use crate::tokenize::TokenId;

#[derive(Debug, Clone, Default, PartialEq)]
struct Node {
    /// Sorted by character.
    children: Vec<(char, u32)>,
    piece: Option<TokenId>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Trie {
    nodes: Vec<Node>,
}

impl Trie {
    pub fn new<'a>(pieces: impl IntoIterator<Item = &'a str>) -> Trie {
        let mut trie = Trie {
            nodes: vec![Node::default()],
        };
        for (id, piece) in pieces.into_iter().enumerate() {
            let mut node = 0usize;
            for c in piece.chars() {
                node = match trie.nodes[node].children.binary_search_by_key(&c, |&(k, _)| k) {
                    Ok(i) => trie.nodes[node].children[i].1 as usize,
                    Err(i) => {
                        let next = trie.nodes.len();
                        trie.nodes.push(Node::default());
                        trie.nodes[node].children.insert(i, (c, next as u32));
                        next
                    }
                };
            }
            trie.nodes[node].piece = Some(id as TokenId);
        }
        trie
    }

    /// Calls `f(piece, length)` for each piece that is a prefix of `chars`,
    /// shortest first.
    pub fn prefixes(&self, chars: &[char], mut f: impl FnMut(TokenId, usize)) {
        let mut node = 0usize;
        for (i, c) in chars.iter().enumerate() {
            let children = &self.nodes[node].children;
            match children.binary_search_by_key(c, |&(k, _)| k) {
                Ok(j) => node = children[j].1 as usize,
                Err(_) => return,
            }
            if let Some(id) = self.nodes[node].piece {
                f(id, i + 1);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_all_prefixes() {
        let t = Trie::new(["a", "ab", "abc", "b", "bd"]);
        let chars: Vec<char> = "abcd".chars().collect();
        let mut got = Vec::new();
        t.prefixes(&chars, |id, len| got.push((id, len)));
        assert_eq!(got, [(0, 1), (1, 2), (2, 3)]);
        got.clear();
        t.prefixes(&chars[1..], |id, len| got.push((id, len)));
        assert_eq!(got, [(3, 1)]);
        got.clear();
        t.prefixes(&chars[3..], |id, len| got.push((id, len)));
        assert!(got.is_empty());
    }
}
