//! Corpus loading and corpus-level constants.
//!
//! A corpus is one sentence per line with words separated by single spaces.
//! Loading trims each line, collapses internal whitespace runs to one space
//! and drops lines that end up empty. Case and punctuation are left alone.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    None,
    Nfkc,
}

impl FromStr for Normalization {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Normalization::None),
            "nfkc" => Ok(Normalization::Nfkc),
            other => Err(format!("unknown normalization '{other}' (expected none|nfkc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    sentences: Vec<String>,
    source_path: PathBuf,
}

impl Corpus {
    /// Reads and normalizes a corpus file.
    pub fn load(path: impl AsRef<Path>, normalization: Normalization) -> Result<Corpus> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound {
                path: path.to_path_buf(),
            },
            _ => Error::io(path, e),
        })?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidUtf8 {
            path: path.to_path_buf(),
            offset: e.valid_up_to(),
        })?;
        Corpus::parse(text, normalization, path)
    }

    pub fn parse(
        text: &str,
        normalization: Normalization,
        source_path: impl Into<PathBuf>,
    ) -> Result<Corpus> {
        let normalized;
        let text = match normalization {
            Normalization::None => text,
            Normalization::Nfkc => {
                normalized = text.nfkc().collect::<String>();
                normalized.as_str()
            }
        };
        let sentences: Vec<String> = text.split('\n').filter_map(normalize_line).collect();
        let source_path = source_path.into();
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus { path: source_path });
        }
        Ok(Corpus {
            sentences,
            source_path,
        })
    }

    /// Builds an in-memory corpus, applying the same line normalization as
    /// [`Corpus::load`] to every item.
    pub fn from_sentences<I, S>(sentences: I) -> Result<Corpus>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let sentences: Vec<String> = sentences
            .into_iter()
            .flat_map(|s| {
                s.as_ref()
                    .split('\n')
                    .filter_map(normalize_line)
                    .collect::<Vec<_>>()
            })
            .collect();
        let source_path = PathBuf::from("<memory>");
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus { path: source_path });
        }
        Ok(Corpus {
            sentences,
            source_path,
        })
    }

    pub fn sentences(&self) -> &[String] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn source_path(&self) -> &Path {
        &self.source_path
    }

    /// The normalized sentences, one per line, LF terminated.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.sentences.iter().map(|s| s.len() + 1).sum());
        for s in &self.sentences {
            out.push_str(s);
            out.push('\n');
        }
        out
    }

    /// SHA-256 of [`Corpus::to_text`], hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for s in &self.sentences {
            hasher.update(s.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    pub fn stats(&self) -> CorpusStats {
        let mut w = 0usize;
        let mut unique = HashSet::new();
        let mut seen = HashSet::new();
        let mut alphabet = Vec::new();
        for s in &self.sentences {
            for word in s.split(' ') {
                w += 1;
                unique.insert(word);
            }
            for ch in s.chars() {
                if seen.insert(ch) {
                    alphabet.push(ch);
                }
            }
        }
        if seen.insert(' ') {
            alphabet.push(' ');
        }
        CorpusStats {
            k: self.sentences.len(),
            w,
            w_u: unique.len(),
            alphabet,
        }
    }
}

fn normalize_line(line: &str) -> Option<String> {
    let mut out = String::with_capacity(line.len());
    for word in line.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    (!out.is_empty()).then_some(out)
}

/// Sentence, word and character accounting for a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    /// Sentence count.
    pub k: usize,
    /// Space-delimited word occurrences.
    pub w: usize,
    /// Distinct words.
    pub w_u: usize,
    /// Distinct characters in first-appearance order. The space character is
    /// always present, appended last when the corpus has none.
    pub alphabet: Vec<char>,
}

impl CorpusStats {
    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }
}
