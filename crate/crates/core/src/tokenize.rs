//! The tokenizer contract: train a vocabulary of `n` pieces on a corpus,
//! encode a sentence into piece ids, and decode ids back by concatenation.
//!
//! No special tokens occupy vocabulary slots. The space character is an
//! ordinary symbol, so pieces may span word boundaries, but never sentence
//! boundaries.

mod model_file;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::bpe::{self, BpeModel};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::unigram::{self, UnigramConfig, UnigramModel};

/// Dense index into a model's piece list.
pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    Bpe,
    Unigram,
}

impl fmt::Display for TokenizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TokenizerKind::Bpe => "bpe",
            TokenizerKind::Unigram => "unigram",
        })
    }
}

impl FromStr for TokenizerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bpe" => Ok(TokenizerKind::Bpe),
            "unigram" => Ok(TokenizerKind::Unigram),
            other => Err(format!("unknown tokenizer '{other}' (expected bpe|unigram)")),
        }
    }
}

/// Parameters a model was trained with.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrainerConfig {
    /// Recorded for provenance. Both trainers are deterministic.
    pub seed: u64,
    pub unigram: UnigramConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Segmentation {
    pub token_ids: Vec<TokenId>,
}

impl Segmentation {
    pub fn beta(&self) -> usize {
        self.token_ids.len()
    }
}

impl From<Vec<TokenId>> for Segmentation {
    fn from(token_ids: Vec<TokenId>) -> Self {
        Segmentation { token_ids }
    }
}

/// A trained subword vocabulary seen as a black box.
pub trait Tokenizer {
    fn pieces(&self) -> &[String];

    fn encode(&self, sentence: &str) -> Result<Segmentation>;

    fn n(&self) -> usize {
        self.pieces().len()
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String> {
        let pieces = self.pieces();
        let mut out = String::new();
        for &id in ids {
            let piece = pieces.get(id as usize).ok_or(Error::InvalidTokenId {
                id,
                n: pieces.len(),
            })?;
            out.push_str(piece);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Inner {
    Bpe(BpeModel),
    Unigram(UnigramModel),
}

/// A trained model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenModel {
    inner: Inner,
    config: Option<TrainerConfig>,
}

impl TokenModel {
    pub fn kind(&self) -> TokenizerKind {
        match self.inner {
            Inner::Bpe(_) => TokenizerKind::Bpe,
            Inner::Unigram(_) => TokenizerKind::Unigram,
        }
    }

    /// Training parameters, absent for models read back from a file.
    pub fn config(&self) -> Option<&TrainerConfig> {
        self.config.as_ref()
    }

    pub fn as_bpe(&self) -> Option<&BpeModel> {
        match &self.inner {
            Inner::Bpe(m) => Some(m),
            Inner::Unigram(_) => None,
        }
    }

    pub fn as_unigram(&self) -> Option<&UnigramModel> {
        match &self.inner {
            Inner::Unigram(m) => Some(m),
            Inner::Bpe(_) => None,
        }
    }

    pub fn from_bpe(model: BpeModel, config: Option<TrainerConfig>) -> Self {
        TokenModel {
            inner: Inner::Bpe(model),
            config,
        }
    }

    pub fn from_unigram(model: UnigramModel, config: Option<TrainerConfig>) -> Self {
        TokenModel {
            inner: Inner::Unigram(model),
            config,
        }
    }
}

impl Tokenizer for TokenModel {
    fn pieces(&self) -> &[String] {
        match &self.inner {
            Inner::Bpe(m) => m.pieces(),
            Inner::Unigram(m) => m.pieces(),
        }
    }

    fn encode(&self, sentence: &str) -> Result<Segmentation> {
        match &self.inner {
            Inner::Bpe(m) => m.encode(sentence),
            Inner::Unigram(m) => m.encode(sentence),
        }
    }
}

/// Trains a model of `kind` with exactly `n` pieces.
pub fn train(
    kind: TokenizerKind,
    corpus: &Corpus,
    n: usize,
    config: &TrainerConfig,
) -> Result<TokenModel> {
    let inner = match kind {
        TokenizerKind::Bpe => Inner::Bpe(bpe::train_bpe(corpus, n)?),
        TokenizerKind::Unigram => Inner::Unigram(unigram::train_unigram(corpus, n, &config.unigram)?),
    };
    Ok(TokenModel {
        inner,
        config: Some(config.clone()),
    })
}
