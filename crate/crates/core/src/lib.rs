//! Vocabulary-size selection for subword tokenizers.
//!
//! A tokenizer is trained on a corpus for a range of candidate vocabulary
//! sizes `n`. Each trained model encodes the corpus, and three terms are
//! measured: the vocabulary size itself, the imbalance between the most and
//! least frequent tokens, and the token overhead relative to the word count.
//! A weighted sum of the terms is minimized over the grid to pick `n*`.
//!
//! Two tokenizers are provided behind the [`Tokenizer`] trait: byte pair
//! encoding ([`bpe`]) and a unigram language model ([`unigram`]).

pub mod bpe;
pub mod cli;
pub mod corpus;
pub mod cost;
mod error;
pub mod report;
pub mod stats;
pub mod tokenize;
pub mod unigram;

pub use corpus::{Corpus, CorpusStats, Normalization};
pub use cost::{Alphas, CostCurve, Grid, SweepConfig};
pub use error::{Error, Result};
pub use stats::{EncodedCorpus, FreqSummary, TermBreakdown};
pub use tokenize::{Segmentation, TokenId, TokenModel, Tokenizer, TokenizerKind, TrainerConfig};
