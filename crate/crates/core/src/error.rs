use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", path.display())]
    FileNotFound { path: PathBuf },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: invalid UTF-8 at byte offset {offset}", path.display())]
    InvalidUtf8 { path: PathBuf, offset: usize },

    #[error("{}: no non-empty sentences", path.display())]
    EmptyCorpus { path: PathBuf },

    #[error("vocabulary size {n} is below the feasible minimum {n_min}")]
    InfeasibleVocabSize { n: usize, n_min: usize },

    /// BPE ran out of pairs occurring at least twice.
    #[error("no adjacent pair occurs at least twice; largest attainable vocabulary is {n_reached}")]
    ExhaustedPairs { n_reached: usize },

    /// Unigram seeding found fewer distinct substrings than requested pieces.
    #[error("corpus has only {available} candidate pieces")]
    CandidatesExhausted { available: usize },

    #[error("unigram training diverged: sentence {sentence} has zero probability")]
    TrainerDiverged { sentence: usize },

    #[error("cannot encode {ch:?} at position {position}{}", sentence.map(|s| format!(" of sentence {s}")).unwrap_or_default())]
    UnencodableCharacter {
        ch: char,
        position: usize,
        sentence: Option<usize>,
    },

    #[error("token id {id} out of range for a vocabulary of {n}")]
    InvalidTokenId { id: u32, n: usize },

    #[error("every token has zero frequency")]
    AllTokensUnused,

    #[error("no feasible grid point")]
    EmptyGrid,

    #[error("invalid alpha weights: {0}")]
    InvalidAlphas(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid trainer configuration: {0}")]
    InvalidConfig(String),

    #[error("frequency window must be at least 1")]
    InvalidWindow,

    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for IO and corpus problems, 2 for domain infeasibility.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FileNotFound { .. }
            | Error::Io { .. }
            | Error::InvalidUtf8 { .. }
            | Error::EmptyCorpus { .. }
            | Error::ModelFormat { .. } => 1,
            _ => 2,
        }
    }
}
