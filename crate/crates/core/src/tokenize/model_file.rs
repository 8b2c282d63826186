//! Versioned text serialization of a [`TokenModel`].
//!
//! ```text
//! vocoptim-model v1 kind=bpe n=4
//! 0    a    -
//! 1    b    -
//! 2    \s   -
//! 3    ab   0    1
//! ```
//!
//! One piece per line with tab-separated fields: `index`, escaped piece, and
//! an aux field. For BPE the aux field is `-` on alphabet pieces and the
//! merge rank on merged pieces, which carry a fourth field with the character
//! length of the left half.
//! For unigram models aux is the natural-log probability with 17 significant
//! digits. Escapes: `\\`, `\t`, `\n`, `\r`, and `\s` for space.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Inner, TokenId, TokenModel, Tokenizer, TokenizerKind};
use crate::bpe::BpeModel;
use crate::error::{Error, Result};
use crate::unigram::UnigramModel;

const MAGIC: &str = "vocoptim-model v1";

pub fn escape_piece(piece: &str) -> String {
    let mut out = String::with_capacity(piece.len());
    for c in piece.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            ' ' => out.push_str("\\s"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_piece(field: &str) -> Option<String> {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            's' => ' ',
            _ => return None,
        });
    }
    Some(out)
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::ModelFormat {
        line,
        message: message.into(),
    }
}

impl TokenModel {
    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} kind={} n={}\n", self.kind(), self.n());
        match &self.inner {
            Inner::Bpe(m) => {
                let alphabet = m.alphabet_len();
                for (i, piece) in m.pieces().iter().enumerate() {
                    let _ = write!(out, "{i}\t{}\t", escape_piece(piece));
                    if i < alphabet {
                        out.push_str("-\n");
                    } else {
                        let rank = i - alphabet;
                        let (left, _) = m.merge_ids()[rank];
                        let split = m.pieces()[left as usize].chars().count();
                        let _ = writeln!(out, "{rank}\t{split}");
                    }
                }
            }
            Inner::Unigram(m) => {
                for (i, (piece, lp)) in m.pieces().iter().zip(m.logprobs()).enumerate() {
                    let _ = writeln!(out, "{i}\t{}\t{lp:.16e}", escape_piece(piece));
                }
            }
        }
        out
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(self.to_text().as_bytes())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TokenModel> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound {
                path: path.to_path_buf(),
            },
            _ => Error::io(path, e),
        })?;
        TokenModel::read_from(file).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn read_from(r: impl Read) -> Result<TokenModel> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| format_err(1, "empty model file"))?
            .map_err(|e| Error::io("<model>", e))?;
        let (kind, n) = parse_header(&header)?;

        let mut rows = Vec::with_capacity(n);
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::io("<model>", e))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 3 {
                return Err(format_err(lineno, "expected index, piece and aux fields"));
            }
            let index: usize = fields[0]
                .parse()
                .map_err(|_| format_err(lineno, "bad index"))?;
            if index != rows.len() {
                return Err(format_err(lineno, format!("expected index {}", rows.len())));
            }
            let piece = unescape_piece(fields[1])
                .filter(|p| !p.is_empty())
                .ok_or_else(|| format_err(lineno, "bad piece escape"))?;
            rows.push((lineno, piece, fields[2..].iter().map(|s| s.to_string()).collect::<Vec<_>>()));
        }
        if rows.len() != n {
            return Err(format_err(
                rows.len() + 1,
                format!("header says n={n} but found {} pieces", rows.len()),
            ));
        }

        let inner = match kind {
            TokenizerKind::Bpe => Inner::Bpe(read_bpe(rows)?),
            TokenizerKind::Unigram => Inner::Unigram(read_unigram(rows)?),
        };
        Ok(TokenModel {
            inner,
            config: None,
        })
    }
}

fn parse_header(header: &str) -> Result<(TokenizerKind, usize)> {
    let rest = header
        .strip_prefix(MAGIC)
        .ok_or_else(|| format_err(1, format!("expected '{MAGIC}' header")))?;
    let mut kind = None;
    let mut n = None;
    for field in rest.split_whitespace() {
        if let Some(k) = field.strip_prefix("kind=") {
            kind = Some(k.parse::<TokenizerKind>().map_err(|e| format_err(1, e))?);
        } else if let Some(v) = field.strip_prefix("n=") {
            n = Some(v.parse::<usize>().map_err(|_| format_err(1, "bad n"))?);
        }
    }
    match (kind, n) {
        (Some(k), Some(n)) => Ok((k, n)),
        _ => Err(format_err(1, "header needs kind= and n=")),
    }
}

type Row = (usize, String, Vec<String>);

fn read_bpe(rows: Vec<Row>) -> Result<BpeModel> {
    let mut alphabet = Vec::new();
    let mut merges = Vec::new();
    let mut ids: HashMap<String, TokenId> = HashMap::new();
    for (index, (lineno, piece, aux)) in rows.into_iter().enumerate() {
        if aux[0] == "-" {
            let mut chars = piece.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(format_err(lineno, "alphabet piece must be one character"));
            };
            if !merges.is_empty() {
                return Err(format_err(lineno, "alphabet pieces must precede merges"));
            }
            alphabet.push(c);
        } else {
            let rank: usize = aux[0]
                .parse()
                .map_err(|_| format_err(lineno, "bad merge rank"))?;
            if rank != merges.len() {
                return Err(format_err(lineno, format!("expected merge rank {}", merges.len())));
            }
            let split: usize = aux
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| format_err(lineno, "merge needs a split length"))?;
            let cut = piece
                .char_indices()
                .nth(split)
                .map(|(b, _)| b)
                .filter(|&b| b > 0)
                .ok_or_else(|| format_err(lineno, "split length out of range"))?;
            let (left, right) = piece.split_at(cut);
            let (Some(&l), Some(&r)) = (ids.get(left), ids.get(right)) else {
                return Err(format_err(lineno, "merge halves are not earlier pieces"));
            };
            merges.push((l, r));
        }
        ids.insert(piece, index as TokenId);
    }
    BpeModel::from_parts(alphabet, merges)
}

fn read_unigram(rows: Vec<Row>) -> Result<UnigramModel> {
    let mut pieces = Vec::with_capacity(rows.len());
    for (lineno, piece, aux) in rows {
        let lp: f64 = aux[0]
            .parse()
            .map_err(|_| format_err(lineno, "bad log probability"))?;
        pieces.push((piece, lp));
    }
    UnigramModel::new(pieces)
}
