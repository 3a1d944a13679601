//! Single-record FASTA input over the alphabet `ACGTN`.

use std::path::Path;

use crate::error::{invalid, Result};

/// A nucleotide; `N` marks an unknown base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Base {
    A,
    C,
    G,
    T,
    N,
}

impl Base {
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c.to_ascii_uppercase() {
            'A' => Self::A,
            'C' => Self::C,
            'G' => Self::G,
            'T' => Self::T,
            'N' => Self::N,
            _ => return None,
        })
    }

    /// Code used by the palindrome scanner: `A, C, G, T, N = 0..=4`.
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Parses one FASTA record into base codes.
pub fn read_fasta_str(text: &str) -> Result<Vec<u8>> {
    let mut headers = 0;
    let mut seq = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        if line.starts_with('>') {
            headers += 1;
            if headers > 1 {
                return invalid(format!("line {}: only single-record FASTA is supported", lineno + 1));
            }
            continue;
        }
        for c in line.chars() {
            match Base::from_char(c) {
                Some(b) => seq.push(b.code()),
                None => return invalid(format!("line {}: invalid base {c:?}", lineno + 1)),
            }
        }
    }
    if seq.is_empty() {
        return invalid("FASTA input holds no sequence");
    }
    Ok(seq)
}

pub fn read_fasta(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    read_fasta_str(&std::fs::read_to_string(path)?)
}
