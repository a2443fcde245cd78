use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A generator or its inverse.
///
/// Encoded as `2 * generator + inverse_bit`, with generators ordered
/// `a1, b1, a2, b2, ...`. The numeric order of codes is the alphabet order
/// used for ShortLex: `a1 < a1^-1 < b1 < b1^-1 < a2 < ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Letter(u8);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter((2 * generator + inverse as usize) as u8)
    }

    pub fn from_code(code: usize) -> Self {
        Letter(code as u8)
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    /// Generator index in `0..2g` (order `a1, b1, a2, b2, ...`).
    #[inline]
    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn inverse(self) -> Self {
        Letter(self.0 ^ 1)
    }

    /// `+1` for a generator, `-1` for an inverse.
    #[inline]
    pub fn sign(self) -> i64 {
        if self.is_inverse() {
            -1
        } else {
            1
        }
    }
}

impl fmt::Display for Letter {
    /// `a1`, `b1`, ... for generators; upper case `A1`, `B1` for inverses.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.generator();
        let handle = g / 2 + 1;
        let name = match (g % 2, self.is_inverse()) {
            (0, false) => 'a',
            (0, true) => 'A',
            (_, false) => 'b',
            (_, true) => 'B',
        };
        write!(f, "{name}{handle}")
    }
}

/// A word over the surface-group letters.
///
/// Ordering is ShortLex: shorter words first, then lexicographic by letter
/// code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn push(&mut self, letter: Letter) {
        self.0.push(letter);
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    /// Cancels adjacent inverse pairs.
    pub fn free_reduce(&self) -> Self {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Signed letter counts per generator (`a1, b1, ..., ag, bg`).
    pub fn abelianize(&self, rank: usize) -> Vec<i64> {
        let mut v = vec![0i64; rank];
        for l in &self.0 {
            v[l.generator()] += l.sign();
        }
        v
    }

    /// Parses the [`fmt::Display`] form. `e` (or the empty string) is the
    /// identity; letters may be separated by whitespace.
    pub fn parse(s: &str, genus: usize) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Word::empty());
        }
        let bytes: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut letters = Vec::new();
        let mut pos = 0;
        while pos < bytes.len() {
            let (kind, inverse) = match bytes[pos] {
                'a' => (0, false),
                'A' => (0, true),
                'b' => (1, false),
                'B' => (1, true),
                _ => return Err(Error::WordParse(s.to_string())),
            };
            pos += 1;
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let handle: usize = bytes[start..pos]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| Error::WordParse(s.to_string()))?;
            if handle == 0 || handle > genus {
                return Err(Error::InvalidLetter {
                    letter: format!("{}{}", bytes[start - 1], handle),
                    generators: 2 * genus,
                });
            }
            letters.push(Letter::new(2 * (handle - 1) + kind, inverse));
        }
        Ok(Word(letters))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}
