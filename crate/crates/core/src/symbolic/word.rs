use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// A finite word over the alphabet `{1, ..., m}`; the empty word is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Build a word, rejecting symbols outside `1..=255`.
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if symbols.iter().any(|&s| s == 0) {
            return Err(invalid("word symbols start at 1"));
        }
        Ok(Word(symbols))
    }

    pub fn repeat(symbol: u8, n: usize) -> Result<Self> {
        Word::new(vec![symbol; n])
    }

    /// `pattern` repeated cyclically up to length `n`.
    pub fn periodic(pattern: &[u8], n: usize) -> Result<Self> {
        if pattern.is_empty() && n > 0 {
            return Err(invalid("periodic word needs a non-empty pattern"));
        }
        Word::new((0..n).map(|k| pattern[k % pattern.len()]).collect())
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_symbol(&self) -> u8 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn truncate(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn child(&self, symbol: u8) -> Word {
        let mut v = self.0.clone();
        v.push(symbol);
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }
}

/// Result of [`common_prefix`]: the shared initial segment plus whether the
/// two inputs were identical (the diagonal `x = y`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonPrefix {
    pub prefix: Word,
    pub diagonal: bool,
}

/// Longest common initial segment `x ∧ y`.
pub fn common_prefix(x: &Word, y: &Word) -> CommonPrefix {
    let n = x
        .0
        .iter()
        .zip(&y.0)
        .take_while(|(a, b)| a == b)
        .count();
    CommonPrefix {
        prefix: Word(x.0[..n].to_vec()),
        diagonal: x == y,
    }
}

/// Length of the common prefix without allocating.
pub fn common_prefix_len(x: &[u8], y: &[u8]) -> usize {
    x.iter().zip(y).take_while(|(a, b)| a == b).count()
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            if s <= 9 {
                write!(f, "{s}")?;
            } else {
                // Symbols above 9 have no single-digit form.
                write!(f, "({s})")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| match c.to_digit(10) {
                Some(d) if d >= 1 => Ok(d as u8),
                _ => Err(invalid(format!("bad symbol {c:?} in word {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(Word(symbols))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.max_symbol() > 9 {
            return Err(serde::ser::Error::custom(
                "words with symbols above 9 have no digit-string form",
            ));
        }
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn common_prefix_examples() {
        assert_eq!(common_prefix(&w("1221"), &w("1212")).prefix, w("12"));
        assert!(!common_prefix(&w("1221"), &w("1212")).diagonal);
        assert_eq!(common_prefix(&Word::empty(), &w("121")).prefix, Word::empty());
        let d = common_prefix(&w("2112"), &w("2112"));
        assert_eq!(d.prefix, w("2112"));
        assert!(d.diagonal);
    }

    #[test]
    fn digit_string_round_trip() {
        let x = w("31213");
        assert_eq!(x.to_string(), "31213");
        assert_eq!(serde_json::to_string(&x).unwrap(), "\"31213\"");
        let back: Word = serde_json::from_str("\"31213\"").unwrap();
        assert_eq!(back, x);
        assert_eq!(w(""), Word::empty());
    }

    #[test]
    fn rejects_zero_symbol() {
        assert!("102".parse::<Word>().is_err());
        assert!(Word::new(vec![1, 0]).is_err());
    }

    #[test]
    fn periodic_words() {
        assert_eq!(Word::periodic(&[1, 2], 5).unwrap(), w("12121"));
        assert_eq!(Word::repeat(2, 3).unwrap(), w("222"));
    }
}
