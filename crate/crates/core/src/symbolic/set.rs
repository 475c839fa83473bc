use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ifs::{singular_values_of, AffineIfs};
use super::word::Word;
use crate::error::{invalid, Error, Result};

/// Default cap on the number of words a refinement may produce.
pub const DEFAULT_LEAF_CAP: usize = 200_000;

/// A subset of Σ given as the union of cylinders `[I]` over a finite
/// antichain of words. The full shift is `{∅}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Word>", into = "Vec<Word>")]
pub struct SymbolicSet {
    words: Vec<Word>,
}

impl SymbolicSet {
    pub fn full_shift() -> Self {
        SymbolicSet {
            words: vec![Word::empty()],
        }
    }

    /// Build from words, which must be non-empty and pairwise non-prefix.
    /// The words are stored in lexicographic order.
    pub fn new(mut words: Vec<Word>) -> Result<Self> {
        if words.is_empty() {
            return Err(invalid("a symbolic set needs at least one word"));
        }
        words.sort();
        // In lexicographic order a prefix sorts immediately before some word
        // it prefixes, so adjacent pairs suffice.
        for pair in words.windows(2) {
            if pair[0].is_prefix_of(&pair[1]) {
                return Err(invalid(format!(
                    "words {} and {} are not an antichain",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(SymbolicSet { words })
    }

    pub fn singleton(word: Word) -> Self {
        SymbolicSet { words: vec![word] }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn check_alphabet(&self, ifs: &AffineIfs) -> Result<()> {
        self.words.iter().try_for_each(|w| ifs.check_word(w))
    }

    /// Whether the cylinder of `word` lies inside this set.
    pub fn contains_cylinder(&self, word: &Word) -> bool {
        self.words.iter().any(|w| w.is_prefix_of(word))
    }
}

impl TryFrom<Vec<Word>> for SymbolicSet {
    type Error = Error;

    fn try_from(words: Vec<Word>) -> Result<Self> {
        SymbolicSet::new(words)
    }
}

impl From<SymbolicSet> for Vec<Word> {
    fn from(set: SymbolicSet) -> Self {
        set.words
    }
}

/// When to stop extending a word during refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Extend every word to exactly this length (longer words are kept).
    Depth(usize),
    /// Extend until `α_1(T_I) ≤ c`.
    Threshold(f64),
}

impl StopRule {
    fn satisfied(&self, word_len: usize, product: &DMatrix<f64>) -> bool {
        match *self {
            StopRule::Depth(n) => word_len >= n,
            StopRule::Threshold(c) => singular_values_of(product)[0] <= c,
        }
    }
}

/// Replace every word of `set` by its minimal extensions satisfying `stop`.
/// The union of cylinders is unchanged.
pub fn refine_to_depth(
    set: &SymbolicSet,
    ifs: &AffineIfs,
    stop: StopRule,
    leaf_cap: usize,
) -> Result<SymbolicSet> {
    if let StopRule::Threshold(c) = stop {
        if !(c > 0.0) {
            return Err(invalid(format!("refinement threshold must be positive, got {c}")));
        }
    }
    set.check_alphabet(ifs)?;
    let mut leaves = Vec::new();
    for root in set.words() {
        let mut stack = vec![(root.clone(), ifs.product(root))];
        while let Some((word, product)) = stack.pop() {
            if stop.satisfied(word.len(), &product) {
                leaves.push(word);
                if leaves.len() > leaf_cap {
                    return Err(Error::ResourceCap {
                        what: "refinement leaves",
                        count: leaves.len(),
                        limit: leaf_cap,
                    });
                }
                continue;
            }
            // Reverse push keeps the output in lexicographic order.
            for j in (1..=ifs.maps() as u8).rev() {
                let next = &product * ifs.matrix(j);
                stack.push((word.child(j), next));
            }
        }
    }
    Ok(SymbolicSet { words: leaves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::ifs::{homogeneous_ifs, singular_values, validate_ifs};

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn antichain_validation() {
        assert!(SymbolicSet::new(vec![w("12"), w("121")]).is_err());
        assert!(SymbolicSet::new(vec![w("12"), w("12")]).is_err());
        assert!(SymbolicSet::new(vec![]).is_err());
        let s = SymbolicSet::new(vec![w("2"), w("11"), w("12")]).unwrap();
        assert_eq!(s.words(), &[w("11"), w("12"), w("2")]);
        assert!(SymbolicSet::new(vec![w("1"), w("21"), w("2")]).is_err());
    }

    #[test]
    fn json_form() {
        let s: SymbolicSet = serde_json::from_str(r#"["12","2"]"#).unwrap();
        assert_eq!(serde_json::to_string(&s).unwrap(), r#"["12","2"]"#);
        assert!(serde_json::from_str::<SymbolicSet>(r#"["1","12"]"#).is_err());
    }

    #[test]
    fn threshold_on_full_shift() {
        let ifs3 = homogeneous_ifs(1, 3, 1.0 / 3.0).unwrap();
        let r = refine_to_depth(
            &SymbolicSet::full_shift(),
            &ifs3,
            StopRule::Threshold(1.0 / 9.0 + 1e-15),
            DEFAULT_LEAF_CAP,
        )
        .unwrap();
        assert_eq!(r.len(), 9);
        assert!(r.words().iter().all(|w| w.len() == 2));
        let ifs2 = homogeneous_ifs(1, 2, 1.0 / 3.0).unwrap();
        let r = refine_to_depth(
            &SymbolicSet::full_shift(),
            &ifs2,
            StopRule::Threshold(1.0 / 9.0 + 1e-15),
            DEFAULT_LEAF_CAP,
        )
        .unwrap();
        assert_eq!(r.len(), 4);
    }

    #[test]
    fn depth_zero_is_identity() {
        let ifs = homogeneous_ifs(1, 2, 0.3).unwrap();
        let r = refine_to_depth(&SymbolicSet::full_shift(), &ifs, StopRule::Depth(0), 10).unwrap();
        assert_eq!(r, SymbolicSet::full_shift());
    }

    #[test]
    fn threshold_at_least_one_is_unchanged() {
        let ifs = homogeneous_ifs(1, 2, 0.3).unwrap();
        let set = SymbolicSet::new(vec![w("1"), w("22")]).unwrap();
        let r = refine_to_depth(&set, &ifs, StopRule::Threshold(1.5), 10).unwrap();
        assert_eq!(r, set);
    }

    #[test]
    fn mixed_depth_matches_exhaustive_walk() {
        let ifs = validate_ifs(vec![
            nalgebra::DMatrix::from_element(1, 1, 0.5),
            nalgebra::DMatrix::from_element(1, 1, 0.25),
        ])
        .unwrap();
        let c = 0.1;
        let got = refine_to_depth(&SymbolicSet::full_shift(), &ifs, StopRule::Threshold(c), 1000).unwrap();

        // Oracle: enumerate all words up to length 6 and keep those that cross
        // the threshold exactly at their last symbol.
        let mut expected = Vec::new();
        for len in 1..=6usize {
            for code in 0..(1u32 << len) {
                let syms: Vec<u8> = (0..len).map(|k| 1 + ((code >> (len - 1 - k)) & 1) as u8).collect();
                let word = Word::new(syms).unwrap();
                let here = singular_values(&ifs, &word)[0];
                let parent = singular_values(&ifs, &word.truncate(len - 1))[0];
                if here <= c && parent > c {
                    expected.push(word);
                }
            }
        }
        expected.sort();
        assert_eq!(got.words(), expected.as_slice());
        let depths: std::collections::BTreeSet<usize> = got.words().iter().map(Word::len).collect();
        assert!(depths.len() > 1);
    }

    #[test]
    fn leaf_cap_is_enforced() {
        let ifs = homogeneous_ifs(1, 2, 0.5).unwrap();
        let err = refine_to_depth(&SymbolicSet::full_shift(), &ifs, StopRule::Depth(12), 1000);
        assert!(matches!(err, Err(Error::ResourceCap { .. })));
    }
}
