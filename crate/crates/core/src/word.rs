//! Admissible words over the vertex alphabet and their weights.

use std::fmt;

use crate::system::MarkovSystem;
use crate::weight::Weight;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WordError {
    #[error("letter {letter} is out of range for {n} vertices")]
    LetterOutOfRange { letter: usize, n: usize },
    #[error("inadmissible transition {from} -> {to} (p = 0)", from = .from + 1, to = .to + 1)]
    InadmissibleJunction { from: usize, to: usize },
}

/// A finite word `(σ1, ..., σk)` with 0-based letters. The empty word is
/// valid and has length zero.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word {
    letters: Vec<usize>,
}

impl Word {
    pub fn empty() -> Word {
        Word::default()
    }

    pub fn letter(i: usize) -> Word {
        Word { letters: vec![i] }
    }

    /// Checks that every letter is a vertex and every consecutive pair is an edge.
    pub fn new(sys: &MarkovSystem, letters: Vec<usize>) -> Result<Word, WordError> {
        let n = sys.n();
        if let Some(&letter) = letters.iter().find(|&&l| l >= n) {
            return Err(WordError::LetterOutOfRange { letter, n });
        }
        if let Some(w) = letters.windows(2).find(|w| !sys.has_edge(w[0], w[1])) {
            return Err(WordError::InadmissibleJunction { from: w[0], to: w[1] });
        }
        Ok(Word { letters })
    }

    /// Parses 1-based letters, as used in exported files.
    pub fn from_one_based(sys: &MarkovSystem, letters: &[usize]) -> Result<Word, WordError> {
        let zero_based = letters
            .iter()
            .map(|&l| {
                l.checked_sub(1).ok_or(WordError::LetterOutOfRange {
                    letter: 0,
                    n: sys.n(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Word::new(sys, zero_based)
    }

    pub(crate) fn from_letters_unchecked(letters: Vec<usize>) -> Word {
        Word { letters }
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.letters.last().copied()
    }

    /// `σ⁻`: the word with its last letter removed (empty for length ≤ 1).
    pub fn parent(&self) -> Word {
        let k = self.letters.len().saturating_sub(1);
        Word {
            letters: self.letters[..k].to_vec(),
        }
    }

    pub fn prefix(&self, k: usize) -> Word {
        Word {
            letters: self.letters[..k.min(self.len())].to_vec(),
        }
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.letters.starts_with(&self.letters)
    }

    /// Appends a single letter if the junction is an edge.
    pub fn child(&self, sys: &MarkovSystem, letter: usize) -> Result<Word, WordError> {
        self.concat(sys, &Word::letter(letter))
    }

    /// `σ ∗ ω`.
    pub fn concat(&self, sys: &MarkovSystem, other: &Word) -> Result<Word, WordError> {
        if let (Some(a), Some(b)) = (self.last(), other.first()) {
            if !sys.has_edge(a, b) {
                return Err(WordError::InadmissibleJunction { from: a, to: b });
            }
        }
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.letters);
        letters.extend_from_slice(&other.letters);
        Ok(Word { letters })
    }

    /// Dash-joined 1-based letters, e.g. `1-3-4`.
    pub fn to_dashed(&self) -> String {
        let parts: Vec<String> = self.letters.iter().map(|l| (l + 1).to_string()).collect();
        parts.join("-")
    }

    /// Products along the word.
    pub fn weights(&self, sys: &MarkovSystem) -> WordWeights {
        let mut w = WordWeights::unit(self.first());
        for pair in self.letters.windows(2) {
            w = w.extend(sys, pair[0], pair[1]);
        }
        w
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({})", self.to_dashed())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("θ")
        } else {
            f.write_str(&self.to_dashed())
        }
    }
}

/// `p_σ`, `c_σ` and `p_σ c_σ^r` for a word.
///
/// `level` is accumulated edge by edge from `p_ij c_ij^r`, which is the
/// quantity compared against `η^j` when carving antichains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordWeights {
    pub mass: Weight,
    pub ratio: Weight,
    pub level: Weight,
    first: Option<usize>,
}

impl WordWeights {
    pub(crate) fn unit(first: Option<usize>) -> WordWeights {
        WordWeights {
            mass: Weight::ONE,
            ratio: Weight::ONE,
            level: Weight::ONE,
            first,
        }
    }

    pub(crate) fn extend(self, sys: &MarkovSystem, from: usize, to: usize) -> WordWeights {
        let p = Weight::new(sys.p(from, to)).expect("edge probability is positive");
        let c = Weight::new(sys.c(from, to)).expect("edge ratio is positive");
        let e = sys.edge_weight(from, to).expect("admissible edge");
        WordWeights {
            mass: self.mass * p,
            ratio: self.ratio * c,
            level: self.level * e,
            first: self.first,
        }
    }

    /// `μ(J_σ) = χ_{σ1} p_σ`; one for the empty word.
    pub fn measure(&self, sys: &MarkovSystem) -> f64 {
        match self.first {
            Some(i) => sys.chi(i) * self.mass.value(),
            None => 1.0,
        }
    }

    /// `(p_σ c_σ^r)^{s/(s+r)}`.
    pub fn normalized_term(&self, s: f64, r: f64) -> f64 {
        self.level.powf(s / (s + r))
    }
}
