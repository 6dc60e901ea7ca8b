//! Projector words and the moment-key rule.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Charlie,
}

impl Party {
    /// One +1-outcome projector per measurement setting.
    pub fn alphabet(self) -> u8 {
        match self {
            Party::Alice => 3,
            Party::Charlie => 6,
        }
    }

    fn symbol(self) -> char {
        match self {
            Party::Alice => 'P',
            Party::Charlie => 'Q',
        }
    }
}

/// A product of projectors of one party. Letters are setting indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<u8>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: u8) -> Self {
        Word(vec![l])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1])
    }

    /// `self · other`, reduced.
    pub fn concat(&self, other: &Word) -> Word {
        let mut out = self.0.clone();
        out.extend_from_slice(&other.0);
        reduce_word(&Word(out))
    }

    /// Writes the word with a party symbol, e.g. `P0P1`; the identity is `1`.
    pub fn display(&self, party: Party) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0.iter().map(|l| format!("{}{}", party.symbol(), l)).collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let s: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", s.join("."))
    }
}

/// Collapses adjacent repeats. A single stack pass reaches the fixed point,
/// since removing a repeat never creates a new one.
pub fn reduce_word(w: &Word) -> Word {
    let mut out: Vec<u8> = Vec::with_capacity(w.0.len());
    for &l in &w.0 {
        if out.last() != Some(&l) {
            out.push(l);
        }
    }
    Word(out)
}

/// All reduced words of length ≤ `level`, ordered by length then lexicographically.
pub fn build_monomials(party: Party, level: usize) -> Vec<Word> {
    let n = party.alphabet();
    let mut out = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for _ in 0..level {
        let mut next = Vec::new();
        for w in &frontier {
            for l in 0..n {
                if w.0.last() != Some(&l) {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Key of a moment `tr(E_{α'} E_α† ⊗ G_{γ'} G_γ† ρ)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentKey {
    pub a: Word,
    pub c: Word,
}

impl MomentKey {
    pub fn new(a: Word, c: Word) -> Self {
        Self { a, c }
    }

    pub fn identity() -> Self {
        Self::new(Word::identity(), Word::identity())
    }

    /// Reversing both words gives the adjoint; real moments are invariant.
    pub fn joint_reverse(&self) -> Self {
        Self::new(self.a.reversed(), self.c.reversed())
    }

    /// Canonical representative of `{k, adjoint(k)}`.
    pub fn hermitian_canonical(&self) -> Self {
        let r = self.joint_reverse();
        if r < *self {
            r
        } else {
            self.clone()
        }
    }

    /// Canonical representative under reversal of the Alice word and of
    /// the Charlie word independently.
    pub fn transpose_canonical(&self) -> Self {
        let ra = self.a.reversed();
        let rc = self.c.reversed();
        [
            self.clone(),
            Self::new(ra.clone(), self.c.clone()),
            Self::new(self.a.clone(), rc.clone()),
            Self::new(ra, rc),
        ]
        .into_iter()
        .min()
        .expect("non-empty")
    }
}

impl fmt::Display for MomentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.a.display(Party::Alice), self.c.display(Party::Charlie))
    }
}

/// A row or column label of a moment matrix.
pub type BasisElement = (Word, Word);

pub fn moment_key(row: &BasisElement, col: &BasisElement) -> MomentKey {
    MomentKey::new(col.0.concat(&row.0.reversed()), col.1.concat(&row.1.reversed()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[u8]) -> Word {
        Word(v.to_vec())
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(reduce_word(&w(&[0, 0])), w(&[0]));
        assert_eq!(reduce_word(&w(&[0, 1, 1, 0])), w(&[0, 1, 0]));
        assert_eq!(reduce_word(&w(&[])), w(&[]));
        assert_eq!(reduce_word(&w(&[2, 2, 2, 1, 1])), w(&[2, 1]));
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(build_monomials(Party::Alice, 1).len(), 4);
        assert_eq!(build_monomials(Party::Alice, 2).len(), 10);
        assert_eq!(build_monomials(Party::Charlie, 2).len(), 37);
        let b = build_monomials(Party::Alice, 2);
        assert_eq!(b[0], Word::identity());
        assert_eq!(b[1], w(&[0]));
        assert_eq!(b[4], w(&[0, 1]));
        assert_eq!(b[9], w(&[2, 1]));
    }

    #[test]
    fn key_examples() {
        let e = Word::identity();
        let k = moment_key(&(w(&[0]), e.clone()), &(w(&[0]), e.clone()));
        assert_eq!(k.a, w(&[0]));
        let k = moment_key(&(w(&[1, 0]), e.clone()), &(e.clone(), e.clone()));
        assert_eq!(k.a, w(&[0, 1]));
        // P0·P1 reached from two different row/column pairs.
        let k1 = moment_key(&(w(&[1]), e.clone()), &(w(&[0]), e.clone()));
        let k2 = moment_key(&(e.clone(), e.clone()), &(w(&[0, 1]), e.clone()));
        assert_eq!(k1, k2);
    }

    #[test]
    fn swapping_row_and_column_reverses_key() {
        let b: Vec<BasisElement> = build_monomials(Party::Alice, 2)
            .into_iter()
            .flat_map(|a| build_monomials(Party::Charlie, 1).into_iter().map(move |c| (a.clone(), c)))
            .collect();
        for r in &b {
            for c in &b {
                assert_eq!(moment_key(r, c), moment_key(c, r).joint_reverse());
            }
        }
    }
}
