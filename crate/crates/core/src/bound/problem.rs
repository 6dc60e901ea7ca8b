//! Assembly of the moment relaxation.
//!
//! Variables come in two kinds, both keyed by a Hermitian-canonical
//! [`MomentKey`]: the b = +1 moments of each y, and aggregated moments
//! summed over b, shared by all y. The b = −1 block is aggregate − plus, so
//! equality of Σ_b Γ_{b|y} across y holds by construction.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::words::{build_monomials, moment_key, BasisElement, MomentKey, Party, Word};
use crate::error::{Error, Result};
use crate::protocol::{t_terms, N_BOB};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    /// Words of length ≤ 1 for each party.
    #[serde(rename = "1")]
    One,
    /// Basis elements of total length ≤ 2.
    #[serde(rename = "1+AB")]
    OneAB,
    /// Words of length ≤ 2 for each party.
    #[serde(rename = "2")]
    Two,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::One, Level::OneAB, Level::Two];

    /// Returns the basis in (Alice word, Charlie word) lexicographic order
    /// over the two frozen monomial lists.
    pub fn basis(self) -> Vec<BasisElement> {
        let per_party = match self {
            Level::One => 1,
            Level::OneAB | Level::Two => 2,
        };
        let wa = build_monomials(Party::Alice, per_party);
        let wc = build_monomials(Party::Charlie, per_party);
        let mut out = Vec::new();
        for a in &wa {
            for c in &wc {
                if self != Level::OneAB || a.len() + c.len() <= 2 {
                    out.push((a.clone(), c.clone()));
                }
            }
        }
        out
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::One => "1",
            Level::OneAB => "1+AB",
            Level::Two => "2",
        })
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1" => Ok(Level::One),
            "1+AB" => Ok(Level::OneAB),
            "2" => Ok(Level::Two),
            other => Err(Error::UnsupportedLevel(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarKind {
    /// b = +1 moment for Bob setting y.
    Plus(usize),
    /// Σ_b moment, independent of y.
    Aggregate,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Variable {
    pub kind: VarKind,
    pub key: MomentKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintFamily {
    Normalization,
    PartialTranspose,
}

/// `Σ coeff·m = rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub family: ConstraintFamily,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn residual(&self, m: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| c * m[i]).sum::<f64>() - self.rhs
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockSpec {
    pub b: i8,
    pub y: usize,
}

/// Assembled relaxation. Variable `y·K + k` is the plus moment of key `k`
/// for setting y and `4K + k` is the aggregate moment, with K = `keys.len()`.
#[derive(Clone, Debug)]
pub struct MomentProblem {
    pub level: Level,
    pub enforce_pt: bool,
    pub basis: Vec<BasisElement>,
    pub keys: Vec<MomentKey>,
    key_index: HashMap<MomentKey, usize>,
    /// Row-major key index of every block entry.
    pub entry_keys: Vec<usize>,
    pub blocks: Vec<BlockSpec>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Vec<(usize, f64)>,
    pub objective_constant: f64,
}

pub fn assemble_problem(level: Level, enforce_pt: bool) -> MomentProblem {
    let basis = level.basis();
    let n = basis.len();
    let mut keys = Vec::new();
    let mut key_index = HashMap::new();
    let mut entry_keys = Vec::with_capacity(n * n);
    for row in &basis {
        for col in &basis {
            let k = moment_key(row, col).hermitian_canonical();
            let idx = *key_index.entry(k.clone()).or_insert_with(|| {
                keys.push(k);
                keys.len() - 1
            });
            entry_keys.push(idx);
        }
    }
    let mut blocks = Vec::new();
    for y in 0..N_BOB {
        for b in [1, -1] {
            blocks.push(BlockSpec { b, y });
        }
    }
    let mut p = MomentProblem {
        level,
        enforce_pt,
        basis,
        keys,
        key_index,
        entry_keys,
        blocks,
        constraints: Vec::new(),
        objective: Vec::new(),
        objective_constant: 0.0,
    };
    let id = p.key_index[&MomentKey::identity()];
    p.constraints.push(LinearConstraint {
        family: ConstraintFamily::Normalization,
        coeffs: vec![(p.aggregate_var(id), 1.0)],
        rhs: 1.0,
    });
    if enforce_pt {
        for (k, key) in p.keys.iter().enumerate() {
            let partner = MomentKey::new(key.a.reversed(), key.c.clone()).hermitian_canonical();
            if let Some(&j) = p.key_index.get(&partner) {
                if j > k {
                    p.constraints.push(LinearConstraint {
                        family: ConstraintFamily::PartialTranspose,
                        coeffs: vec![(p.aggregate_var(k), 1.0), (p.aggregate_var(j), -1.0)],
                        rhs: 0.0,
                    });
                }
            }
        }
    }
    p.objective = p.w_objective();
    p
}

impl MomentProblem {
    pub fn block_size(&self) -> usize {
        self.basis.len()
    }

    pub fn num_keys(&self) -> usize {
        self.keys.len()
    }

    pub fn num_vars(&self) -> usize {
        (N_BOB + 1) * self.keys.len()
    }

    pub fn plus_var(&self, y: usize, key: usize) -> usize {
        y * self.keys.len() + key
    }

    pub fn aggregate_var(&self, key: usize) -> usize {
        N_BOB * self.keys.len() + key
    }

    pub fn variable(&self, v: usize) -> Variable {
        let k = self.keys.len();
        let kind = if v < N_BOB * k {
            VarKind::Plus(v / k)
        } else {
            VarKind::Aggregate
        };
        Variable {
            kind,
            key: self.keys[v % k].clone(),
        }
    }

    pub fn key_of(&self, key: &MomentKey) -> Option<usize> {
        self.key_index.get(&key.hermitian_canonical()).copied()
    }

    pub fn entry_key(&self, i: usize, j: usize) -> usize {
        self.entry_keys[i * self.basis.len() + j]
    }

    /// Linear form of entry (i, j) of a block.
    pub fn entry_terms(&self, block: BlockSpec, i: usize, j: usize) -> Vec<(usize, f64)> {
        let k = self.entry_key(i, j);
        let plus = self.plus_var(block.y, k);
        if block.b == 1 {
            vec![(plus, 1.0)]
        } else {
            vec![(self.aggregate_var(k), 1.0), (plus, -1.0)]
        }
    }

    /// Block matrix, row-major, evaluated at `m`.
    pub fn block_values(&self, block: BlockSpec, m: &[f64]) -> Vec<f64> {
        let off = block.y * self.keys.len();
        let agg = N_BOB * self.keys.len();
        self.entry_keys
            .iter()
            .map(|&k| {
                if block.b == 1 {
                    m[off + k]
                } else {
                    m[agg + k] - m[off + k]
                }
            })
            .collect()
    }

    fn single(&self, a: Option<usize>, c: Option<usize>) -> usize {
        let w = |l: Option<usize>| l.map_or_else(Word::identity, |l| Word::letter(l as u8));
        self.key_of(&MomentKey::new(w(a), w(c)))
            .expect("single-letter keys are in every basis")
    }

    /// Linear form of P(a, b, c | x, y, z), all indices 0-based.
    pub fn probability_terms(&self, a: i8, b: i8, c: i8, x: usize, y: usize, z: usize) -> Vec<(usize, f64)> {
        let sa = f64::from(a);
        let sc = f64::from(c);
        // Π^a = (1 − a)/2 · 1 + a·P, likewise for c.
        let ca = [(None, (1.0 - sa) / 2.0), (Some(x), sa)];
        let cc = [(None, (1.0 - sc) / 2.0), (Some(z), sc)];
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for (la, wa) in ca {
            for (lc, wc) in cc {
                let coef = wa * wc;
                if coef == 0.0 {
                    continue;
                }
                let k = self.single(la, lc);
                if b == 1 {
                    terms.push((self.plus_var(y, k), coef));
                } else {
                    terms.push((self.aggregate_var(k), coef));
                    terms.push((self.plus_var(y, k), -coef));
                }
            }
        }
        merge_terms(terms)
    }

    /// Σ_{a,c} a·c·P(a, +1, c | x, y, z) = 4P(++) − 2P(+·) − 2P(·+) + P(··).
    fn correlator_terms(&self, x: usize, y: usize, z: usize) -> Vec<(usize, f64)> {
        vec![
            (self.plus_var(y, self.single(Some(x), Some(z))), 4.0),
            (self.plus_var(y, self.single(Some(x), None)), -2.0),
            (self.plus_var(y, self.single(None, Some(z))), -2.0),
            (self.plus_var(y, self.single(None, None)), 1.0),
        ]
    }

    fn w_objective(&self) -> Vec<(usize, f64)> {
        let mut terms = Vec::new();
        for y in 0..N_BOB {
            for ((x, z), sign) in t_terms(y) {
                for (v, c) in self.correlator_terms(x - 1, y, z - 1) {
                    terms.push((v, c * sign / 5.0));
                }
            }
            terms.push((self.plus_var(y, self.single(None, None)), -0.8));
        }
        merge_terms(terms)
    }

    pub fn objective_value(&self, m: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(i, c)| c * m[i]).sum::<f64>()
    }

    /// Maximal |residual| per constraint family.
    pub fn constraint_violation(&self, m: &[f64], family: ConstraintFamily) -> f64 {
        self.constraints
            .iter()
            .filter(|c| c.family == family)
            .map(|c| c.residual(m).abs())
            .fold(0.0, f64::max)
    }

    pub fn count_constraints(&self, family: ConstraintFamily) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }
}

/// Sums coefficients of repeated variables, drops zeros, sorts by index.
pub fn merge_terms(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut acc: HashMap<usize, f64> = HashMap::new();
    for (v, c) in terms {
        *acc.entry(v).or_insert(0.0) += c;
    }
    let mut out: Vec<(usize, f64)> = acc.into_iter().filter(|&(_, c)| c.abs() > 1e-15).collect();
    out.sort_by_key(|&(v, _)| v);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_sizes() {
        assert_eq!(Level::One.basis().len(), 28);
        assert_eq!(Level::OneAB.basis().len(), 64);
        assert_eq!(Level::Two.basis().len(), 370);
    }

    #[test]
    fn level_parsing() {
        assert_eq!("1".parse::<Level>().unwrap(), Level::One);
        assert_eq!("1+ab".parse::<Level>().unwrap(), Level::OneAB);
        assert_eq!("2".parse::<Level>().unwrap(), Level::Two);
        assert!(matches!("3".parse::<Level>(), Err(Error::UnsupportedLevel(_))));
    }

    #[test]
    fn identity_moment_in_objective() {
        let p = assemble_problem(Level::One, true);
        let id = p.key_of(&MomentKey::identity()).unwrap();
        for y in 0..N_BOB {
            let v = p.plus_var(y, id);
            let coef = p.objective.iter().find(|t| t.0 == v).unwrap().1;
            // −4/5 from the success-rate term plus the identity parts of T_y.
            let t_net: f64 = t_terms(y).iter().map(|t| t.1).sum();
            assert!((coef - (-0.8 + t_net / 5.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn pt_pairs_reverse_alice_words() {
        let p = assemble_problem(Level::Two, true);
        assert!(p.count_constraints(ConstraintFamily::PartialTranspose) > 0);
        for c in p.constraints.iter().filter(|c| c.family == ConstraintFamily::PartialTranspose) {
            let k = p.variable(c.coeffs[0].0).key;
            assert_ne!(k.a, k.a.reversed());
        }
    }

    #[test]
    fn probability_terms_sum_to_normalization() {
        let p = assemble_problem(Level::One, true);
        let mut all = Vec::new();
        for a in [1, -1] {
            for b in [1, -1] {
                for c in [1, -1] {
                    all.extend(p.probability_terms(a, b, c, 1, 2, 3));
                }
            }
        }
        let merged = merge_terms(all);
        let id = p.key_of(&MomentKey::identity()).unwrap();
        assert_eq!(merged, vec![(p.aggregate_var(id), 1.0)]);
    }
}
