//! Variable layouts for the solver.
//!
//! Every block entry is driven by one plus variable `p_v`: plus blocks hold
//! `p_v`, minus blocks hold `g_u − p_v` where `u` is the aggregate class of
//! `v` (or `−p_v` when the aggregate is forced to zero).
//!
//! The generic layout keeps the projector-word blocks as assembled. The
//! symmetric layout, available for product bases, rewrites the blocks over
//! ±1 observable words `O = 2P − 1` (an invertible congruence of every
//! block, so the feasible set and objective are unchanged) and restricts to
//! points invariant under the sign-flip group of W:
//!
//! * relabelling y → y ⊕ t combined with flips of Alice's outcomes, which
//!   makes the y-blocks signed copies of the y = 0 blocks;
//! * the global flip of all Alice and Charlie outcomes, which kills odd
//!   keys and splits each block into even and odd sectors.
//!
//! Averaging a feasible point over the group keeps it feasible with the same
//! objective, so both layouts have the same optimum. The flips are found by
//! search and checked against the objective before use.

use std::collections::{HashMap, HashSet};

use super::linalg::eigenvalues;
use super::problem::{ConstraintFamily, MomentProblem, VarKind};
use super::words::{MomentKey, Word};
use crate::error::{Error, Result};
use crate::protocol::N_BOB;

const NONE: u32 = u32::MAX;

pub(crate) type Blocks = Vec<Vec<f64>>;

pub(crate) struct BlockMap {
    pub n: usize,
    pub plus: bool,
    /// Plus variable of every entry, row-major.
    pub vars: Vec<u32>,
}

pub(crate) struct Layout {
    pub blocks: Vec<BlockMap>,
    /// Entries per plus variable in the plus blocks (same in the minus blocks).
    counts: Vec<f64>,
    var_class: Vec<u32>,
    class_weight: Vec<f64>,
    pub fixed_class: usize,
    pub c_plus: Vec<f64>,
    pub c_class: Vec<f64>,
    pub symmetric: bool,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Dense class ids of the union-find roots of `members`.
fn classes(parent: &mut [usize], members: impl Iterator<Item = usize>) -> HashMap<usize, u32> {
    let mut out = HashMap::new();
    let mut roots = HashMap::new();
    for k in members {
        let r = find(parent, k);
        let next = roots.len() as u32;
        let id = *roots.entry(r).or_insert(next);
        out.insert(k, id);
    }
    out
}

impl Layout {
    fn finish(
        blocks: Vec<BlockMap>,
        var_class: Vec<u32>,
        nclass: usize,
        fixed_class: usize,
        c_plus: Vec<f64>,
        c_class: Vec<f64>,
        symmetric: bool,
    ) -> Self {
        let mut counts = vec![0.0; var_class.len()];
        for b in blocks.iter().filter(|b| b.plus) {
            for &v in &b.vars {
                counts[v as usize] += 1.0;
            }
        }
        let mut class_weight = vec![0.0; nclass];
        for (v, &u) in var_class.iter().enumerate() {
            if u != NONE {
                class_weight[u as usize] += counts[v];
            }
        }
        Self {
            blocks,
            counts,
            var_class,
            class_weight,
            fixed_class,
            c_plus,
            c_class,
            symmetric,
        }
    }

    /// Projector-word blocks as assembled, PT equalities merged into classes.
    pub fn generic(p: &MomentProblem) -> Result<Self> {
        let nkeys = p.num_keys();
        let agg0 = N_BOB * nkeys;
        let mut parent: Vec<usize> = (0..nkeys).collect();
        let mut fixed = None;
        for c in &p.constraints {
            match c.family {
                ConstraintFamily::PartialTranspose => {
                    let ok = c.coeffs.len() == 2
                        && c.rhs == 0.0
                        && c.coeffs[0].1 == -c.coeffs[1].1
                        && c.coeffs.iter().all(|&(v, _)| v >= agg0);
                    if !ok {
                        return Err(Error::InvalidConfig("unexpected transpose constraint".into()));
                    }
                    union(&mut parent, c.coeffs[0].0 - agg0, c.coeffs[1].0 - agg0);
                }
                ConstraintFamily::Normalization => {
                    if c.coeffs.len() != 1 || c.coeffs[0].0 < agg0 || c.rhs != 1.0 || c.coeffs[0].1 != 1.0 {
                        return Err(Error::InvalidConfig("unexpected normalization constraint".into()));
                    }
                    fixed = Some(c.coeffs[0].0 - agg0);
                }
            }
        }
        let fixed = fixed.ok_or_else(|| Error::InvalidConfig("missing normalization".into()))?;
        let class_of = classes(&mut parent, 0..nkeys);
        let nclass = class_of.values().collect::<HashSet<_>>().len();
        let fixed_class = class_of[&fixed] as usize;
        if (0..nkeys).filter(|k| class_of[k] as usize == fixed_class).count() != 1 {
            return Err(Error::InvalidConfig("normalized moment is merged with others".into()));
        }

        let blocks = p
            .blocks
            .iter()
            .map(|b| BlockMap {
                n: p.block_size(),
                plus: b.b == 1,
                vars: p.entry_keys.iter().map(|&k| (b.y * nkeys + k) as u32).collect(),
            })
            .collect();
        let var_class = (0..agg0).map(|v| class_of[&(v % nkeys)]).collect();
        let mut c_plus = vec![0.0; agg0];
        let mut c_class = vec![0.0; nclass];
        for &(v, c) in &p.objective {
            if v < agg0 {
                c_plus[v] += c;
            } else {
                c_class[class_of[&(v - agg0)] as usize] += c;
            }
        }
        Ok(Self::finish(blocks, var_class, nclass, fixed_class, c_plus, c_class, false))
    }

    /// Symmetry-reduced observable-word blocks, or `None` when the basis is
    /// not a product or the objective lacks the expected invariance.
    pub fn symmetric(p: &MomentProblem) -> Result<Option<Self>> {
        let Some(basis) = ProductBasis::new(p) else {
            return Ok(None);
        };
        let n = basis.rows.len();

        // All observable keys of the full block.
        let mut keys: Vec<MomentKey> = Vec::new();
        let mut index: HashMap<MomentKey, usize> = HashMap::new();
        let mut entry = Vec::with_capacity(n * n);
        for row in &basis.rows {
            for col in &basis.rows {
                let k = observable_key(row, col);
                let id = *index.entry(k.clone()).or_insert_with(|| {
                    keys.push(k);
                    keys.len() - 1
                });
                entry.push(id);
            }
        }
        let nk = keys.len();
        let odd: Vec<bool> = keys.iter().map(|k| (k.a.len() + k.c.len()) % 2 == 1).collect();

        // Objective over observable moments: plus per y, then aggregate.
        let mut c_full = vec![vec![0.0; nk]; N_BOB + 1];
        for &(v, c) in &p.objective {
            let var = p.variable(v);
            let row = match var.kind {
                VarKind::Plus(y) => y,
                VarKind::Aggregate => N_BOB,
            };
            for (k, w) in expand_projector_key(&var.key) {
                let Some(&j) = index.get(&k) else {
                    return Ok(None);
                };
                c_full[row][j] += c * w;
            }
        }
        let scale = c_full.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let tol = 1e-12 * scale;

        let Some(flips) = find_flips(&keys, &c_full, tol) else {
            return Ok(None);
        };
        let sign = |t: usize, j: usize| -> f64 {
            keys[j].a.letters().iter().map(|&l| flips[t][l as usize]).product()
        };
        if (0..nk).any(|j| odd[j] && c_full.iter().any(|r| r[j].abs() > tol)) {
            return Ok(None);
        }

        // Aggregate moments survive only on keys fixed by every flip.
        let admissible: Vec<bool> = (0..nk)
            .map(|j| !odd[j] && (0..N_BOB).all(|t| sign(t, j) == 1.0))
            .collect();
        if (0..nk).any(|j| !admissible[j] && c_full[N_BOB][j].abs() > tol) {
            return Ok(None);
        }
        let mut parent: Vec<usize> = (0..nk).collect();
        if p.enforce_pt {
            for (j, k) in keys.iter().enumerate() {
                if !admissible[j] {
                    continue;
                }
                let partner = MomentKey::new(k.a.reversed(), k.c.clone()).hermitian_canonical();
                if let Some(&i) = index.get(&partner) {
                    union(&mut parent, i, j);
                }
            }
        }
        let class_of = classes(&mut parent, (0..nk).filter(|&j| admissible[j]));
        let nclass = class_of.values().collect::<HashSet<_>>().len();
        let id = index[&MomentKey::identity()];
        let fixed_class = class_of[&id] as usize;
        if class_of.values().filter(|&&u| u as usize == fixed_class).count() != 1 {
            return Err(Error::InvalidConfig("normalized moment is merged with others".into()));
        }

        // Plus variables: even keys of the y = 0 blocks.
        let sectors: [Vec<usize>; 2] = [
            (0..n).filter(|&i| basis.parity[i] == 0).collect(),
            (0..n).filter(|&i| basis.parity[i] == 1).collect(),
        ];
        let mut var_of = vec![NONE; nk];
        let mut var_key = Vec::new();
        let mut sector_vars: Vec<Vec<u32>> = Vec::new();
        for s in &sectors {
            let mut vars = Vec::with_capacity(s.len() * s.len());
            for &i in s {
                for &j in s {
                    let k = entry[i * n + j];
                    if var_of[k] == NONE {
                        var_of[k] = var_key.len() as u32;
                        var_key.push(k);
                    }
                    vars.push(var_of[k]);
                }
            }
            sector_vars.push(vars);
        }
        if (0..nk).any(|j| !odd[j] && var_of[j] == NONE) {
            return Ok(None);
        }

        let var_class: Vec<u32> = var_key
            .iter()
            .map(|k| class_of.get(k).copied().unwrap_or(NONE))
            .collect();
        let c_plus: Vec<f64> = var_key
            .iter()
            .map(|&j| (0..N_BOB).map(|y| sign(y, j) * c_full[y][j]).sum())
            .collect();
        let mut c_class = vec![0.0; nclass];
        for (&j, &u) in &class_of {
            c_class[u as usize] += c_full[N_BOB][j];
        }
        let mut blocks = Vec::new();
        for plus in [true, false] {
            for (s, vars) in sectors.iter().zip(&sector_vars) {
                if !s.is_empty() {
                    blocks.push(BlockMap {
                        n: s.len(),
                        plus,
                        vars: vars.clone(),
                    });
                }
            }
        }
        Ok(Some(Self::finish(
            blocks, var_class, nclass, fixed_class, c_plus, c_class, true,
        )))
    }

    pub fn nplus(&self) -> usize {
        self.counts.len()
    }

    pub fn nclass(&self) -> usize {
        self.class_weight.len()
    }

    pub fn zeros(&self) -> Blocks {
        self.blocks.iter().map(|b| vec![0.0; b.n * b.n]).collect()
    }

    /// A*(blocks): per plus variable and per class.
    pub fn adjoint(&self, z: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let mut plus = vec![0.0; self.nplus()];
        let mut class = vec![0.0; self.nclass()];
        for (b, blk) in self.blocks.iter().zip(z) {
            for (&v, &w) in b.vars.iter().zip(blk) {
                if b.plus {
                    plus[v as usize] += w;
                } else {
                    plus[v as usize] -= w;
                    let u = self.var_class[v as usize];
                    if u != NONE {
                        class[u as usize] += w;
                    }
                }
            }
        }
        (plus, class)
    }

    /// Solves (A*A) m = (a, b) over free variables; the fixed class takes `fixed`.
    pub fn gram_solve(&self, a: &[f64], b: &[f64], fixed: f64) -> (Vec<f64>, Vec<f64>) {
        let mut g: Vec<f64> = b.iter().map(|v| 2.0 * v).collect();
        for (v, &u) in self.var_class.iter().enumerate() {
            if u != NONE {
                g[u as usize] += a[v];
            }
        }
        for (u, gu) in g.iter_mut().enumerate() {
            *gu = if u == self.fixed_class { fixed } else { *gu / self.class_weight[u] };
        }
        let p = (0..self.nplus())
            .map(|v| {
                let u = self.var_class[v];
                let gu = if u == NONE { 0.0 } else { g[u as usize] };
                a[v] / (2.0 * self.counts[v]) + 0.5 * gu
            })
            .collect();
        (p, g)
    }

    /// F_k(p, g) for every block.
    pub fn forward(&self, p: &[f64], g: &[f64]) -> Blocks {
        self.blocks
            .iter()
            .map(|b| {
                b.vars
                    .iter()
                    .map(|&v| {
                        let pv = p[v as usize];
                        if b.plus {
                            pv
                        } else {
                            let u = self.var_class[v as usize];
                            (if u == NONE { 0.0 } else { g[u as usize] }) - pv
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn objective(&self, p: &[f64], g: &[f64]) -> f64 {
        let a: f64 = self.c_plus.iter().zip(p).map(|(c, v)| c * v).sum();
        let b: f64 = self.c_class.iter().zip(g).map(|(c, v)| c * v).sum();
        a + b
    }

    /// Certified bound from a symmetric dual candidate `z`.
    ///
    /// Uses |m| ≤ 1 for every variable of a feasible point and tr X_k ≤ n_k.
    pub fn certify(&self, z: &[Vec<f64>]) -> Result<f64> {
        let (ap, ag) = self.adjoint(z);
        let zero_p = vec![0.0; self.nplus()];
        let mut g1 = vec![0.0; self.nclass()];
        g1[self.fixed_class] = 1.0;
        let f0 = self.forward(&zero_p, &g1);
        let inner = |z: &[Vec<f64>]| -> f64 {
            z.iter()
                .zip(&f0)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
                .sum()
        };
        let neg = |z: &[Vec<f64>]| -> Result<f64> {
            let mut s = 0.0;
            for (b, blk) in self.blocks.iter().zip(z) {
                s += b.n as f64 * (-eigenvalues(b.n, blk)?[0]).max(0.0);
            }
            Ok(s)
        };

        let mut res_p: Vec<f64> = self.c_plus.iter().zip(&ap).map(|(c, v)| c + v).collect();
        let mut res_g: Vec<f64> = self.c_class.iter().zip(&ag).map(|(c, v)| c + v).collect();
        res_g[self.fixed_class] = 0.0;
        let l1: f64 = res_p.iter().chain(res_g.iter()).map(|v| v.abs()).sum();
        let ub1 = inner(z) + l1 + neg(z)?;

        // Least-norm correction making the residual vanish.
        for v in res_p.iter_mut().chain(res_g.iter_mut()) {
            *v = -*v;
        }
        let (lp, lg) = self.gram_solve(&res_p, &res_g, 0.0);
        let delta = self.forward(&lp, &lg);
        let z2: Blocks = z
            .iter()
            .zip(&delta)
            .map(|(a, d)| a.iter().zip(d).map(|(x, y)| x + y).collect())
            .collect();
        let ub2 = inner(&z2) + neg(&z2)?;
        Ok(ub1.min(ub2))
    }
}

struct ProductBasis {
    rows: Vec<(Word, Word)>,
    parity: Vec<usize>,
}

impl ProductBasis {
    fn new(p: &MomentProblem) -> Option<Self> {
        let mut a_words = HashSet::new();
        let mut c_words = HashSet::new();
        for (a, c) in &p.basis {
            a_words.insert(a);
            c_words.insert(c);
        }
        let distinct: HashSet<_> = p.basis.iter().collect();
        if distinct.len() != p.basis.len() || p.basis.len() != a_words.len() * c_words.len() {
            return None;
        }
        if p.basis.iter().any(|(a, c)| !a.is_reduced() || !c.is_reduced()) {
            return None;
        }
        Some(Self {
            rows: p.basis.clone(),
            parity: p.basis.iter().map(|(a, c)| (a.len() + c.len()) % 2).collect(),
        })
    }
}

/// Cancels adjacent equal letters (O·O = 1) until none remain.
pub fn reduce_observable_word(letters: impl IntoIterator<Item = u8>) -> Word {
    let mut out: Vec<u8> = Vec::new();
    for l in letters {
        if out.last() == Some(&l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    Word(out)
}

fn observable_key(row: &(Word, Word), col: &(Word, Word)) -> MomentKey {
    let join = |c: &Word, r: &Word| reduce_observable_word(c.letters().iter().chain(r.letters().iter().rev()).copied());
    MomentKey::new(join(&col.0, &row.0), join(&col.1, &row.1)).hermitian_canonical()
}

/// Expands a projector-word key over observable keys using P = (1 + O)/2.
pub fn expand_projector_key(key: &MomentKey) -> Vec<(MomentKey, f64)> {
    let subwords = |w: &Word| -> Vec<(Word, f64)> {
        let n = w.len();
        let weight = 0.5f64.powi(n as i32);
        (0..1usize << n)
            .map(|mask| {
                let picked = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| w.letters()[i]);
                (reduce_observable_word(picked), weight)
            })
            .collect()
    };
    let mut acc: HashMap<MomentKey, f64> = HashMap::new();
    let cs = subwords(&key.c);
    for (a, wa) in subwords(&key.a) {
        for (c, wc) in &cs {
            *acc.entry(MomentKey::new(a.clone(), c.clone()).hermitian_canonical()).or_insert(0.0) += wa * wc;
        }
    }
    let mut out: Vec<_> = acc.into_iter().filter(|(_, w)| *w != 0.0).collect();
    out.sort_by(|x, y| x.0.cmp(&y.0));
    out
}

/// For each Bob relabelling y → y ⊕ t, Alice flips under which the objective
/// is invariant with Charlie untouched.
fn find_flips(keys: &[MomentKey], c_full: &[Vec<f64>], tol: f64) -> Option<Vec<[f64; 3]>> {
    let mut out = Vec::with_capacity(N_BOB);
    for t in 0..N_BOB {
        let found = (0..8u8).map(|m| [0, 1, 2].map(|i| if m >> i & 1 == 1 { -1.0 } else { 1.0 })).find(|f| {
            keys.iter().enumerate().all(|(j, k)| {
                let s: f64 = k.a.letters().iter().map(|&l| f[l as usize]).product();
                (0..N_BOB).all(|y| (s * c_full[y ^ t][j] - c_full[y][j]).abs() <= tol)
                    && (s * c_full[N_BOB][j] - c_full[N_BOB][j]).abs() <= tol
            })
        })?;
        out.push(found);
    }
    let group = (0..N_BOB).all(|t| (0..N_BOB).all(|s| (0..3).all(|i| out[t ^ s][i] == out[t][i] * out[s][i])));
    group.then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::problem::{assemble_problem, Level};

    #[test]
    fn observable_reduction_cancels_pairs() {
        assert_eq!(reduce_observable_word([0, 1, 1, 0]), Word::identity());
        assert_eq!(reduce_observable_word([0, 0, 0]), Word::letter(0));
        assert_eq!(reduce_observable_word([2, 1, 2]), Word(vec![2, 1, 2]));
    }

    #[test]
    fn projector_expansion_of_single_letter() {
        let k = MomentKey::new(Word::letter(1), Word::identity());
        let e = expand_projector_key(&k);
        assert_eq!(e.len(), 2);
        assert!(e.iter().all(|(_, w)| *w == 0.5));
    }

    #[test]
    fn symmetric_layout_shapes() {
        let p = assemble_problem(Level::Two, true);
        let l = Layout::symmetric(&p).unwrap().expect("product basis");
        let sizes: Vec<_> = l.blocks.iter().map(|b| (b.plus, b.n)).collect();
        assert_eq!(sizes, vec![(true, 235), (true, 135), (false, 235), (false, 135)]);
        let one = Layout::symmetric(&assemble_problem(Level::One, true)).unwrap().unwrap();
        assert_eq!(one.blocks.iter().map(|b| b.n).sum::<usize>(), 2 * 28);
        assert!(Layout::symmetric(&assemble_problem(Level::OneAB, true)).unwrap().is_none());
    }

    #[test]
    fn gram_solve_inverts_the_normal_operator() {
        for l in [
            Layout::generic(&assemble_problem(Level::One, true)).unwrap(),
            Layout::symmetric(&assemble_problem(Level::One, true)).unwrap().unwrap(),
        ] {
            let p: Vec<f64> = (0..l.nplus()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
            let mut g: Vec<f64> = (0..l.nclass()).map(|i| ((i * 13 % 7) as f64 - 3.0) / 5.0).collect();
            g[l.fixed_class] = 0.0;
            let (a, mut b) = l.adjoint(&l.forward(&p, &g));
            b[l.fixed_class] = 0.0;
            let (p2, g2) = l.gram_solve(&a, &b, 0.0);
            let err = p.iter().zip(&p2).chain(g.iter().zip(&g2)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{err}");
        }
    }
}
