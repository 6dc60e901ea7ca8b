//! Direct evaluation of explicit strategies against the relaxation.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::linalg::min_eigenvalue;
use super::problem::{ConstraintFamily, MomentProblem};
use super::words::Word;
use crate::error::{Error, Result};
use crate::protocol::{bob_effect, epr_state, NoiseParams, Scenario, N_ALICE, N_BOB, N_CHARLIE};
use crate::quantum::{kron, kron_all, partial_trace_matrix, ComplexMatrix, ZERO};

/// Sources ρ_AB, ρ_B'C, Bob's b = +1 effects on B ⊗ B′ and the +1 projectors
/// of Alice and Charlie.
#[derive(Clone, Debug)]
pub struct Strategy {
    /// Dimensions of A, B, B′, C.
    pub dims: [usize; 4],
    pub rho_ab: ComplexMatrix,
    pub rho_bc: ComplexMatrix,
    pub bob: Vec<ComplexMatrix>,
    pub alice: Vec<ComplexMatrix>,
    pub charlie: Vec<ComplexMatrix>,
}

impl Strategy {
    pub fn new(
        dims: [usize; 4],
        rho_ab: ComplexMatrix,
        rho_bc: ComplexMatrix,
        bob: Vec<ComplexMatrix>,
        alice: Vec<ComplexMatrix>,
        charlie: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        let [da, db, db2, dc] = dims;
        let bad = |what: &str| Err(Error::DimensionMismatch(format!("strategy: {what}")));
        if dims.iter().any(|&d| d == 0 || d > 4) {
            return bad("dimensions must lie in 1..=4");
        }
        if rho_ab.rows() != da * db || rho_bc.rows() != db2 * dc {
            return bad("source dimensions");
        }
        if bob.len() != N_BOB || bob.iter().any(|m| m.rows() != db * db2) {
            return bad("Bob effects");
        }
        if alice.len() != N_ALICE || alice.iter().any(|m| m.rows() != da) {
            return bad("Alice projectors");
        }
        if charlie.len() != N_CHARLIE || charlie.iter().any(|m| m.rows() != dc) {
            return bad("Charlie projectors");
        }
        Ok(Self {
            dims,
            rho_ab,
            rho_bc,
            bob,
            alice,
            charlie,
        })
    }

    /// The protocol's qubit strategy under `noise`.
    pub fn from_noise(noise: &NoiseParams) -> Result<Self> {
        noise.validate()?;
        let sc = Scenario::standard();
        let src = epr_state(noise.v_e)?.into_matrix();
        let bob = (0..N_BOB)
            .map(|y| bob_effect(y, noise.v_i, noise.mixture_model))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            [2, 2, 2, 2],
            src.clone(),
            src,
            bob,
            sc.alice.iter().map(|o| o.projector(1)).collect(),
            sc.charlie.iter().map(|o| o.projector(1)).collect(),
        )
    }

    /// The noiseless protocol, which uses σ_Y and is genuinely complex.
    pub fn ideal_complex() -> Self {
        Self::from_noise(&NoiseParams::ideal()).expect("ideal parameters are valid")
    }

    /// A deterministic classical strategy: a = c = +1 always, Bob outputs
    /// `bob_outcomes[y]`.
    pub fn deterministic(bob_outcomes: [i8; N_BOB]) -> Self {
        let one = ComplexMatrix::identity(1);
        let zero = ComplexMatrix::zeros(1, 1);
        let bob = bob_outcomes
            .iter()
            .map(|&b| if b == 1 { one.clone() } else { zero.clone() })
            .collect();
        Self::new(
            [1, 1, 1, 1],
            one.clone(),
            one.clone(),
            bob,
            vec![one.clone(); N_ALICE],
            vec![one; N_CHARLIE],
        )
        .expect("consistent dimensions")
    }

    /// Random real pure sources and random real projectors of random rank.
    pub fn random_real(dims: [usize; 4], rng: &mut impl Rng) -> Result<Self> {
        let [da, db, db2, dc] = dims;
        let src = |d: usize, rng: &mut dyn rand::RngCore| {
            let v = random_unit(d, rng);
            real_outer(&v)
        };
        let rho_ab = src(da * db, rng);
        let rho_bc = src(db2 * dc, rng);
        let bob = (0..N_BOB).map(|_| random_real_projector(db * db2, rng)).collect();
        let alice = (0..N_ALICE).map(|_| random_real_projector(da, rng)).collect();
        let charlie = (0..N_CHARLIE).map(|_| random_real_projector(dc, rng)).collect();
        Self::new(dims, rho_ab, rho_bc, bob, alice, charlie)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        let real = |m: &ComplexMatrix| {
            (0..m.rows()).all(|i| (0..m.cols()).all(|j| m.get(i, j).im.abs() <= tol))
        };
        real(&self.rho_ab)
            && real(&self.rho_bc)
            && self.bob.iter().all(real)
            && self.alice.iter().all(real)
            && self.charlie.iter().all(real)
    }

    /// ρ^{AC}_{b|y} = tr_{BB′}[(1 ⊗ M ⊗ 1)(ρ_AB ⊗ ρ_B′C)], unnormalized.
    pub fn conditional_operator(&self, y: usize, b: i8) -> Result<ComplexMatrix> {
        let [da, db, db2, dc] = self.dims;
        let effect = if b == 1 {
            self.bob[y].clone()
        } else {
            &ComplexMatrix::identity(db * db2) - &self.bob[y]
        };
        let joint = kron(&self.rho_ab, &self.rho_bc);
        let lifted = kron_all([&ComplexMatrix::identity(da), &effect, &ComplexMatrix::identity(dc)]);
        partial_trace_matrix(&(&lifted * &joint), &self.dims, &[0, 3])
    }

    fn word_op(&self, alice: bool, w: &Word) -> ComplexMatrix {
        let (ops, d) = if alice {
            (&self.alice, self.dims[0])
        } else {
            (&self.charlie, self.dims[3])
        };
        w.letters()
            .iter()
            .fold(ComplexMatrix::identity(d), |acc, &l| &acc * &ops[l as usize])
    }

    /// P(a, b, c | x, y, z) computed from the strategy directly.
    pub fn probability(&self, a: i8, b: i8, c: i8, x: usize, y: usize, z: usize) -> Result<f64> {
        let sigma = self.conditional_operator(y, b)?;
        let proj = |p: &ComplexMatrix, o: i8| {
            if o == 1 {
                p.clone()
            } else {
                &ComplexMatrix::identity(p.rows()) - p
            }
        };
        let op = kron(&proj(&self.alice[x], a), &proj(&self.charlie[z], c));
        Ok((&op * &sigma).trace().re)
    }
}

fn random_unit(d: usize, rng: &mut dyn rand::RngCore) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn real_outer(v: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(v.len(), v.len(), |i, j| Complex64::new(v[i] * v[j], 0.0))
}

/// Projector onto the span of a random number of random real vectors.
pub fn random_real_projector(d: usize, rng: &mut dyn rand::RngCore) -> ComplexMatrix {
    let rank = rng.random_range(0..=d);
    // Gram–Schmidt on Gaussian vectors
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < rank {
        let mut v = random_unit(d, rng);
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    let mut p = ComplexMatrix::zeros(d, d);
    for b in &basis {
        p = &p + &real_outer(b);
    }
    p
}

/// tr(σ · (X ⊗ Y)) for σ on A ⊗ C.
fn trace_against(sigma: &ComplexMatrix, x: &ComplexMatrix, y: &ComplexMatrix) -> Complex64 {
    let (da, dc) = (x.rows(), y.rows());
    let mut acc = ZERO;
    for i in 0..da {
        for j in 0..da {
            let xji = x.get(j, i);
            if xji == ZERO {
                continue;
            }
            for k in 0..dc {
                for l in 0..dc {
                    acc += sigma.get(i * dc + k, j * dc + l) * xji * y.get(l, k);
                }
            }
        }
    }
    acc
}

/// Moments of `strategy` as a variable vector of `problem`. Complex moments
/// enter through their real parts, i.e. the strategy mixed with its complex
/// conjugate, which has identical statistics.
pub fn strategy_moments(problem: &MomentProblem, strategy: &Strategy) -> Result<Vec<f64>> {
    let mut cache_a: HashMap<Word, ComplexMatrix> = HashMap::new();
    let mut cache_c: HashMap<Word, ComplexMatrix> = HashMap::new();
    let plus: Vec<ComplexMatrix> = (0..N_BOB)
        .map(|y| strategy.conditional_operator(y, 1))
        .collect::<Result<_>>()?;
    let aggregate = &plus[0] + &strategy.conditional_operator(0, -1)?;
    let mut m = vec![0.0; problem.num_vars()];
    for (k, key) in problem.keys.iter().enumerate() {
        let oa = cache_a
            .entry(key.a.clone())
            .or_insert_with(|| strategy.word_op(true, &key.a))
            .clone();
        let oc = cache_c
            .entry(key.c.clone())
            .or_insert_with(|| strategy.word_op(false, &key.c))
            .clone();
        for (y, s) in plus.iter().enumerate() {
            m[problem.plus_var(y, k)] = trace_against(s, &oa, &oc).re;
        }
        m[problem.aggregate_var(k)] = trace_against(&aggregate, &oa, &oc).re;
    }
    Ok(m)
}

/// Largest violation per constraint family; non-PSD blocks report −λ_min.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FeasibilityReport {
    pub level: String,
    /// Entries tr(E_α† σ E_α′) computed directly versus the keyed variable.
    pub moment_key: f64,
    pub psd: f64,
    /// Spread of Σ_b Γ_{b|y} across y.
    pub aggregate: f64,
    pub normalization: f64,
    pub partial_transpose: f64,
    pub probability_linkage: f64,
    pub objective: f64,
}

impl FeasibilityReport {
    /// Families whose violation exceeds `tol`.
    pub fn violated(&self, tol: f64) -> Vec<&'static str> {
        [
            ("moment-key", self.moment_key),
            ("psd", self.psd),
            ("aggregate", self.aggregate),
            ("normalization", self.normalization),
            ("partial-transpose", self.partial_transpose),
            ("probability-linkage", self.probability_linkage),
        ]
        .into_iter()
        .filter(|&(_, v)| v > tol)
        .map(|(n, _)| n)
        .collect()
    }

    pub fn feasible(&self, tol: f64, enforce_pt: bool) -> bool {
        self.violated(tol)
            .iter()
            .all(|&f| !enforce_pt && f == "partial-transpose")
    }
}

/// Evaluates every constraint of `problem` on the moments of `strategy`.
pub fn feasibility_check(problem: &MomentProblem, strategy: &Strategy) -> Result<FeasibilityReport> {
    let m = strategy_moments(problem, strategy)?;
    let n = problem.block_size();

    // Distinct words of each party and the products E_α′ E_α† between them.
    let index_words = |sel: fn(&(Word, Word)) -> &Word| {
        let mut words: Vec<Word> = Vec::new();
        let idx: Vec<usize> = problem
            .basis
            .iter()
            .map(|e| {
                let w = sel(e);
                words.iter().position(|u| u == w).unwrap_or_else(|| {
                    words.push(w.clone());
                    words.len() - 1
                })
            })
            .collect();
        (words, idx)
    };
    let (words_a, idx_a) = index_words(|e| &e.0);
    let (words_c, idx_c) = index_words(|e| &e.1);
    let pair_products = |alice: bool, words: &[Word]| -> Vec<Vec<ComplexMatrix>> {
        let ops: Vec<ComplexMatrix> = words.iter().map(|w| strategy.word_op(alice, w)).collect();
        ops.iter()
            .map(|row| ops.iter().map(|col| col * &row.dagger()).collect())
            .collect()
    };
    let prod_a = pair_products(true, &words_a);
    let prod_c = pair_products(false, &words_c);
    let mut moment_key = 0.0f64;
    let mut psd = 0.0f64;
    let mut sums: Vec<Vec<f64>> = Vec::new();
    for y in 0..N_BOB {
        let mut sum = vec![0.0; n * n];
        for b in [1i8, -1] {
            let sigma = strategy.conditional_operator(y, b)?;
            let block = problem.blocks.iter().find(|s| s.b == b && s.y == y).copied().expect("block");
            let keyed = problem.block_values(block, &m);
            let mut direct = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    // tr(E_α† σ E_α′) = tr(σ · E_α′ E_α†)
                    let xa = &prod_a[idx_a[i]][idx_a[j]];
                    let xc = &prod_c[idx_c[i]][idx_c[j]];
                    direct[i * n + j] = trace_against(&sigma, xa, xc).re;
                }
            }
            for idx in 0..n * n {
                moment_key = moment_key.max((direct[idx] - keyed[idx]).abs());
                sum[idx] += direct[idx];
            }
            psd = psd.max(-min_eigenvalue(n, &keyed)?);
        }
        sums.push(sum);
    }
    let aggregate = sums
        .iter()
        .skip(1)
        .flat_map(|s| s.iter().zip(&sums[0]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);

    let mut linkage = 0.0f64;
    for x in 0..N_ALICE {
        for y in 0..N_BOB {
            for z in 0..N_CHARLIE {
                for a in [1i8, -1] {
                    for b in [1i8, -1] {
                        for c in [1i8, -1] {
                            let lin: f64 = problem
                                .probability_terms(a, b, c, x, y, z)
                                .iter()
                                .map(|&(v, k)| k * m[v])
                                .sum();
                            let direct = strategy.probability(a, b, c, x, y, z)?;
                            linkage = linkage.max((lin - direct).abs());
                        }
                    }
                }
            }
        }
    }

    // PT violation is measured on the strategy's moments even when the
    // problem was assembled without the constraint.
    let pt_problem;
    let pt_source = if problem.enforce_pt {
        problem
    } else {
        pt_problem = super::problem::assemble_problem(problem.level, true);
        &pt_problem
    };
    let pt_m = if problem.enforce_pt {
        m.clone()
    } else {
        strategy_moments(pt_source, strategy)?
    };

    Ok(FeasibilityReport {
        level: problem.level.to_string(),
        moment_key,
        psd: psd.max(0.0),
        aggregate,
        normalization: problem.constraint_violation(&m, ConstraintFamily::Normalization),
        partial_transpose: pt_source.constraint_violation(&pt_m, ConstraintFamily::PartialTranspose),
        probability_linkage: linkage,
        objective: problem.objective_value(&m),
    })
}
