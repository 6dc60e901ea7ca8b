//! See-saw lower bound over explicit real strategies.
//!
//! Sources are real pure states ψ ∈ R^{d_A}⊗R^{d_B} and φ ∈ R^{d_B′}⊗R^{d_C},
//! stored as coefficient matrices Ψ (d_A×d_B) and Φ (d_B′×d_C). Measurements
//! are real projectors. W is linear in each component with the others fixed,
//! so each update is exact: projectors onto the positive eigenspace of the
//! effective operator, sources onto its top eigenvector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check::Strategy;
use crate::error::{Error, Result};
use crate::photon::cycle_rng;
use crate::protocol::{t_terms, N_ALICE, N_BOB, N_CHARLIE};
use crate::quantum::ComplexMatrix;

pub const MAX_DIM: usize = 8;
const MAX_SWEEPS: usize = 2000;
const SWEEP_TOL: f64 = 1e-12;

/// Real dimensions of A, B, B′, C.
pub type Dims = [usize; 4];

#[derive(Clone, Debug)]
pub struct RealStrategy {
    pub dims: Dims,
    pub psi: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub alice: Vec<DMatrix<f64>>,
    pub bob: Vec<DMatrix<f64>>,
    pub charlie: Vec<DMatrix<f64>>,
}

/// Coefficient of A_x ⊗ C_z in the per-y functional, ±1/5 or 0.
fn coefficients() -> Vec<[[f64; N_CHARLIE]; N_ALICE]> {
    (0..N_BOB)
        .map(|y| {
            let mut c = [[0.0; N_CHARLIE]; N_ALICE];
            for ((x, z), s) in t_terms(y) {
                c[x - 1][z - 1] += s / 5.0;
            }
            c
        })
        .collect()
}

const IDENTITY_COEF: f64 = -0.8;

fn observable(p: &DMatrix<f64>) -> DMatrix<f64> {
    p * 2.0 - DMatrix::identity(p.nrows(), p.nrows())
}

fn positive_projector(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut p = DMatrix::zeros(n, n);
    for k in 0..n {
        if e.eigenvalues[k] > 0.0 {
            let v = e.eigenvectors.column(k);
            p += &v * v.transpose();
        }
    }
    p
}

fn top_eigenvector(m: &DMatrix<f64>) -> DVector<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    let k = e.eigenvalues.imax();
    e.eigenvectors.column(k).into_owned()
}

/// tr_{B′}[M (1 ⊗ S)] for M on B ⊗ B′.
fn contract_second(m: &DMatrix<f64>, db: usize, db2: usize, s: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(db, db, |b, bp| {
        let mut acc = 0.0;
        for be in 0..db2 {
            for bep in 0..db2 {
                acc += m[(b * db2 + be, bp * db2 + bep)] * s[(bep, be)];
            }
        }
        acc
    })
}

/// tr_B[M (S ⊗ 1)] for M on B ⊗ B′.
fn contract_first(m: &DMatrix<f64>, db: usize, db2: usize, s: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(db2, db2, |be, bep| {
        let mut acc = 0.0;
        for b in 0..db {
            for bp in 0..db {
                acc += m[(b * db2 + be, bp * db2 + bep)] * s[(bp, b)];
            }
        }
        acc
    })
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

fn mat_from_vec(v: &DVector<f64>, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |i, j| v[i * c + j])
}

fn vec_from_mat(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows() * m.ncols(), (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])))
}

impl RealStrategy {
    pub fn random(dims: Dims, rng: &mut impl Rng) -> Self {
        let [da, db, db2, dc] = dims;
        let unit = |r: usize, c: usize, rng: &mut dyn rand::RngCore| {
            let m = DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
            let n = m.norm();
            m / n
        };
        let proj = |d: usize, rng: &mut dyn rand::RngCore| {
            let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            positive_projector(&(&g + g.transpose()))
        };
        Self {
            dims,
            psi: unit(da, db, rng),
            phi: unit(db2, dc, rng),
            alice: (0..N_ALICE).map(|_| proj(da, rng)).collect(),
            bob: (0..N_BOB).map(|_| proj(db * db2, rng)).collect(),
            charlie: (0..N_CHARLIE).map(|_| proj(dc, rng)).collect(),
        }
    }

    fn reduced_b(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.psi.transpose() * x * &self.psi
    }

    fn reduced_b2(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        &self.phi * y * self.phi.transpose()
    }

    /// W of the strategy.
    pub fn value(&self) -> f64 {
        let coef = coefficients();
        let ax: Vec<_> = self.alice.iter().map(|p| self.reduced_b(&observable(p))).collect();
        let cz: Vec<_> = self.charlie.iter().map(|q| self.reduced_b2(&observable(q))).collect();
        let ia = self.reduced_b(&DMatrix::identity(self.dims[0], self.dims[0]));
        let ic = self.reduced_b2(&DMatrix::identity(self.dims[3], self.dims[3]));
        let mut w = 0.0;
        for y in 0..N_BOB {
            let mut g = kron(&ia, &ic) * IDENTITY_COEF;
            for x in 0..N_ALICE {
                for z in 0..N_CHARLIE {
                    if coef[y][x][z] != 0.0 {
                        g += kron(&ax[x], &cz[z]) * coef[y][x][z];
                    }
                }
            }
            w += (&self.bob[y] * g).trace();
        }
        w
    }

    fn update_bob(&mut self) {
        let coef = coefficients();
        let ax: Vec<_> = self.alice.iter().map(|p| self.reduced_b(&observable(p))).collect();
        let cz: Vec<_> = self.charlie.iter().map(|q| self.reduced_b2(&observable(q))).collect();
        let ia = self.reduced_b(&DMatrix::identity(self.dims[0], self.dims[0]));
        let ic = self.reduced_b2(&DMatrix::identity(self.dims[3], self.dims[3]));
        for y in 0..N_BOB {
            let mut g = kron(&ia, &ic) * IDENTITY_COEF;
            for x in 0..N_ALICE {
                for z in 0..N_CHARLIE {
                    if coef[y][x][z] != 0.0 {
                        g += kron(&ax[x], &cz[z]) * coef[y][x][z];
                    }
                }
            }
            self.bob[y] = positive_projector(&g);
        }
    }

    /// Effective operators tr_{B′}[M_y (1 ⊗ Φ C Φᵀ)] on B, per (y, z) and identity.
    fn bob_on_b(&self) -> (Vec<Vec<DMatrix<f64>>>, Vec<DMatrix<f64>>) {
        let [_, db, db2, dc] = self.dims;
        let cz: Vec<_> = self.charlie.iter().map(|q| self.reduced_b2(&observable(q))).collect();
        let ic = self.reduced_b2(&DMatrix::identity(dc, dc));
        let per_z = self
            .bob
            .iter()
            .map(|m| cz.iter().map(|s| contract_second(m, db, db2, s)).collect())
            .collect();
        let id = self.bob.iter().map(|m| contract_second(m, db, db2, &ic)).collect();
        (per_z, id)
    }

    fn bob_on_b2(&self) -> (Vec<Vec<DMatrix<f64>>>, Vec<DMatrix<f64>>) {
        let [da, db, db2, _] = self.dims;
        let ax: Vec<_> = self.alice.iter().map(|p| self.reduced_b(&observable(p))).collect();
        let ia = self.reduced_b(&DMatrix::identity(da, da));
        let per_x = self
            .bob
            .iter()
            .map(|m| ax.iter().map(|s| contract_first(m, db, db2, s)).collect())
            .collect();
        let id = self.bob.iter().map(|m| contract_first(m, db, db2, &ia)).collect();
        (per_x, id)
    }

    fn update_alice(&mut self) {
        let coef = coefficients();
        let (nz, _) = self.bob_on_b();
        for x in 0..N_ALICE {
            let mut nb = DMatrix::zeros(self.dims[1], self.dims[1]);
            for y in 0..N_BOB {
                for z in 0..N_CHARLIE {
                    if coef[y][x][z] != 0.0 {
                        nb += &nz[y][z] * coef[y][x][z];
                    }
                }
            }
            let e = &self.psi * nb * self.psi.transpose();
            self.alice[x] = positive_projector(&e);
        }
    }

    fn update_charlie(&mut self) {
        let coef = coefficients();
        let (nx, _) = self.bob_on_b2();
        for z in 0..N_CHARLIE {
            let mut nb = DMatrix::zeros(self.dims[2], self.dims[2]);
            for y in 0..N_BOB {
                for x in 0..N_ALICE {
                    if coef[y][x][z] != 0.0 {
                        nb += &nx[y][x] * coef[y][x][z];
                    }
                }
            }
            let e = self.phi.transpose() * nb * &self.phi;
            self.charlie[z] = positive_projector(&e);
        }
    }

    fn update_psi(&mut self) {
        let coef = coefficients();
        let [da, db, _, _] = self.dims;
        let (nz, nid) = self.bob_on_b();
        let ax: Vec<_> = self.alice.iter().map(observable).collect();
        let mut h = DMatrix::zeros(da * db, da * db);
        for y in 0..N_BOB {
            h += kron(&DMatrix::identity(da, da), &nid[y]) * IDENTITY_COEF;
            for x in 0..N_ALICE {
                for z in 0..N_CHARLIE {
                    if coef[y][x][z] != 0.0 {
                        h += kron(&ax[x], &nz[y][z]) * coef[y][x][z];
                    }
                }
            }
        }
        self.psi = mat_from_vec(&top_eigenvector(&h), da, db);
    }

    fn update_phi(&mut self) {
        let coef = coefficients();
        let [_, _, db2, dc] = self.dims;
        let (nx, nid) = self.bob_on_b2();
        let cz: Vec<_> = self.charlie.iter().map(observable).collect();
        let mut h = DMatrix::zeros(db2 * dc, db2 * dc);
        for y in 0..N_BOB {
            h += kron(&nid[y], &DMatrix::identity(dc, dc)) * IDENTITY_COEF;
            for x in 0..N_ALICE {
                for z in 0..N_CHARLIE {
                    if coef[y][x][z] != 0.0 {
                        h += kron(&nx[y][x], &cz[z]) * coef[y][x][z];
                    }
                }
            }
        }
        self.phi = mat_from_vec(&top_eigenvector(&h), db2, dc);
    }

    /// Alternates the five updates until W stops increasing.
    pub fn optimize(&mut self) -> (f64, usize) {
        let mut w = self.value();
        for sweep in 1..=MAX_SWEEPS {
            self.update_bob();
            self.update_alice();
            self.update_charlie();
            self.update_psi();
            self.update_phi();
            let next = self.value();
            if next - w <= SWEEP_TOL {
                return (next.max(w), sweep);
            }
            w = next;
        }
        (w, MAX_SWEEPS)
    }

    /// Density-matrix form for the relaxation's feasibility oracle.
    pub fn to_strategy(&self) -> Result<Strategy> {
        let c = |m: &DMatrix<f64>| {
            ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
        };
        let psi = vec_from_mat(&self.psi);
        let phi = vec_from_mat(&self.phi);
        Strategy::new(
            self.dims,
            c(&(&psi * psi.transpose())),
            c(&(&phi * phi.transpose())),
            self.bob.iter().map(c).collect(),
            self.alice.iter().map(c).collect(),
            self.charlie.iter().map(c).collect(),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeesawResult {
    pub dims: Dims,
    pub restarts: usize,
    pub seed: u64,
    pub value: f64,
    pub best_restart: usize,
    pub values: Vec<f64>,
    #[serde(skip)]
    pub strategy: Option<RealStrategy>,
}

fn restart_rng(seed: u64, r: usize) -> ChaCha8Rng {
    cycle_rng(seed, r as u64)
}

/// Best W over `restarts` seeded see-saw runs; restart r uses stream r.
pub fn seesaw_lower_bound(dims: Dims, restarts: usize, seed: u64) -> Result<SeesawResult> {
    if dims.iter().any(|&d| d == 0 || d > MAX_DIM) {
        return Err(Error::OutOfRange {
            what: "see-saw dimension",
            value: dims.iter().copied().max().unwrap_or(0) as f64,
        });
    }
    if restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    let runs: Vec<(f64, RealStrategy)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(seed, r);
            let mut s = RealStrategy::random(dims, &mut rng);
            let (v, _) = s.optimize();
            (v, s)
        })
        .collect();
    let values: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let best = (0..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("restarts ≥ 1");
    Ok(SeesawResult {
        dims,
        restarts,
        seed,
        value: values[best],
        best_restart: best,
        values,
        strategy: Some(runs[best].1.clone()),
    })
}

/// Maximum of W over deterministic assignments of all outputs.
pub fn exhaustive_deterministic() -> (f64, [i8; N_ALICE], [i8; N_BOB], [i8; N_CHARLIE]) {
    let coef = coefficients();
    let sign = |bits: usize, i: usize| if bits >> i & 1 == 1 { -1i8 } else { 1 };
    let mut best = (f64::NEG_INFINITY, [1; N_ALICE], [1; N_BOB], [1; N_CHARLIE]);
    for ab in 0..1usize << N_ALICE {
        for cb in 0..1usize << N_CHARLIE {
            for bb in 0..1usize << N_BOB {
                let mut w = 0.0;
                for y in 0..N_BOB {
                    if sign(bb, y) != 1 {
                        continue;
                    }
                    w += IDENTITY_COEF;
                    for x in 0..N_ALICE {
                        for z in 0..N_CHARLIE {
                            w += coef[y][x][z] * f64::from(sign(ab, x) * sign(cb, z));
                        }
                    }
                }
                if w > best.0 {
                    best = (
                        w,
                        std::array::from_fn(|i| sign(ab, i)),
                        std::array::from_fn(|i| sign(bb, i)),
                        std::array::from_fn(|i| sign(cb, i)),
                    );
                }
            }
        }
    }
    best
}
