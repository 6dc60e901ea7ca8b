//! First-order solver for the moment relaxation with certified upper bounds.
//!
//! ADMM on `max cᵀm` subject to `X_k = F_k(m)`, `X_k ⪰ 0`, with
//! over-relaxation and Anderson acceleration of the fixed-point map.
//! Partial-transpose equalities are eliminated by merging aggregate
//! variables; normalization fixes one class. Product bases are solved in the
//! symmetry-reduced observable layout (see [`super::layout`]).
//!
//! The dual iterate Z_k = −ρU_k yields the bound
//! `Σ⟨Z_k, F_k(0)⟩ + Σ_v |c_v + (A*Z)_v| + Σ_k n_k·max(0, −λ_min(Z_k))`,
//! valid because every variable of a feasible point lies in [−1, 1] and
//! tr F_k(m) ≤ n_k. A second bound uses Z shifted by the least-norm
//! correction that zeroes the residual; the smaller one is reported.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use serde::{Deserialize, Serialize};

use super::layout::{Blocks, Layout};
use super::linalg::{eigh, spectral_map};
use super::problem::MomentProblem;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITER: usize = 200_000;
const ADAPT_EVERY: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Optimal,
    GapLimited,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bound {
    pub level: String,
    pub partial_transpose: bool,
    pub primal: f64,
    /// Certified upper bound on W over the relaxation.
    pub dual: f64,
    pub gap: f64,
    pub status: BoundStatus,
    pub iterations: usize,
    pub wall_time: f64,
    pub tolerance: f64,
    pub primal_residual: f64,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub time_limit: Option<Duration>,
    pub rho: f64,
    pub alpha: f64,
    /// Iterations between certificate evaluations.
    pub check_every: usize,
    /// Rebalance ρ from the relative residuals.
    pub adaptive_rho: bool,
    /// Anderson acceleration memory; 0 disables it.
    pub anderson_memory: usize,
    /// Use the symmetry-reduced layout when the basis allows it.
    pub symmetry: bool,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: DEFAULT_MAX_ITER,
            time_limit: None,
            rho: 0.1,
            alpha: 1.6,
            check_every: 50,
            adaptive_rho: false,
            anderson_memory: 5,
            symmetry: true,
            verbose: false,
        }
    }
}


fn dot(a: &Blocks, b: &Blocks) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .sum()
}

fn diff(a: &Blocks, b: &Blocks) -> Blocks {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

/// Type-II Anderson acceleration of the fixed-point map v ↦ T(v).
struct Anderson {
    memory: usize,
    d_t: VecDeque<Blocks>,
    d_g: VecDeque<Blocks>,
    last: Option<(Blocks, Blocks)>,
}

impl Anderson {
    fn new(memory: usize) -> Self {
        Self {
            memory,
            d_t: VecDeque::new(),
            d_g: VecDeque::new(),
            last: None,
        }
    }

    fn reset(&mut self) {
        self.d_t.clear();
        self.d_g.clear();
        self.last = None;
    }

    /// Next iterate from `t = T(v)` and `g = T(v) − v`.
    fn step(&mut self, t: &Blocks, g: &Blocks) -> Blocks {
        if self.memory == 0 {
            return t.clone();
        }
        if let Some((lt, lg)) = self.last.take() {
            self.d_t.push_back(diff(t, &lt));
            self.d_g.push_back(diff(g, &lg));
            if self.d_t.len() > self.memory {
                self.d_t.pop_front();
                self.d_g.pop_front();
            }
        }
        self.last = Some((t.clone(), g.clone()));
        let k = self.d_g.len();
        if k == 0 {
            return t.clone();
        }
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        for i in 0..k {
            rhs[i] = dot(&self.d_g[i], g);
            for j in 0..=i {
                let v = dot(&self.d_g[i], &self.d_g[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let reg = 1e-10 * gram.trace().max(f64::MIN_POSITIVE);
        for i in 0..k {
            gram[(i, i)] += reg;
        }
        let Some(gamma) = gram.cholesky().map(|c| c.solve(&rhs)) else {
            self.reset();
            return t.clone();
        };
        let mut out = t.clone();
        for (j, dt) in self.d_t.iter().enumerate() {
            for (ob, db) in out.iter_mut().zip(dt) {
                for (o, d) in ob.iter_mut().zip(db) {
                    *o -= gamma[j] * d;
                }
            }
        }
        out
    }
}

/// Maximizes W over the relaxation and certifies an upper bound.
pub fn solve(problem: &MomentProblem, opts: &SolverOptions) -> Result<Bound> {
    if !(opts.tol > 0.0) {
        return Err(Error::OutOfRange {
            what: "tolerance",
            value: opts.tol,
        });
    }
    let start = Instant::now();
    let lay = match opts.symmetry {
        true => Layout::symmetric(problem)?,
        false => None,
    };
    let lay = match lay {
        Some(l) => l,
        None => Layout::generic(problem)?,
    };
    log::debug!("solver layout: symmetric {}, {} blocks", lay.symmetric, lay.blocks.len());
    let nb = lay.blocks.len();
    let c0 = problem.objective_constant;

    let mut rho = opts.rho;
    // v = F̂ + U before projection; X = Π₊(v) and U = v − X.
    let mut v: Blocks = lay.zeros();
    let mut x_prev: Blocks = lay.zeros();
    let mut p = vec![0.0; lay.nplus()];
    let mut g = vec![0.0; lay.nclass()];
    g[lay.fixed_class] = 1.0;
    let mut aa = Anderson::new(opts.anderson_memory);
    // Plain T(v) of the last step and its residual norm, for the safeguard.
    let mut fallback: Option<(Blocks, f64)> = None;
    let mut accelerated = false;

    let mut best_ub = f64::INFINITY;
    let mut primal = f64::NAN;
    let mut r_prim = f64::INFINITY;
    let mut status = BoundStatus::GapLimited;
    let mut iterations = 0;

    for it in 1..=opts.max_iter {
        iterations = it;
        let mut x = Vec::with_capacity(nb);
        let mut u = Vec::with_capacity(nb);
        for (bm, vb) in lay.blocks.iter().zip(&v) {
            let (vals, vecs) = eigh(bm.n, vb)?;
            let xb = spectral_map(bm.n, &vals, &vecs, |l| l.max(0.0));
            u.push(vb.iter().zip(&xb).map(|(a, b)| a - b).collect::<Vec<f64>>());
            x.push(xb);
        }

        if opts.adaptive_rho && it % ADAPT_EVERY == 0 {
            let eps_p = r_prim / dot(&x, &x).sqrt().max(1e-12);
            let s = diff(&x, &x_prev);
            let eps_d = dot(&s, &s).sqrt() / dot(&u, &u).sqrt().max(1e-12);
            let scale = (eps_p / eps_d).sqrt().clamp(0.1, 10.0);
            if !(1.0 / 3.0..=3.0).contains(&scale) {
                rho *= scale;
                for ub in u.iter_mut() {
                    for w in ub.iter_mut() {
                        *w /= scale;
                    }
                }
                aa.reset();
                fallback = None;
            }
        }

        // m-update
        let (mut a, mut b) = lay.adjoint(&diff(&x, &u));
        for (ai, ci) in a.iter_mut().zip(&lay.c_plus) {
            *ai += ci / rho;
        }
        for (bi, ci) in b.iter_mut().zip(&lay.c_class) {
            *bi += ci / rho;
        }
        (p, g) = lay.gram_solve(&a, &b, 1.0);
        let fm = lay.forward(&p, &g);

        let t: Blocks = (0..nb)
            .map(|bi| {
                fm[bi]
                    .iter()
                    .zip(&x[bi])
                    .zip(&u[bi])
                    .map(|((f, xo), w)| opts.alpha * f + (1.0 - opts.alpha) * xo + w)
                    .collect()
            })
            .collect();
        let res = diff(&t, &v);
        let res_norm = dot(&res, &res).sqrt();
        let r_fm = diff(&fm, &x);
        r_prim = dot(&r_fm, &r_fm).sqrt();
        let s = diff(&x, &x_prev);
        let r_dual = rho * dot(&s, &s).sqrt();
        if !r_prim.is_finite() || !r_dual.is_finite() || !res_norm.is_finite() {
            status = BoundStatus::NumericalFailure;
            break;
        }

        if it % opts.check_every == 0 || it == opts.max_iter {
            let z: Blocks = u.iter().map(|ub| ub.iter().map(|w| -rho * w).collect()).collect();
            let ub = c0 + lay.certify(&z)?;
            if ub.is_finite() {
                best_ub = best_ub.min(ub);
            }
            primal = c0 + lay.objective(&p, &g);
            let gap = best_ub - primal;
            if opts.verbose {
                eprintln!(
                    "it {it:6} rho {rho:.3e} primal {primal:.7} bound {best_ub:.7} gap {gap:.2e} r_p {r_prim:.2e} r_d {r_dual:.2e}"
                );
            }
            if gap.abs() <= opts.tol && r_prim <= opts.tol {
                status = BoundStatus::Optimal;
                break;
            }
            if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
                break;
            }
        }

        // Reject an accelerated point whose residual grew.
        if accelerated {
            if let Some((plain, prev_norm)) = fallback.take() {
                if res_norm > prev_norm {
                    aa.reset();
                    v = plain;
                    accelerated = false;
                    continue;
                }
            }
        }
        x_prev = x;
        let next = aa.step(&t, &res);
        accelerated = opts.anderson_memory > 0;
        fallback = Some((t, res_norm));
        v = next;
    }
    if status != BoundStatus::NumericalFailure && !best_ub.is_finite() {
        status = BoundStatus::NumericalFailure;
    }
    if status == BoundStatus::NumericalFailure {
        log::warn!("solver diverged at iteration {iterations}");
    }
    let primal = if primal.is_nan() { c0 + lay.objective(&p, &g) } else { primal };
    Ok(Bound {
        level: problem.level.to_string(),
        partial_transpose: problem.enforce_pt,
        primal,
        dual: best_ub,
        gap: (best_ub - primal).max(0.0),
        status,
        iterations,
        wall_time: start.elapsed().as_secs_f64(),
        tolerance: opts.tol,
        primal_residual: r_prim,
    })
}
