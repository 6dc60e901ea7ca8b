//! Dense complex linear algebra for a handful of qubits.
//!
//! Everything here is sized for the entanglement-swapping network: at most
//! four qubits (16×16 operators). Values are immutable once built and the
//! validating constructors enforce the usual physical invariants.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on exact algebraic identities (Hermiticity, unit trace).
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance on eigenvalue positivity and on dichotomic squares.
pub const EIGEN_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, entries)))
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(rows, cols, &c)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    /// |ψ⟩⟨ψ| for an (unnormalized) ket.
    pub fn outer(ket: &[Complex64]) -> Self {
        let n = ket.len();
        Self::from_fn(n, n, |i, j| ket[i] * ket[j].conj())
    }

    pub fn from_inner(m: DMatrix<Complex64>) -> Self {
        Self(m)
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * Complex64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self(&self.0 * s)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape(), "shape mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_defect() <= tol
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Eigen-decomposition of the Hermitian part: (values, column eigenvectors).
    pub fn hermitian_eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let h = (&self.0 + self.0.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    }

    /// Applies f to the spectrum of the Hermitian part.
    pub fn hermitian_map(&self, f: impl Fn(f64) -> f64) -> Self {
        let (vals, vecs) = self.hermitian_eigen();
        let d = DVector::from_iterator(vals.len(), vals.iter().map(|&v| Complex64::new(f(v), 0.0)));
        Self(&vecs * DMatrix::from_diagonal(&d) * vecs.adjoint())
    }

    /// ⟨ψ|M|ψ⟩
    pub fn expectation(&self, ket: &[Complex64]) -> Complex64 {
        let v = DVector::from_column_slice(ket);
        (v.adjoint() * &self.0 * &v)[(0, 0)]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix{}", self.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

/// Kronecker product, `a` on the most significant index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    let mut it = factors.into_iter();
    let first = it.next().expect("kron_all needs at least one factor").clone();
    it.fold(first, |acc, m| kron(&acc, m))
}

pub fn identity2() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, &[ZERO, ONE, ONE, ZERO]).unwrap()
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, &[ZERO, -I, I, ZERO]).unwrap()
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::new(2, 2, &[ONE, ZERO, ZERO, -ONE]).unwrap()
}

/// (a·σ_X + b·σ_Y + c·σ_Z) normalized to unit Bloch length.
pub fn bloch_observable(x: f64, y: f64, z: f64) -> ComplexMatrix {
    let n = (x * x + y * y + z * z).sqrt();
    let sx = pauli_x().scale(x / n);
    let sy = pauli_y().scale(y / n);
    let sz = pauli_z().scale(z / n);
    &(&sx + &sy) + &sz
}

/// Reduced operator on `keep`, for any square operator over subsystems `dims`.
pub fn partial_trace_matrix(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != m.rows() || !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {dims:?} do not factor a {}x{} operator",
            m.rows(),
            m.cols()
        )));
    }
    if keep.is_empty() {
        return Err(Error::DimensionMismatch("keep set is empty".into()));
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::IndexOutOfRange {
                what: "subsystem",
                index: k,
                bound: dims.len(),
            });
        }
        kept[k] = true;
    }
    let kept_dims: Vec<usize> = (0..dims.len()).filter(|&i| kept[i]).map(|i| dims[i]).collect();
    let traced_dims: Vec<usize> = (0..dims.len()).filter(|&i| !kept[i]).map(|i| dims[i]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // digit strings of a composite index, most significant subsystem first
    let split = |mut idx: usize, ds: &[usize]| -> Vec<usize> {
        let mut out = vec![0; ds.len()];
        for p in (0..ds.len()).rev() {
            out[p] = idx % ds[p];
            idx /= ds[p];
        }
        out
    };
    let join = |kd: &[usize], td: &[usize]| -> usize {
        let (mut ki, mut ti) = (0, 0);
        let mut idx = 0;
        for (p, &d) in dims.iter().enumerate() {
            let digit = if kept[p] {
                ki += 1;
                kd[ki - 1]
            } else {
                ti += 1;
                td[ti - 1]
            };
            idx = idx * d + digit;
        }
        idx
    };

    let mut out = DMatrix::<Complex64>::zeros(dk, dk);
    for r in 0..dk {
        let rd = split(r, &kept_dims);
        for c in 0..dk {
            let cd = split(c, &kept_dims);
            let mut acc = ZERO;
            for t in 0..dt {
                let td = split(t, &traced_dims);
                acc += m.0[(join(&rd, &td), join(&cd, &td))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(ComplexMatrix(out))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.rows();
        if !matrix.is_square() || !n.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square with power-of-two dimension, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_defect();
        if herm > EXACT_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > EXACT_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min_ev = matrix.hermitian_eigenvalues()[0];
        if min_ev < -EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_ev:e}")));
        }
        Ok(Self { matrix })
    }

    /// Normalizes a positive operator to unit trace, returning it with its weight.
    pub fn normalized(matrix: ComplexMatrix) -> Result<(Self, f64)> {
        let w = matrix.trace().re;
        if w <= 0.0 {
            return Err(Error::InvalidState(format!("cannot normalize weight {w}")));
        }
        let scaled = matrix.scale(1.0 / w);
        // enforce exact Hermiticity lost to rounding in upstream products
        let sym = (&scaled + &scaled.dagger()).scale(0.5);
        Ok((Self::new(sym)?, w))
    }

    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let norm2: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        let scaled: Vec<Complex64> = ket.iter().map(|z| z / norm2.sqrt()).collect();
        Self::new(ComplexMatrix::outer(&scaled))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// tr(ρ O), real part.
    pub fn expect(&self, op: &ComplexMatrix) -> f64 {
        (self.matrix.inner() * op.inner()).trace().re
    }
}

/// Product state ρ ⊗ σ.
pub fn kron_states(a: &DensityMatrix, b: &DensityMatrix) -> DensityMatrix {
    DensityMatrix {
        matrix: kron(&a.matrix, &b.matrix),
    }
}

pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(&rho.matrix, dims, keep)?;
    let sym = (&reduced + &reduced.dagger()).scale(0.5);
    DensityMatrix::new(sym)
}

/// The four Bell states, in the order that labels Bob's settings y = 0..3.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiMinus,
    PsiPlus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiMinus,
        BellState::PsiPlus,
    ];

    pub fn from_index(k: usize) -> Result<Self> {
        Self::ALL.get(k).copied().ok_or(Error::IndexOutOfRange {
            what: "bell state",
            index: k,
            bound: 4,
        })
    }

    pub fn ket(self) -> [Complex64; 4] {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match self {
            BellState::PhiPlus => [h, ZERO, ZERO, h],
            BellState::PhiMinus => [h, ZERO, ZERO, -h],
            BellState::PsiMinus => [ZERO, h, -h, ZERO],
            BellState::PsiPlus => [ZERO, h, h, ZERO],
        }
    }

    pub fn projector(self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.ket())
    }
}

pub fn bell_state(k: usize) -> Result<DensityMatrix> {
    let b = BellState::from_index(k)?;
    DensityMatrix::new(b.projector())
}

/// Uhlmann fidelity (tr √(√ρ σ √ρ))².
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "fidelity between dims {} and {}",
            rho.dim(),
            sigma.dim()
        )));
    }
    let sqrt_rho = rho.matrix.hermitian_map(|v| v.max(0.0).sqrt());
    let inner = &(&sqrt_rho * &sigma.matrix) * &sqrt_rho;
    let root_trace: f64 = inner
        .hermitian_eigenvalues()
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// Dichotomic (±1-valued) Hermitian observable.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidObservable("not square".into()));
        }
        let herm = matrix.hermiticity_defect();
        if herm > EXACT_TOL {
            return Err(Error::InvalidObservable(format!("not Hermitian (defect {herm:e})")));
        }
        let sq = &matrix * &matrix;
        let defect = sq.max_abs_diff(&ComplexMatrix::identity(matrix.rows()));
        if defect > EIGEN_TOL {
            return Err(Error::InvalidObservable(format!(
                "does not square to identity (defect {defect:e})"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Projector onto the `outcome` eigenspace, (I + outcome·O)/2.
    pub fn projector(&self, outcome: i8) -> ComplexMatrix {
        let id = ComplexMatrix::identity(self.matrix.rows());
        let signed = self.matrix.scale(outcome as f64);
        (&id + &signed).scale(0.5)
    }

    pub fn negated(&self) -> Self {
        Self {
            matrix: self.matrix.scale(-1.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(vals: &[f64]) -> ComplexMatrix {
        let n = vals.len();
        ComplexMatrix::from_fn(n, n, |i, j| if i == j { Complex64::new(vals[i], 0.0) } else { ZERO })
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&identity2(), &identity2()), ComplexMatrix::identity(4));
        assert_eq!(kron(&pauli_z(), &pauli_z()), diag(&[1.0, -1.0, -1.0, 1.0]));
        // X⊗Y: top-right 2x2 block is Y, whose (0,1) entry is -i
        let xy = kron(&pauli_x(), &pauli_y());
        assert_eq!(xy.get(0, 3), -I);
        assert_eq!(xy.get(3, 0), I);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let phi = bell_state(0).unwrap();
        let r = partial_trace(&phi, &[2, 2], &[0]).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < EXACT_TOL);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let rho = DensityMatrix::pure(&[ONE, I]).unwrap();
        let sigma = bell_state(2).unwrap();
        let prod = kron_states(&rho, &sigma);
        let back = partial_trace(&prod, &[2, 4], &[1]).unwrap();
        assert!(back.matrix().max_abs_diff(sigma.matrix()) < EXACT_TOL);
        let front = partial_trace(&prod, &[2, 2, 2], &[0]).unwrap();
        assert!(front.matrix().max_abs_diff(rho.matrix()) < EXACT_TOL);
    }

    #[test]
    fn partial_trace_errors() {
        let phi = bell_state(0).unwrap();
        assert!(matches!(
            partial_trace(&phi, &[2, 4], &[0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(partial_trace(&phi, &[2, 2], &[]).is_err());
        assert!(partial_trace(&phi, &[2, 2], &[2]).is_err());
    }

    #[test]
    fn bell_states_by_definition() {
        let p0 = bell_state(0).unwrap();
        assert_abs_diff_eq!(p0.matrix().get(0, 3).re, 0.5, epsilon = 1e-15);
        let p2 = bell_state(2).unwrap();
        assert_abs_diff_eq!(p2.matrix().get(1, 2).re, -0.5, epsilon = 1e-15);
        assert!(bell_state(4).is_err());
        for a in 0..4 {
            for b in 0..4 {
                let f = fidelity(&bell_state(a).unwrap(), &bell_state(b).unwrap()).unwrap();
                let want = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(f, want, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn fidelity_closed_forms() {
        let phi = bell_state(0).unwrap();
        let mixed = DensityMatrix::maximally_mixed(4).unwrap();
        assert_abs_diff_eq!(fidelity(&phi, &mixed).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&mixed, &phi).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity(&mixed, &mixed).unwrap(), 1.0, epsilon = 1e-12);
        let one = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(fidelity(&phi, &one).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(diag(&[0.5, 0.6])).is_err());
        assert!(DensityMatrix::new(diag(&[1.5, -0.5])).is_err());
        assert!(DensityMatrix::new(pauli_x()).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::identity(3).scale(1.0 / 3.0)).is_err());
        assert!(ComplexMatrix::new(0, 2, &[]).is_err());
        assert!(ComplexMatrix::from_real(1, 1, &[f64::NAN]).is_err());
    }

    #[test]
    fn observables_are_dichotomic() {
        for o in [pauli_x(), pauli_y(), pauli_z(), bloch_observable(1.0, 1.0, 0.0)] {
            let obs = Observable::new(o).unwrap();
            let p = obs.projector(1);
            assert!((&p * &p).max_abs_diff(&p) < EXACT_TOL);
        }
        assert!(Observable::new(pauli_x().scale(2.0)).is_err());
    }
}
