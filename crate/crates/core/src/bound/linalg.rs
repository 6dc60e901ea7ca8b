//! Dense real symmetric eigen-decomposition on row-major buffers.

use faer::{Mat, Side};

use crate::error::{Error, Result};

fn to_mat(n: usize, data: &[f64]) -> Mat<f64> {
    Mat::from_fn(n, n, |i, j| 0.5 * (data[i * n + j] + data[j * n + i]))
}

/// Eigenvalues (ascending) and eigenvectors as columns of a row-major buffer.
pub fn eigh(n: usize, data: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = to_mat(n, data);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::InvalidState(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let vals: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            vecs[i * n + j] = u[(i, j)];
        }
    }
    Ok((vals, vecs))
}

pub fn eigenvalues(n: usize, data: &[f64]) -> Result<Vec<f64>> {
    let m = to_mat(n, data);
    let mut v = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::InvalidState(format!("eigendecomposition failed: {e:?}")))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

pub fn min_eigenvalue(n: usize, data: &[f64]) -> Result<f64> {
    Ok(eigenvalues(n, data)?.first().copied().unwrap_or(0.0))
}

/// Rebuilds Σ f(λ_k) u_k u_kᵀ for the eigenpairs with f(λ) ≠ 0.
pub fn spectral_map(n: usize, vals: &[f64], vecs: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    let active: Vec<(usize, f64)> = vals
        .iter()
        .enumerate()
        .map(|(k, &l)| (k, f(l)))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    if active.is_empty() {
        return out;
    }
    // Scaled eigenvector panel V·diag(w) times Vᵀ.
    let r = active.len();
    let v = Mat::from_fn(n, r, |i, c| vecs[i * n + active[c].0]);
    let vw = Mat::from_fn(n, r, |i, c| vecs[i * n + active[c].0] * active[c].1);
    let prod = &vw * v.transpose();
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = prod[(i, j)];
        }
    }
    out
}

/// Nearest PSD matrix in Frobenius norm.
pub fn project_psd(n: usize, data: &[f64]) -> Result<Vec<f64>> {
    let (vals, vecs) = eigh(n, data)?;
    Ok(spectral_map(n, &vals, &vecs, |l| l.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_clips_negative_part() {
        let m = [2.0, 0.0, 0.0, -1.0];
        let p = project_psd(2, &m).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-12 && p[3].abs() < 1e-12);
        let ev = eigenvalues(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }
}
