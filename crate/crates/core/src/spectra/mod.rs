//! Dense numerical linear algebra for non-normal matrices.
//!
//! Eigenvalues come from our own balanced Hessenberg-QR solver; singular
//! value decompositions (polar factors, operator norms) are delegated to
//! `nalgebra`.

pub(crate) mod eig;
mod pseudo;
mod sigma;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use pseudo::{pseudospectrum, pseudospectrum_with, GridSpec, PseudospectrumGrid};
pub use sigma::{sigma_min, ShiftedSolver};

/// Eigenvalue multiset with per-pair backward errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub eigenvalues: Vec<Complex64>,
    /// `||m x - lambda x|| / ||m||_F` for unit eigenvectors `x`.
    pub residuals: Vec<f64>,
    pub tol: f64,
    pub source: String,
}

pub(crate) fn to_row_major(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn square(m: &DMatrix<Complex64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidSize(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// All eigenvalues of a square matrix (balanced Hessenberg QR).
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let n = square(m)?;
    let mut a = to_row_major(m);
    eig::eigenvalues_in_place(&mut a, n)
}

/// Eigenvalues of a small row-major matrix without allocation of a `DMatrix`.
/// The buffer is overwritten.
pub fn eigenvalues_row_major(a: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    if a.len() != n * n {
        return Err(Error::InvalidSize(format!("buffer of length {} for n = {n}", a.len())));
    }
    eig::eigenvalues_in_place(a, n)
}

/// Eigenvalues together with eigenvector backward errors. Fails when some
/// residual exceeds `tol`.
pub fn eigvals(m: &DMatrix<Complex64>, tol: f64) -> Result<SpectrumEstimate> {
    let n = square(m)?;
    let mut a = to_row_major(m);
    let scale = eig::balance(&mut a, n);
    let q = eig::schur_in_place(&mut a, n, true)?.unwrap_or_default();
    let y = eig::triangular_eigenvectors(&a, n);
    let mnorm = frobenius(m).max(f64::MIN_POSITIVE);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let lambda = a[k * n + k];
        // x = D Q y_k, only the leading k+1 entries of y_k are nonzero
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..=k {
                s += q[i * n + j] * y[j * n + k];
            }
            x[i] = s * scale[i];
        }
        let xn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in x.iter_mut() {
            *z /= xn;
        }
        let mut res = 0.0;
        for i in 0..n {
            let mut s = -lambda * x[i];
            for j in 0..n {
                s += m[(i, j)] * x[j];
            }
            res += s.norm_sqr();
        }
        eigenvalues.push(lambda);
        residuals.push(res.sqrt() / mnorm);
    }
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::Inaccurate { worst, tol });
    }
    Ok(SpectrumEstimate { eigenvalues, residuals, tol, source: format!("dense {n}x{n}") })
}

pub fn spectral_radius(m: &DMatrix<Complex64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Polar factors `m = V K` with `K = (m^* m)^{1/2}`.
#[derive(Debug, Clone)]
pub struct NumericPolar {
    pub v: DMatrix<Complex64>,
    pub k: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
    /// Set when `m` is numerically singular; `v` is then determined only on
    /// the range of `k`.
    pub rank_deficient: bool,
}

pub fn numeric_polar(m: &DMatrix<Complex64>) -> Result<NumericPolar> {
    let n = square(m)?;
    let svd = m.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::NoConvergence { sweeps: 0, dim: n }),
    };
    let sigma: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let rank_deficient = sigma.iter().any(|&s| s <= 1e-12 * smax.max(1.0));
    let v = &u * &vt;
    let mut sv = vt.adjoint();
    for (j, s) in sigma.iter().enumerate() {
        sv.column_mut(j).scale_mut(*s);
    }
    let k = sv * &vt;
    Ok(NumericPolar { v, k, singular_values: sigma, rank_deficient })
}
