//! Smallest singular values of shifted matrices.
//!
//! The matrix is reduced once to complex Schur form `A = Q R Q^*`; since `Q`
//! is unitary, `sigma_min(A - z) = sigma_min(R - z)`. For each shift a
//! Lanczos iteration with full reorthogonalization runs on
//! `(R - z)^{-1} (R - z)^{-*}`, whose largest eigenvalue is `sigma_min^{-2}`.
//! Each Lanczos step costs two triangular solves.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::eig::schur_in_place;
use super::to_row_major;
use crate::error::{Error, Result};

const MAX_LANCZOS: usize = 80;
const STALL_STEPS: usize = 3;

/// Schur factor of a square matrix prepared for repeated `sigma_min` queries.
#[derive(Debug, Clone)]
pub struct ShiftedSolver {
    n: usize,
    r: Vec<Complex64>,
    norm: f64,
}

impl ShiftedSolver {
    pub fn new(m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidSize(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        let n = m.nrows();
        let mut r = to_row_major(m);
        schur_in_place(&mut r, n, false)?;
        let norm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok(Self { n, r, norm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Eigenvalues read off the diagonal of the Schur factor.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.r[i * self.n + i]).collect()
    }

    fn pivots(&self, z: Complex64) -> Vec<Complex64> {
        let floor = (f64::EPSILON * self.norm).max(f64::MIN_POSITIVE);
        (0..self.n)
            .map(|i| {
                let d = self.r[i * self.n + i] - z;
                if d.norm() < floor {
                    Complex64::new(floor, 0.0)
                } else {
                    d
                }
            })
            .collect()
    }

    /// Solves `(R - z) x = b` in place.
    fn solve_upper(&self, piv: &[Complex64], x: &mut [Complex64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let row = &self.r[i * n..(i + 1) * n];
            let mut s = x[i];
            for j in i + 1..n {
                s -= row[j] * x[j];
            }
            x[i] = s / piv[i];
        }
    }

    /// Solves `(R - z)^* y = b` in place (column-oriented forward sweep).
    fn solve_upper_adjoint(&self, piv: &[Complex64], y: &mut [Complex64]) {
        let n = self.n;
        for i in 0..n {
            let yi = y[i] / piv[i].conj();
            y[i] = yi;
            let row = &self.r[i * n..(i + 1) * n];
            for k in i + 1..n {
                y[k] -= row[k].conj() * yi;
            }
        }
    }

    /// Smallest singular value of `A - z`.
    pub fn sigma_min(&self, z: Complex64) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        let piv = self.pivots(z);
        if n == 1 {
            return piv[0].norm();
        }
        let kmax = n.min(MAX_LANCZOS);
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(kmax + 1);
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| {
                let a = ((i * 7919 + 3) % 101) as f64 / 101.0;
                let b = ((i * 104_729 + 11) % 97) as f64 / 97.0;
                Complex64::new(1.0 + a, b - 0.5)
            })
            .collect();
        normalize(&mut v);
        basis.push(v);

        let mut alpha: Vec<f64> = Vec::with_capacity(kmax);
        let mut beta: Vec<f64> = Vec::with_capacity(kmax);
        let mut theta_prev = 0.0;
        let mut stalls = 0;
        let mut theta = 0.0;
        for k in 0..kmax {
            let mut w = basis[k].clone();
            self.solve_upper_adjoint(&piv, &mut w);
            self.solve_upper(&piv, &mut w);
            let a = dot(&basis[k], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let h = dot(q, &w);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= h * qi;
                    }
                }
            }
            let b = norm2(&w);
            theta = largest_tridiagonal_eigenvalue(&alpha, &beta);
            if k + 1 == kmax || b <= 1e-14 * theta.max(f64::MIN_POSITIVE) {
                break;
            }
            if (theta - theta_prev).abs() <= 1e-15 * theta {
                stalls += 1;
                if stalls >= STALL_STEPS {
                    break;
                }
            } else {
                stalls = 0;
            }
            theta_prev = theta;
            beta.push(b);
            for wi in w.iter_mut() {
                *wi /= b;
            }
            basis.push(w);
        }
        if theta <= 0.0 {
            return f64::INFINITY;
        }
        1.0 / theta.sqrt()
    }
}

#[inline]
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[inline]
fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(a: &mut [Complex64]) {
    let nrm = norm2(a);
    for x in a.iter_mut() {
        *x /= nrm;
    }
}

/// Number of eigenvalues of the symmetric tridiagonal `(alpha, beta)` below `x`.
fn sturm_count(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..alpha.len() {
        let off = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] / d };
        d = alpha[i] - x - off;
        if d == 0.0 {
            d = -f64::EPSILON * (alpha[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Largest eigenvalue of a symmetric tridiagonal matrix by Sturm bisection.
pub(crate) fn largest_tridiagonal_eigenvalue(alpha: &[f64], beta: &[f64]) -> f64 {
    let k = alpha.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let left = if i > 0 { beta[i - 1].abs() } else { 0.0 };
        let right = if i < k - 1 { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - left - right);
        hi = hi.max(alpha[i] + left + right);
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return hi;
        }
        if sturm_count(alpha, beta, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// Smallest singular value of `m - z I`.
pub fn sigma_min(m: &DMatrix<Complex64>, z: Complex64) -> Result<f64> {
    Ok(ShiftedSolver::new(m)?.sigma_min(z))
}
