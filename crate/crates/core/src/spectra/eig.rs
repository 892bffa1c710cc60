//! Dense nonsymmetric eigensolver.
//!
//! The pipeline is the classical one: optional diagonal balancing, Householder
//! reduction to upper Hessenberg form, then an implicitly shifted single-shift
//! complex QR iteration with Wilkinson shifts and aggressive-free deflation.
//! Work arrays are row-major `Vec<Complex64>` of length `n * n`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ULP: f64 = f64::EPSILON;
const SAFE_MIN: f64 = f64::MIN_POSITIVE / f64::EPSILON;
const SWEEPS_PER_DIM: usize = 30;

#[inline]
fn l1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Parlett-Reinsch balancing with radix-2 scale factors. Returns the diagonal
/// scaling `d` such that the balanced matrix is `D^{-1} A D`.
pub(crate) fn balance(a: &mut [Complex64], n: usize) -> Vec<f64> {
    let mut scale = vec![1.0; n];
    if n < 2 {
        return scale;
    }
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].norm();
                    r += a[i * n + j].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc >= rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if cc + rr < 0.95 * s {
                converged = false;
                scale[i] *= f;
                for j in 0..n {
                    a[i * n + j] /= f;
                    a[j * n + i] *= f;
                }
            }
        }
    }
    scale
}

/// Householder reduction to upper Hessenberg form, `A <- Q^* A Q`.
/// When `q` is given it is overwritten with the accumulated unitary `Q`.
pub(crate) fn hessenberg(a: &mut [Complex64], n: usize, mut q: Option<&mut [Complex64]>) {
    if let Some(q) = q.as_deref_mut() {
        q.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for i in 0..n {
            q[i * n + i] = Complex64::new(1.0, 0.0);
        }
    }
    if n < 3 {
        return;
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += a[i * n + k].norm_sqr();
        }
        let tail = norm2 - a[(k + 1) * n + k].norm_sqr();
        if tail <= SAFE_MIN {
            continue;
        }
        let norm = norm2.sqrt();
        let x0 = a[(k + 1) * n + k];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        v.fill(Complex64::new(0.0, 0.0));
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = a[i * n + k];
        }
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // A <- H A, H = I - beta v v^*
        for j in k..n {
            let mut s = Complex64::new(0.0, 0.0);
            for i in k + 1..n {
                s += v[i].conj() * a[i * n + j];
            }
            s *= beta;
            for i in k + 1..n {
                a[i * n + j] -= v[i] * s;
            }
        }
        // A <- A H
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in k + 1..n {
                s += a[i * n + j] * v[j];
            }
            s *= beta;
            for j in k + 1..n {
                a[i * n + j] -= s * v[j].conj();
            }
        }
        a[(k + 1) * n + k] = alpha;
        for i in k + 2..n {
            a[i * n + k] = Complex64::new(0.0, 0.0);
        }
        if let Some(q) = q.as_deref_mut() {
            for i in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for j in k + 1..n {
                    s += q[i * n + j] * v[j];
                }
                s *= beta;
                for j in k + 1..n {
                    q[i * n + j] -= s * v[j].conj();
                }
            }
        }
    }
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with
/// `G [x; y] = [r; 0]`.
#[inline]
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64, Complex64) {
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0), x);
    }
    let ax = x.norm();
    if ax == 0.0 {
        return (0.0, y.conj() / ay, Complex64::new(ay, 0.0));
    }
    let norm = ax.hypot(ay);
    let phase = x / ax;
    (ax / norm, phase * y.conj() / norm, phase * norm)
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
#[inline]
fn wilkinson(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let p = (a - d) * 0.5;
    let bc = b * c;
    let mut r = (p * p + bc).sqrt();
    if (p.conj() * r).re < 0.0 {
        r = -r;
    }
    let den = p + r;
    if den.norm() == 0.0 {
        d
    } else {
        d - bc / den
    }
}

/// Implicitly shifted QR on an upper Hessenberg matrix. On success the
/// matrix is upper triangular (when `full`) or has the eigenvalues on its
/// diagonal (eigenvalues-only mode, which skips the off-window updates).
pub(crate) fn hqr(
    h: &mut [Complex64],
    n: usize,
    mut q: Option<&mut [Complex64]>,
    full: bool,
) -> Result<()> {
    if n < 2 {
        return Ok(());
    }
    let max_sweeps = SWEEPS_PER_DIM * n;
    let mut sweeps = 0usize;
    let mut its = 0usize;
    let mut hi = n - 1;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = l1(h[l * n + l - 1]);
            if sub <= SAFE_MIN {
                h[l * n + l - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            let mut tst = l1(h[(l - 1) * n + l - 1]) + l1(h[l * n + l]);
            if tst == 0.0 {
                if l >= 2 {
                    tst += h[(l - 1) * n + l - 2].re.abs();
                }
                if l < hi {
                    tst += h[(l + 1) * n + l].re.abs();
                }
            }
            if sub <= ULP * tst {
                h[l * n + l - 1] = Complex64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence { sweeps, dim: n });
        }
        let shift = if its == 10 {
            h[l * n + l] + 0.75 * h[(l + 1) * n + l].re.abs()
        } else if its == 20 {
            h[hi * n + hi] + 0.75 * h[hi * n + hi - 1].re.abs()
        } else {
            wilkinson(
                h[(hi - 1) * n + hi - 1],
                h[(hi - 1) * n + hi],
                h[hi * n + hi - 1],
                h[hi * n + hi],
            )
        };
        let col_end = if full { n } else { hi + 1 };
        let row_start = if full { 0 } else { l };
        for k in l..hi {
            let (x, y) = if k == l {
                (h[l * n + l] - shift, h[(l + 1) * n + l])
            } else {
                (h[k * n + k - 1], h[(k + 1) * n + k - 1])
            };
            let (c, s, r) = givens(x, y);
            let first_col = if k == l {
                l
            } else {
                h[k * n + k - 1] = r;
                h[(k + 1) * n + k - 1] = Complex64::new(0.0, 0.0);
                k
            };
            let sc = s.conj();
            for j in first_col..col_end {
                let a = h[k * n + j];
                let b = h[(k + 1) * n + j];
                h[k * n + j] = a * c + s * b;
                h[(k + 1) * n + j] = b * c - sc * a;
            }
            let last_row = (k + 2).min(hi);
            for i in row_start..=last_row {
                let a = h[i * n + k];
                let b = h[i * n + k + 1];
                h[i * n + k] = a * c + b * sc;
                h[i * n + k + 1] = b * c - a * s;
            }
            if let Some(q) = q.as_deref_mut() {
                for i in 0..n {
                    let a = q[i * n + k];
                    let b = q[i * n + k + 1];
                    q[i * n + k] = a * c + b * sc;
                    q[i * n + k + 1] = b * c - a * s;
                }
            }
        }
        its += 1;
        sweeps += 1;
    }
    Ok(())
}

/// Eigenvalues of a row-major `n x n` matrix. The buffer is destroyed.
pub(crate) fn eigenvalues_in_place(a: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![a[0]]),
        2 => return Ok(eig2(a[0], a[1], a[2], a[3]).to_vec()),
        _ => {}
    }
    balance(a, n);
    hessenberg(a, n, None);
    hqr(a, n, None, false)?;
    Ok((0..n).map(|i| a[i * n + i]).collect())
}

/// Both eigenvalues of `[[a, b], [c, d]]`, computed without cancellation in
/// the smaller root.
pub(crate) fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> [Complex64; 2] {
    let tr = a + d;
    let det = a * d - b * c;
    quadratic_roots(tr, det)
}

/// Roots of `x^2 - tr x + det`.
pub(crate) fn quadratic_roots(tr: Complex64, det: Complex64) -> [Complex64; 2] {
    let mut disc = (tr * tr - 4.0 * det).sqrt();
    if (tr.conj() * disc).re < 0.0 {
        disc = -disc;
    }
    let big = (tr + disc) * 0.5;
    if big.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    [big, det / big]
}

/// Upper triangular Schur factor `T` (row-major) and, optionally, the unitary
/// `Q` with `A = Q T Q^*`. No balancing is applied, so singular values of
/// `T - z` equal those of `A - z`.
pub(crate) fn schur_in_place(
    a: &mut [Complex64],
    n: usize,
    want_q: bool,
) -> Result<Option<Vec<Complex64>>> {
    let mut q = if want_q { Some(vec![Complex64::new(0.0, 0.0); n * n]) } else { None };
    hessenberg(a, n, q.as_deref_mut());
    hqr(a, n, q.as_deref_mut(), true)?;
    for i in 1..n {
        for j in 0..i {
            a[i * n + j] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(q)
}

/// Right eigenvectors of an upper triangular matrix by back substitution.
/// Column `k` of the returned row-major matrix belongs to eigenvalue `t[k][k]`.
pub(crate) fn triangular_eigenvectors(t: &[Complex64], n: usize) -> Vec<Complex64> {
    let tnorm = t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(SAFE_MIN);
    let small = ULP * tnorm;
    let mut y = vec![Complex64::new(0.0, 0.0); n * n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let lambda = t[k * n + k];
        col.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        col[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[i * n + j] * col[j];
            }
            let mut d = t[i * n + i] - lambda;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            col[i] = -s / d;
            // rescale to avoid overflow in long chains
            let m = col[i].norm();
            if m > 1e100 {
                for x in col[i..=k].iter_mut() {
                    *x /= m;
                }
            }
        }
        for i in 0..n {
            y[i * n + k] = col[i];
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn givens_zeroes_second_component() {
        let (cc, s, r) = givens(c(0.3, -1.2), c(-0.7, 0.4));
        let top = c(0.3, -1.2) * cc + s * c(-0.7, 0.4);
        let bottom = c(-0.7, 0.4) * cc - s.conj() * c(0.3, -1.2);
        assert!((top - r).norm() < 1e-15);
        assert!(bottom.norm() < 1e-15);
    }

    #[test]
    fn quadratic_roots_are_accurate_for_tiny_product() {
        let roots = quadratic_roots(c(1.0, 0.0), c(1e-20, 0.0));
        let mut mags: Vec<f64> = roots.iter().map(|z| z.norm()).collect();
        mags.sort_by(f64::total_cmp);
        assert!((mags[0] - 1e-20).abs() < 1e-34);
    }

    #[test]
    fn hessenberg_preserves_eigenvalues_of_triangular_input() {
        let n = 5;
        let mut a = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in i..n {
                a[i * n + j] = c((i + 2 * j) as f64 * 0.1, (j as f64) * 0.05);
            }
        }
        let mut ev = eigenvalues_in_place(&mut a.clone(), n).unwrap();
        ev.sort_by(|x, y| x.re.total_cmp(&y.re));
        for (i, z) in ev.iter().enumerate() {
            let expect = c((3 * i) as f64 * 0.1, i as f64 * 0.05);
            assert!((z - expect).norm() < 1e-13, "{z} vs {expect}");
        }
        a.clear();
    }
}
