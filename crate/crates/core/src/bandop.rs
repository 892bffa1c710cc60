//! Finite truncations of the band operator `T`, its polar factors, the block
//! coefficients of `V` and the doubled operator `T~`.
//!
//! Sites are `0..2M`, grouped into cells `(2j, 2j+1)`. Column `2j` is the
//! image of `e_{2j}`; the nonzero entries of cell `j` are
//!
//! ```text
//! [2j-1, 2j] = e^{i w_{2j-1}} gamma    [2j-1, 2j+1] = e^{i w_{2j-1}} delta
//! [2j+2, 2j] = e^{i w_{2j+2}} alpha    [2j+2, 2j+1] = e^{i w_{2j+2}} beta
//! ```
//!
//! with row indices wrapped modulo `2M` (periodic) or dropped (open). The
//! phase always follows the row, so `T = D T0` with `D = diag(e^{i w_j})`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::coin::{CoinContraction, UnitaryEmbedding};
use crate::error::{Error, Result};
use crate::phases::PhaseField;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    #[default]
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Self::Open),
            "periodic" => Ok(Self::Periodic),
            other => Err(Error::Config(format!("unknown boundary condition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandKind {
    T,
    V,
    K,
    Ttilde,
    Generic,
}

/// Sparse square matrix stored as sorted `(row, col, value)` triplets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMatrix {
    pub dim: usize,
    pub bc: Boundary,
    pub kind: BandKind,
    entries: Vec<(usize, usize, Complex64)>,
}

impl BandMatrix {
    /// Sums duplicate positions and drops exact zeros.
    pub fn from_triplets(
        dim: usize,
        bc: Boundary,
        kind: BandKind,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (i, j, x) in triplets {
            debug_assert!(i < dim && j < dim);
            *map.entry((i, j)).or_insert(ZERO) += x;
        }
        let entries = map.into_iter().filter(|(_, x)| *x != ZERO).map(|((i, j), x)| (i, j, x)).collect();
        Self { dim, bc, kind, entries }
    }

    pub fn identity(dim: usize, bc: Boundary) -> Self {
        Self::from_triplets(dim, bc, BandKind::Generic, (0..dim).map(|i| (i, i, ONE)))
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match self.entries.binary_search_by(|e| (e.0, e.1).cmp(&(i, j))) {
            Ok(k) => self.entries[k].2,
            Err(_) => ZERO,
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, x) in &self.entries {
            m[(i, j)] = x;
        }
        m
    }

    pub fn with_kind(mut self, kind: BandKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn matmul(&self, rhs: &BandMatrix) -> Result<BandMatrix> {
        if self.dim != rhs.dim {
            return Err(Error::InvalidSize(format!("dimensions {} and {} differ", self.dim, rhs.dim)));
        }
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); rhs.dim];
        for &(k, j, x) in &rhs.entries {
            rows[k].push((j, x));
        }
        let out = self
            .entries
            .iter()
            .flat_map(|&(i, k, a)| rows[k].iter().map(move |&(j, b)| (i, j, a * b)));
        Ok(BandMatrix::from_triplets(self.dim, self.bc, BandKind::Generic, out))
    }

    pub fn adjoint(&self) -> BandMatrix {
        BandMatrix::from_triplets(self.dim, self.bc, self.kind, self.entries.iter().map(|&(i, j, x)| (j, i, x.conj())))
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &BandMatrix) -> f64 {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(i, j, x) in &self.entries {
            *map.entry((i, j)).or_insert(ZERO) += x;
        }
        for &(i, j, x) in &rhs.entries {
            *map.entry((i, j)).or_insert(ZERO) -= x;
        }
        map.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self^* self - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let Ok(p) = self.adjoint().matmul(self) else { return f64::INFINITY };
        p.max_abs_diff(&BandMatrix::identity(self.dim, self.bc))
    }
}

/// Builds the band matrix of a 2x2 coin with the site phases of `phases`.
pub fn build_from_coin(
    c0: &CoinContraction,
    phases: &PhaseField,
    m: usize,
    bc: Boundary,
    kind: BandKind,
) -> Result<BandMatrix> {
    if m < 2 {
        return Err(Error::InvalidSize(format!("M = {m} < 2")));
    }
    let dim = 2 * m;
    phases.require_sites(dim)?;
    let mut triplets = Vec::with_capacity(4 * m);
    for j in 0..m as i64 {
        for (row, left, right) in [(2 * j - 1, c0.gamma, c0.delta), (2 * j + 2, c0.alpha, c0.beta)] {
            let r = match bc {
                Boundary::Periodic => row.rem_euclid(dim as i64),
                Boundary::Open if (0..dim as i64).contains(&row) => row,
                Boundary::Open => continue,
            } as usize;
            let ph = Complex64::from_polar(1.0, phases.wrapped(r as i64, dim));
            triplets.push((r, 2 * j as usize, ph * left));
            triplets.push((r, 2 * j as usize + 1, ph * right));
        }
    }
    Ok(BandMatrix::from_triplets(dim, bc, kind, triplets))
}

pub fn build_t(emb: &UnitaryEmbedding, phases: &PhaseField, m: usize, bc: Boundary) -> Result<BandMatrix> {
    build_from_coin(&emb.contraction(), phases, m, bc, BandKind::T)
}

/// `T0`, the operator at zero phases.
pub fn build_t0(emb: &UnitaryEmbedding, m: usize, bc: Boundary) -> Result<BandMatrix> {
    build_from_coin(&emb.contraction(), &PhaseField::zero(2 * m), m, bc, BandKind::T)
}

/// `diag(e^{i w_j})` on the sites `0..dim`.
pub fn phase_diagonal(phases: &PhaseField, dim: usize, bc: Boundary) -> Result<BandMatrix> {
    phases.require_sites(dim)?;
    Ok(BandMatrix::from_triplets(
        dim,
        bc,
        BandKind::Generic,
        (0..dim).map(|j| (j, j, Complex64::from_polar(1.0, phases.wrapped(j as i64, dim)))),
    ))
}

/// Per-cell eigenvectors of `K`: `v1` for eigenvalue 1, `v2` for `g`.
pub fn cell_eigenvectors(emb: &UnitaryEmbedding) -> Result<([Complex64; 2], [Complex64; 2])> {
    let n = (emb.q.norm_sqr() + emb.s.norm_sqr()).sqrt();
    if emb.is_unitary_limit() || n == 0.0 {
        return Err(Error::UnitaryLimit("K has the single eigenvalue 1"));
    }
    Ok(([emb.s / n, -emb.q / n], [emb.q.conj() / n, emb.s.conj() / n]))
}

/// Coin of the unitary polar factor `V`.
pub fn v_coin(emb: &UnitaryEmbedding) -> CoinContraction {
    let h = 1.0 + emb.g;
    CoinContraction::new(
        (emb.alpha * h - emb.q * emb.r) / h,
        (emb.beta * h - emb.s * emb.r) / h,
        (emb.gamma * h - emb.q * emb.t) / h,
        (emb.delta * h - emb.s * emb.t) / h,
    )
}

#[derive(Debug, Clone)]
pub struct PolarParts {
    pub v: BandMatrix,
    pub k: BandMatrix,
    pub p1: BandMatrix,
    pub p2: BandMatrix,
    /// `g` treated as one: `K = P1 = I`, `P2 = 0`, `V = T`.
    pub unitary_limit: bool,
    pub g: f64,
}

fn cell_blocks(dim: usize, bc: Boundary, kind: BandKind, block: [[Complex64; 2]; 2]) -> BandMatrix {
    let triplets = (0..dim / 2).flat_map(move |c| {
        (0..2).flat_map(move |a| (0..2).map(move |b| (2 * c + a, 2 * c + b, block[a][b])))
    });
    BandMatrix::from_triplets(dim, bc, kind, triplets)
}

fn outer(x: [Complex64; 2]) -> [[Complex64; 2]; 2] {
    [[x[0] * x[0].conj(), x[0] * x[1].conj()], [x[1] * x[0].conj(), x[1] * x[1].conj()]]
}

/// Polar factors `T = V K` built cell by cell.
pub fn build_polar(emb: &UnitaryEmbedding, phases: &PhaseField, m: usize, bc: Boundary) -> Result<PolarParts> {
    let dim = 2 * m;
    if emb.is_unitary_limit() {
        let t = build_t(emb, phases, m, bc)?;
        return Ok(PolarParts {
            v: t.with_kind(BandKind::V),
            k: BandMatrix::identity(dim, bc).with_kind(BandKind::K),
            p1: BandMatrix::identity(dim, bc),
            p2: BandMatrix::from_triplets(dim, bc, BandKind::Generic, std::iter::empty()),
            unitary_limit: true,
            g: 1.0,
        });
    }
    let (v1, v2) = cell_eigenvectors(emb)?;
    let g = emb.g;
    let (q, s) = (emb.q, emb.s);
    let n2 = q.norm_sqr() + s.norm_sqr();
    let kappa = [
        [Complex64::new(g * q.norm_sqr() + s.norm_sqr(), 0.0) / n2, q.conj() * s * (g - 1.0) / n2],
        [q * s.conj() * (g - 1.0) / n2, Complex64::new(g * s.norm_sqr() + q.norm_sqr(), 0.0) / n2],
    ];
    Ok(PolarParts {
        v: build_from_coin(&v_coin(emb), phases, m, bc, BandKind::V)?,
        k: cell_blocks(dim, bc, BandKind::K, kappa),
        p1: cell_blocks(dim, bc, BandKind::Generic, outer(v1)),
        p2: cell_blocks(dim, bc, BandKind::Generic, outer(v2)),
        unitary_limit: false,
        g,
    })
}

/// `P_i V P_j` written in the bases `{v_i^(a)}` and `{v_j^(b)}` (cells `a, b`),
/// an `M x M` matrix. `i, j` are 1 or 2.
pub fn compression(emb: &UnitaryEmbedding, v: &BandMatrix, i: usize, j: usize) -> Result<DMatrix<Complex64>> {
    if !(1..=2).contains(&i) || !(1..=2).contains(&j) {
        return Err(Error::OutOfRange(format!("block ({i}, {j})")));
    }
    let (v1, v2) = cell_eigenvectors(emb)?;
    let basis = [v1, v2];
    let (left, right) = (basis[i - 1], basis[j - 1]);
    let m = v.dim / 2;
    let mut w = DMatrix::zeros(m, m);
    for &(r, c, x) in v.entries() {
        w[(r / 2, c / 2)] += left[r % 2].conj() * x * right[c % 2];
    }
    Ok(w)
}

/// Hopping coefficients of one block `P_i V P_j` in the cell bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockCoefficients {
    pub w_plus: Complex64,
    pub w_minus: Complex64,
}

impl BlockCoefficients {
    pub fn norm(&self) -> f64 {
        self.w_plus.norm() + self.w_minus.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalBlockData {
    pub g: f64,
    /// `w[i-1][j-1]` belongs to `V_ij`.
    pub w: [[BlockCoefficients; 2]; 2],
    /// `norms[i-1][j-1] = ||V_ij||`.
    pub norms: [[f64; 2]; 2],
    pub r_v: f64,
    /// Whether the sufficient condition for `spr T < 1` holds.
    pub gap_ok: bool,
}

impl TridiagonalBlockData {
    pub fn norm(&self, i: usize, j: usize) -> f64 {
        self.norms[i - 1][j - 1]
    }
}

/// Outer radius `r(V)` of the spectral annulus.
pub fn annulus_radius(g: f64, n11: f64, n12: f64, n21: f64, n22: f64) -> f64 {
    let d = n11 - g * n22;
    0.5 * (n11 + g * n22 + (d * d + 4.0 * g * n21 * n12).sqrt())
}

pub fn gap_condition(g: f64, n11: f64, n12: f64, n21: f64, n22: f64) -> bool {
    if n11 >= 1.0 {
        return false;
    }
    let den = n21 * n12 + n22 * (1.0 - n11);
    den <= 0.0 || g < (1.0 - n11) / den
}

pub fn tridiag_blocks(emb: &UnitaryEmbedding) -> Result<TridiagonalBlockData> {
    if emb.is_unitary_limit() {
        return Err(Error::UnitaryLimit("block coefficients need q, s not both zero"));
    }
    let UnitaryEmbedding { alpha, r, beta, q, g, s, gamma, t, delta, .. } = *emb;
    let den = 1.0 - g * g;
    let a = s * gamma - q * delta;
    let b = s * alpha - q * beta;
    let bc = |p: Complex64, m: Complex64| BlockCoefficients { w_plus: p / den, w_minus: m / den };
    let w = [
        [bc(-q.conj() * a, s.conj() * b), bc(q.conj() * t, -s.conj() * r)],
        [bc(s * a, q * b), bc(-s * t, -q * r)],
    ];
    let norms = [[w[0][0].norm(), w[0][1].norm()], [w[1][0].norm(), w[1][1].norm()]];
    let (n11, n12, n21, n22) = (norms[0][0], norms[0][1], norms[1][0], norms[1][1]);
    Ok(TridiagonalBlockData {
        g,
        w,
        norms,
        r_v: annulus_radius(g, n11, n12, n21, n22),
        gap_ok: gap_condition(g, n11, n12, n21, n22),
    })
}

/// `T~` obtained from `T^2` (periodic) by keeping the even cells and
/// relabelling `e_{4k} -> e_{2k}`, `e_{4k+1} -> e_{2k+1}`. Dimension `M`.
pub fn build_ttilde(emb: &UnitaryEmbedding, phases: &PhaseField, m: usize) -> Result<BandMatrix> {
    if !m.is_multiple_of(2) || m < 2 {
        return Err(Error::InvalidSize(format!("M = {m} must be even and at least 2")));
    }
    let t = build_t(emb, phases, m, Boundary::Periodic)?;
    let t2 = t.matmul(&t)?;
    let relabel = |x: usize| if x % 4 < 2 { Some(2 * (x / 4) + x % 4) } else { None };
    let triplets = t2
        .entries()
        .iter()
        .filter_map(|&(i, j, x)| Some((relabel(i)?, relabel(j)?, x)));
    Ok(BandMatrix::from_triplets(m, Boundary::Periodic, BandKind::Ttilde, triplets))
}

/// Block-diagonal factors `(B_even, B_odd)` with `T~ = B_odd B_even`.
///
/// `B_even` maps even cell `2k` to the pair `(e_{4k-1}, e_{4k+2})` and
/// `B_odd` maps odd cell `2k+1` to `(e_{4k+1}, e_{4k+4})`, each through
/// `diag(phases) [[gamma, delta], [alpha, beta]]`. The intermediate space
/// labels odd cell `2k+1` as indices `(2k, 2k+1)`.
pub fn ttilde_factors(emb: &UnitaryEmbedding, phases: &PhaseField, m: usize) -> Result<(BandMatrix, BandMatrix)> {
    if !m.is_multiple_of(2) || m < 2 {
        return Err(Error::InvalidSize(format!("M = {m} must be even and at least 2")));
    }
    let dim = 2 * m;
    phases.require_sites(dim)?;
    let n = m as i64;
    let ph = |j: i64| Complex64::from_polar(1.0, phases.wrapped(j, dim));
    let w = |x: i64| x.rem_euclid(n) as usize;
    let c = emb.contraction();
    let mut even = Vec::new();
    let mut odd = Vec::new();
    for k in 0..n / 2 {
        let (up, down) = (ph(4 * k - 1), ph(4 * k + 2));
        even.push((w(2 * k - 1), w(2 * k), up * c.gamma));
        even.push((w(2 * k - 1), w(2 * k + 1), up * c.delta));
        even.push((w(2 * k), w(2 * k), down * c.alpha));
        even.push((w(2 * k), w(2 * k + 1), down * c.beta));
        let (up, down) = (ph(4 * k + 1), ph(4 * k + 4));
        odd.push((w(2 * k + 1), w(2 * k), up * c.gamma));
        odd.push((w(2 * k + 1), w(2 * k + 1), up * c.delta));
        odd.push((w(2 * k + 2), w(2 * k), down * c.alpha));
        odd.push((w(2 * k + 2), w(2 * k + 1), down * c.beta));
    }
    Ok((
        BandMatrix::from_triplets(m, Boundary::Periodic, BandKind::Generic, even),
        BandMatrix::from_triplets(m, Boundary::Periodic, BandKind::Generic, odd),
    ))
}

/// Closed-form spectrum available for a special coin pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClosedForm {
    /// `alpha = delta = 0`: pairs `+-sqrt(g) e^{i theta/2} e^{i(w_{2j+1}+w_{2j+2})/2}`.
    PairedRoots { g: f64, theta: f64 },
    /// `beta = gamma = 0`: `S u gS`.
    TwoCircles { g: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub cnu: bool,
    pub v_offdiagonal: bool,
    pub v_diagonal: bool,
    pub special_alpha_delta_zero: bool,
    pub special_beta_gamma_zero: bool,
    pub closed_form: Option<ClosedForm>,
}

const PATTERN_TOL: f64 = 1e-14;

fn zero(z: Complex64) -> bool {
    z.norm() <= PATTERN_TOL
}

/// Coin patterns for which some off-diagonal block of `V` vanishes.
pub fn matches_diagonal_pattern(emb: &UnitaryEmbedding) -> bool {
    let corner = zero(emb.beta) && zero(emb.gamma);
    corner && ((zero(emb.s) && zero(emb.t)) || (zero(emb.q) && zero(emb.r)))
}

/// Coin patterns for which the diagonal blocks of `V` vanish.
pub fn matches_offdiagonal_pattern(emb: &UnitaryEmbedding) -> bool {
    let corner = zero(emb.alpha) && zero(emb.delta);
    corner && ((zero(emb.r) && zero(emb.s)) || (zero(emb.q) && zero(emb.t)))
}

pub fn classify_structure(emb: &UnitaryEmbedding) -> Classification {
    let blocks = tridiag_blocks(emb).ok();
    let tiny = |x: f64| x <= PATTERN_TOL;
    let v_offdiagonal = blocks.is_some_and(|b| tiny(b.norm(1, 1)) && tiny(b.norm(2, 2)));
    let v_diagonal = blocks.is_some_and(|b| tiny(b.norm(1, 2)) || tiny(b.norm(2, 1)));
    let ad = zero(emb.alpha) && zero(emb.delta);
    let bg = zero(emb.beta) && zero(emb.gamma);
    let closed_form = if ad {
        let d = emb.beta * emb.gamma;
        Some(ClosedForm::PairedRoots { g: d.norm(), theta: if d.norm() == 0.0 { 0.0 } else { d.arg() } })
    } else if bg {
        Some(ClosedForm::TwoCircles { g: emb.alpha.norm().min(emb.delta.norm()) })
    } else {
        None
    };
    Classification {
        cnu: emb.g < 1.0 && emb.alpha.norm() < 1.0 && emb.delta.norm() < 1.0,
        v_offdiagonal,
        v_diagonal,
        special_alpha_delta_zero: ad,
        special_beta_gamma_zero: bg,
        closed_form,
    }
}

/// Eigenvalues predicted for the `alpha = delta = 0` pattern on a periodic
/// truncation: one pair per cell.
pub fn paired_roots_spectrum(emb: &UnitaryEmbedding, phases: &PhaseField, m: usize) -> Result<Vec<Complex64>> {
    let dim = 2 * m;
    phases.require_sites(dim)?;
    let d = emb.beta * emb.gamma;
    let (g, theta) = (d.norm(), d.arg());
    let mut out = Vec::with_capacity(dim);
    for j in 0..m as i64 {
        let w = phases.wrapped(2 * j + 1, dim) + phases.wrapped(2 * j + 2, dim);
        let z = Complex64::from_polar(g.sqrt(), 0.5 * (theta + w));
        out.push(z);
        out.push(-z);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::{family_drift, family_g0, random_embedding, random_embedding_with_g, FamilyParams};
    use crate::phases::PhaseDistribution;
    use crate::spectra;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn torus(seed: u64, dim: usize) -> PhaseField {
        PhaseField::for_sites(PhaseDistribution::Torus, seed, dim).unwrap()
    }

    fn drift(xi: f64, eta: f64) -> UnitaryEmbedding {
        family_drift(FamilyParams::new(xi, eta).unwrap()).unwrap()
    }

    #[test]
    fn columns_follow_entry_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let emb = random_embedding(&mut rng).unwrap();
        let m = 6;
        let p = torus(3, 2 * m);
        let t = build_t(&emb, &p, m, Boundary::Periodic).unwrap();
        for j in 0..m {
            let mut rows: Vec<usize> = t.entries().iter().filter(|e| e.1 == 2 * j).map(|e| e.0).collect();
            rows.sort_unstable();
            let mut expect = vec![(2 * j + 2 * m - 1) % (2 * m), (2 * j + 2) % (2 * m)];
            expect.sort_unstable();
            assert_eq!(rows, expect);
            let up = (2 * j + 2 * m - 1) % (2 * m);
            let e = Complex64::from_polar(1.0, p.realized[up]) * emb.gamma;
            assert_eq!(t.get(up, 2 * j), e);
        }
    }

    #[test]
    fn open_truncation_drops_wrapped_rows() {
        let emb = drift(0.3, 0.9);
        let t = build_t(&emb, &PhaseField::zero(8), 4, Boundary::Open).unwrap();
        assert_eq!(t.get(7, 0), ZERO);
        assert_eq!(t.get(0, 6), ZERO);
        assert_eq!(t.get(2, 0), emb.alpha);
    }

    #[test]
    fn identity_coin_is_a_pair_of_shifts() {
        let emb = crate::coin::embed(&CoinContraction::identity()).unwrap();
        let t = build_t(&emb, &PhaseField::zero(16), 8, Boundary::Periodic).unwrap();
        assert!(t.unitarity_defect() < 1e-15);
        assert!((spectra::operator_norm(&t.to_dense()) - 1.0).abs() < 1e-12);
        assert_eq!(t.nnz(), 16);
    }

    #[test]
    fn phases_factor_out_on_the_left() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let emb = random_embedding(&mut rng).unwrap();
        for bc in [Boundary::Periodic, Boundary::Open] {
            let p = torus(5, 20);
            let t = build_t(&emb, &p, 10, bc).unwrap();
            let d = phase_diagonal(&p, 20, bc).unwrap();
            let t0 = build_t0(&emb, 10, bc).unwrap();
            assert!(t.max_abs_diff(&d.matmul(&t0).unwrap()) < 1e-15);
        }
    }

    #[test]
    fn small_windows_and_sizes_are_rejected() {
        let emb = drift(0.3, 0.9);
        assert!(matches!(build_t(&emb, &PhaseField::zero(4), 1, Boundary::Open), Err(Error::InvalidSize(_))));
        assert!(matches!(build_t(&emb, &PhaseField::zero(6), 4, Boundary::Open), Err(Error::PhaseWindow { .. })));
        assert!(build_ttilde(&emb, &PhaseField::zero(10), 5).is_err());
    }

    #[test]
    fn polar_factors_reproduce_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..10 {
            let emb = random_embedding(&mut rng).unwrap();
            let m = 8 + 3 * seed as usize;
            let p = torus(seed, 2 * m);
            for bc in [Boundary::Periodic, Boundary::Open] {
                let t = build_t(&emb, &p, m, bc).unwrap();
                let parts = build_polar(&emb, &p, m, bc).unwrap();
                assert!(parts.v.matmul(&parts.k).unwrap().max_abs_diff(&t) < 1e-12);
                if bc == Boundary::Periodic {
                    assert!(parts.v.unitarity_defect() < 1e-12);
                }
                let sum = BandMatrix::from_triplets(
                    2 * m,
                    bc,
                    BandKind::Generic,
                    parts.p1.entries().iter().chain(parts.p2.entries()).copied(),
                );
                assert!(sum.max_abs_diff(&BandMatrix::identity(2 * m, bc)) < 1e-12);
                let zero = BandMatrix::from_triplets(2 * m, bc, BandKind::Generic, std::iter::empty());
                assert!(parts.p1.matmul(&parts.p2).unwrap().max_abs_diff(&zero) < 1e-12);
                assert!(parts.k.matmul(&parts.p1).unwrap().max_abs_diff(&parts.p1) < 1e-12);
                let gp2 = BandMatrix::from_triplets(
                    2 * m,
                    bc,
                    BandKind::Generic,
                    parts.p2.entries().iter().map(|&(i, j, x)| (i, j, x * emb.g)),
                );
                assert!(parts.k.matmul(&parts.p2).unwrap().max_abs_diff(&gp2) < 1e-12);
                assert!(parts.k.max_abs_diff(&parts.k.adjoint()) < 1e-15);
            }
        }
    }

    #[test]
    fn unitary_limit_polar_is_trivial() {
        let emb = drift(PI / 2.0, 0.4);
        assert_eq!(emb.g, 1.0);
        let emb = crate::coin::embed(&emb.contraction()).unwrap();
        let p = torus(1, 12);
        let parts = build_polar(&emb, &p, 6, Boundary::Periodic).unwrap();
        assert!(parts.unitary_limit);
        assert_eq!(parts.k, BandMatrix::identity(12, Boundary::Periodic).with_kind(BandKind::K));
        assert!(parts.v.max_abs_diff(&build_t(&emb, &p, 6, Boundary::Periodic).unwrap()) == 0.0);
        assert!(tridiag_blocks(&emb).is_err());
    }

    #[test]
    fn drift_block_norms() {
        let (xi, eta) = (0.4, 1.1);
        let b = tridiag_blocks(&drift(xi, eta)).unwrap();
        assert!((b.norm(1, 1) - eta.cos()).abs() < 1e-14);
        assert!((b.norm(2, 1) - eta.sin()).abs() < 1e-14);
        assert!((b.norm(2, 2) - eta.cos()).abs() < 1e-14);
        assert!((b.norm(1, 2) - eta.sin()).abs() < 1e-14);
    }

    #[test]
    fn annulus_radius_reference_value() {
        let b = tridiag_blocks(&drift(PI / 12.0, PI / 3.0)).unwrap();
        assert!(b.gap_ok);
        assert!((b.r_v - 0.7927).abs() < 5e-5, "{}", b.r_v);
        let (g, c, s) = ((PI / 12.0).sin(), (PI / 3.0).cos(), (PI / 3.0).sin());
        let closed = 0.5 * (c * (1.0 + g) + (c * c * (1.0 - g).powi(2) + 4.0 * g * s * s).sqrt());
        assert!((b.r_v - closed).abs() < 1e-14);
    }

    #[test]
    fn norm_of_compression_matches_coefficients_when_one_hop_vanishes() {
        let emb = drift(0.3, 1.0);
        let m = 32;
        let p = torus(9, 2 * m);
        let parts = build_polar(&emb, &p, m, Boundary::Periodic).unwrap();
        let b = tridiag_blocks(&emb).unwrap();
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let w = compression(&emb, &parts.v, i, j).unwrap();
            assert!((spectra::operator_norm(&w) - b.norm(i, j)).abs() < 1e-12);
        }
    }

    #[test]
    fn ttilde_factorization_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..5 {
            let emb = random_embedding(&mut rng).unwrap();
            let m = 4 + 2 * seed as usize;
            let p = torus(seed, 2 * m);
            let tt = build_ttilde(&emb, &p, m).unwrap();
            let (even, odd) = ttilde_factors(&emb, &p, m).unwrap();
            assert_eq!(odd.matmul(&even).unwrap().max_abs_diff(&tt), 0.0);
        }
    }

    #[test]
    fn ttilde_of_unitary_coin() {
        let emb = crate::coin::embed(&CoinContraction::new(
            Complex64::new(0.6, 0.0),
            Complex64::new(0.0, 0.8),
            Complex64::new(0.0, 0.8),
            Complex64::new(0.6, 0.0),
        ))
        .unwrap();
        let tt = build_ttilde(&emb, &torus(2, 16), 8).unwrap();
        assert!(tt.unitarity_defect() < 1e-14);
        let id = crate::coin::embed(&CoinContraction::identity()).unwrap();
        let tt = build_ttilde(&id, &PhaseField::zero(16), 8).unwrap();
        // e_{4k} -> e_{4k+4} and e_{4k+1} -> e_{4k-3}: one cell per lane
        for k in 0..4 {
            assert_eq!(tt.get((2 * k + 2) % 8, 2 * k), ONE);
            assert_eq!(tt.get((2 * k + 7) % 8, 2 * k + 1), ONE);
        }
        assert_eq!(tt.nnz(), 8);
    }

    #[test]
    fn classification_examples() {
        let emb = drift(0.4, 0.9);
        let c = classify_structure(&emb);
        assert!(c.cnu && !c.v_offdiagonal && !c.v_diagonal && c.closed_form.is_none());

        // beta = gamma = 0, which forces s = t = 0 here
        let c0 = CoinContraction::new(Complex64::new(0.8, 0.0), ZERO, ZERO, ONE);
        let e = crate::coin::embed(&c0).unwrap();
        let c = classify_structure(&e);
        assert!(!c.cnu && c.special_beta_gamma_zero && c.v_diagonal);
        assert_eq!(c.closed_form, Some(ClosedForm::TwoCircles { g: 0.8 }));
    }

    #[test]
    fn paired_roots_case() {
        let phi = 0.7f64;
        let gamma = Complex64::from_polar(1.0, 0.3);
        let c0 = CoinContraction::new(ZERO, Complex64::new(phi.cos(), 0.0), gamma, ZERO);
        let emb = crate::coin::embed(&c0).unwrap();
        assert!((emb.g - phi.cos()).abs() < 1e-14);
        let c = classify_structure(&emb);
        assert!(c.special_alpha_delta_zero && c.v_offdiagonal);
        let m = 2;
        let p = torus(8, 4);
        let t = build_t(&emb, &p, m, Boundary::Periodic).unwrap();
        let ev = spectra::eigenvalues(&t.to_dense()).unwrap();
        for z in paired_roots_spectrum(&emb, &p, m).unwrap() {
            let best = ev.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-12);
        }
    }

    #[test]
    fn diagonal_patterns_match_vanishing_blocks() {
        let g0 = family_g0(FamilyParams::new(0.4, 0.7).unwrap()).unwrap();
        assert!(!matches_diagonal_pattern(&g0));
        let c = classify_structure(&g0);
        assert_eq!(c.v_diagonal, matches_diagonal_pattern(&g0));
        assert_eq!(c.v_offdiagonal, matches_offdiagonal_pattern(&g0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn gauge_leaves_coefficient_moduli(seed in any::<u64>(), phi in -PI..PI, g in 0.0f64..0.99) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let emb = random_embedding_with_g(&mut rng, g).unwrap();
            let a = tridiag_blocks(&emb).unwrap();
            let b = tridiag_blocks(&emb.with_gauge(phi)).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    prop_assert!((a.w[i][j].w_plus.norm() - b.w[i][j].w_plus.norm()).abs() < 1e-12);
                    prop_assert!((a.w[i][j].w_minus.norm() - b.w[i][j].w_minus.norm()).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn annulus_radius_dominates_diagonal_norms(seed in any::<u64>(), g in 0.0f64..0.99) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b = tridiag_blocks(&random_embedding_with_g(&mut rng, g).unwrap()).unwrap();
            prop_assert!(b.r_v >= b.norm(1, 1).max(g * b.norm(2, 2)) - 1e-15);
        }

        #[test]
        fn nicexp_formula(seed in any::<u64>(), g in 0.0f64..0.99) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_embedding_with_g(&mut rng, g).unwrap();
            let b = tridiag_blocks(&e).unwrap();
            let ge = Complex64::from_polar(e.g, e.chi);
            let closed = ((e.delta - e.alpha.conj() * ge).norm() + (e.alpha - e.delta.conj() * ge).norm()) / (1.0 - e.g * e.g);
            prop_assert!((closed - b.norm(1, 1)).abs() < 1e-12);
        }

        #[test]
        fn compression_is_tridiagonal_with_block_coefficients(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let emb = random_embedding_with_g(&mut rng, 0.5).unwrap();
            let m = 8;
            let p = torus(seed, 2 * m);
            let parts = build_polar(&emb, &p, m, Boundary::Periodic).unwrap();
            let b = tridiag_blocks(&emb).unwrap();
            for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
                let w = compression(&emb, &parts.v, i, j).unwrap();
                for k in 0..m {
                    let up = (k + m - 1) % m;
                    let down = (k + 1) % m;
                    let e_up = Complex64::from_polar(1.0, p.wrapped(2 * k as i64 - 1, 2 * m));
                    let e_down = Complex64::from_polar(1.0, p.wrapped(2 * k as i64 + 2, 2 * m));
                    prop_assert!((w[(up, k)] - e_up * b.w[i - 1][j - 1].w_plus).norm() < 1e-12);
                    prop_assert!((w[(down, k)] - e_down * b.w[i - 1][j - 1].w_minus).norm() < 1e-12);
                }
            }
        }
    }
}
