//! Coin contractions and their unitary embeddings.
//!
//! A coin is a 2x2 matrix `C0 = [[alpha, beta], [gamma, delta]]` that arises as
//! the corner of a 3x3 unitary
//!
//! ```text
//!        [ alpha  r  beta  ]
//!   C =  [ q      g  s     ]      (basis a, b, a^-1)
//!        [ gamma  t  delta ]
//! ```
//!
//! with `g` real in `[0, 1]`. Writing `v = (conj q, conj s)` and `u = (r, t)`,
//! unitarity is equivalent to
//! `C0^* C0 = I - v v^*`, `C0 C0^* = I - u u^*` and `C0 v = -g u`.
//! So `||v||^2 = 1 - g^2`, `g = |det C0|`, and the larger singular value of
//! `C0` must equal one.
//!
//! The embedding is unique up to a phase on the middle basis vector. We fix it
//! by making the first nonzero component of `v` real and nonnegative (so `q`,
//! or `s` when `q = 0`, is real and nonnegative).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Default tolerance for unitarity and determinant checks.
pub const DEFAULT_TOL: f64 = 1e-12;

/// `g` at or above `1 - UNITARY_LIMIT` is treated as exactly one.
pub const UNITARY_LIMIT: f64 = 1e-9;

/// Tolerance on the larger singular value being one.
const UNIT_SINGULAR_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoinContraction {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
}

impl CoinContraction {
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64, delta: Complex64) -> Self {
        Self { alpha, beta, gamma, delta }
    }

    pub fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn det(&self) -> Complex64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    /// Singular values `(largest, smallest)`.
    pub fn singular_values(&self) -> (f64, f64) {
        let tr = self.alpha.norm_sqr() + self.beta.norm_sqr() + self.gamma.norm_sqr() + self.delta.norm_sqr();
        let d = self.det().norm();
        let disc = ((tr * 0.5).powi(2) - d * d).max(0.0).sqrt();
        let big = (tr * 0.5 + disc).sqrt();
        let small = if big > 0.0 { d / big } else { 0.0 };
        (big, small)
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[self.alpha, self.beta, self.gamma, self.delta])
    }
}

/// The 3x3 unitary `C` housing a coin contraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitaryEmbedding {
    pub alpha: Complex64,
    pub r: Complex64,
    pub beta: Complex64,
    pub q: Complex64,
    pub g: f64,
    pub s: Complex64,
    pub gamma: Complex64,
    pub t: Complex64,
    pub delta: Complex64,
    /// `arg det C0`, zero when `g = 0`.
    pub chi: f64,
}

impl UnitaryEmbedding {
    pub fn contraction(&self) -> CoinContraction {
        CoinContraction::new(self.alpha, self.beta, self.gamma, self.delta)
    }

    /// Row-major entries of the 3x3 matrix.
    pub fn entries(&self) -> [[Complex64; 3]; 3] {
        [
            [self.alpha, self.r, self.beta],
            [self.q, Complex64::new(self.g, 0.0), self.s],
            [self.gamma, self.t, self.delta],
        ]
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        let e = self.entries();
        DMatrix::from_fn(3, 3, |i, j| e[i][j])
    }

    /// `max_ij |(C^* C - I)_ij|` and the same for `C C^*`, whichever is larger.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.matrix();
        let id = DMatrix::<Complex64>::identity(3, 3);
        let a = (m.adjoint() * &m - &id).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let b = (&m * m.adjoint() - &id).iter().map(|z| z.norm()).fold(0.0, f64::max);
        a.max(b)
    }

    pub fn is_unitary_limit(&self) -> bool {
        self.g >= 1.0 - UNITARY_LIMIT
    }

    /// Rephases the middle basis vector: row 2 times `e^{-i phi}`, column 2
    /// times `e^{i phi}`. The corner `C0` and `g` are unchanged.
    pub fn with_gauge(&self, phi: f64) -> Self {
        let p = Complex64::from_polar(1.0, phi);
        Self { q: self.q * p.conj(), s: self.s * p.conj(), r: self.r * p, t: self.t * p, ..*self }
    }

    /// Checks the embedding invariants against `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&self.g) {
            return Err(Error::OutOfRange(format!("g = {} not in [0, 1]", self.g)));
        }
        let defect = self.unitarity_defect();
        if defect > tol {
            return Err(Error::EmbeddingBreakdown(format!("unitarity defect {defect:e}")));
        }
        let d = (self.contraction().det().norm() - self.g).abs();
        if d > tol {
            return Err(Error::EmbeddingBreakdown(format!("|det C0| differs from g by {d:e}")));
        }
        Ok(())
    }
}

/// `(|det C0|, arg det C0)`, with `chi = 0` when the determinant vanishes.
pub fn det_g_chi(c0: &CoinContraction) -> (f64, f64) {
    let d = c0.det();
    let g = d.norm();
    (g, if g == 0.0 { 0.0 } else { d.arg() })
}

/// Rotates `x` so that its first component of modulus above `floor` is real
/// and nonnegative; returns the rotated vector and the applied phase.
fn gauge_fix(x: [Complex64; 2], floor: f64) -> ([Complex64; 2], Complex64) {
    let pivot = if x[0].norm() > floor { x[0] } else { x[1] };
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { ONE };
    ([x[0] * phase, x[1] * phase], phase)
}

/// Unit vector spanning the range of the rank-one PSD matrix
/// `[[a, b], [conj b, d]]`, scaled so its squared norm equals the trace.
fn rank_one_factor(a: f64, b: Complex64, d: f64) -> [Complex64; 2] {
    if a >= d {
        let h = a.max(0.0).sqrt();
        if h == 0.0 {
            return [ZERO, ZERO];
        }
        [Complex64::new(h, 0.0), b.conj() / h]
    } else {
        let h = d.max(0.0).sqrt();
        [b / h, Complex64::new(h, 0.0)]
    }
}

pub fn embed(c0: &CoinContraction) -> Result<UnitaryEmbedding> {
    embed_with_tol(c0, DEFAULT_TOL)
}

/// Builds the unitary embedding of `c0`, checking the result against `tol`.
pub fn embed_with_tol(c0: &CoinContraction, tol: f64) -> Result<UnitaryEmbedding> {
    let (largest, _) = c0.singular_values();
    if !largest.is_finite() || largest > 1.0 + tol {
        return Err(Error::NotContraction { largest, tol });
    }
    if largest < 1.0 - UNIT_SINGULAR_TOL {
        return Err(Error::EmbeddingBreakdown(format!(
            "largest singular value {largest} < 1: no 3x3 unitary has this corner"
        )));
    }
    let (g, chi) = det_g_chi(c0);
    let CoinContraction { alpha, beta, gamma, delta } = *c0;

    if g >= 1.0 - UNITARY_LIMIT {
        let emb = UnitaryEmbedding {
            alpha,
            r: ZERO,
            beta,
            q: ZERO,
            g: 1.0,
            s: ZERO,
            gamma,
            t: ZERO,
            delta,
            chi,
        };
        emb.validate(tol.max(2.0 * UNITARY_LIMIT))?;
        return Ok(emb);
    }

    // I - C0^* C0 = v v^*
    let a11 = 1.0 - alpha.norm_sqr() - gamma.norm_sqr();
    let a22 = 1.0 - beta.norm_sqr() - delta.norm_sqr();
    let a12 = -(alpha.conj() * beta + gamma.conj() * delta);
    let floor = 1e-14;
    let (v, _) = gauge_fix(rank_one_factor(a11, a12, a22), floor);

    // I - C0 C0^* = u u^*
    let b11 = 1.0 - alpha.norm_sqr() - beta.norm_sqr();
    let b22 = 1.0 - gamma.norm_sqr() - delta.norm_sqr();
    let b12 = -(alpha * gamma.conj() + beta * delta.conj());
    let u0 = rank_one_factor(b11, b12, b22);
    let target = [-(alpha * v[0] + beta * v[1]), -(gamma * v[0] + delta * v[1])];
    let overlap = u0[0].conj() * target[0] + u0[1].conj() * target[1];
    let u = if overlap.norm() > 1e-14 {
        let p = overlap / overlap.norm();
        [u0[0] * p, u0[1] * p]
    } else {
        gauge_fix(u0, floor).0
    };

    let emb = UnitaryEmbedding {
        alpha,
        r: u[0],
        beta,
        q: v[0].conj(),
        g,
        s: v[1].conj(),
        gamma,
        t: u[1],
        delta,
        chi,
    };
    emb.validate(tol)?;
    Ok(emb)
}

/// Half-angle parameters of the two real orthogonal families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub xi: f64,
    pub eta: f64,
}

impl FamilyParams {
    pub fn new(xi: f64, eta: f64) -> Result<Self> {
        let p = Self { xi, eta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| (0.0..=FRAC_PI_2 + 1e-15).contains(&x);
        if !ok(self.xi) || !ok(self.eta) {
            return Err(Error::OutOfRange(format!("(xi, eta) = ({}, {}) not in [0, pi/2]^2", self.xi, self.eta)));
        }
        Ok(())
    }
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn from_real_rows(m: [[f64; 3]; 3]) -> UnitaryEmbedding {
    let c0 = CoinContraction::new(real(m[0][0]), real(m[0][2]), real(m[2][0]), real(m[2][2]));
    let (_, chi) = det_g_chi(&c0);
    UnitaryEmbedding {
        alpha: real(m[0][0]),
        r: real(m[0][1]),
        beta: real(m[0][2]),
        q: real(m[1][0]),
        g: m[1][1],
        s: real(m[1][2]),
        gamma: real(m[2][0]),
        t: real(m[2][1]),
        delta: real(m[2][2]),
        chi,
    }
}

/// Orthogonal family with `q = 0` and `g = sin xi`.
pub fn family_drift(p: FamilyParams) -> Result<UnitaryEmbedding> {
    p.validate()?;
    let (sx, cx) = p.xi.sin_cos();
    let (se, ce) = p.eta.sin_cos();
    Ok(from_real_rows([
        [ce, cx * se, -sx * se],
        [0.0, sx, cx],
        [se, -cx * ce, sx * ce],
    ]))
}

/// Orthogonal family with `g = 0` and `|alpha| + |delta| = sin(xi + eta)`.
pub fn family_g0(p: FamilyParams) -> Result<UnitaryEmbedding> {
    p.validate()?;
    let (sx, cx) = p.xi.sin_cos();
    let (se, ce) = p.eta.sin_cos();
    Ok(from_real_rows([
        [cx * se, ce, -sx * se],
        [sx, 0.0, cx],
        [-cx * ce, se, sx * ce],
    ]))
}

/// A contraction `W` is unitary exactly when `|det W| = 1`; this returns the
/// direct test `max |W^* W - I| <= tol` after checking `||W|| <= 1 + tol`.
pub fn unitary_iff_unimodular_det(w: &DMatrix<Complex64>, tol: f64) -> Result<bool> {
    if w.nrows() != w.ncols() {
        return Err(Error::InvalidSize(format!("{}x{} is not square", w.nrows(), w.ncols())));
    }
    let largest = crate::spectra::operator_norm(w);
    if largest > 1.0 + tol {
        return Err(Error::NotContraction { largest, tol });
    }
    let n = w.nrows();
    let defect = (w.adjoint() * w - DMatrix::<Complex64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(defect <= tol)
}

/// Uniformly parametrized element of U(2).
fn random_u2<R: Rng + ?Sized>(rng: &mut R) -> [[Complex64; 2]; 2] {
    use std::f64::consts::PI;
    // |cos a|^2 uniform on [0, 1] gives the Haar marginal
    let c = rng.gen::<f64>().sqrt();
    let s = (1.0 - c * c).sqrt();
    let (p0, p1, p2) = (rng.gen_range(-PI..PI), rng.gen_range(-PI..PI), rng.gen_range(-PI..PI));
    let e = |x: f64| Complex64::from_polar(1.0, x);
    [
        [e(p0 + p1) * c, e(p0 + p2) * s],
        [-e(p0 - p2) * s, e(p0 - p1) * c],
    ]
}

fn embed_u2(u: [[Complex64; 2]; 2], i: usize, j: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::identity(3, 3);
    m[(i, i)] = u[0][0];
    m[(i, j)] = u[0][1];
    m[(j, i)] = u[1][0];
    m[(j, j)] = u[1][1];
    m
}

/// Random element of U(3) as a product of plane rotations on all index pairs.
pub fn random_unitary3<R: Rng + ?Sized>(rng: &mut R) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::identity(3, 3);
    for (i, j) in [(0, 1), (1, 2), (0, 2), (0, 1), (1, 2)] {
        m = embed_u2(random_u2(rng), i, j) * m;
    }
    m
}

/// Corner of a random 3x3 unitary, embedded in the fixed gauge.
pub fn random_embedding<R: Rng + ?Sized>(rng: &mut R) -> Result<UnitaryEmbedding> {
    let u = random_unitary3(rng);
    embed(&CoinContraction::new(u[(0, 0)], u[(0, 2)], u[(2, 0)], u[(2, 2)]))
}

/// Random embedding with prescribed `g`: `W1 R W2` where `W1, W2` act on
/// `span{a, a^-1}` and `R` rotates `b` by `acos g`.
pub fn random_embedding_with_g<R: Rng + ?Sized>(rng: &mut R, g: f64) -> Result<UnitaryEmbedding> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::OutOfRange(format!("g = {g} not in [0, 1]")));
    }
    let w1 = embed_u2(random_u2(rng), 0, 2);
    let w2 = embed_u2(random_u2(rng), 0, 2);
    let s = (1.0 - g * g).sqrt();
    let phase = Complex64::from_polar(1.0, rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
    let rot = embed_u2([[real(g), phase * s], [-phase.conj() * s, real(g)]], 1, 0);
    let u = w1 * rot * w2;
    embed(&CoinContraction::new(u[(0, 0)], u[(0, 2)], u[(2, 0)], u[(2, 2)]))
}

/// Coin specification as read from JSON: explicit entries as `[re, im]`
/// pairs, or a named family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoinSpec {
    Family {
        family: FamilyName,
        xi: f64,
        eta: f64,
    },
    Explicit {
        alpha: [f64; 2],
        beta: [f64; 2],
        gamma: [f64; 2],
        delta: [f64; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyName {
    Drift,
    G0,
}

impl std::str::FromStr for FamilyName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drift" => Ok(Self::Drift),
            "g0" => Ok(Self::G0),
            other => Err(Error::Config(format!("unknown coin family {other:?} (expected drift or g0)"))),
        }
    }
}

impl CoinSpec {
    pub fn build(&self) -> Result<UnitaryEmbedding> {
        match *self {
            CoinSpec::Family { family, xi, eta } => {
                let p = FamilyParams::new(xi, eta)?;
                match family {
                    FamilyName::Drift => family_drift(p),
                    FamilyName::G0 => family_g0(p),
                }
            }
            CoinSpec::Explicit { alpha, beta, gamma, delta } => {
                let c = |x: [f64; 2]| Complex64::new(x[0], x[1]);
                embed(&CoinContraction::new(c(alpha), c(beta), c(gamma), c(delta)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, proptest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn drift_example_has_g_half() {
        let e = family_drift(FamilyParams::new(PI / 6.0, PI / 3.0).unwrap()).unwrap();
        assert!((e.g - 0.5).abs() < 1e-15);
        assert!(e.q.norm() < 1e-16);
        assert!((e.s.re - (PI / 6.0).cos()).abs() < 1e-15);
        let emb = embed(&e.contraction()).unwrap();
        assert!((emb.g - 0.5).abs() < 1e-12);
        for (a, b) in emb.entries().iter().flatten().zip(e.entries().iter().flatten()) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn identity_embeds_to_identity() {
        let e = embed(&CoinContraction::identity()).unwrap();
        assert_eq!(e.g, 1.0);
        assert!((e.matrix() - DMatrix::<Complex64>::identity(3, 3)).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn diagonal_unitary_det() {
        let c0 = CoinContraction::new(Complex64::from_polar(1.0, 0.4), ZERO, ZERO, Complex64::from_polar(1.0, -1.1));
        let (g, chi) = det_g_chi(&c0);
        assert!((g - 1.0).abs() < 1e-15);
        assert!((chi - (0.4 - 1.1)).abs() < 1e-15);
    }

    #[test]
    fn g0_family_properties() {
        let p = FamilyParams::new(0.3, FRAC_PI_2 - 0.3).unwrap();
        let e = family_g0(p).unwrap();
        assert_eq!(e.g, 0.0);
        assert!((e.alpha.norm() + e.delta.norm() - 1.0).abs() < 1e-15);
        assert!(e.contraction().det().norm() < 1e-16);
        let special = family_g0(FamilyParams::new(0.0, FRAC_PI_2).unwrap()).unwrap();
        assert!((special.gamma - special.q * special.t).norm() < 1e-16);
        let emb = embed(&e.contraction()).unwrap();
        assert!((emb.matrix() - e.matrix()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn families_reject_out_of_range() {
        assert!(FamilyParams::new(-0.1, 0.2).is_err());
        assert!(FamilyParams::new(0.1, 1.7).is_err());
    }

    #[test]
    fn non_contraction_is_rejected() {
        let c0 = CoinContraction::new(real(1.1), ZERO, ZERO, real(0.2));
        assert!(matches!(embed(&c0), Err(Error::NotContraction { .. })));
        let strict = CoinContraction::new(real(0.5), ZERO, ZERO, real(0.5));
        assert!(matches!(embed(&strict), Err(Error::EmbeddingBreakdown(_))));
    }

    #[test]
    fn unimodular_det_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary3(&mut rng);
        assert!(unitary_iff_unimodular_det(&u, 1e-12).unwrap());
        let half = family_drift(FamilyParams::new(PI / 6.0, 0.7).unwrap()).unwrap();
        assert!(!unitary_iff_unimodular_det(&half.contraction().matrix(), 1e-12).unwrap());
        let big = DMatrix::from_element(2, 2, real(1.0));
        assert!(unitary_iff_unimodular_det(&big, 1e-12).is_err());
    }

    #[test]
    fn strict_contractions_have_small_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 2..=6 {
            for _ in 0..20 {
                let m = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                let w = m.map(|z| z / (crate::spectra::operator_norm(&m) * 1.01));
                let det = w.determinant().norm();
                let unitary = unitary_iff_unimodular_det(&w, 1e-12).unwrap();
                assert!(!unitary);
                assert!((det - 1.0).abs() > 1e-6);
            }
        }
    }

    #[test]
    fn coin_spec_parses_both_forms() {
        let fam: CoinSpec = serde_json::from_str(r#"{"family":"drift","xi":0.26,"eta":1.05}"#).unwrap();
        assert!((fam.build().unwrap().g - 0.26f64.sin()).abs() < 1e-15);
        let exp: CoinSpec = serde_json::from_str(
            r#"{"alpha":[1,0],"beta":[0,0],"gamma":[0,0],"delta":[0,1]}"#,
        )
        .unwrap();
        assert_eq!(exp.build().unwrap().g, 1.0);
    }

    proptest! {
        #[test]
        fn random_embeddings_are_unitary(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_embedding(&mut rng).unwrap();
            prop_assert!(e.unitarity_defect() < 1e-12);
            prop_assert!((e.contraction().det().norm() - e.g).abs() < 1e-12);
            // gauge: q real and nonnegative, or q = 0 and s real nonnegative
            let pivot = if e.q.norm() > 1e-14 { e.q } else { e.s };
            prop_assert!(pivot.im.abs() < 1e-14 && pivot.re >= 0.0);
        }

        #[test]
        fn prescribed_g_is_reproduced(seed in any::<u64>(), g in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_embedding_with_g(&mut rng, g).unwrap();
            prop_assert!((e.g - g).abs() < 1e-12);
            prop_assert!(e.unitarity_defect() < 1e-12);
        }

        #[test]
        fn families_are_real_orthogonal(xi in 0.0..FRAC_PI_2, eta in 0.0..FRAC_PI_2) {
            let p = FamilyParams::new(xi, eta).unwrap();
            for e in [family_drift(p).unwrap(), family_g0(p).unwrap()] {
                prop_assert!(e.unitarity_defect() < 1e-14);
                prop_assert!(e.entries().iter().flatten().all(|z| z.im == 0.0));
            }
            prop_assert!((family_drift(p).unwrap().g - xi.sin()).abs() < 1e-15);
        }

        #[test]
        fn gauge_change_keeps_unitarity(seed in any::<u64>(), phi in -PI..PI) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_embedding(&mut rng).unwrap().with_gauge(phi);
            prop_assert!(e.unitarity_defect() < 1e-12);
        }
    }
}
