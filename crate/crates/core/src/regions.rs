//! Regions of the complex plane certified to lie in the resolvent set of
//! `T = V K`, `K = P1 + g P2`.
//!
//! All regions are open. The form set attached to a gap `(-theta, theta)` of
//! `sigma(V)` is the union over `tau > 0` of
//! `B_tau(d_tau) n B_{g tau}(g d_tau)` with `d_tau = |tau - e^{i theta}|`.
//! Squaring both disc conditions makes them linear in `tau`:
//!
//! ```text
//! 2 tau (cos theta - Re z)   < 1 - |z|^2
//! 2 tau (g cos theta - Re z) < (g^2 - |z|^2) / g
//! ```
//!
//! so membership reduces to intersecting two half-lines with `(0, inf)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::bandop::{tridiag_blocks, v_coin, TridiagonalBlockData};
use crate::coin::UnitaryEmbedding;
use crate::error::{Error, Result};
use crate::spectra::eig::quadratic_roots;

/// Margin by which gap endpoints found numerically are pulled inward.
pub const GAP_MARGIN: f64 = 1e-9;

/// Quasimomentum samples used to locate the gaps of `sigma(V)`.
pub const GAP_SAMPLES: usize = 4096;

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::OutOfRange(format!("theta = {theta} not in (0, pi)")));
    }
    Ok(())
}

fn check_g(g: f64) -> Result<()> {
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::OutOfRange(format!("g = {g} not in (0, 1)")));
    }
    Ok(())
}

/// Open interval of `tau`.
#[derive(Debug, Clone, Copy)]
struct TauRange {
    lo: f64,
    hi: f64,
}

impl TauRange {
    fn positive() -> Self {
        Self { lo: 0.0, hi: f64::INFINITY }
    }

    /// Intersects with `{tau : a tau < b}`.
    fn restrict(self, a: f64, b: f64) -> Self {
        if a > 0.0 {
            Self { hi: self.hi.min(b / a), ..self }
        } else if a < 0.0 {
            Self { lo: self.lo.max(b / a), ..self }
        } else if b > 0.0 {
            self
        } else {
            Self { lo: 1.0, hi: 0.0 }
        }
    }

    fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }
}

/// `tau` values for which `z` lies in both discs, as an open interval.
fn form_tau_range(theta: f64, g: f64, z: Complex64) -> TauRange {
    let c = theta.cos();
    let r2 = z.norm_sqr();
    TauRange::positive()
        .restrict(2.0 * (c - z.re), 1.0 - r2)
        .restrict(2.0 * (g * c - z.re), (g * g - r2) / g)
}

/// Membership in `D(theta) u B_0(g) u R_1(theta)` (for `theta >= pi/2` this
/// set is `B_0(g) u R_g(theta)`).
pub fn member_form(theta: f64, g: f64, z: Complex64) -> Result<bool> {
    check_theta(theta)?;
    check_g(g)?;
    Ok(!form_tau_range(theta, g, z).is_empty())
}

/// Form set of the gap `(alpha - theta, alpha + theta)` centred elsewhere is
/// handled by rotation; this is the set generated by `tau e^{i alpha}`,
/// `0 <= alpha < theta`, for the gap `(-theta, theta)`.
pub fn member_form_rotated(theta: f64, g: f64, alpha: f64, z: Complex64) -> Result<bool> {
    check_theta(theta)?;
    if alpha.abs() >= theta || alpha.is_nan() {
        return Err(Error::OutOfRange(format!("|alpha| = {} must be below theta = {theta}", alpha.abs())));
    }
    member_form(theta - alpha.abs(), g, z * Complex64::from_polar(1.0, -alpha))
}

/// `y^2` on the boundary curve of `D(theta)` at abscissa `x`.
pub fn cubic_boundary(theta: f64, g: f64, x: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < PI / 2.0) {
        return Err(Error::OutOfRange(format!("theta = {theta} not in (0, pi/2)")));
    }
    check_g(g)?;
    let top = (1.0 + g) * theta.cos();
    if !(0.0..top).contains(&x) {
        return Err(Error::OutOfRange(format!("x = {x} not in [0, {top})")));
    }
    Ok(x * (x * x - x * top + g) / (top - x))
}

/// Abscissa of the boundary point generated by the disc pair at `tau`.
pub fn cubic_x_of_tau(theta: f64, g: f64, tau: f64) -> f64 {
    -(1.0 + g) / (2.0 * tau) + (1.0 + g) * theta.cos()
}

/// Membership in `B_0(g) u Delta_g(theta)`.
pub fn member_delta(theta: f64, g: f64, z: Complex64) -> Result<bool> {
    check_theta(theta)?;
    check_g(g)?;
    if z.norm() < g {
        return Ok(true);
    }
    let e = Complex64::from_polar(1.0, theta);
    Ok(z.re > g * theta.cos() && (z * e.conj()).re < g && (z * e).re < g)
}

/// Set generated by `tau e^{i alpha}`, `tau < 0`, through `K`: `z` belongs
/// iff `|z| < g` or `|z| c(beta) < g cos alpha`, where `c(beta)` is the
/// largest value of `cos(nu - beta)` over `e^{i nu}` in `sigma(V)` and
/// `beta = arg z - alpha`.
pub fn member_k_rotated(theta: f64, g: f64, alpha: f64, z: Complex64) -> Result<bool> {
    check_theta(theta)?;
    check_g(g)?;
    if alpha.abs() >= PI / 2.0 || alpha.is_nan() {
        return Err(Error::OutOfRange(format!("alpha = {alpha} not in (-pi/2, pi/2)")));
    }
    let rho = z.norm();
    if rho < g {
        return Ok(true);
    }
    let beta = (z * Complex64::from_polar(1.0, -alpha)).arg();
    let c = if beta.abs() >= theta { 1.0 } else { (theta - beta.abs()).cos() };
    Ok(rho * c < g * alpha.cos())
}

/// Membership in `Gamma_{rho, rho'}(theta)`.
pub fn member_gamma(rho: f64, rho2: f64, theta: f64, z: Complex64) -> Result<bool> {
    check_theta(theta)?;
    if !(rho > 0.0 && rho2 > 0.0) {
        return Err(Error::OutOfRange(format!("rho = {rho}, rho' = {rho2} must be positive")));
    }
    if z.norm() < rho2 {
        return Ok(true);
    }
    let e = Complex64::from_polar(rho, theta);
    let r = rho + rho2;
    Ok((z + e).norm() < r && (z + e.conj()).norm() < r && z.re > rho2 * theta.cos())
}

/// Brute-force product-region test: `z` is certified when, for some `tau`
/// of the grid outside `sigma_a`, `|z - tau b| < |b| dist(tau, sigma_a)` for
/// all `b` in `sigma_b`.
///
/// `sigma_a` is a set of samples ordered along a curve of radius at most
/// one (an arc of the unit circle in practice). Distances are taken to the
/// polygon through the samples and lowered by the largest sagitta, so they
/// never exceed the distance to the curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductOracle {
    pub sigma_b: Vec<Complex64>,
    pub tau_grid: Vec<Complex64>,
    distances: Vec<f64>,
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

impl ProductOracle {
    pub fn new(sigma_a: &[Complex64], sigma_b: &[Complex64], tau_grid: &[Complex64]) -> Result<Self> {
        if sigma_a.is_empty() || sigma_b.is_empty() || tau_grid.is_empty() {
            return Err(Error::Empty("spectral samples or tau grid"));
        }
        if sigma_b.iter().any(|b| b.norm() == 0.0) {
            return Err(Error::OutOfRange("0 lies in sigma(B)".into()));
        }
        let sagitta = sigma_a
            .windows(2)
            .map(|w| {
                let h = (w[1] - w[0]).norm().min(2.0);
                1.0 - (1.0 - h * h / 4.0).sqrt()
            })
            .fold(0.0, f64::max);
        let distances = tau_grid
            .iter()
            .map(|&tau| {
                let d = if sigma_a.len() == 1 {
                    (tau - sigma_a[0]).norm()
                } else {
                    sigma_a.windows(2).map(|w| segment_distance(tau, w[0], w[1])).fold(f64::INFINITY, f64::min)
                };
                (d - sagitta).max(0.0)
            })
            .collect();
        Ok(Self { sigma_b: sigma_b.to_vec(), tau_grid: tau_grid.to_vec(), distances })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.tau_grid.iter().zip(&self.distances).any(|(&tau, &d)| {
            d > 0.0 && self.sigma_b.iter().all(|&b| (z - tau * b).norm() < b.norm() * d)
        })
    }
}

/// One-shot form of [`ProductOracle`].
pub fn member_product(
    sigma_a: &[Complex64],
    sigma_b: &[Complex64],
    z: Complex64,
    tau_grid: &[Complex64],
) -> Result<bool> {
    Ok(ProductOracle::new(sigma_a, sigma_b, tau_grid)?.contains(z))
}

/// Log-spaced positive reals `lo .. hi`.
pub fn log_tau_grid(lo: f64, hi: f64, n: usize) -> Vec<Complex64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| Complex64::new((a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp(), 0.0)).collect()
}

/// Samples of the arc `{e^{i nu} : theta <= nu <= 2 pi - theta}`.
pub fn arc_samples(theta: f64, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, theta + (TAU - 2.0 * theta) * k as f64 / (n - 1).max(1) as f64))
        .collect()
}

/// A gap `(rotation - theta, rotation + theta)` of the spectrum of a unitary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapArc {
    pub theta: f64,
    pub rotation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum RegionDescriptor {
    Disc { center: Complex64, radius: f64 },
    /// `Re z > gamma cos(theta)`.
    HalfPlane { gamma: f64, theta: f64 },
    /// `D(theta) u B_0(g) u R_1(theta)`.
    Form { theta: f64, g: f64 },
    /// `B_0(g) u Delta_g(theta)`.
    Triangle { theta: f64, g: f64 },
    Gamma { rho: f64, rho2: f64, theta: f64 },
    /// `inner < |z| < outer`, or `<= outer` when `outer_closed`.
    Annulus { inner: f64, outer: f64, outer_closed: bool },
    Product(ProductOracle),
}

/// A region together with the rotation taking its bisector to the real axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub descriptor: RegionDescriptor,
    pub rotation: f64,
}

impl Region {
    pub fn new(descriptor: RegionDescriptor) -> Self {
        Self { descriptor, rotation: 0.0 }
    }

    pub fn rotated(descriptor: RegionDescriptor, rotation: f64) -> Self {
        Self { descriptor, rotation }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let w = z * Complex64::from_polar(1.0, -self.rotation);
        match &self.descriptor {
            RegionDescriptor::Disc { center, radius } => (w - center).norm() < *radius,
            RegionDescriptor::HalfPlane { gamma, theta } => w.re > gamma * theta.cos(),
            RegionDescriptor::Form { theta, g } => member_form(*theta, *g, w).unwrap_or(false),
            RegionDescriptor::Triangle { theta, g } => member_delta(*theta, *g, w).unwrap_or(false),
            RegionDescriptor::Gamma { rho, rho2, theta } => member_gamma(*rho, *rho2, *theta, w).unwrap_or(false),
            RegionDescriptor::Annulus { inner, outer, outer_closed } => {
                let r = w.norm();
                r > *inner && if *outer_closed { r <= *outer } else { r < *outer }
            }
            RegionDescriptor::Product(oracle) => oracle.contains(w),
        }
    }

    /// `z` and all eight points at distance `tol` around it are members.
    pub fn contains_deeply(&self, z: Complex64, tol: f64) -> bool {
        self.contains(z)
            && (0..8).all(|k| self.contains(z + Complex64::from_polar(tol, k as f64 * PI / 4.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedRegion {
    pub region: Region,
    /// The inequality that activated this region.
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub g: f64,
    pub epsilon: f64,
    pub r_v: Option<f64>,
    pub gap_ok: bool,
    pub gaps: Vec<GapArc>,
    /// Per gap: `cos^2(theta) <= 4 g / (1 + g)^2`.
    pub gap_splits: Vec<bool>,
    pub splits: bool,
    pub regions: Vec<CertifiedRegion>,
}

impl Certificate {
    pub fn contains(&self, z: Complex64) -> bool {
        self.regions.iter().any(|r| r.region.contains(z))
    }

    pub fn contains_deeply(&self, z: Complex64, tol: f64) -> bool {
        self.regions.iter().any(|r| r.region.contains_deeply(z, tol))
    }
}

/// Whether the segment `[0, 1]` crosses no spectrum of the form region.
pub fn split_predicate(theta: f64, g: f64) -> bool {
    theta.cos().powi(2) <= 4.0 * g / (1.0 + g).powi(2)
}

fn v_symbol_eigenvalues(emb: &UnitaryEmbedding, x: f64) -> [Complex64; 2] {
    let c = v_coin(emb);
    let tr = c.alpha * Complex64::from_polar(1.0, 2.0 * x) + c.delta * Complex64::from_polar(1.0, -2.0 * x);
    quadratic_roots(tr, c.det())
}

fn wrap(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Golden-section maximization of `f` on `[a, b]`.
fn maximize(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    f(0.5 * (a + b)).max(fc).max(fd)
}

/// Gaps of `sigma(V)` for the translation invariant `V`, located from its
/// symbol and refined by golden-section search; endpoints pulled inward by
/// [`GAP_MARGIN`].
pub fn spectral_gaps_of_v(emb: &UnitaryEmbedding, samples: usize) -> Vec<GapArc> {
    let h = TAU / samples as f64;
    let xs: Vec<f64> = (0..samples).map(|k| k as f64 * h).collect();
    let ev: Vec<[Complex64; 2]> = xs.iter().map(|&x| v_symbol_eigenvalues(emb, x)).collect();
    // largest motion of the eigenvalue pair between neighbouring samples
    let mut step: f64 = 0.0;
    for k in 0..samples {
        let (a, b) = (ev[k], ev[(k + 1) % samples]);
        let straight = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
        let crossed = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
        step = step.max(straight.min(crossed));
    }
    let threshold = 4.0 * step.max(1e-6);
    let mut args: Vec<f64> = ev.iter().flat_map(|p| p.iter().map(|z| z.arg())).collect();
    args.sort_by(f64::total_cmp);
    let n = args.len();
    let mut gaps = Vec::new();
    for k in 0..n {
        let lo = args[k];
        let hi = if k + 1 < n { args[k + 1] } else { args[0] + TAU };
        if hi - lo <= threshold {
            continue;
        }
        let center = 0.5 * (lo + hi);
        let rel = |z: Complex64| wrap(z.arg() - center);
        // lower edge: largest negative relative angle; upper: smallest positive
        let lower = |x: f64| {
            v_symbol_eigenvalues(emb, x).iter().map(|&z| rel(z)).filter(|r| *r < 0.0).fold(-PI, f64::max)
        };
        let upper = |x: f64| {
            -v_symbol_eigenvalues(emb, x).iter().map(|&z| rel(z)).filter(|r| *r > 0.0).fold(PI, f64::min)
        };
        let best = |f: &dyn Fn(f64) -> f64| {
            let k0 = (0..samples).max_by(|&i, &j| f(xs[i]).total_cmp(&f(xs[j]))).unwrap_or(0);
            maximize(f, xs[k0] - h, xs[k0] + h)
        };
        let a = best(&lower);
        let b = -best(&upper);
        let half = 0.5 * (b - a) - GAP_MARGIN;
        if half > 0.0 {
            gaps.push(GapArc { theta: half, rotation: wrap(center + 0.5 * (a + b)) });
        }
    }
    gaps
}

/// Composite certificate for the random operator with phases supported in
/// `[-epsilon, epsilon]`.
pub fn certified_resolvent(
    emb: &UnitaryEmbedding,
    epsilon: f64,
    blocks: Option<&TridiagonalBlockData>,
) -> Result<Certificate> {
    let g = emb.g;
    let mut regions = Vec::new();
    if g > 0.0 {
        regions.push(CertifiedRegion {
            region: Region::new(RegionDescriptor::Disc { center: Complex64::new(0.0, 0.0), radius: g }),
            reason: format!("|z| < g = {g}"),
        });
    }
    if emb.is_unitary_limit() {
        return Ok(Certificate {
            g,
            epsilon,
            r_v: None,
            gap_ok: false,
            gaps: Vec::new(),
            gap_splits: Vec::new(),
            splits: false,
            regions,
        });
    }
    let owned;
    let blocks = match blocks {
        Some(b) => b,
        None => {
            owned = tridiag_blocks(emb)?;
            &owned
        }
    };
    if blocks.gap_ok {
        let (n11, n12, n21, n22) = (blocks.norm(1, 1), blocks.norm(1, 2), blocks.norm(2, 1), blocks.norm(2, 2));
        regions.push(CertifiedRegion {
            region: Region::new(RegionDescriptor::Annulus { inner: blocks.r_v, outer: 1.0, outer_closed: true }),
            reason: format!(
                "||V11|| = {n11} < 1 and g < (1 - ||V11||) / (||V21|| ||V12|| + ||V22|| (1 - ||V11||)) = {}",
                (1.0 - n11) / (n21 * n12 + n22 * (1.0 - n11))
            ),
        });
    }
    let gaps: Vec<GapArc> = spectral_gaps_of_v(emb, GAP_SAMPLES)
        .into_iter()
        .filter_map(|gap| {
            let theta = gap.theta - epsilon;
            (theta > 0.0).then_some(GapArc { theta, rotation: gap.rotation })
        })
        .collect();
    let mut gap_splits = Vec::new();
    if g > 0.0 {
        for gap in &gaps {
            regions.push(CertifiedRegion {
                region: Region::rotated(RegionDescriptor::Form { theta: gap.theta, g }, gap.rotation),
                reason: format!(
                    "arc of half-width {} around angle {} free of sigma(V) after smearing by {epsilon}",
                    gap.theta, gap.rotation
                ),
            });
            gap_splits.push(split_predicate(gap.theta, g));
        }
    } else {
        gap_splits = vec![false; gaps.len()];
    }
    let splits = gap_splits.iter().any(|&s| s);
    Ok(Certificate { g, epsilon, r_v: Some(blocks.r_v), gap_ok: blocks.gap_ok, gaps, gap_splits, splits, regions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::{family_drift, family_g0, FamilyParams};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn origin_neighbourhood_is_member() {
        for (theta, g) in [(0.4, 0.3), (1.2, 0.05), (2.0, 0.7)] {
            assert!(member_form(theta, g, c(0.5 * g, 0.0)).unwrap());
            assert!(member_delta(theta, g, c(0.0, 0.0)).unwrap());
        }
    }

    #[test]
    fn anchors_sit_on_the_boundary() {
        let (theta, g) = (0.7f64, 0.35f64);
        for (z, tau) in [
            (c(0.0, 0.0), 1.0 / (2.0 * theta.cos())),
            (Complex64::from_polar(g, theta), (1.0 + g) / (2.0 * theta.cos())),
            (Complex64::from_polar(1.0, theta), (1.0 + g) / (2.0 * g * theta.cos())),
        ] {
            if z.norm() > 0.0 {
                assert!(!member_form(theta, g, z).unwrap());
                let y2 = cubic_boundary(theta, g, z.re).unwrap();
                assert!((y2 - z.im * z.im).abs() < 1e-12);
            }
            assert!((cubic_x_of_tau(theta, g, tau) - z.re).abs() < 1e-14);
        }
        assert_eq!(cubic_boundary(theta, g, 0.0).unwrap(), 0.0);
        assert!(cubic_boundary(theta, g, 2.0).is_err());
        assert!(cubic_boundary(1.7, g, 0.1).is_err());
    }

    #[test]
    fn segment_split_threshold() {
        let g = 0.3f64;
        let critical = (4.0 * g / (1.0 + g).powi(2)).sqrt().acos();
        let segment = |theta: f64| {
            (1..1000).all(|k| member_form(theta, g, c(k as f64 / 1000.0, 0.0)).unwrap())
        };
        assert!(segment(critical + 0.01));
        assert!(!segment(critical - 0.01));
        assert!(split_predicate(critical + 0.01, g) && !split_predicate(critical - 0.01, g));
    }

    #[test]
    fn wide_gaps_reduce_to_disc_and_half_plane() {
        let (theta, g) = (2.0f64, 0.4f64);
        for z in [c(0.1, 1.5), c(-0.15, 0.2), c(-0.5, 0.0), c(3.0, -2.0), c(-0.3, -0.3)] {
            let expect = z.norm() < g || z.re > g * theta.cos();
            assert_eq!(member_form(theta, g, z).unwrap(), expect, "{z}");
        }
    }

    #[test]
    fn triangle_vertices_are_boundary_points() {
        let (theta, g) = (0.9f64, 0.5f64);
        for v in [Complex64::from_polar(g, theta), Complex64::from_polar(g, -theta), c(g / theta.cos(), 0.0)] {
            assert!(!member_delta(theta, g, v).unwrap());
            let inward = v + (c(g * 0.9, 0.0) - v) * 1e-6;
            assert!(member_delta(theta, g, inward).unwrap());
        }
    }

    #[test]
    fn triangle_matches_k_set_without_rotation() {
        for (theta, g) in [(0.6, 0.4), (1.4, 0.2), (2.3, 0.6)] {
            for k in 0..400 {
                let z = Complex64::from_polar(1.5 * (k % 20) as f64 / 20.0 + 0.01, (k / 20) as f64 * 0.33 - 3.1);
                assert_eq!(member_delta(theta, g, z).unwrap(), member_k_rotated(theta, g, 0.0, z).unwrap(), "{z}");
            }
        }
    }

    #[test]
    fn wide_gap_rotated_k_set_escapes_the_form_set() {
        let (theta, g, alpha) = (3.0, 0.01, 1.39);
        let z = c(-0.66, 0.75);
        assert!(member_k_rotated(theta, g, alpha, z).unwrap());
        assert!(!member_form(theta, g, z).unwrap());
    }

    #[test]
    fn gamma_set_contains_its_disc() {
        assert!(member_gamma(0.5, 0.3, 0.8, c(0.29, 0.0)).unwrap());
        assert!(!member_gamma(0.5, 0.3, 0.8, c(-0.31, 0.0)).unwrap());
        assert!(member_gamma(0.0, 0.3, 0.8, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn product_region_examples() {
        let circle: Vec<Complex64> = (0..512).map(|k| Complex64::from_polar(1.0, TAU * k as f64 / 512.0)).collect();
        let g = 0.4;
        let sb = [c(1.0, 0.0), c(g, 0.0)];
        assert!(member_product(&circle, &sb, c(0.0, 0.0), &[c(0.0, 0.0)]).unwrap());
        let taus: Vec<Complex64> = (0..200).map(|k| c(k as f64 * 0.02, 0.0)).collect();
        assert!(!member_product(&circle, &sb, circle[17], &taus).unwrap());
        assert!(member_product(&[], &sb, c(0.0, 0.0), &taus).is_err());
    }

    #[test]
    fn form_agrees_with_product_oracle() {
        let (theta, g) = (0.8, 0.3);
        let oracle = ProductOracle::new(
            &arc_samples(theta, 4096),
            &[c(1.0, 0.0), c(g, 0.0)],
            &log_tau_grid(1e-3, 1e4, 4000),
        )
        .unwrap();
        let mut disagree = 0;
        for k in 0..2000 {
            let z = c(-1.2 + 2.4 * ((k * 37) % 2000) as f64 / 2000.0, -1.2 + 2.4 * ((k * 91) % 1999) as f64 / 1999.0);
            if oracle.contains(z) != member_form(theta, g, z).unwrap() {
                disagree += 1;
            }
        }
        assert!(disagree <= 2, "{disagree}");
        let region = Region::new(RegionDescriptor::Product(oracle));
        assert!(region.contains(c(0.1, 0.0)));
    }

    #[test]
    fn drift_family_certificate() {
        let (xi, eta, eps) = (PI / 12.0, PI / 3.0, 0.1);
        let emb = family_drift(FamilyParams::new(xi, eta).unwrap()).unwrap();
        let cert = certified_resolvent(&emb, eps, None).unwrap();
        assert!(cert.gap_ok);
        assert!((cert.r_v.unwrap() - 0.7927).abs() < 5e-5);
        assert_eq!(cert.gaps.len(), 2);
        for gap in &cert.gaps {
            assert!((gap.theta - (eta - eps)).abs() < 1e-8, "{gap:?}");
            let r = wrap(gap.rotation).abs();
            assert!(r < 1e-8 || (r - PI).abs() < 1e-8);
        }
        let kinds: Vec<&RegionDescriptor> = cert.regions.iter().map(|r| &r.region.descriptor).collect();
        assert!(matches!(kinds[0], RegionDescriptor::Disc { .. }));
        assert!(matches!(kinds[1], RegionDescriptor::Annulus { .. }));
        assert_eq!(kinds.len(), 4);
        assert_eq!(cert.splits, split_predicate(eta - eps, xi.sin()));
    }

    #[test]
    fn g0_certificate_has_no_disc() {
        let emb = family_g0(FamilyParams::new(0.3, 0.5).unwrap()).unwrap();
        let cert = certified_resolvent(&emb, 0.05, None).unwrap();
        assert!(cert.regions.iter().all(|r| !matches!(r.region.descriptor, RegionDescriptor::Disc { .. })));
        assert!(cert.regions.iter().all(|r| !matches!(r.region.descriptor, RegionDescriptor::Form { .. })));
    }

    #[test]
    fn invalid_parameters() {
        assert!(member_form(0.0, 0.5, c(0.0, 0.0)).is_err());
        assert!(member_form(0.5, 1.0, c(0.0, 0.0)).is_err());
        assert!(member_delta(3.2, 0.5, c(0.0, 0.0)).is_err());
        assert!(member_form_rotated(0.5, 0.5, 0.6, c(0.0, 0.0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2048))]

        #[test]
        fn conjugation_symmetry(theta in 0.05..3.1f64, g in 0.01..0.99f64, re in -1.5..1.5f64, im in -1.5..1.5f64) {
            let z = c(re, im);
            prop_assert_eq!(member_form(theta, g, z).unwrap(), member_form(theta, g, z.conj()).unwrap());
            prop_assert_eq!(member_delta(theta, g, z).unwrap(), member_delta(theta, g, z.conj()).unwrap());
            prop_assert_eq!(
                member_gamma(0.4, g, theta, z).unwrap(),
                member_gamma(0.4, g, theta, z.conj()).unwrap()
            );
        }

        #[test]
        fn triangle_inside_form(theta in 0.05..3.1f64, g in 0.01..0.99f64, re in -1.5..1.5f64, im in -1.5..1.5f64) {
            let z = c(re, im);
            if member_delta(theta, g, z).unwrap() {
                prop_assert!(member_form(theta, g, z).unwrap());
            }
        }

        #[test]
        fn rotated_sets_inside_unrotated(theta in 0.05..3.1f64, g in 0.01..0.99f64, t in 0.0..1.0f64, r in 0.0..1.0f64, phi in -PI..PI) {
            let z = Complex64::from_polar(r, phi);
            let alpha = t * theta;
            if theta < PI / 2.0 && alpha < theta && member_form_rotated(theta, g, alpha, z).unwrap() {
                prop_assert!(member_form(theta, g, z).unwrap());
            }
            let beta = t * PI / 2.0 * 0.999;
            if theta < PI / 2.0 && member_k_rotated(theta, g, beta, z).unwrap() {
                prop_assert!(member_form(theta, g, z).unwrap());
            }
        }
    }
}
