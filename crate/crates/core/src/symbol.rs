//! Bloch-Floquet symbols of translation invariant and periodic-phase
//! operators, the scalar symbols of the diagonal blocks of `V`, and ergodic
//! hulls built from periodic approximants.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bandop::tridiag_blocks;
use crate::coin::UnitaryEmbedding;
use crate::error::{Error, Result};
use crate::phases::PhaseDistribution;
use crate::spectra::eig::{eigenvalues_in_place, quadratic_roots};

/// `n` equispaced quasimomenta in `[0, 2 pi)`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
}

/// `[[alpha e^{2ix}, beta e^{ix}], [gamma e^{-ix}, delta e^{-2ix}]]`.
pub fn symbol_t(emb: &UnitaryEmbedding, x: f64) -> [[Complex64; 2]; 2] {
    let e = |k: f64| Complex64::from_polar(1.0, k * x);
    [[emb.alpha * e(2.0), emb.beta * e(1.0)], [emb.gamma * e(-1.0), emb.delta * e(-2.0)]]
}

/// Both roots of `l^2 - (alpha e^{2ix} + delta e^{-2ix}) l + (alpha delta - beta gamma)`.
pub fn lambda_pm(emb: &UnitaryEmbedding, x: f64) -> [Complex64; 2] {
    let tr = emb.alpha * Complex64::from_polar(1.0, 2.0 * x) + emb.delta * Complex64::from_polar(1.0, -2.0 * x);
    quadratic_roots(tr, emb.contraction().det())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolSpectrum {
    /// `(x, eigenvalues at x)` in grid order.
    pub samples: Vec<(f64, Vec<Complex64>)>,
    pub min_modulus: f64,
    pub max_modulus: f64,
}

impl SymbolSpectrum {
    fn from_samples(samples: Vec<(f64, Vec<Complex64>)>) -> Self {
        let mods = samples.iter().flat_map(|(_, ev)| ev.iter().map(|z| z.norm()));
        let (min_modulus, max_modulus) =
            mods.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        Self { samples, min_modulus, max_modulus }
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.samples.iter().flat_map(|(_, ev)| ev.iter().copied()).collect()
    }
}

/// Sampled `Ran lambda_+ u Ran lambda_-`.
pub fn ti_spectrum(emb: &UnitaryEmbedding, xgrid: &[f64]) -> Result<SymbolSpectrum> {
    if xgrid.is_empty() {
        return Err(Error::Empty("quasimomentum grid"));
    }
    Ok(SymbolSpectrum::from_samples(xgrid.iter().map(|&x| (x, lambda_pm(emb, x).to_vec())).collect()))
}

/// Phases `theta_1 .. theta_l` repeated with period `l` along the sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicWord {
    pub phases: Vec<f64>,
}

impl PeriodicWord {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.len() < 2 || !phases.len().is_multiple_of(2) {
            return Err(Error::InvalidSize(format!("word length {} must be even and positive", phases.len())));
        }
        Ok(Self { phases })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn check_support(&self, dist: &PhaseDistribution) -> Result<()> {
        match self.phases.iter().enumerate().find(|(_, w)| !dist.contains(**w)) {
            Some((index, &value)) => Err(Error::PhaseOutsideSupport { index, value }),
            None => Ok(()),
        }
    }

    /// The same word repeated twice, a word of length `2l` with the same
    /// periodic operator.
    pub fn doubled(&self) -> Self {
        let mut phases = self.phases.clone();
        phases.extend_from_slice(&self.phases);
        Self { phases }
    }
}

/// Row-major `l x l` Bloch matrix of the periodic operator at supercell
/// quasimomentum `x`: hops leaving the cell to the right pick up `e^{ix}`,
/// hops to the left `e^{-ix}`.
pub fn bloch_matrix(emb: &UnitaryEmbedding, word: &PeriodicWord, x: f64) -> Vec<Complex64> {
    let l = word.len();
    let li = l as i64;
    let mut b = vec![Complex64::new(0.0, 0.0); l * l];
    let right = Complex64::from_polar(1.0, x);
    let left = right.conj();
    for j in 0..li / 2 {
        for (row, c0, c1) in [(2 * j - 1, emb.gamma, emb.delta), (2 * j + 2, emb.alpha, emb.beta)] {
            let (r, hop) = if row >= li {
                (row - li, right)
            } else if row < 0 {
                (row + li, left)
            } else {
                (row, Complex64::new(1.0, 0.0))
            };
            let ph = Complex64::from_polar(1.0, word.phases[r as usize]) * hop;
            let r = r as usize;
            b[r * l + 2 * j as usize] += ph * c0;
            b[r * l + 2 * j as usize + 1] += ph * c1;
        }
    }
    b
}

fn bloch_eigenvalues(emb: &UnitaryEmbedding, word: &PeriodicWord, x: f64) -> Result<Vec<Complex64>> {
    let l = word.len();
    let mut b = bloch_matrix(emb, word, x);
    eigenvalues_in_place(&mut b, l)
}

/// Eigenvalues of the Bloch matrix over the grid; their union is the
/// spectrum of the periodic operator.
pub fn bloch_periodic(emb: &UnitaryEmbedding, word: &PeriodicWord, xgrid: &[f64]) -> Result<SymbolSpectrum> {
    if xgrid.is_empty() {
        return Err(Error::Empty("quasimomentum grid"));
    }
    let samples: Result<Vec<_>> =
        xgrid.par_iter().map(|&x| Ok((x, bloch_eigenvalues(emb, word, x)?))).collect();
    Ok(SymbolSpectrum::from_samples(samples?))
}

/// As [`bloch_periodic`], with the word checked against a phase support.
pub fn bloch_periodic_in(
    emb: &UnitaryEmbedding,
    word: &PeriodicWord,
    dist: &PhaseDistribution,
    xgrid: &[f64],
) -> Result<SymbolSpectrum> {
    word.check_support(dist)?;
    bloch_periodic(emb, word, xgrid)
}

/// Bloch matrix of `T~` for a word of length divisible by 4: the square of
/// the Bloch matrix of `T`, restricted to the sites `4k, 4k+1`.
pub fn bloch_ttilde_matrix(emb: &UnitaryEmbedding, word: &PeriodicWord, x: f64) -> Result<Vec<Complex64>> {
    let l = word.len();
    if !l.is_multiple_of(4) {
        return Err(Error::InvalidSize(format!("word length {l} must be a multiple of 4")));
    }
    let b = bloch_matrix(emb, word, x);
    let keep: Vec<usize> = (0..l).filter(|i| i % 4 < 2).collect();
    let h = keep.len();
    let mut out = vec![Complex64::new(0.0, 0.0); h * h];
    for (a, &i) in keep.iter().enumerate() {
        for (c, &j) in keep.iter().enumerate() {
            out[a * h + c] = (0..l).map(|k| b[i * l + k] * b[k * l + j]).sum();
        }
    }
    Ok(out)
}

/// Random word of length `l` with phases from `dist`.
pub fn sample_word(dist: &PhaseDistribution, seed: u64, l: usize, index: u64) -> Result<PeriodicWord> {
    let base = ((l as i64) << 40) + ((index as i64) << 12);
    PeriodicWord::new((0..l as i64).map(|i| dist.draw(seed, base + i)).collect())
}

/// Rotation-invariant hull `{inner <= |z| <= outer}`, possibly with the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticAnnulus {
    pub inner: f64,
    pub outer: f64,
    pub contains_zero: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HullEstimate {
    pub points: Vec<Complex64>,
    pub analytic: Option<AnalyticAnnulus>,
    pub lengths: Vec<usize>,
    pub words_per_length: usize,
    pub grid_size: usize,
    pub distribution: PhaseDistribution,
}

/// Word lengths `2, 4, 8, ...` up to `lmax`.
pub fn doubling_lengths(lmax: usize) -> Vec<usize> {
    std::iter::successors(Some(2usize), |l| Some(2 * l)).take_while(|&l| l <= lmax).collect()
}

/// Union of periodic-approximant spectra, plus the closed-form sweep
/// `u_theta e^{i theta}(Ran lambda_+ u Ran lambda_-)` for phases uniform on
/// the circle.
pub fn ergodic_hull(
    emb: &UnitaryEmbedding,
    dist: &PhaseDistribution,
    lmax: usize,
    words_per_l: usize,
    xgrid: &[f64],
    seed: u64,
) -> Result<HullEstimate> {
    if xgrid.is_empty() {
        return Err(Error::Empty("quasimomentum grid"));
    }
    let lengths = doubling_lengths(lmax);
    if lengths.is_empty() {
        return Err(Error::InvalidSize(format!("lmax = {lmax} < 2")));
    }
    let mut points = Vec::new();
    for &l in &lengths {
        let count = if matches!(dist, PhaseDistribution::Point { .. }) { 1 } else { words_per_l };
        for w in 0..count {
            let word = sample_word(dist, seed, l, w as u64)?;
            points.extend(bloch_periodic(emb, &word, xgrid)?.points());
        }
    }
    let analytic = match dist {
        PhaseDistribution::Torus => Some(swept_annulus(emb, xgrid)?),
        _ => None,
    };
    Ok(HullEstimate {
        points,
        analytic,
        lengths,
        words_per_length: words_per_l,
        grid_size: xgrid.len(),
        distribution: *dist,
    })
}

/// Radial extent of `Ran lambda_+ u Ran lambda_-`; roots of modulus below
/// `1e-14` are reported through `contains_zero`.
pub fn swept_annulus(emb: &UnitaryEmbedding, xgrid: &[f64]) -> Result<AnalyticAnnulus> {
    let ti = ti_spectrum(emb, xgrid)?;
    let mut inner = f64::INFINITY;
    let mut outer: f64 = 0.0;
    let mut contains_zero = false;
    for z in ti.points() {
        let r = z.norm();
        if r < 1e-14 {
            contains_zero = true;
        } else {
            inner = inner.min(r);
        }
        outer = outer.max(r);
    }
    if !inner.is_finite() {
        inner = 0.0;
    }
    Ok(AnalyticAnnulus { inner, outer, contains_zero })
}

/// Scalar symbol `e^{ix} w_+ + e^{-ix} w_-` of a diagonal block `V_jj` and
/// its image ellipse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VjjSymbol {
    pub w_plus: Complex64,
    pub w_minus: Complex64,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Direction of the major axis.
    pub rotation: f64,
}

impl VjjSymbol {
    pub fn from_coefficients(w_plus: Complex64, w_minus: Complex64) -> Self {
        let (a, b) = (w_plus.norm(), w_minus.norm());
        let rotation = match (a > 0.0, b > 0.0) {
            (true, true) => 0.5 * (w_plus.arg() + w_minus.arg()),
            (true, false) => w_plus.arg(),
            (false, true) => w_minus.arg(),
            (false, false) => 0.0,
        };
        Self { w_plus, w_minus, semi_major: a + b, semi_minor: (a - b).abs(), rotation }
    }

    pub fn at(&self, x: f64) -> Complex64 {
        self.w_plus * Complex64::from_polar(1.0, x) + self.w_minus * Complex64::from_polar(1.0, -x)
    }

    /// Point of the ellipse at parameter `t` from its axes.
    pub fn ellipse_point(&self, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.rotation) * Complex64::new(self.semi_major * t.cos(), self.semi_minor * t.sin())
    }
}

pub fn vjj_symbol(emb: &UnitaryEmbedding, j: usize) -> Result<VjjSymbol> {
    if !(1..=2).contains(&j) {
        return Err(Error::OutOfRange(format!("block index {j}")));
    }
    let b = tridiag_blocks(emb)?;
    let w = b.w[j - 1][j - 1];
    Ok(VjjSymbol::from_coefficients(w.w_plus, w.w_minus))
}

/// `sup_{a in A} inf_{b in B} |a - b|`.
pub fn directed_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .map(|x| b.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}
