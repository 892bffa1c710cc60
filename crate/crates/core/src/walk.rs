//! Random quantum walks `U_w(C) = D_w S (I x C)` on a truncated 4-regular
//! tree or a square patch of `Z^2`, and their compression to the line
//! through the root.
//!
//! Coin letters are ordered `a, b, a^-1, b^-1` (indices 0..4). The line space
//! `H0` is spanned by `a^m x a` and `a^m x a^-1`, identified with `e_{2m}`
//! and `e_{2m+1}`.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::bandop::{build_t, Boundary};
use crate::coin::UnitaryEmbedding;
use crate::error::{Error, Result};
use crate::phases::{PhaseDistribution, PhaseField};

pub const A: u8 = 0;
pub const B: u8 = 1;
pub const A_INV: u8 = 2;
pub const B_INV: u8 = 3;

/// Deepest tree supported (`4 * 3^13` leaves at depth 14).
pub const MAX_TREE_DEPTH: usize = 14;

const LETTER_BITS: u32 = 2;
const LEN_SHIFT: u32 = 56;
const LATTICE_OFFSET: i64 = 1 << 20;
const OFF_LINE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn inverse(letter: u8) -> u8 {
    (letter + 2) % 4
}

/// The 4x4 coin `diag(C~, e^{i theta})`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinU4 {
    pub embedding: UnitaryEmbedding,
    pub theta: f64,
    matrix: Matrix4<Complex64>,
}

impl CoinU4 {
    pub fn new(embedding: UnitaryEmbedding, theta: f64) -> Result<Self> {
        let e = embedding.entries();
        let z = Complex64::new(0.0, 0.0);
        let matrix = Matrix4::new(
            e[0][0], e[0][1], e[0][2], z,
            e[1][0], e[1][1], e[1][2], z,
            e[2][0], e[2][1], e[2][2], z,
            z, z, z, Complex64::from_polar(1.0, theta),
        );
        let coin = Self { embedding, theta, matrix };
        let defect = coin.unitarity_defect();
        if defect > 1e-12 {
            return Err(Error::NotContraction { largest: 1.0 + defect, tol: 1e-12 });
        }
        Ok(coin)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    pub fn unitarity_defect(&self) -> f64 {
        let d = self.matrix.adjoint() * self.matrix - Matrix4::identity();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Truncated graph; vertices are packed into `u64` keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "graph", rename_all = "lowercase")]
pub enum Graph {
    /// Reduced words of length at most `depth`.
    Tree { depth: usize },
    /// `side x side` patch of `Z^2` centred at the origin; `side` is odd.
    Lattice { side: usize },
}

impl Graph {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Graph::Tree { depth } if depth == 0 || depth > MAX_TREE_DEPTH => {
                Err(Error::InvalidSize(format!("tree depth {depth} not in 1..={MAX_TREE_DEPTH}")))
            }
            Graph::Lattice { side } if side < 3 || side % 2 == 0 => {
                Err(Error::InvalidSize(format!("lattice side {side} must be odd and at least 3")))
            }
            _ => Ok(()),
        }
    }

    /// Distance from the root to the boundary.
    pub fn radius(&self) -> usize {
        match *self {
            Graph::Tree { depth } => depth,
            Graph::Lattice { side } => side / 2,
        }
    }

    pub fn root(&self) -> u64 {
        match self {
            Graph::Tree { .. } => 0,
            Graph::Lattice { .. } => lattice_key(0, 0),
        }
    }

    /// The vertex `a^m`.
    pub fn line_vertex(&self, m: i64) -> u64 {
        match self {
            Graph::Tree { .. } => {
                let letter = if m >= 0 { A } else { A_INV };
                (0..m.unsigned_abs()).fold(0, |v, _| tree_push(v, letter))
            }
            Graph::Lattice { .. } => lattice_key(m, 0),
        }
    }

    /// `Some(m)` when the vertex is `a^m`.
    pub fn line_index(&self, v: u64) -> Option<i64> {
        match self {
            Graph::Tree { .. } => {
                let len = tree_len(v);
                if len == 0 {
                    return Some(0);
                }
                let first = (v & 3) as u8;
                if first != A && first != A_INV {
                    return None;
                }
                let same = (0..len).all(|k| ((v >> (LETTER_BITS * k as u32)) & 3) as u8 == first);
                same.then_some(if first == A { len as i64 } else { -(len as i64) })
            }
            Graph::Lattice { .. } => {
                let (x, y) = lattice_coords(v);
                (y == 0).then_some(x)
            }
        }
    }

    pub fn on_boundary(&self, v: u64) -> bool {
        match *self {
            Graph::Tree { depth } => tree_len(v) >= depth,
            Graph::Lattice { side } => {
                let (x, y) = lattice_coords(v);
                let r = (side / 2) as i64;
                x.abs() >= r || y.abs() >= r
            }
        }
    }

    /// `v tau`.
    pub fn neighbor(&self, v: u64, letter: u8) -> u64 {
        match self {
            Graph::Tree { .. } => {
                let len = tree_len(v);
                if len > 0 && ((v >> (LETTER_BITS * (len as u32 - 1))) & 3) as u8 == inverse(letter) {
                    tree_pop(v)
                } else {
                    tree_push(v, letter)
                }
            }
            Graph::Lattice { .. } => {
                let (x, y) = lattice_coords(v);
                match letter {
                    A => lattice_key(x + 1, y),
                    B => lattice_key(x, y + 1),
                    A_INV => lattice_key(x - 1, y),
                    _ => lattice_key(x, y - 1),
                }
            }
        }
    }
}

fn tree_len(v: u64) -> usize {
    (v >> LEN_SHIFT) as usize
}

fn tree_push(v: u64, letter: u8) -> u64 {
    let len = tree_len(v) as u32;
    let bits = v & ((1 << LEN_SHIFT) - 1);
    (((len + 1) as u64) << LEN_SHIFT) | bits | ((letter as u64) << (LETTER_BITS * len))
}

fn tree_pop(v: u64) -> u64 {
    let len = tree_len(v) as u32;
    let bits = v & ((1 << (LETTER_BITS * (len - 1))) - 1);
    (((len - 1) as u64) << LEN_SHIFT) | bits
}

fn lattice_key(x: i64, y: i64) -> u64 {
    (((x + LATTICE_OFFSET) as u64) << 32) | (y + LATTICE_OFFSET) as u64
}

fn lattice_coords(v: u64) -> (i64, i64) {
    ((v >> 32) as i64 - LATTICE_OFFSET, (v & 0xffff_ffff) as i64 - LATTICE_OFFSET)
}

/// The phases `w_x^tau`. On the line they are the site phases of the band
/// matrix (site `2m + offset` for `a^m x a`, `2m + 1 + offset` for
/// `a^m x a^-1`); elsewhere they are drawn per slot from `distribution`.
#[derive(Debug, Clone)]
pub struct WalkPhases {
    pub distribution: PhaseDistribution,
    pub seed: u64,
    pub line: PhaseField,
    pub offset: i64,
}

impl WalkPhases {
    /// Line phases on `a^m`, `|m| <= radius`.
    pub fn sample(distribution: PhaseDistribution, seed: u64, radius: usize) -> Result<Self> {
        let line = PhaseField::for_sites(distribution, seed, 4 * radius + 2)?;
        Ok(Self { distribution, seed, line, offset: 2 * radius as i64 })
    }

    pub fn phase(&self, graph: &Graph, v: u64, letter: u8) -> f64 {
        if letter == A || letter == A_INV {
            if let Some(m) = graph.line_index(v) {
                let site = 2 * m + (letter == A_INV) as i64 + self.offset;
                if let Some(w) = self.line.get(site) {
                    return w;
                }
            }
        }
        let slot = (v << 2 | letter as u64) as i64;
        self.distribution.draw(self.seed ^ OFF_LINE_SALT, slot)
    }
}

/// Sparse walk state: amplitudes per vertex and letter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WalkState {
    pub amplitudes: HashMap<u64, [Complex64; 4]>,
}

impl WalkState {
    pub fn basis(v: u64, letter: u8) -> Self {
        let mut a = [Complex64::new(0.0, 0.0); 4];
        a[letter as usize] = Complex64::new(1.0, 0.0);
        Self { amplitudes: HashMap::from([(v, a)]) }
    }

    pub fn amplitude(&self, v: u64, letter: u8) -> Complex64 {
        self.amplitudes.get(&v).map_or(Complex64::new(0.0, 0.0), |a| a[letter as usize])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.values().flat_map(|a| a.iter()).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn support(&self) -> usize {
        self.amplitudes.len()
    }
}

/// `U_w(C)` on a truncated graph, with per-slot phases cached.
#[derive(Debug, Clone)]
pub struct Walk {
    pub graph: Graph,
    pub coin: CoinU4,
    pub phases: WalkPhases,
    cache: HashMap<(u64, u8), Complex64>,
}

impl Walk {
    pub fn new(graph: Graph, coin: CoinU4, phases: WalkPhases) -> Result<Self> {
        graph.validate()?;
        Ok(Self { graph, coin, phases, cache: HashMap::new() })
    }

    fn phase(&mut self, v: u64, letter: u8) -> Complex64 {
        let (graph, phases) = (&self.graph, &self.phases);
        *self
            .cache
            .entry((v, letter))
            .or_insert_with(|| Complex64::from_polar(1.0, phases.phase(graph, v, letter)))
    }

    /// One application of `U_w(C)`; fails if any amplitude sits on the
    /// truncation boundary.
    pub fn step(&mut self, state: &WalkState, step: usize) -> Result<WalkState> {
        let c = *self.coin.matrix();
        let mut next: HashMap<u64, [Complex64; 4]> = HashMap::with_capacity(3 * state.amplitudes.len());
        let mut keys: Vec<u64> = state.amplitudes.keys().copied().collect();
        keys.sort_unstable();
        for v in keys {
            let a = state.amplitudes[&v];
            if a.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            if self.graph.on_boundary(v) {
                return Err(Error::BoundaryReached { step });
            }
            for tau in 0..4u8 {
                let t = tau as usize;
                let amp = (0..4).map(|k| c[(t, k)] * a[k]).sum::<Complex64>();
                if amp == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let w = self.graph.neighbor(v, tau);
                let ph = self.phase(w, tau);
                next.entry(w).or_insert([Complex64::new(0.0, 0.0); 4])[t] += ph * amp;
            }
        }
        Ok(WalkState { amplitudes: next })
    }

    /// `U^n psi` for `n = 0..=n_max`.
    pub fn orbit(&mut self, psi: WalkState, n_max: usize) -> Result<Vec<WalkState>> {
        let mut out = vec![psi];
        for n in 1..=n_max {
            let s = self.step(&out[n - 1], n)?;
            out.push(s);
        }
        Ok(out)
    }

    /// Line components of a state, indexed by band-matrix site.
    pub fn line_components(&self, state: &WalkState, dim: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (&v, a) in &state.amplitudes {
            if let Some(m) = self.graph.line_index(v) {
                for (letter, shift) in [(A, 0), (A_INV, 1)] {
                    let site = 2 * m + shift + self.phases.offset;
                    if (0..dim as i64).contains(&site) {
                        out[site as usize] += a[letter as usize];
                    }
                }
            }
        }
        out
    }

    /// The basis vector of `H0` at band-matrix site `j`.
    pub fn line_basis(&self, site: i64) -> WalkState {
        let j = site - self.phases.offset;
        let m = j.div_euclid(2);
        WalkState::basis(self.graph.line_vertex(m), if j.rem_euclid(2) == 0 { A } else { A_INV })
    }
}

fn check_depth(graph: &Graph, n_max: usize) -> Result<()> {
    graph.validate()?;
    if graph.radius() < n_max + 2 {
        return Err(Error::InvalidSize(format!("graph radius {} below n_max + 2 = {}", graph.radius(), n_max + 2)));
    }
    Ok(())
}

/// Line sites whose orbits stay off the boundary for `n_max` steps.
fn interior_sites(graph: &Graph, offset: i64, n_max: usize) -> Vec<i64> {
    let reach = (graph.radius() - n_max - 1) as i64;
    (-reach..=reach).flat_map(|m| [2 * m + offset, 2 * m + 1 + offset]).collect()
}

/// Largest `|<phi, P0 U^n psi> - <phi, T^n psi>|` over `n <= n_max`, line
/// basis vectors `psi` and all line sites `phi`.
pub fn dilation_check(
    emb: &UnitaryEmbedding,
    distribution: PhaseDistribution,
    seed: u64,
    n_max: usize,
    graph: Graph,
) -> Result<f64> {
    check_depth(&graph, n_max)?;
    let phases = WalkPhases::sample(distribution, seed, graph.radius())?;
    let dim = phases.line.realized.len();
    let t = build_t(emb, &phases.line, dim / 2, Boundary::Open)?;
    let sites = interior_sites(&graph, phases.offset, n_max);
    let mut walk = Walk::new(graph, CoinU4::new(*emb, 0.0)?, phases)?;
    let mut worst: f64 = 0.0;
    for site in sites {
        let orbit = walk.orbit(walk.line_basis(site), n_max)?;
        let mut x = vec![Complex64::new(0.0, 0.0); dim];
        x[site as usize] = Complex64::new(1.0, 0.0);
        for state in &orbit {
            let p = walk.line_components(state, dim);
            for (a, b) in p.iter().zip(&x) {
                worst = worst.max((a - b).norm());
            }
            let mut y = vec![Complex64::new(0.0, 0.0); dim];
            for &(r, c, v) in t.entries() {
                y[r] += v * x[c];
            }
            x = y;
        }
    }
    Ok(worst)
}

/// Largest `|<x b, U^n x tau>| - delta_{n,0} delta_{b,tau}` over
/// `tau in {a, b, a^-1}`, `n <= n_max`, at the root.
pub fn escape_deviation(
    emb: &UnitaryEmbedding,
    distribution: PhaseDistribution,
    seed: u64,
    n_max: usize,
    graph: Graph,
) -> Result<f64> {
    check_depth(&graph, n_max)?;
    let phases = WalkPhases::sample(distribution, seed, graph.radius())?;
    let root = graph.root();
    let mut walk = Walk::new(graph, CoinU4::new(*emb, 0.0)?, phases)?;
    let mut worst: f64 = 0.0;
    for tau in [A, B, A_INV] {
        for (n, state) in walk.orbit(WalkState::basis(root, tau), n_max)?.iter().enumerate() {
            let expect = if n == 0 && tau == B { 1.0 } else { 0.0 };
            worst = worst.max((state.amplitude(root, B) - expect).norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autocorrelation {
    /// `<psi, U^n psi>` for `n = 0..=n_max`.
    pub values: Vec<Complex64>,
    /// `exp` of the least-squares slope of `ln |<psi, U^n psi>|` over the
    /// nonzero terms with `n >= 1`; `None` with fewer than two such terms.
    pub rate: Option<f64>,
    /// Smallest `C` with `|<psi, U^n psi>| <= C rate^n` for all `n`.
    pub envelope: Option<f64>,
}

impl Autocorrelation {
    pub fn from_values(values: Vec<Complex64>) -> Self {
        let pts: Vec<(f64, f64)> = values
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, z)| z.norm() > 1e-300)
            .map(|(n, z)| (n as f64, z.norm().ln()))
            .collect();
        let rate = (pts.len() >= 2).then(|| {
            let k = pts.len() as f64;
            let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            (sxy / sxx).exp()
        });
        let envelope = rate.map(|r| values.iter().enumerate().map(|(n, z)| z.norm() / r.powi(n as i32)).fold(0.0, f64::max));
        Self { values, rate, envelope }
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }
}

/// `<psi, U^n psi>` for `psi = root x a` as a walk on `graph`.
pub fn autocorrelation_decay(
    emb: &UnitaryEmbedding,
    distribution: PhaseDistribution,
    seed: u64,
    n_max: usize,
    graph: Graph,
) -> Result<Autocorrelation> {
    check_depth(&graph, n_max)?;
    let phases = WalkPhases::sample(distribution, seed, graph.radius())?;
    let root = graph.root();
    let mut walk = Walk::new(graph, CoinU4::new(*emb, 0.0)?, phases)?;
    let orbit = walk.orbit(WalkState::basis(root, A), n_max)?;
    Ok(Autocorrelation::from_values(orbit.iter().map(|s| s.amplitude(root, A)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coin::{embed, family_drift, random_embedding, CoinContraction, FamilyParams};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn identity() -> UnitaryEmbedding {
        embed(&CoinContraction::identity()).unwrap()
    }

    #[test]
    fn tree_words_reduce() {
        let g = Graph::Tree { depth: 6 };
        let v = g.neighbor(g.neighbor(g.root(), A), B);
        assert_eq!(tree_len(v), 2);
        assert_eq!(g.neighbor(g.neighbor(v, B_INV), A_INV), g.root());
        assert_eq!(g.line_index(g.line_vertex(-3)), Some(-3));
        assert_eq!(g.line_index(v), None);
        let lattice = Graph::Lattice { side: 7 };
        assert_eq!(lattice.neighbor(lattice.neighbor(lattice.root(), B), B_INV), lattice.root());
        assert!(lattice.on_boundary(lattice.line_vertex(3)));
    }

    #[test]
    fn identity_coin_is_a_pure_shift() {
        let graph = Graph::Tree { depth: 12 };
        let phases = WalkPhases::sample(PhaseDistribution::Point { theta0: 0.0 }, 0, graph.radius()).unwrap();
        let mut walk = Walk::new(graph, CoinU4::new(identity(), 0.3).unwrap(), phases).unwrap();
        for tau in 0..4u8 {
            let x = graph.neighbor(graph.root(), B);
            let orbit = walk.orbit(WalkState::basis(x, tau), 10).unwrap();
            for (n, s) in orbit.iter().enumerate() {
                let expect = if n == 0 { 1.0 } else { 0.0 };
                assert_eq!(s.amplitude(x, tau).norm(), expect);
            }
        }
    }

    #[test]
    fn boundary_is_a_hard_error() {
        let graph = Graph::Tree { depth: 3 };
        let phases = WalkPhases::sample(PhaseDistribution::Torus, 1, 3).unwrap();
        let mut walk = Walk::new(graph, CoinU4::new(identity(), 0.0).unwrap(), phases).unwrap();
        assert!(matches!(walk.orbit(WalkState::basis(graph.root(), A), 5), Err(Error::BoundaryReached { step: 4 })));
        assert!(dilation_check(&identity(), PhaseDistribution::Torus, 0, 10, graph).is_err());
    }

    #[test]
    fn norm_is_preserved_on_a_depth_12_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let emb = random_embedding(&mut rng).unwrap();
        let graph = Graph::Tree { depth: 12 };
        let phases = WalkPhases::sample(PhaseDistribution::Torus, 5, 12).unwrap();
        let mut walk = Walk::new(graph, CoinU4::new(emb, 1.1).unwrap(), phases).unwrap();
        let mut psi = WalkState::basis(graph.root(), A);
        psi.amplitudes.insert(graph.neighbor(graph.root(), B_INV), [c(0.5), c(0.5), c(0.5), c(0.5)]);
        let start = psi.norm();
        for s in walk.orbit(psi, 10).unwrap() {
            assert!((s.norm() - start).abs() < 1e-12);
        }
    }

    #[test]
    fn dilation_on_tree_and_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let emb = random_embedding(&mut rng).unwrap();
        for graph in [Graph::Tree { depth: 12 }, Graph::Lattice { side: 25 }] {
            let dev = dilation_check(&emb, PhaseDistribution::Torus, 2, 10, graph).unwrap();
            assert!(dev < 1e-12, "{graph:?}: {dev}");
            assert_eq!(dilation_check(&emb, PhaseDistribution::Torus, 2, 0, graph).unwrap(), 0.0);
            assert_eq!(escape_deviation(&emb, PhaseDistribution::Torus, 2, 10, graph).unwrap(), 0.0);
        }
    }

    #[test]
    fn swap_coin_returns_every_two_steps() {
        let emb = embed(&CoinContraction::new(c(0.0), c(1.0), c(1.0), c(0.0))).unwrap();
        let ac = autocorrelation_decay(&emb, PhaseDistribution::Torus, 4, 10, Graph::Tree { depth: 12 }).unwrap();
        for (n, m) in ac.moduli().iter().enumerate() {
            let expect = if n % 2 == 0 { 1.0 } else { 0.0 };
            assert!((m - expect).abs() < 1e-12, "{n}: {m}");
        }
    }

    #[test]
    fn diagonal_coin_transports_with_the_two_moduli() {
        let g = 0.6;
        let d = Complex64::from_polar(g, 0.4);
        let emb = embed(&CoinContraction::new(c(1.0), c(0.0), c(0.0), d)).unwrap();
        let graph = Graph::Tree { depth: 12 };
        let phases = WalkPhases::sample(PhaseDistribution::Torus, 8, 12).unwrap();
        let mut walk = Walk::new(graph, CoinU4::new(emb, 0.0).unwrap(), phases).unwrap();
        let right = walk.orbit(WalkState::basis(graph.root(), A), 10).unwrap();
        let left = walk.orbit(WalkState::basis(graph.root(), A_INV), 10).unwrap();
        for n in 0..=10 {
            let r = right[n].amplitude(graph.line_vertex(n as i64), A).norm();
            let l = left[n].amplitude(graph.line_vertex(-(n as i64)), A_INV).norm();
            assert!((r - 1.0).abs() < 1e-12);
            assert!((l - g.powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_autocorrelation_decays() {
        let emb = family_drift(FamilyParams::new(PI / 12.0, PI / 3.0).unwrap()).unwrap();
        let ac = autocorrelation_decay(&emb, PhaseDistribution::Torus, 1, 10, Graph::Tree { depth: 12 }).unwrap();
        assert_eq!(ac.values[0], c(1.0));
        assert!(ac.rate.unwrap() < 1.0, "{:?}", ac.moduli());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn interior_steps_are_isometric(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let emb = random_embedding(&mut rng).unwrap();
            let graph = Graph::Lattice { side: 15 };
            let phases = WalkPhases::sample(PhaseDistribution::Torus, seed, graph.radius()).unwrap();
            let mut walk = Walk::new(graph, CoinU4::new(emb, 0.7).unwrap(), phases).unwrap();
            for s in walk.orbit(WalkState::basis(graph.root(), B_INV), 6).unwrap() {
                prop_assert!((s.norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
