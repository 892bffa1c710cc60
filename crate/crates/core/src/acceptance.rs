//! The ten acceptance criteria as library functions, shared by the
//! integration test and `nucmv run selftest`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt;
use std::time::Instant;

use crate::bandop::{build_polar, build_t, tridiag_blocks, ttilde_factors, BandMatrix, Boundary, compression};
use crate::coin::{
    embed, family_drift, family_g0, random_embedding, random_embedding_with_g, CoinContraction, FamilyParams,
    UnitaryEmbedding,
};
use crate::error::Result;
use crate::phases::{PhaseDistribution, PhaseField};
use crate::regions::{
    arc_samples, certified_resolvent, cubic_boundary, cubic_x_of_tau, log_tau_grid, member_delta, member_form,
    member_form_rotated, split_predicate, ProductOracle,
};
use crate::spectra::{eigenvalues, operator_norm, ShiftedSolver};
use crate::symbol::{bloch_periodic, hausdorff, lambda_pm, sample_word, uniform_grid, vjj_symbol};
use crate::walk::{autocorrelation_decay, dilation_check, escape_deviation, Graph};

const SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const NAMES: [&str; 10] = [
    "polar identity",
    "norm formulas",
    "resolvent disc",
    "annulus",
    "region geometry",
    "split certificate",
    "g = 0 hull",
    "doubling",
    "walk dilation",
    "special-case spectra",
];

type Outcome = Result<(bool, String)>;

/// Runs criterion `id` (1..=10); numeric errors count as failures.
pub fn run_criterion(id: u8) -> CriterionReport {
    let start = Instant::now();
    let outcome = match id {
        1 => polar_identity(),
        2 => norm_formulas(),
        3 => resolvent_disc(),
        4 => annulus(),
        5 => region_geometry(),
        6 => split_certificate(),
        7 => g0_hull(),
        8 => doubling(),
        9 => walk_dilation(),
        10 => special_cases(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let name = NAMES.get(id.wrapping_sub(1) as usize).copied().unwrap_or("unknown");
    CriterionReport { id, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all() -> Vec<CriterionReport> {
    (1..=10).map(run_criterion).collect()
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn torus(seed: u64, dim: usize) -> Result<PhaseField> {
    PhaseField::for_sites(PhaseDistribution::Torus, seed, dim)
}

fn drift(xi: f64, eta: f64) -> Result<UnitaryEmbedding> {
    family_drift(FamilyParams::new(xi, eta)?)
}

/// Moduli of all Bloch eigenvalues over `words` random words of even length
/// at most 8.
fn word_spectra(
    emb: &UnitaryEmbedding,
    dist: &PhaseDistribution,
    seed: u64,
    words: usize,
    xgrid: &[f64],
) -> Result<Vec<Complex64>> {
    let parts: Result<Vec<Vec<Complex64>>> = (0..words)
        .into_par_iter()
        .map(|w| {
            let l = 2 + 2 * (w % 4);
            let word = sample_word(dist, seed, l, w as u64)?;
            Ok(bloch_periodic(emb, &word, xgrid)?.points())
        })
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}

fn polar_identity() -> Outcome {
    let mut worst = [0.0f64; 3];
    for k in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + k);
        let emb = random_embedding(&mut rng)?;
        let m = rng.gen_range(8..=128);
        let phases = torus(SEED + k, 2 * m)?;
        let parts = build_polar(&emb, &phases, m, Boundary::Periodic)?;
        let t = build_t(&emb, &phases, m, Boundary::Periodic)?.to_dense();
        let vk = parts.v.matmul(&parts.k)?.to_dense();
        worst[0] = worst[0].max(frobenius(&(t - vk)));
        let vv = parts.v.adjoint().matmul(&parts.v)?.to_dense();
        worst[1] = worst[1].max(frobenius(&(vv - DMatrix::identity(2 * m, 2 * m))));
        let mut ev = eigenvalues(&parts.k.to_dense())?;
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        let g = parts.g;
        for (i, z) in ev.iter().enumerate() {
            let target = if i < m { g } else { 1.0 };
            worst[2] = worst[2].max((z - target).norm());
        }
    }
    let ok = worst[0] < 1e-12 && worst[1] < 1e-12 && worst[2] < 1e-10;
    Ok((ok, format!("||T-VK|| {:.1e}, ||V*V-I|| {:.1e}, eig(K) {:.1e}", worst[0], worst[1], worst[2])))
}

fn norm_formulas() -> Outcome {
    let mut closed: f64 = 0.0;
    let mut trunc: f64 = 0.0;
    for (k, (xi, eta)) in [(PI / 12.0, PI / 3.0), (0.26, 1.05), (0.5, 0.3)].into_iter().enumerate() {
        let emb = drift(xi, eta)?;
        let b = tridiag_blocks(&emb)?;
        let expect = [[eta.cos(), eta.sin()], [eta.sin(), eta.cos()]];
        let m = 256;
        let parts = build_polar(&emb, &torus(SEED + k as u64, 2 * m)?, m, Boundary::Periodic)?;
        for (i, j) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let e = expect[i - 1][j - 1];
            closed = closed.max((b.norm(i, j) - e).abs());
            trunc = trunc.max((operator_norm(&compression(&emb, &parts.v, i, j)?) - e).abs());
        }
    }
    let mut nicexp: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..500 {
        let g = rng.gen_range(0.0..0.95);
        let emb = random_embedding_with_g(&mut rng, g)?;
        let ge = Complex64::from_polar(emb.g, emb.chi);
        let formula =
            ((emb.delta - emb.alpha.conj() * ge).norm() + (emb.alpha - emb.delta.conj() * ge).norm()) / (1.0 - emb.g * emb.g);
        nicexp = nicexp.max((formula - tridiag_blocks(&emb)?.norm(1, 1)).abs());
    }
    let ok = closed < 1e-14 && trunc < 1e-3 && nicexp < 1e-12;
    Ok((ok, format!("closed form {closed:.1e}, M=256 truncation {trunc:.1e}, ||V11|| formula {nicexp:.1e}")))
}

fn resolvent_disc() -> Outcome {
    let xs = uniform_grid(512);
    let mut worst = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    for e in 0..20u64 {
        let g = rng.gen_range(0.05..=0.95);
        let emb = random_embedding_with_g(&mut rng, g)?;
        let pts = word_spectra(&emb, &PhaseDistribution::Torus, SEED + e, 500, &xs)?;
        let min = pts.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        worst = worst.min(min - emb.g);
    }
    Ok((worst >= -1e-9, format!("min (|lambda| - g) = {worst:.3e}")))
}

fn annulus() -> Outcome {
    let emb = drift(PI / 12.0, PI / 3.0)?;
    let b = tridiag_blocks(&emb)?;
    let g = emb.g;
    let (c, s) = ((PI / 3.0).cos(), (PI / 3.0).sin());
    let r_closed = 0.5 * (c * (1.0 + g) + (c * c * (1.0 - g).powi(2) + 4.0 * g * s * s).sqrt());
    let xs = uniform_grid(512);
    let mut pts = word_spectra(&emb, &PhaseDistribution::Torus, SEED + 4, 200, &xs)?;
    pts.extend(xs.iter().flat_map(|&x| lambda_pm(&emb, x)));
    let spr = pts.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let m = 256;
    let t = build_t(&emb, &torus(SEED + 4, 2 * m)?, m, Boundary::Periodic)?.to_dense();
    let solver = ShiftedSolver::new(&t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let zs: Vec<Complex64> = (0..1000)
        .map(|_| {
            let r = (rng.gen_range(b.r_v * b.r_v..1.0f64)).sqrt().max(b.r_v + 1e-12);
            Complex64::from_polar(r, rng.gen_range(-PI..PI))
        })
        .collect();
    let smin = zs.par_iter().map(|&z| solver.sigma_min(z)).reduce(|| f64::INFINITY, f64::min);
    let ok = b.gap_ok && (b.r_v - r_closed).abs() < 1e-14 && (b.r_v - 0.7927).abs() < 5e-5 && spr <= b.r_v + 1e-9 && smin > 0.01;
    Ok((ok, format!("r(V) = {:.6}, max Bloch |lambda| = {spr:.6}, min sigma_min on annulus = {smin:.4}", b.r_v)))
}

fn region_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut anchor: f64 = 0.0;
    for _ in 0..100 {
        let theta = rng.gen_range(0.01..PI / 2.0 - 0.01);
        let g = rng.gen_range(0.01..0.99);
        let c = theta.cos();
        for (z, tau) in [
            (Complex64::new(0.0, 0.0), 1.0 / (2.0 * c)),
            (Complex64::from_polar(g, theta), (1.0 + g) / (2.0 * c)),
            (Complex64::from_polar(1.0, theta), (1.0 + g) / (2.0 * g * c)),
        ] {
            anchor = anchor.max((cubic_boundary(theta, g, z.re)? - z.im * z.im).abs());
            anchor = anchor.max((cubic_x_of_tau(theta, g, tau) - z.re).abs());
        }
    }
    let mut disagree = 0usize;
    let taus = log_tau_grid(1e-3, 1e4, 10_000);
    for &(theta, g) in &[(0.5, 0.2), (0.9, 0.4), (1.3, 0.7), (2.2, 0.3)] {
        let oracle = ProductOracle::new(&arc_samples(theta, 4096), &[Complex64::new(1.0, 0.0), Complex64::new(g, 0.0)], &taus)?;
        let zs: Vec<Complex64> =
            (0..2500).map(|_| Complex64::new(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2))).collect();
        let forms: Vec<bool> = zs.iter().map(|&z| member_form(theta, g, z)).collect::<Result<_>>()?;
        disagree += zs.par_iter().zip(&forms).filter(|(z, f)| oracle.contains(**z) != **f).count();
    }
    let mut included = 0usize;
    let mut alphaind = 0usize;
    for _ in 0..100_000 {
        let theta = rng.gen_range(0.01..PI - 0.01);
        let g = rng.gen_range(0.01..0.99);
        let z = Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        if member_delta(theta, g, z)? && !member_form(theta, g, z)? {
            included += 1;
        }
        let theta = rng.gen_range(0.01..PI / 2.0);
        let alpha = rng.gen_range(0.0..theta);
        let z = Complex64::from_polar(rng.gen_range(0.0..1.0f64).sqrt(), rng.gen_range(-PI..PI));
        if member_form_rotated(theta, g, alpha, z)? && !member_form(theta, g, z)? {
            alphaind += 1;
        }
    }
    let ok = anchor <= 1e-12 && disagree <= 10 && included == 0 && alphaind == 0;
    Ok((
        ok,
        format!(
            "anchor residual {anchor:.1e}, oracle disagreements {disagree}/10000, inclusion violations {included} + {alphaind}"
        ),
    ))
}

fn split_certificate() -> Outcome {
    let (xi, eta, eps) = (0.26, 1.05, 0.1);
    let emb = drift(xi, eta)?;
    let cert = certified_resolvent(&emb, eps, None)?;
    let predicate = split_predicate(eta - eps, emb.g);
    let missed = (0..1000)
        .map(|k| 1e-9 + (1.0 - 2e-9) * k as f64 / 999.0)
        .filter(|&x| !cert.contains(Complex64::new(x, 0.0)))
        .count();
    let dist = PhaseDistribution::Uniform { epsilon: eps };
    let xs = uniform_grid(512);
    let mut pts = word_spectra(&emb, &dist, SEED + 6, 400, &xs)?;
    pts.extend(xs.iter().flat_map(|&x| lambda_pm(&emb, x)));
    let inside = pts.par_iter().filter(|&&z| cert.contains_deeply(z, 1e-9)).count();
    let ok = predicate && cert.splits && missed == 0 && inside == 0;
    Ok((
        ok,
        format!(
            "cos^2(eta-eps) = {:.4} vs 4g/(1+g)^2 = {:.4}, segment misses {missed}, eigenvalues in certified set {inside}/{}",
            (eta - eps).cos().powi(2),
            4.0 * emb.g / (1.0 + emb.g).powi(2),
            pts.len()
        ),
    ))
}

fn g0_hull() -> Outcome {
    let emb = family_g0(FamilyParams::new(0.3, 0.9)?)?;
    let (a, d) = (emb.alpha.norm(), emb.delta.norm());
    let (inner, outer) = ((a - d).abs(), a + d);
    let e = vjj_symbol(&emb, 1)?;
    let radial = |r: f64| Complex64::new(r, 0.0);
    let swept: Vec<Complex64> = (0..2048).map(|k| radial(e.ellipse_point(TAU * k as f64 / 2048.0).norm())).collect();
    let band: Vec<Complex64> = (0..2048).map(|k| radial(inner + (outer - inner) * k as f64 / 2047.0)).collect();
    let h = hausdorff(&swept, &band);
    let pts = word_spectra(&emb, &PhaseDistribution::Torus, SEED + 7, 200, &uniform_grid(256))?;
    let outside = pts
        .iter()
        .filter(|z| {
            let r = z.norm();
            r >= 1e-9 && (r < inner - 1e-9 || r > outer + 1e-9)
        })
        .count();
    let fz = family_g0(FamilyParams::new(FRAC_PI_4, FRAC_PI_4)?)?;
    let m = 256;
    let t = build_t(&fz, &torus(SEED + 7, 2 * m)?, m, Boundary::Open)?.to_dense();
    let solver = ShiftedSolver::new(&t)?;
    let golden = PI * (3.0 - 5f64.sqrt());
    let disc: Vec<Complex64> =
        (0..400).map(|k| Complex64::from_polar(0.9 * ((k as f64 + 0.5) / 400.0).sqrt(), golden * k as f64)).collect();
    let uncovered = disc.par_iter().filter(|&&z| solver.sigma_min(z) > 1e-2).count();
    let ok = h <= 1e-2 && outside == 0 && uncovered == 0;
    Ok((
        ok,
        format!(
            "hull [{inner:.4}, {outer:.4}], Hausdorff {h:.1e}, eigenvalues outside {outside}/{}, Feinberg-Zee proxy uncovered {uncovered}/400",
            pts.len()
        ),
    ))
}

/// Largest distance in a greedy nearest-neighbour matching.
fn match_multisets(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap_or((0, f64::INFINITY));
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

fn nonzero(v: Vec<Complex64>) -> Vec<Complex64> {
    v.into_iter().filter(|z| z.norm() > 1e-8).collect()
}

fn doubling() -> Outcome {
    let m = 64;
    let mut worst: f64 = 0.0;
    for k in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 800 + k);
        let emb = random_embedding(&mut rng)?;
        let phases = torus(SEED + 800 + k, 2 * m)?;
        let t = build_t(&emb, &phases, m, Boundary::Periodic)?.to_dense();
        let t2 = nonzero(eigenvalues(&(&t * &t))?);
        let (even, odd) = ttilde_factors(&emb, &phases, m)?;
        let tt: BandMatrix = odd.matmul(&even)?;
        let tt = nonzero(eigenvalues(&tt.to_dense())?);
        let doubled: Vec<Complex64> = tt.iter().chain(&tt).copied().collect();
        worst = worst.max(match_multisets(&t2, &doubled));
    }
    Ok((worst <= 1e-10, format!("max eigenvalue mismatch {worst:.1e} (each T~ eigenvalue counted twice in T^2)")))
}

fn walk_dilation() -> Outcome {
    let graphs = [Graph::Tree { depth: 12 }, Graph::Lattice { side: 25 }];
    let results: Vec<Result<(f64, f64)>> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED + 900 + k);
            let emb = random_embedding(&mut rng)?;
            let mut dil: f64 = 0.0;
            let mut esc: f64 = 0.0;
            for graph in graphs {
                dil = dil.max(dilation_check(&emb, PhaseDistribution::Torus, SEED + k, 10, graph)?);
                esc = esc.max(escape_deviation(&emb, PhaseDistribution::Torus, SEED + k, 10, graph)?);
            }
            Ok((dil, esc))
        })
        .collect();
    let mut dil: f64 = 0.0;
    let mut esc: f64 = 0.0;
    for r in results {
        let (d, e) = r?;
        dil = dil.max(d);
        esc = esc.max(e);
    }
    let emb = drift(PI / 12.0, PI / 3.0)?;
    let r_v = tridiag_blocks(&emb)?.r_v;
    let mut rate: f64 = 0.0;
    for k in 0..50u64 {
        let ac = autocorrelation_decay(&emb, PhaseDistribution::Torus, SEED + k, 10, graphs[0])?;
        rate = rate.max(ac.rate.unwrap_or(f64::INFINITY));
    }
    let ok = dil < 1e-12 && esc < 1e-12 && rate <= r_v + 0.05;
    Ok((ok, format!("dilation {dil:.1e}, escape {esc:.1e}, fitted decay rate {rate:.4} vs r(V) + 0.05 = {:.4}", r_v + 0.05)))
}

fn special_cases() -> Outcome {
    let c = |r: f64, a: f64| Complex64::from_polar(r, a);
    let zero = Complex64::new(0.0, 0.0);
    let emb = embed(&CoinContraction::new(zero, c(1.0, 0.3), c(0.6, 1.1), zero))?;
    let (g, theta) = ((emb.beta * emb.gamma).norm(), (emb.beta * emb.gamma).arg());
    let mut paired: f64 = 0.0;
    for k in 0..20u64 {
        let phases = torus(SEED + 1000 + k, 4)?;
        let t = build_t(&emb, &phases, 2, Boundary::Periodic)?.to_dense();
        let w = |j: i64| phases.realized[j.rem_euclid(4) as usize];
        let expect: Vec<Complex64> = (0..2)
            .flat_map(|j| {
                let z = c(g.sqrt(), 0.5 * theta + 0.5 * (w(2 * j + 1) + w(2 * j + 2)));
                [z, -z]
            })
            .collect();
        paired = paired.max(match_multisets(&eigenvalues(&t)?, &expect));
    }
    let emb = embed(&CoinContraction::new(c(1.0, 0.4), zero, zero, c(0.5, -0.7)))?;
    let xs = uniform_grid(512);
    let pts = word_spectra(&emb, &PhaseDistribution::Torus, SEED + 10, 40, &xs)?;
    let g = emb.g;
    let off = pts.iter().map(|z| (z.norm() - 1.0).abs().min((z.norm() - g).abs())).fold(0.0, f64::max);
    let gap = |r: f64| {
        let mut args: Vec<f64> = pts.iter().filter(|z| (z.norm() - r).abs() < 1e-6).map(|z| z.arg()).collect();
        args.sort_by(f64::total_cmp);
        if args.is_empty() {
            return TAU;
        }
        let wrap = args[0] + TAU - args[args.len() - 1];
        args.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
    };
    let coverage = gap(1.0).max(gap(g));
    let ok = paired <= 1e-12 && off <= 1e-12 && coverage < 0.05;
    Ok((ok, format!("paired roots {paired:.1e}, distance to S u gS {off:.1e}, largest angular gap {coverage:.3}")))
}
