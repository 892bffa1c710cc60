//! Pseudospectrum of an open truncation, written as CSV and SVG.
use nucmv::bandop::{build_t, Boundary};
use nucmv::coin::{family_drift, FamilyParams};
use nucmv::export::{Svg, Table, Window};
use nucmv::phases::{PhaseDistribution, PhaseField};
use nucmv::spectra::{pseudospectrum, GridSpec};

fn main() -> nucmv::Result<()> {
    let emb = family_drift(FamilyParams::new(0.26, 1.05)?)?;
    let m = 64;
    let phases = PhaseField::for_sites(PhaseDistribution::Uniform { epsilon: 0.1 }, 3, 2 * m)?;
    let t = build_t(&emb, &phases, m, Boundary::Open)?.to_dense();
    let grid = pseudospectrum(&t, &GridSpec::square(1.2, 48, vec![1e-3, 1e-2, 1e-1]))?;
    let out = std::env::temp_dir().join("nucmv-pseudospectrum");
    std::fs::create_dir_all(&out)?;
    Table::pseudospectrum(&grid).write(&out.join("pseudospectrum.csv"))?;
    Svg::new(Window::square(1.2), 480).axes().pseudospectrum(&grid).write(&out.join("pseudospectrum.svg"))?;
    let min = grid.values.iter().copied().fold(f64::INFINITY, f64::min);
    println!("smallest sigma_min on the grid: {min:.3e}; files in {}", out.display());
    Ok(())
}
