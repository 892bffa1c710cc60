//! Embed a 2x2 coin contraction into a 3x3 unitary and print the blocks.
use nucmv::coin::{embed, family_drift, CoinContraction, FamilyParams};
use nucmv::Complex64;

fn main() -> nucmv::Result<()> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (cs, sn) = (0.7f64.cos(), 0.7f64.sin());
    let c0 = CoinContraction::new(c(cs, 0.0), c(0.0, -sn), c(0.5 * sn, 0.0), c(0.0, 0.5 * cs));
    println!("singular values of C0: {:?}", c0.singular_values());
    let explicit = embed(&c0)?;
    println!("explicit coin: g = {:.6}, chi = {:.6}, defect = {:.2e}", explicit.g, explicit.chi, explicit.unitarity_defect());
    for row in explicit.entries() {
        println!("  {}", row.iter().map(|z| format!("{:>8.4}{:+.4}i", z.re, z.im)).collect::<Vec<_>>().join("  "));
    }
    let drift = family_drift(FamilyParams::new(0.26, 1.05)?)?;
    println!("drift family (0.26, 1.05): g = {:.6}, |alpha| = {:.6}, |delta| = {:.6}", drift.g, drift.alpha.norm(), drift.delta.norm());
    Ok(())
}
