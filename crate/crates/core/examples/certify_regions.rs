//! Certified resolvent regions for the drift family with uniform phases.
use nucmv::bandop::tridiag_blocks;
use nucmv::coin::{family_drift, FamilyParams};
use nucmv::regions::certified_resolvent;
use nucmv::Complex64;

fn main() -> nucmv::Result<()> {
    let emb = family_drift(FamilyParams::new(0.26, 1.05)?)?;
    let blocks = tridiag_blocks(&emb)?;
    let cert = certified_resolvent(&emb, 0.1, Some(&blocks))?;
    println!("g = {:.4}, r(V) = {:.4}, splits = {}", cert.g, blocks.r_v, cert.splits);
    for r in &cert.regions {
        println!("  {:?} rotated by {:.4}: {}", r.region.descriptor, r.region.rotation, r.reason);
    }
    for x in [0.05, 0.5, 0.95] {
        println!("z = {x}: certified = {}", cert.contains(Complex64::new(x, 0.0)));
    }
    Ok(())
}
