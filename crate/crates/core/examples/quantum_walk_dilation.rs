//! The coined walk on the tree and lattice reproduces powers of T on the line.
use nucmv::coin::{family_drift, random_embedding, FamilyParams};
use nucmv::phases::PhaseDistribution;
use nucmv::walk::{autocorrelation_decay, dilation_check, escape_deviation, Graph};
use rand::SeedableRng;

fn main() -> nucmv::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let emb = random_embedding(&mut rng)?;
    for graph in [Graph::Tree { depth: 10 }, Graph::Lattice { side: 21 }] {
        let d = dilation_check(&emb, PhaseDistribution::Torus, 2, 8, graph)?;
        let e = escape_deviation(&emb, PhaseDistribution::Torus, 2, 8, graph)?;
        println!("{graph:?}: dilation {d:.1e}, escape {e:.1e}");
    }
    let drift = family_drift(FamilyParams::new(std::f64::consts::PI / 12.0, std::f64::consts::PI / 3.0)?)?;
    let ac = autocorrelation_decay(&drift, PhaseDistribution::Torus, 2, 10, Graph::Tree { depth: 12 })?;
    for (n, a) in ac.moduli().iter().enumerate() {
        println!("  n = {n:>2}: |<psi, U^n psi>| = {a:.3e}");
    }
    println!("fitted rate {:?}", ac.rate);
    Ok(())
}
