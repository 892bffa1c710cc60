//! Build T = VK on a periodic truncation and check the factorization.
use nucmv::bandop::{build_polar, build_t, Boundary};
use nucmv::coin::random_embedding;
use nucmv::phases::{PhaseDistribution, PhaseField};
use nucmv::spectra::eigenvalues;
use rand::SeedableRng;

fn main() -> nucmv::Result<()> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let emb = random_embedding(&mut rng)?;
    let m = 24;
    let phases = PhaseField::for_sites(PhaseDistribution::Torus, 11, 2 * m)?;
    let t = build_t(&emb, &phases, m, Boundary::Periodic)?;
    let parts = build_polar(&emb, &phases, m, Boundary::Periodic)?;
    let vk = parts.v.matmul(&parts.k)?;
    println!("g = {:.6}", parts.g);
    println!("max |T - VK| = {:.2e}", t.max_abs_diff(&vk));
    let mut k: Vec<f64> = eigenvalues(&parts.k.to_dense())?.iter().map(|z| z.re).collect();
    k.sort_by(f64::total_cmp);
    println!("eig(K): {:.6} (x{}) and {:.6} (x{})", k[0], m, k[2 * m - 1], m);
    Ok(())
}
