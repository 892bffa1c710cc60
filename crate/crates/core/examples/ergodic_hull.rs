//! The g = 0 hull: swept ellipse annulus against periodic-word spectra.
use nucmv::coin::{family_g0, FamilyParams};
use nucmv::phases::PhaseDistribution;
use nucmv::symbol::{bloch_periodic, sample_word, swept_annulus, uniform_grid};

fn main() -> nucmv::Result<()> {
    let emb = family_g0(FamilyParams::new(0.3, 0.9)?)?;
    let xs = uniform_grid(256);
    let hull = swept_annulus(&emb, &xs)?;
    println!("swept annulus: {hull:?}");
    let (a, d) = (emb.alpha.norm(), emb.delta.norm());
    println!("analytic: [{:.4}, {:.4}]", (a - d).abs(), a + d);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for w in 0..50 {
        let spec = bloch_periodic(&emb, &sample_word(&PhaseDistribution::Torus, 4, 4, w)?, &xs)?;
        for z in spec.points().into_iter().filter(|z| z.norm() > 1e-9) {
            lo = lo.min(z.norm());
            hi = hi.max(z.norm());
        }
    }
    println!("nonzero word eigenvalues: |lambda| in [{lo:.4}, {hi:.4}]");
    Ok(())
}
