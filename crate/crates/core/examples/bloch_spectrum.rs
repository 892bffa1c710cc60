//! Bloch spectra of random periodic words and the translation-invariant symbol.
use nucmv::coin::{family_drift, FamilyParams};
use nucmv::phases::PhaseDistribution;
use nucmv::symbol::{bloch_periodic, sample_word, ti_spectrum, uniform_grid};

fn main() -> nucmv::Result<()> {
    let emb = family_drift(FamilyParams::new(0.26, 1.05)?)?;
    let xs = uniform_grid(256);
    let ti = ti_spectrum(&emb, &xs)?;
    println!("symbol: |lambda| in [{:.4}, {:.4}]", ti.min_modulus, ti.max_modulus);
    let dist = PhaseDistribution::Uniform { epsilon: 0.1 };
    for l in [2, 4, 8] {
        let spec = bloch_periodic(&emb, &sample_word(&dist, 5, l, 0)?, &xs)?;
        println!("word length {l}: |lambda| in [{:.4}, {:.4}]", spec.min_modulus, spec.max_modulus);
    }
    Ok(())
}
