//! Random phase fields `omega_j`.
//!
//! Each phase is drawn from its own ChaCha8 stream selected by the site index,
//! so `omega_j` depends only on `(seed, j)`: enlarging or shifting the window
//! never changes phases already realized.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhaseDistribution {
    /// Every phase equals `theta0`.
    Point { theta0: f64 },
    /// Uniform on `[-epsilon, epsilon]`.
    Uniform { epsilon: f64 },
    /// Uniform on the circle, realized in `(-pi, pi]`.
    Torus,
}

impl PhaseDistribution {
    /// Support half-width around the support center.
    pub fn epsilon(&self) -> f64 {
        match *self {
            PhaseDistribution::Point { .. } => 0.0,
            PhaseDistribution::Uniform { epsilon } => epsilon,
            PhaseDistribution::Torus => PI,
        }
    }

    /// Center of the support.
    pub fn center(&self) -> f64 {
        match *self {
            PhaseDistribution::Point { theta0 } => theta0,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PhaseDistribution::Point { theta0 } if !theta0.is_finite() => {
                Err(Error::OutOfRange(format!("point mass at {theta0}")))
            }
            PhaseDistribution::Uniform { epsilon } if !(0.0..=PI).contains(&epsilon) => {
                Err(Error::OutOfRange(format!("epsilon = {epsilon} not in [0, pi]")))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        match *self {
            PhaseDistribution::Point { theta0 } => value == theta0,
            PhaseDistribution::Uniform { epsilon } => value.abs() <= epsilon,
            PhaseDistribution::Torus => value > -PI && value <= PI,
        }
    }

    /// The phase at `index` for a given `seed`.
    pub fn draw(&self, seed: u64, index: i64) -> f64 {
        match *self {
            PhaseDistribution::Point { theta0 } => theta0,
            PhaseDistribution::Uniform { epsilon } => {
                let u: f64 = stream(seed, index).gen();
                (-epsilon + 2.0 * epsilon * u).clamp(-epsilon, epsilon)
            }
            PhaseDistribution::Torus => {
                let u: f64 = stream(seed, index).gen();
                PI - 2.0 * PI * u
            }
        }
    }
}

fn stream(seed: u64, index: i64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// A realized window of phases `omega_j`, `j` in `[start, start + len)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseField {
    pub distribution: PhaseDistribution,
    pub seed: u64,
    pub start: i64,
    pub realized: Vec<f64>,
}

impl PhaseField {
    pub fn sample(distribution: PhaseDistribution, seed: u64, start: i64, len: usize) -> Result<Self> {
        distribution.validate()?;
        let realized = (0..len as i64).map(|k| distribution.draw(seed, start + k)).collect();
        Ok(Self { distribution, seed, start, realized })
    }

    /// Phases on the sites `0..dim` of a truncation.
    pub fn for_sites(distribution: PhaseDistribution, seed: u64, dim: usize) -> Result<Self> {
        Self::sample(distribution, seed, 0, dim)
    }

    /// All phases zero.
    pub fn zero(dim: usize) -> Self {
        Self { distribution: PhaseDistribution::Point { theta0: 0.0 }, seed: 0, start: 0, realized: vec![0.0; dim] }
    }

    /// Explicit phases, checked against the declared support.
    pub fn from_values(distribution: PhaseDistribution, start: i64, values: Vec<f64>) -> Result<Self> {
        distribution.validate()?;
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !distribution.contains(**v)) {
            return Err(Error::PhaseOutsideSupport { index, value });
        }
        Ok(Self { distribution, seed: 0, start, realized: values })
    }

    pub fn end(&self) -> i64 {
        self.start + self.realized.len() as i64
    }

    pub fn get(&self, j: i64) -> Option<f64> {
        let k = j - self.start;
        if k < 0 {
            None
        } else {
            self.realized.get(k as usize).copied()
        }
    }

    /// Errors unless the window covers `[0, dim)`.
    pub fn require_sites(&self, dim: usize) -> Result<()> {
        if self.start > 0 || self.end() < dim as i64 {
            return Err(Error::PhaseWindow { start: self.start, end: self.end(), needed: dim as i64 });
        }
        Ok(())
    }

    /// Phase at site `j` taken modulo `dim`; the window must cover `[0, dim)`.
    pub fn wrapped(&self, j: i64, dim: usize) -> f64 {
        let k = j.rem_euclid(dim as i64);
        self.get(k).expect("window checked by require_sites")
    }

    pub fn epsilon(&self) -> f64 {
        self.distribution.epsilon()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn windows_agree_on_overlap() {
        let d = PhaseDistribution::Uniform { epsilon: 0.3 };
        let a = PhaseField::sample(d, 42, -3, 10).unwrap();
        let b = PhaseField::sample(d, 42, 2, 10).unwrap();
        for j in 2..7 {
            assert_eq!(a.get(j), b.get(j));
        }
        let c = PhaseField::sample(d, 43, -3, 10).unwrap();
        assert_ne!(a.realized, c.realized);
    }

    #[test]
    fn window_coverage_is_checked() {
        let p = PhaseField::sample(PhaseDistribution::Torus, 1, 0, 8).unwrap();
        assert!(p.require_sites(8).is_ok());
        assert!(matches!(p.require_sites(9), Err(Error::PhaseWindow { .. })));
    }

    #[test]
    fn explicit_values_outside_support_are_rejected() {
        let d = PhaseDistribution::Uniform { epsilon: 0.1 };
        assert!(PhaseField::from_values(d, 0, vec![0.05, -0.2]).is_err());
        assert!(PhaseField::from_values(d, 0, vec![0.05, -0.1]).is_ok());
    }

    proptest! {
        #[test]
        fn realized_phases_lie_in_support(seed in any::<u64>(), eps in 0.0..PI, len in 1usize..64) {
            for d in [PhaseDistribution::Uniform { epsilon: eps }, PhaseDistribution::Torus, PhaseDistribution::Point { theta0: eps }] {
                let p = PhaseField::sample(d, seed, -1, len).unwrap();
                prop_assert!(p.realized.iter().all(|&w| d.contains(w)));
                let again = PhaseField::sample(d, seed, -1, len).unwrap();
                prop_assert_eq!(&p.realized, &again.realized);
            }
        }
    }
}
