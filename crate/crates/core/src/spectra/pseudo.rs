use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sigma::ShiftedSolver;
use crate::error::{Error, Result};

const TILE: usize = 64;

/// Rectangular sampling window for pseudospectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re: (f64, f64),
    pub im: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub epsilons: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { re: (-1.2, 1.2), im: (-1.2, 1.2), nx: 512, ny: 512, epsilons: vec![1e-3, 1e-2, 1e-1] }
    }
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize, epsilons: Vec<f64>) -> Self {
        Self { re: (-half_width, half_width), im: (-half_width, half_width), nx: n, ny: n, epsilons }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidSize(format!("grid {}x{} needs at least 2x2 nodes", self.nx, self.ny)));
        }
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !ok(self.re) || !ok(self.im) {
            return Err(Error::InvalidSize("grid window must have finite, increasing bounds".into()));
        }
        if self.epsilons.iter().any(|e| e.is_nan() || *e <= 0.0) {
            return Err(Error::InvalidSize("epsilon levels must be positive".into()));
        }
        Ok(())
    }

    pub fn node(&self, ix: usize, iy: usize) -> Complex64 {
        let hx = (self.re.1 - self.re.0) / (self.nx - 1) as f64;
        let hy = (self.im.1 - self.im.0) / (self.ny - 1) as f64;
        Complex64::new(self.re.0 + ix as f64 * hx, self.im.0 + iy as f64 * hy)
    }
}

/// `sigma_min(m - z)` on every node of a grid, row-major in `(iy, ix)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PseudospectrumGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub label: String,
}

impl PseudospectrumGrid {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.nx + ix]
    }

    /// Nodes with `sigma_min <= eps`.
    pub fn indicator(&self, eps: f64) -> Vec<bool> {
        self.values.iter().map(|&s| s <= eps).collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        let nx = self.spec.nx;
        (0..self.values.len()).map(move |k| (k % nx, k / nx, self.spec.node(k % nx, k / nx)))
    }
}

/// Evaluates `sigma_min` on the grid in 64x64 tiles, in parallel.
pub fn pseudospectrum(m: &DMatrix<Complex64>, spec: &GridSpec) -> Result<PseudospectrumGrid> {
    spec.validate()?;
    let solver = ShiftedSolver::new(m)?;
    Ok(pseudospectrum_with(&solver, spec, "pseudospectrum"))
}

pub fn pseudospectrum_with(solver: &ShiftedSolver, spec: &GridSpec, label: &str) -> PseudospectrumGrid {
    let tiles_x = spec.nx.div_ceil(TILE);
    let tiles_y = spec.ny.div_ceil(TILE);
    let tiles: Vec<(usize, usize, Vec<f64>)> = (0..tiles_x * tiles_y)
        .into_par_iter()
        .map(|t| {
            let (tx, ty) = (t % tiles_x, t / tiles_x);
            let xs = tx * TILE..((tx + 1) * TILE).min(spec.nx);
            let ys = ty * TILE..((ty + 1) * TILE).min(spec.ny);
            let mut out = Vec::with_capacity(xs.len() * ys.len());
            for iy in ys {
                for ix in xs.clone() {
                    out.push(solver.sigma_min(spec.node(ix, iy)));
                }
            }
            (tx, ty, out)
        })
        .collect();
    let mut values = vec![0.0; spec.nx * spec.ny];
    for (tx, ty, out) in tiles {
        let x0 = tx * TILE;
        let w = ((tx + 1) * TILE).min(spec.nx) - x0;
        for (k, v) in out.into_iter().enumerate() {
            let iy = ty * TILE + k / w;
            values[iy * spec.nx + x0 + k % w] = v;
        }
    }
    PseudospectrumGrid { spec: spec.clone(), values, label: label.to_string() }
}
