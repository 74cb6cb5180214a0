use faer::c64;

use crate::error::{Error, Result};
use crate::model::{CellLayout, Grid};

/// Real weight per grid site.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteMask {
    pub weights: Vec<f64>,
}

impl SiteMask {
    pub fn zeros(n: usize) -> Self {
        Self {
            weights: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            weights: (0..grid.n_sites())
                .map(|s| {
                    let (x1, x2) = grid.position(s);
                    f(x1, x2)
                })
                .collect(),
        }
    }

    /// Indicator of `[x1_lo, x1_lo + w1) × [x2_lo, x2_lo + w2)`.
    pub fn rectangle(grid: &Grid, x1_lo: f64, w1: f64, x2_lo: f64, w2: f64) -> Self {
        let eps = 1e-9 * grid.spacing();
        Self::from_fn(grid, |x1, x2| {
            let in1 = x1 >= x1_lo - eps && x1 < x1_lo + w1 - eps;
            let in2 = x2 >= x2_lo - eps && x2 < x2_lo + w2 - eps;
            if in1 && in2 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Unit cell `[0,1) × [x2_lo, x2_lo + 1)`.
    pub fn unit_cell(grid: &Grid, x2_lo: f64) -> Self {
        Self::rectangle(grid, 0.0, 1.0, x2_lo, 1.0)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn area(&self, h: f64) -> f64 {
        self.weights.iter().sum::<f64>() * h * h
    }

    /// Sum of weights over all cells, per local index.
    /// Exact for traces of translation-invariant operators.
    pub fn fold(&self, layout: &CellLayout) -> Result<Vec<f64>> {
        if self.weights.len() != layout.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: layout.n_sites(),
                got: self.weights.len(),
            });
        }
        let bd = layout.block_dim();
        let mut out = vec![0.0; bd];
        for (s, w) in self.weights.iter().enumerate() {
            out[s % bd] += w;
        }
        Ok(out)
    }
}

/// `Σ_a w_a·d_a` with the imaginary part returned alongside.
pub fn weighted_sum(diag: &[c64], folded: &[f64]) -> Result<c64> {
    if diag.len() != folded.len() {
        return Err(Error::DimensionMismatch {
            expected: folded.len(),
            got: diag.len(),
        });
    }
    Ok(diag.iter().zip(folded).map(|(d, w)| d * *w).sum())
}

/// Scale of a weighted sum for relative residue checks.
pub fn weighted_scale(diag: &[c64], folded: &[f64]) -> f64 {
    diag.iter()
        .zip(folded)
        .map(|(d, w)| d.norm() * w.abs())
        .sum::<f64>()
}
