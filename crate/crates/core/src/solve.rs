//! A Hamiltonian together with its Bloch reduction and fiber spectra.

use faer::c64;

use crate::error::{config, Result};
use crate::model::{
    assemble_with, BlochStencil, DisorderConfig, Direction, Extras, Grid, HamiltonianMatrix,
    ModelParams, NearEdgePotential,
};
use crate::spectral::{mask, BlochSpectrum, SiteMask};

/// Largest fiber handed to the dense eigensolver.
pub const MAX_BLOCK_DIM: usize = 6000;

#[derive(Clone, Debug)]
pub struct Solved {
    pub ham: HamiltonianMatrix,
    pub stencil: BlochStencil,
    pub spectrum: BlochSpectrum,
}

/// Per-site diagonal of `J·f(H)` on cell 0 and the matching absolute scale
/// `Σ_y |J_xy|·|f(H)_yx|`.
#[derive(Clone, Debug)]
pub struct CurrentDiagonal {
    pub values: Vec<c64>,
    pub scale: Vec<f64>,
}

impl Solved {
    pub fn new(ham: HamiltonianMatrix) -> Result<Self> {
        let stencil = ham.bloch()?;
        if stencil.block_dim() > MAX_BLOCK_DIM {
            return config(format!(
                "fiber dimension {} exceeds the dense cap {MAX_BLOCK_DIM}",
                stencil.block_dim()
            ));
        }
        let spectrum = BlochSpectrum::compute(&stencil)?;
        Ok(Self {
            ham,
            stencil,
            spectrum,
        })
    }

    pub fn build(
        grid: &Grid,
        params: &ModelParams,
        disorder: Option<&DisorderConfig>,
        near_edge: Option<&NearEdgePotential>,
        edge: bool,
    ) -> Result<Self> {
        Self::new(assemble_with(
            grid,
            params,
            Extras {
                disorder,
                near_edge,
            },
            edge,
        )?)
    }

    pub fn grid(&self) -> &Grid {
        self.ham.grid()
    }

    /// Diagonal of `f(H)` on cell 0, real part.
    pub fn diagonal(&self, f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
        self.spectrum
            .weighted(|x| c64::new(f(x), 0.0))
            .diagonal()
            .into_iter()
            .map(|v| v.re)
            .collect()
    }

    pub fn current_stencil(&self, dir: Direction) -> Result<BlochStencil> {
        self.ham.current(dir).bloch(self.stencil.layout.cols)
    }

    pub fn current_diagonal(
        &self,
        dir: Direction,
        f: impl Fn(f64) -> f64 + Sync,
    ) -> Result<CurrentDiagonal> {
        let j = self.current_stencil(dir)?;
        let w = self.spectrum.weighted(|x| c64::new(f(x), 0.0));
        let values = w.product_diagonal(&j);
        let wa = self.spectrum.weighted(|x| c64::new(f(x).abs(), 0.0));
        // |f(H)_yx| ≤ |f|(H)_yy^{1/2}|f|(H)_xx^{1/2}; the bound is a cheap, gauge-free scale.
        let absdiag: Vec<f64> = wa.diagonal().into_iter().map(|v| v.re.max(0.0)).collect();
        let bd = self.stencil.block_dim();
        let mut scale = vec![0.0; bd];
        for hop in &j.hops {
            let s = hop.value.norm() * (absdiag[hop.from] * absdiag[hop.to]).sqrt();
            scale[hop.from] += s;
            scale[hop.to] += s;
        }
        Ok(CurrentDiagonal { values, scale })
    }

    /// `Tr(χ f(H))` for a real `f`.
    pub fn trace(&self, mask: &SiteMask, f: impl Fn(f64) -> f64 + Sync) -> Result<f64> {
        let folded = mask.fold(&self.stencil.layout)?;
        let d: Vec<c64> = self.diagonal(f).into_iter().map(|v| c64::new(v, 0.0)).collect();
        Ok(mask::weighted_sum(&d, &folded)?.re)
    }

    /// Fraction of the weight of each fiber eigenvector in rows at least
    /// `margin` away from both Dirichlet walls.
    pub fn interior_weights(&self, margin: f64) -> Vec<Vec<f64>> {
        let layout = self.stencil.layout;
        let grid = self.grid();
        let inside: Vec<bool> = (0..layout.block_dim())
            .map(|a| grid.wall_distance(layout.x2(a)) >= margin)
            .collect();
        self.spectrum
            .fibers
            .iter()
            .map(|s| {
                (0..s.dim())
                    .map(|n| {
                        (0..s.dim())
                            .filter(|&a| inside[a])
                            .map(|a| s.vectors[(a, n)].norm_sqr())
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}
