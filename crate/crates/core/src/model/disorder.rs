use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::error::{config, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderLaw {
    /// i.i.d. uniform on [−1, 1].
    #[default]
    Uniform,
}

/// Single-site profile `u` placed at each lattice point γ.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bump {
    /// Unit weight on the grid point nearest γ.
    #[default]
    SiteDelta,
    /// `exp(−|x−γ|²/(2w²))`, truncated at 4w.
    Gaussian { width: f64 },
}

/// Disorder block of a config file; couplings are regenerated from the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub seed: u64,
    #[serde(default)]
    pub law: DisorderLaw,
    #[serde(default)]
    pub bump: Bump,
    /// Repeat a block of this many x₁ lattice columns around the cylinder.
    #[serde(default)]
    pub x1_period: Option<usize>,
}

impl DisorderSpec {
    pub fn sample(&self, grid: &Grid) -> Result<DisorderConfig> {
        let mut d = match self.x1_period {
            None => sample_disorder(self.seed, grid, self.law),
            Some(p) => sample_disorder_periodic(self.seed, grid, self.law, p)?,
        };
        if let Bump::Gaussian { width } = self.bump {
            if !(width.is_finite() && width > 0.0) {
                return config("gaussian bump width must be positive");
            }
        }
        d.bump = self.bump;
        Ok(d)
    }
}

/// Couplings ω_γ on a rectangle of integer lattice points.
///
/// Stored index is `(γ₁ − γ₁_start)·n2 + (γ₂ − γ₂_start)`. When `x1_wrap` is
/// set, γ₁ is reduced modulo `n1`, which makes the configuration periodic
/// around the cylinder.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderConfig {
    pub seed: u64,
    pub law: DisorderLaw,
    pub bump: Bump,
    pub gamma1_start: i64,
    pub n1: usize,
    pub gamma2_start: i64,
    pub n2: usize,
    pub x1_wrap: bool,
    pub couplings: Vec<f64>,
}

fn lattice_range(lo: f64, hi: f64) -> (i64, usize) {
    let a = (lo - 1e-9).ceil() as i64;
    let b = (hi + 1e-9).floor() as i64;
    (a, (b - a + 1).max(0) as usize)
}

fn x2_range(grid: &Grid) -> (i64, usize) {
    lattice_range(grid.x2_offset(), grid.x2_max())
}

fn draw(seed: u64, law: DisorderLaw, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match law {
        DisorderLaw::Uniform => (0..count).map(|_| rng.random_range(-1.0..=1.0)).collect(),
    }
}

/// One coupling per integer lattice point covered by the grid.
pub fn sample_disorder(seed: u64, grid: &Grid, law: DisorderLaw) -> DisorderConfig {
    let (g1, n1) = match grid.circumference() {
        // Points 0..C; γ₁ = C coincides with γ₁ = 0.
        Some(c) => (0, ((c - 1e-9).floor() as usize) + 1),
        None => lattice_range(0.0, grid.x1(grid.width() - 1)),
    };
    let (g2, n2) = x2_range(grid);
    DisorderConfig {
        seed,
        law,
        bump: Bump::SiteDelta,
        gamma1_start: g1,
        n1,
        gamma2_start: g2,
        n2,
        x1_wrap: grid.is_periodic(),
        couplings: draw(seed, law, n1 * n2),
    }
}

/// Couplings drawn for `period` columns and repeated around the cylinder.
///
/// The law stays covariant under integer translations; only the sample is
/// restricted to a supercell.
pub fn sample_disorder_periodic(
    seed: u64,
    grid: &Grid,
    law: DisorderLaw,
    period: usize,
) -> Result<DisorderConfig> {
    let Some(c) = grid.circumference() else {
        return config("periodic disorder requires a periodic x1 boundary");
    };
    let cols = c.round();
    if period == 0 || (c - cols).abs() > 1e-9 || !(cols as usize).is_multiple_of(period) {
        return config(format!(
            "disorder period {period} must divide the circumference {c}"
        ));
    }
    let (g2, n2) = x2_range(grid);
    Ok(DisorderConfig {
        seed,
        law,
        bump: Bump::SiteDelta,
        gamma1_start: 0,
        n1: period,
        gamma2_start: g2,
        n2,
        x1_wrap: true,
        couplings: draw(seed, law, period * n2),
    })
}

impl DisorderConfig {
    pub fn coupling(&self, g1: i64, g2: i64) -> Option<f64> {
        let r2 = g2 - self.gamma2_start;
        if r2 < 0 || r2 as usize >= self.n2 {
            return None;
        }
        let r1 = g1 - self.gamma1_start;
        let r1 = if self.x1_wrap {
            r1.rem_euclid(self.n1 as i64)
        } else if r1 < 0 || r1 as usize >= self.n1 {
            return None;
        } else {
            r1
        };
        Some(self.couplings[r1 as usize * self.n2 + r2 as usize])
    }

    /// Configuration seen after translating the sample by `(s1, s2)`:
    /// `ω'_γ = ω_{γ−s}`.
    pub fn translated(&self, s1: i64, s2: i64) -> Self {
        Self {
            gamma1_start: self.gamma1_start + s1,
            gamma2_start: self.gamma2_start + s2,
            ..self.clone()
        }
    }

    /// Period of the sample along x₁ in lattice units, if it repeats.
    pub fn x1_period(&self) -> Option<usize> {
        self.x1_wrap.then_some(self.n1)
    }

    /// λ·V_ω evaluated on every site of `grid`.
    pub fn site_potential(&self, grid: &Grid, lambda: f64) -> Vec<f64> {
        let mut out = vec![0.0; grid.n_sites()];
        if lambda == 0.0 {
            return out;
        }
        let h = grid.spacing();
        match self.bump {
            Bump::SiteDelta => {
                let (g1s, n1) = match grid.circumference() {
                    Some(c) => (0, ((c - 1e-9).floor() as usize) + 1),
                    None => lattice_range(0.0, grid.x1(grid.width() - 1)),
                };
                let (g2s, n2) = x2_range(grid);
                for a in 0..n1 as i64 {
                    let g1 = g1s + a;
                    let i1 = (g1 as f64 / h).round() as usize % grid.width();
                    for c in 0..n2 as i64 {
                        let g2 = g2s + c;
                        let (Some(w), Some(i2)) = (self.coupling(g1, g2), grid.row_of(g2 as f64))
                        else {
                            continue;
                        };
                        out[grid.index(i1, i2)] += lambda * w;
                    }
                }
            }
            Bump::Gaussian { width } => {
                let reach = 4.0 * width;
                let circ = grid.circumference();
                for (s, slot) in out.iter_mut().enumerate() {
                    let (x1, x2) = grid.position(s);
                    let mut acc = 0.0;
                    let (lo2, n2) = lattice_range(x2 - reach, x2 + reach);
                    let (lo1, n1) = lattice_range(x1 - reach, x1 + reach);
                    for a in 0..n1 as i64 {
                        let g1 = lo1 + a;
                        for c in 0..n2 as i64 {
                            let g2 = lo2 + c;
                            let mut d1 = x1 - g1 as f64;
                            if let Some(cc) = circ {
                                d1 -= cc * (d1 / cc).round();
                            }
                            let d2 = x2 - g2 as f64;
                            let r2 = d1 * d1 + d2 * d2;
                            if r2 > reach * reach {
                                continue;
                            }
                            // Lattice points outside a Dirichlet x₁ range carry no coupling.
                            let g1_eff = match circ {
                                Some(cc) => (g1 as f64).rem_euclid(cc.round()) as i64,
                                None => g1,
                            };
                            if let Some(w) = self.coupling(g1_eff, g2) {
                                acc += w * (-0.5 * r2 / (width * width)).exp();
                            }
                        }
                    }
                    *slot = lambda * acc;
                }
            }
        }
        out
    }
}
