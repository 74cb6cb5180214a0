use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::projector::certify_gap;
use crate::bulk::{central_cell_origin, cell_density, magnetic_derivative, MagneticDerivative};
use crate::error::{config, Error, Result};
use crate::model::{Grid, ModelParams};
use crate::solve::Solved;
use crate::spectral::{linear_fit, DistributionSpec};

/// Differences below this are indistinguishable from step and rounding error.
pub const NUMERICAL_FLOOR: f64 = 1e-11;

fn wall_margin(params: &ModelParams) -> f64 {
    crate::bulk::WALL_MARGIN * params.magnetic_length()
}

/// `b ↦ B_F(b)` on the central cell, certifying `[e_minus, e_plus]` at every b.
fn certified_density<'a>(
    f: &'a DistributionSpec,
    params: &'a ModelParams,
    grid: &'a Grid,
    window: (f64, f64),
) -> impl Fn(f64) -> Result<f64> + Sync + 'a {
    move |b| {
        let p = params.with_b(b);
        let s = Solved::build(grid, &p, None, None, false)?;
        certify_gap(&s, window.0, window.1, Some(wall_margin(&p))).map_err(|e| match e {
            Error::GapViolated {
                energy,
                lower,
                upper,
            } => Error::GapClosed {
                b,
                energy,
                lower,
                upper,
            },
            other => other,
        })?;
        cell_density(&s, f, central_cell_origin(grid))
    }
}

/// `∂_b B_F` for a gapped `F0` on the window of `F0` itself.
pub fn gapped_derivative(
    f0: &DistributionSpec,
    params: &ModelParams,
    grid: &Grid,
    delta: f64,
) -> Result<MagneticDerivative> {
    let DistributionSpec::GappedF0 { e_minus, e_plus, .. } = *f0 else {
        return config("Streda derivative needs a gapped F0");
    };
    f0.validate()?;
    if !params.is_clean() {
        return config("gap certification runs on a single clean sample");
    }
    let obs = certified_density(f0, params, grid, (e_minus, e_plus));
    magnetic_derivative(&obs, params.b, delta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StredaReport {
    /// `2π·∂_b B_{F0}`.
    pub value: f64,
    pub step_error: f64,
}

pub fn streda_derivative(
    f0: &DistributionSpec,
    params: &ModelParams,
    grid: &Grid,
    delta: f64,
) -> Result<StredaReport> {
    let d = gapped_derivative(f0, params, grid, delta)?;
    Ok(StredaReport {
        value: TAU * d.value,
        step_error: TAU * d.step_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub temperature: f64,
    pub derivative: f64,
    pub distance: f64,
    pub dropped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayStudy {
    pub points: Vec<DecayPoint>,
    /// `B'_{F0}` for each admissible F0, in input order.
    pub f0_derivatives: Vec<f64>,
    pub f0_spread: f64,
    pub strictly_decreasing: bool,
    /// Slope of `ln d` against `1/T`; `−C₂` in `d ≤ C₁e^{−C₂/T}`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
}

/// `d(T) = |B'_{F_T} − B'_{F0}|` for Fermi–Dirac `F_T` at fixed μ, against the
/// first of several gapped `F0`s.
pub fn zero_t_decay_study(
    params: &ModelParams,
    grid: &Grid,
    temperatures: &[f64],
    f0s: &[DistributionSpec],
    delta: f64,
) -> Result<DecayStudy> {
    if temperatures.is_empty() || f0s.is_empty() {
        return Err(Error::EmptyGroup("decay study needs temperatures and F0s".into()));
    }
    if temperatures.iter().any(|t| !(*t > 0.0)) || temperatures.windows(2).any(|w| w[1] >= w[0]) {
        return config("temperatures must be positive and strictly descending");
    }
    let f0_derivatives = f0s
        .iter()
        .map(|f0| Ok(gapped_derivative(f0, params, grid, delta)?.value))
        .collect::<Result<Vec<_>>>()?;
    let reference = f0_derivatives[0];
    let (lo, hi) = f0_derivatives
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let points = temperatures
        .iter()
        .map(|&t| {
            let f = DistributionSpec::fd(params.mu, t);
            let obs = |b: f64| {
                let s = Solved::build(grid, &params.with_b(b), None, None, false)?;
                cell_density(&s, &f, central_cell_origin(grid))
            };
            let d = magnetic_derivative(&obs, params.b, delta)?.value;
            let distance = (d - reference).abs();
            Ok(DecayPoint {
                temperature: t,
                derivative: d,
                distance,
                dropped: distance < NUMERICAL_FLOOR,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<&DecayPoint> = points.iter().filter(|p| !p.dropped).collect();
    let strictly_decreasing = points.windows(2).all(|w| w[1].distance < w[0].distance);
    let xs: Vec<f64> = kept.iter().map(|p| 1.0 / p.temperature).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.distance.ln()).collect();
    let fit = if kept.len() >= 2 { linear_fit(&xs, &ys) } else { None };
    Ok(DecayStudy {
        points,
        f0_spread: hi - lo,
        f0_derivatives,
        strictly_decreasing,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        r_squared: fit.map(|f| f.2),
    })
}
