use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Check, Context, Outcome, Table};
use crate::bulk::{equilibrium_current_check, spatial_vs_ensemble};
use crate::error::{config, Result};
use crate::model::{Bump, DisorderConfig, DisorderLaw, DisorderSpec, Grid, ModelParams};
use crate::spectral::DistributionSpec;

pub(super) const EQUILIBRIUM_THRESHOLDS: [(&str, f64); 2] =
    [("clean_scaled_current", 1e-6), ("disordered_sigma_multiplier", 3.0)];

pub(super) const BIRKHOFF_THRESHOLDS: [(&str, f64); 1] = [("sigma_multiplier", 3.0)];

fn template(x1_period: Option<usize>) -> DisorderSpec {
    DisorderSpec {
        seed: 0,
        law: DisorderLaw::Uniform,
        bump: Bump::SiteDelta,
        x1_period,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumOptions {
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub h: f64,
    pub circumference: f64,
    pub half_height: f64,
    pub lambda: f64,
    pub seeds: usize,
    pub x1_period: Option<usize>,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            b: 1.0,
            mu: 1.0,
            temperature: 0.1,
            h: 0.25,
            circumference: 12.0,
            half_height: 8.0,
            lambda: 0.3,
            seeds: 32,
            x1_period: Some(1),
        }
    }
}

/// Unit-cell current of `F = gcp` (weight `fd`) in both directions.
pub(super) fn equilibrium(o: &EquilibriumOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let grid = Grid::bulk_cylinder(o.h, o.circumference, o.half_height)?;
    let f = DistributionSpec::gcp(o.mu, o.temperature);
    let clean = ModelParams::landau(o.b, o.mu, o.temperature);
    let c = equilibrium_current_check(&f, &clean, &grid, &[])?;
    let mut checks = vec![
        Check::at_most("clean_x1_scaled", c.x1.value.abs() / c.scale, th.get("clean_scaled_current")),
        Check::at_most("clean_x2_scaled", c.x2.value.abs() / c.scale, th.get("clean_scaled_current")),
    ];
    let mut table = Table::new("equilibrium_current", &["model", "sample", "x1", "x2", "scale"]);
    table.push_strings(vec![
        "clean".into(),
        "0".into(),
        c.x1.value.to_string(),
        c.x2.value.to_string(),
        c.scale.to_string(),
    ]);
    if o.seeds > 0 {
        if o.seeds < 2 {
            return config("the disordered check needs at least two seeds");
        }
        let params = ModelParams {
            lambda_dis: o.lambda,
            ..clean
        };
        let ensemble = (0..o.seeds)
            .into_par_iter()
            .map(|k| {
                DisorderSpec {
                    seed: ctx.derive_seed(&format!("equilibrium/{k}")),
                    ..template(o.x1_period)
                }
                .sample(&grid)
            })
            .collect::<Result<Vec<DisorderConfig>>>()?;
        let d = equilibrium_current_check(&f, &params, &grid, &ensemble)?;
        let k = th.get("disordered_sigma_multiplier");
        checks.push(Check::at_most("disordered_x1", d.x1.value.abs(), k * d.x1.std_error));
        checks.push(Check::at_most("disordered_x2", d.x2.value.abs(), k * d.x2.std_error));
        for (name, a, b) in [
            ("mean", d.x1.value, d.x2.value),
            ("std_error", d.x1.std_error, d.x2.std_error),
        ] {
            table.push_strings(vec![
                "disordered".into(),
                name.into(),
                a.to_string(),
                b.to_string(),
                d.scale.to_string(),
            ]);
        }
    }
    Ok(Outcome {
        checks,
        tables: vec![table],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BirkhoffOptions {
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub lambda: f64,
    pub h: f64,
    pub circumference: f64,
    pub half_height: f64,
    /// Number of stacked cells and of ensemble seeds.
    pub samples: usize,
    pub x1_period: Option<usize>,
}

impl Default for BirkhoffOptions {
    fn default() -> Self {
        Self {
            b: 1.0,
            mu: 1.0,
            temperature: 0.1,
            lambda: 0.5,
            h: 0.25,
            circumference: 12.0,
            half_height: 14.0,
            samples: 16,
            x1_period: Some(1),
        }
    }
}

pub(super) fn birkhoff(o: &BirkhoffOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let grid = Grid::bulk_cylinder(o.h, o.circumference, o.half_height)?;
    let params = ModelParams {
        lambda_dis: o.lambda,
        ..ModelParams::landau(o.b, o.mu, o.temperature)
    };
    let seeds: Vec<u64> = (0..o.samples)
        .map(|k| ctx.derive_seed(&format!("birkhoff/{k}")))
        .collect();
    let f = DistributionSpec::fd(o.mu, o.temperature);
    let r = spatial_vs_ensemble(&f, &params, &grid, &template(o.x1_period), &seeds)?;
    let mut table = Table::new("birkhoff", &["estimator", "mean", "std_error", "n"]);
    for rep in [&r.spatial, &r.ensemble] {
        table.push_strings(vec![
            rep.estimator_kind.as_str().into(),
            rep.value.to_string(),
            rep.std_error.to_string(),
            rep.n_samples.to_string(),
        ]);
    }
    Ok(Outcome {
        checks: vec![Check::at_most(
            "spatial_minus_ensemble",
            r.difference.abs(),
            th.get("sigma_multiplier") * r.combined_std_error,
        )],
        tables: vec![table],
    })
}
