use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{relative, Check, Context, Outcome, Table};
use crate::bulk::{density_in_b, magnetic_derivative, mean_and_error};
use crate::edge::{CutoffSpec, EdgeSystem};
use crate::error::{config, Result};
use crate::model::{Bump, DisorderLaw, DisorderSpec, Grid, ModelParams};
use crate::spectral::DistributionSpec;

pub(super) const THRESHOLDS: [(&str, f64); 5] = [
    ("clean_relative_gap", 0.02),
    ("clean_gap_ratio", 1.0),
    ("disordered_sigma_multiplier", 3.0),
    ("disordered_relative_allowance", 0.03),
    ("disordered_gap_ratio", 1.0),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CleanDuality {
    pub h: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub edge_circumference: f64,
    pub edge_top: f64,
    pub bulk_circumference: f64,
    pub bulk_half_height: f64,
}

impl Default for CleanDuality {
    fn default() -> Self {
        Self {
            h: 0.2,
            temperature: 0.05,
            edge_circumference: 64.0,
            edge_top: 60.0,
            bulk_circumference: 12.0,
            bulk_half_height: 12.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderedDuality {
    pub enabled: bool,
    pub lambda: f64,
    pub seeds: usize,
    pub h: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub edge_circumference: f64,
    pub edge_top: f64,
    pub bulk_circumference: f64,
    pub bulk_half_height: f64,
    pub x1_period: Option<usize>,
}

impl Default for DisorderedDuality {
    fn default() -> Self {
        Self {
            enabled: true,
            lambda: 0.3,
            seeds: 16,
            h: 1.0 / 3.0,
            temperature: 0.1,
            edge_circumference: 32.0,
            edge_top: 60.0,
            bulk_circumference: 8.0,
            bulk_half_height: 8.0,
            x1_period: Some(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DualityOptions {
    pub b: f64,
    pub mu: f64,
    /// Cutoff lengths, shortest first; checks use the first and the last.
    #[serde(rename = "L")]
    pub lengths: Vec<f64>,
    pub delta_b: f64,
    pub clean: CleanDuality,
    pub disordered: DisorderedDuality,
}

impl Default for DualityOptions {
    fn default() -> Self {
        Self {
            b: 1.0,
            mu: 1.0,
            lengths: vec![10.0, 20.0],
            delta_b: 1e-3,
            clean: CleanDuality::default(),
            disordered: DisorderedDuality::default(),
        }
    }
}

/// `∂_b B_F` and `I^E_L` for `F = fd`, whose current weight is `fd'`.
fn one_sample(
    params: &ModelParams,
    bulk_grid: &Grid,
    edge_grid: &Grid,
    seeds: Option<(u64, u64, Option<usize>)>,
    lengths: &[f64],
    cutoff: &CutoffSpec,
    delta_b: f64,
) -> Result<(f64, Vec<f64>)> {
    let spec = |seed: u64, period| DisorderSpec {
        seed,
        law: DisorderLaw::Uniform,
        bump: Bump::SiteDelta,
        x1_period: period,
    };
    let (bulk_d, edge_d) = match seeds {
        Some((sb, se, period)) => (
            Some(spec(sb, period).sample(bulk_grid)?),
            Some(spec(se, period).sample(edge_grid)?),
        ),
        None => (None, None),
    };
    let f = DistributionSpec::fd(params.mu, params.temperature);
    let obs = density_in_b(&f, params, bulk_grid, bulk_d.as_ref());
    let d = magnetic_derivative(&obs, params.b, delta_b)?.value;
    let sys = EdgeSystem::build(edge_grid, params, edge_d.as_ref(), None)?;
    let diag = sys.current_diagonal(&DistributionSpec::fd_prime(params.mu, params.temperature))?;
    let currents = lengths
        .iter()
        .map(|&l| Ok(sys.total_from(&diag, cutoff, l)?.value))
        .collect::<Result<Vec<_>>>()?;
    Ok((d, currents))
}

pub(super) fn run(o: &DualityOptions, ctx: &Context) -> Result<Outcome> {
    if o.lengths.len() < 2 || o.lengths.windows(2).any(|w| w[1] <= w[0]) {
        return config("duality needs at least two increasing cutoff lengths");
    }
    let th = &ctx.thresholds;
    let cutoff = ctx.cutoff.clone().unwrap_or_default();
    let n_l = o.lengths.len();
    let mut checks = Vec::new();
    let mut header = vec!["model".to_string(), "sample".into(), "dB_db".into()];
    header.extend(o.lengths.iter().map(|l| format!("I_L{l}")));
    let mut table = super::Table {
        name: "duality".into(),
        header,
        rows: Vec::new(),
    };
    let push = |t: &mut Table, model: &str, sample: String, d: f64, i: &[f64]| {
        let mut r = vec![model.to_string(), sample, d.to_string()];
        r.extend(i.iter().map(f64::to_string));
        t.push_strings(r);
    };

    let c = &o.clean;
    let params = ModelParams::landau(o.b, o.mu, c.temperature);
    let bulk = Grid::bulk_cylinder(c.h, c.bulk_circumference, c.bulk_half_height)?;
    let edge = Grid::edge_cylinder(c.h, c.edge_circumference, c.edge_top)?;
    let (d, i) = one_sample(&params, &bulk, &edge, None, &o.lengths, &cutoff, o.delta_b)?;
    push(&mut table, "clean", "0".into(), d, &i);
    let gap = |k: usize| (d - i[k]).abs();
    checks.push(Check::at_most(
        "clean_relative_gap",
        relative(i[n_l - 1], d),
        th.get("clean_relative_gap"),
    ));
    checks.push(Check::below("clean_gap_ratio", gap(n_l - 1) / gap(0), th.get("clean_gap_ratio")));

    let s = &o.disordered;
    if s.enabled {
        if s.seeds < 2 {
            return config("disordered duality needs at least two seeds");
        }
        let params = ModelParams {
            lambda_dis: s.lambda,
            ..ModelParams::landau(o.b, o.mu, s.temperature)
        };
        let bulk = Grid::bulk_cylinder(s.h, s.bulk_circumference, s.bulk_half_height)?;
        let edge = Grid::edge_cylinder(s.h, s.edge_circumference, s.edge_top)?;
        let samples = (0..s.seeds)
            .into_par_iter()
            .map(|k| {
                let seeds = (
                    ctx.derive_seed(&format!("duality/bulk/{k}")),
                    ctx.derive_seed(&format!("duality/edge/{k}")),
                    s.x1_period,
                );
                one_sample(&params, &bulk, &edge, Some(seeds), &o.lengths, &cutoff, o.delta_b)
            })
            .collect::<Result<Vec<_>>>()?;
        for (k, (d, i)) in samples.iter().enumerate() {
            push(&mut table, "disordered", k.to_string(), *d, i);
        }
        let ds: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let (dm, dse) = mean_and_error(&ds)?;
        let at = |k: usize| -> Result<(f64, f64)> {
            mean_and_error(&samples.iter().map(|s| s.1[k]).collect::<Vec<_>>())
        };
        let (im, ise) = at(n_l - 1)?;
        let (i0, _) = at(0)?;
        let mut means = vec![dm];
        for k in 0..n_l {
            means.push(at(k)?.0);
        }
        push(&mut table, "disordered", "mean".into(), dm, &means[1..]);
        let mut errs = vec![dse];
        for k in 0..n_l {
            errs.push(at(k)?.1);
        }
        push(&mut table, "disordered", "std_error".into(), dse, &errs[1..]);
        let allowance = th.get("disordered_sigma_multiplier") * dse.hypot(ise)
            + th.get("disordered_relative_allowance") * dm.abs();
        checks.push(Check::at_most("disordered_gap", (dm - im).abs(), allowance));
        checks.push(Check::below(
            "disordered_gap_ratio",
            (dm - im).abs() / (dm - i0).abs(),
            th.get("disordered_gap_ratio"),
        ));
    }
    Ok(Outcome {
        checks,
        tables: vec![table],
    })
}
