use serde::{Deserialize, Serialize};

use super::{Check, Context, Outcome, Table};
use crate::edge::{current_profile, edge_perturbation_invariance, CutoffSpec, EdgeSystem};
use crate::error::{config, Result};
use crate::model::{Grid, ModelParams, NearEdgePotential};
use crate::spectral::DistributionSpec;

pub(super) const G_THRESHOLDS: [(&str, f64); 2] = [("delta_ratio", 0.5), ("relative_delta_long", 0.01)];

pub(super) const PERTURB_THRESHOLDS: [(&str, f64); 2] =
    [("relative_change_short", 0.02), ("change_ratio", 1.0)];

pub(super) const PROFILE_THRESHOLDS: [(&str, f64); 2] = [("tail_ratio", 1e-5), ("sign_violations", 0.0)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GIndependenceOptions {
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub h: f64,
    pub circumference: f64,
    pub top: f64,
    /// Short and long cutoff length.
    #[serde(rename = "L")]
    pub lengths: [f64; 2],
}

impl Default for GIndependenceOptions {
    fn default() -> Self {
        Self {
            b: 2.0,
            mu: 1.4,
            temperature: 0.6,
            h: 1.0 / 6.0,
            circumference: 8.0,
            top: 120.0,
            lengths: [10.0, 40.0],
        }
    }
}

/// Linear cutoff against the configured smooth one (default smoothstep).
pub(super) fn g_independence(o: &GIndependenceOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let other = match ctx.cutoff.clone() {
        None | Some(CutoffSpec::Linear) => CutoffSpec::default(),
        Some(c) => c,
    };
    let params = ModelParams::landau(o.b, o.mu, o.temperature);
    let grid = Grid::edge_cylinder(o.h, o.circumference, o.top)?;
    let sys = EdgeSystem::build(&grid, &params, None, None)?;
    let diag = sys.current_diagonal(&DistributionSpec::fd(o.mu, o.temperature))?;
    let mut table = Table::new("cutoffs", &["L", "I_linear", "I_other", "delta"]);
    let mut deltas = Vec::new();
    let mut long = 0.0;
    for &l in &o.lengths {
        let a = sys.total_from(&diag, &CutoffSpec::Linear, l)?.value;
        let b = sys.total_from(&diag, &other, l)?.value;
        table.push(&[l, a, b, (a - b).abs()]);
        deltas.push((a - b).abs());
        long = b;
    }
    Ok(Outcome {
        checks: vec![
            Check::at_most("delta_ratio", deltas[1] / deltas[0], th.get("delta_ratio")),
            Check::at_most("relative_delta_long", deltas[1] / long.abs(), th.get("relative_delta_long")),
        ],
        tables: vec![table],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdgePerturbOptions {
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub h: f64,
    pub circumference: f64,
    pub top: f64,
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    #[serde(rename = "L")]
    pub lengths: [f64; 2],
}

impl Default for EdgePerturbOptions {
    fn default() -> Self {
        Self {
            b: 1.0,
            mu: 1.0,
            temperature: 0.1,
            h: 0.25,
            circumference: 32.0,
            top: 120.0,
            amplitude: 0.5,
            center: 1.0,
            width: 0.25,
            lengths: [20.0, 40.0],
        }
    }
}

/// Gaussian ridge next to the wall; current of `F = fd` (weight `fd'`).
pub(super) fn edge_perturb(o: &EdgePerturbOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let cutoff = ctx.cutoff.clone().unwrap_or_default();
    let params = ModelParams::landau(o.b, o.mu, o.temperature);
    let grid = Grid::edge_cylinder(o.h, o.circumference, o.top)?;
    let w = NearEdgePotential::gaussian_ridge(o.amplitude, o.center, o.width);
    let weight = DistributionSpec::fd_prime(o.mu, o.temperature);
    let rows = edge_perturbation_invariance(&grid, &params, None, &w, &weight, &cutoff, &o.lengths)?;
    let mut table = Table::new("edge_perturbation", &["L", "base", "perturbed", "difference", "relative"]);
    for r in &rows {
        table.push(&[r.l, r.base, r.perturbed, r.difference, r.relative]);
    }
    Ok(Outcome {
        checks: vec![
            Check::at_most("relative_change_short", rows[0].relative, th.get("relative_change_short")),
            Check::below("change_ratio", rows[1].relative / rows[0].relative, th.get("change_ratio")),
        ],
        tables: vec![table],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileOptions {
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub h: f64,
    pub circumference: f64,
    pub top: f64,
    /// Tail windows start this many magnetic lengths from either wall.
    pub tail_start: f64,
    /// Width of the near-edge zone of fixed sign, in magnetic lengths.
    pub sign_zone: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            b: 1.0,
            mu: 0.7,
            temperature: 0.05,
            h: 0.2,
            circumference: 16.0,
            top: 24.0,
            tail_start: 8.0,
            sign_zone: 2.0,
        }
    }
}

pub(super) fn profile(o: &ProfileOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let params = ModelParams::landau(o.b, o.mu, o.temperature);
    let ell = params.magnetic_length();
    let grid = Grid::edge_cylinder(o.h, o.circumference, o.top)?;
    let prof = current_profile(&params, &grid, None)?;
    let peak = prof.peak();
    let depth = prof.x2.last().copied().unwrap_or(0.0);
    let start = o.tail_start * ell;
    // The far wall carries its own edge current; stop the tail short of it.
    let tail: Vec<(f64, f64)> = prof
        .window_averages(start, 1.0)
        .into_iter()
        .filter(|(lo, _)| lo + 1.0 <= depth - start + 1e-9)
        .collect();
    if tail.is_empty() {
        return config(format!(
            "strip of depth {depth} leaves no unit window {start} from both walls"
        ));
    }
    let worst = tail.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let zone: Vec<f64> = prof
        .x2
        .iter()
        .zip(&prof.j1e)
        .filter(|(x, _)| **x <= o.sign_zone * ell + 1e-9)
        .map(|(_, j)| *j)
        .collect();
    let sign = zone.first().copied().unwrap_or(0.0).signum();
    let violations = zone.iter().filter(|j| j.signum() != sign || **j == 0.0).count();

    let mut table = Table::new("profile", &["x2", "j1E", "j1B"]);
    for (k, x) in prof.x2.iter().enumerate() {
        table.push(&[*x, prof.j1e[k], prof.j1b.get(k).copied().unwrap_or(f64::NAN)]);
    }
    let mut windows = Table::new("tail_windows", &["start", "mean_j1E", "ratio_to_peak"]);
    for (lo, v) in &tail {
        windows.push(&[*lo, *v, v.abs() / peak]);
    }
    Ok(Outcome {
        checks: vec![
            Check::at_most("tail_ratio", worst / peak, th.get("tail_ratio")),
            Check::at_most("sign_violations", violations as f64, th.get("sign_violations")),
        ],
        tables: vec![table, windows],
    })
}
