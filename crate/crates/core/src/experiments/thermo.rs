use serde::{Deserialize, Serialize};

use super::{relative, Check, Context, Outcome, Table};
use crate::bulk::{bulk_density, pressure_density_magnetization, WALL_MARGIN};
use crate::edge::EdgeSystem;
use crate::error::Result;
use crate::landau::{landau_level, landau_streda_chain, landau_thermo, LandauParams};
use crate::model::{Grid, ModelParams};
use crate::solve::Solved;
use crate::spectral::DistributionSpec;
use rayon::prelude::*;

pub(super) const LANDAU_THRESHOLDS: [(&str, f64); 5] = [
    ("bulk_density_relative_error", 0.02),
    ("level_0_relative_error", 0.01),
    ("level_1_relative_error", 0.01),
    ("triple_identity_gap", 1e-6),
    ("split_identity_gap", 1e-14),
];

pub(super) const MEQUALSI_THRESHOLDS: [(&str, f64); 2] = [
    ("max_pairwise_relative_gap", 0.02),
    ("numeric_vs_analytic_relative_gap", 0.005),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice {
    pub b: Vec<f64>,
    pub mu: Vec<f64>,
    #[serde(rename = "T")]
    pub temperature: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandauCheckOptions {
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub h: f64,
    pub circumference: f64,
    /// Distance from the central cell to each wall, in magnetic lengths.
    pub padding: f64,
    /// Skip the discretized model and only tabulate the closed forms.
    pub numeric: bool,
    pub lattice: Lattice,
    pub delta_mu: f64,
}

impl Default for LandauCheckOptions {
    fn default() -> Self {
        Self {
            b: 1.0,
            mu: 1.0,
            temperature: 0.05,
            h: 0.2,
            circumference: 12.0,
            padding: 12.0,
            numeric: true,
            lattice: Lattice {
                b: vec![0.5, 1.0, 2.0],
                mu: vec![0.3, 1.0, 2.2],
                temperature: vec![0.1, 0.2, 0.4],
            },
            delta_mu: 1e-3,
        }
    }
}

/// Lowest eigenvalue of each cluster, spaced at least half a level apart.
fn lowest_levels(values: &mut [f64], spacing: f64, count: usize) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::new();
    for &v in values.iter() {
        if out.len() == count {
            break;
        }
        if out.last().is_none_or(|l| v > l + 0.5 * spacing) {
            out.push(v);
        }
    }
    out
}

pub(super) fn landau_check(o: &LandauCheckOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let mut checks = Vec::new();
    let mut tables = Vec::new();

    let mut lattice = Table::new(
        "landau_lattice",
        &["b", "mu", "T", "p", "n", "m", "m_circ", "m_res", "sigma_H", "via_density", "via_residual", "chain_gap"],
    );
    let (mut chain_gap, mut split_gap) = (0.0f64, 0.0f64);
    for &b in &o.lattice.b {
        for &mu in &o.lattice.mu {
            for &t in &o.lattice.temperature {
                let lp = LandauParams::new(b, mu, t)?;
                let th_ = landau_thermo(&lp);
                let chain = landau_streda_chain(&lp, o.delta_mu)?;
                chain_gap = chain_gap.max(chain.max_gap);
                split_gap = split_gap.max((th_.m - th_.m_circ - th_.m_res).abs());
                lattice.push(&[
                    b, mu, t, th_.p, th_.n, th_.m, th_.m_circ, th_.m_res, th_.sigma_h,
                    chain.via_density, chain.via_residual, chain.max_gap,
                ]);
            }
        }
    }
    tables.push(lattice);
    checks.push(Check::at_most("triple_identity_gap", chain_gap, th.get("triple_identity_gap")));
    checks.push(Check::at_most("split_identity_gap", split_gap, th.get("split_identity_gap")));

    if o.numeric {
        let params = ModelParams::landau(o.b, o.mu, o.temperature);
        let half = o.padding * params.magnetic_length() + 0.5;
        let grid = Grid::bulk_cylinder(o.h, o.circumference, half)?;
        let fd = DistributionSpec::fd(o.mu, o.temperature);
        let numeric = bulk_density(&fd, &params, &grid, None)?.value;
        let exact = landau_thermo(&LandauParams::new(o.b, o.mu, o.temperature)?).n;
        let mut density = Table::new("bulk_density", &["numeric", "oracle", "relative_error"]);
        density.push(&[numeric, exact, relative(numeric, exact)]);
        tables.push(density);
        checks.push(Check::at_most(
            "bulk_density_relative_error",
            relative(numeric, exact),
            th.get("bulk_density_relative_error"),
        ));

        let solved = Solved::build(&grid, &params, None, None, false)?;
        let weights = solved.interior_weights(WALL_MARGIN * params.magnetic_length());
        let mut values: Vec<f64> = solved
            .spectrum
            .fibers
            .iter()
            .zip(&weights)
            .flat_map(|(s, w)| s.eigenvalues.iter().zip(w).filter(|(_, w)| **w > 0.5).map(|(l, _)| *l))
            .collect();
        let levels = lowest_levels(&mut values, o.b, 2);
        let mut t = Table::new("levels", &["n", "numeric", "exact", "relative_error"]);
        for n in 0..2 {
            let exact = landau_level(n, o.b);
            let (v, rel) = levels.get(n).map_or((f64::NAN, f64::INFINITY), |&v| (v, relative(v, exact)));
            t.push(&[n as f64, v, exact, rel]);
            let name = format!("level_{n}_relative_error");
            checks.push(Check::at_most(name.clone(), rel, th.get(&name)));
        }
        tables.push(t);
    }
    Ok(Outcome { checks, tables })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MEqualsIOptions {
    pub b: Vec<f64>,
    /// μ at each lattice point is this multiple of b.
    pub mu_over_b: f64,
    #[serde(rename = "T")]
    pub temperature: Vec<f64>,
    pub h: f64,
    pub bulk_circumference: f64,
    pub bulk_half_height: f64,
    pub edge_circumference: f64,
    pub edge_top: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

impl Default for MEqualsIOptions {
    fn default() -> Self {
        Self {
            b: vec![0.8, 1.0, 1.25],
            mu_over_b: 0.6,
            temperature: vec![0.05, 0.1, 0.2],
            h: 1.0 / 12.0,
            bulk_circumference: 8.0,
            bulk_half_height: 8.0,
            edge_circumference: 16.0,
            edge_top: 45.0,
            l: 15.0,
        }
    }
}

/// Magnetization three ways: `−∂_b p` on the lattice model, the closed form,
/// and the total edge current with Fermi–Dirac weight.
pub(super) fn mequalsi(o: &MEqualsIOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let cutoff = ctx.cutoff.clone().unwrap_or_default();
    let bulk_grid = Grid::bulk_cylinder(o.h, o.bulk_circumference, o.bulk_half_height)?;
    let edge_grid = Grid::edge_cylinder(o.h, o.edge_circumference, o.edge_top)?;
    let points: Vec<(f64, f64)> = o
        .b
        .iter()
        .flat_map(|&b| o.temperature.iter().map(move |&t| (b, t)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(b, t)| -> Result<[f64; 6]> {
            let mu = o.mu_over_b * b;
            let params = ModelParams::landau(b, mu, t);
            let numeric = pressure_density_magnetization(&params, &bulk_grid, None)?.m;
            let exact = landau_thermo(&LandauParams::new(b, mu, t)?).m;
            let sys = EdgeSystem::build(&edge_grid, &params, None, None)?;
            let i = sys.total_current(&DistributionSpec::fd(mu, t), &cutoff, o.l)?.value;
            Ok([b, mu, t, numeric, exact, i])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "magnetization",
        &["b", "mu", "T", "m_numeric", "m_analytic", "I_edge", "max_pairwise_gap"],
    );
    let (mut pairwise, mut cross) = (0.0f64, 0.0f64);
    for r in &rows {
        let [_, _, _, m, e, i] = *r;
        let p = relative(m, e).max(relative(i, e)).max(relative(m, i));
        pairwise = pairwise.max(p);
        cross = cross.max(relative(m, e));
        let mut row = r.to_vec();
        row.push(p);
        table.push(&row);
    }
    Ok(Outcome {
        checks: vec![
            Check::at_most("max_pairwise_relative_gap", pairwise, th.get("max_pairwise_relative_gap")),
            Check::at_most(
                "numeric_vs_analytic_relative_gap",
                cross,
                th.get("numeric_vs_analytic_relative_gap"),
            ),
        ],
        tables: vec![table],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clusters_pick_cluster_minima() {
        let mut v = vec![1.52, 0.5, 0.51, 1.5, 0.7, 2.6];
        assert_eq!(lowest_levels(&mut v, 1.0, 2), vec![0.5, 1.5]);
    }
}
