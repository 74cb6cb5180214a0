use serde::{Deserialize, Serialize};

use super::{Check, Context, Outcome, Table};
use crate::bulk::{central_cell_origin, WALL_MARGIN};
use crate::error::{config, Result};
use crate::landau::landau_level;
use crate::model::{Grid, ModelParams};
use crate::solve::Solved;
use crate::spectral::{DistributionSpec, SiteMask, SmoothOrder};
use crate::topology::{chern_marker, edge_spectral_flow, fermi_projector, streda_derivative, zero_t_decay_study, FlowOptions};

pub(super) const ZERO_T_THRESHOLDS: [(&str, f64); 4] = [
    ("decrease_ratio", 1.0),
    ("fit_slope", 0.0),
    ("fit_r_squared", 0.95),
    ("f0_spread", 1e-8),
];

pub(super) const STREDA_THRESHOLDS: [(&str, f64); 2] = [("chern_distance", 2e-2), ("streda_distance", 2e-2)];

pub(super) const FLOW_THRESHOLDS: [(&str, f64); 2] = [("flow_distance", 2e-2), ("raw_integer_distance", 0.05)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapWindow {
    pub e_minus: f64,
    pub e_plus: f64,
    #[serde(default)]
    pub order: SmoothOrder,
}

impl GapWindow {
    fn new(e_minus: f64, e_plus: f64, order: SmoothOrder) -> Self {
        Self {
            e_minus,
            e_plus,
            order,
        }
    }

    fn f0(&self) -> DistributionSpec {
        DistributionSpec::GappedF0 {
            e_minus: self.e_minus,
            e_plus: self.e_plus,
            order: self.order,
        }
    }

    /// Landau levels below the window, the integer every invariant should give.
    fn landau_count(&self, b: f64) -> usize {
        (0..).take_while(|&n| landau_level(n, b) < self.e_minus).count()
    }
}

fn first_two_gaps() -> Vec<GapWindow> {
    vec![
        GapWindow::new(0.8, 1.2, SmoothOrder::Quintic),
        GapWindow::new(1.8, 2.2, SmoothOrder::Quintic),
    ]
}

/// Windows from the options, or the single `--window` override.
fn windows(ctx: &Context, gaps: &[GapWindow]) -> Result<Vec<GapWindow>> {
    let w = match ctx.window {
        Some([lo, hi]) => vec![GapWindow::new(lo, hi, SmoothOrder::Quintic)],
        None => gaps.to_vec(),
    };
    if w.is_empty() {
        return config("at least one gap window is required");
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZeroTOptions {
    pub b: f64,
    pub mu: f64,
    pub h: f64,
    pub circumference: f64,
    pub half_height: f64,
    /// Strictly descending.
    #[serde(rename = "T")]
    pub temperatures: Vec<f64>,
    /// Admissible F0 windows; the first is the reference.
    pub f0: Vec<GapWindow>,
    pub delta_b: f64,
}

impl Default for ZeroTOptions {
    fn default() -> Self {
        Self {
            b: 1.0,
            mu: 1.0,
            h: 0.25,
            circumference: 12.0,
            half_height: 10.0,
            temperatures: vec![0.2, 0.1, 0.05],
            f0: vec![
                GapWindow::new(0.7, 1.3, SmoothOrder::Quintic),
                GapWindow::new(0.6, 1.4, SmoothOrder::Cubic),
            ],
            delta_b: 1e-3,
        }
    }
}

pub(super) fn zero_t(o: &ZeroTOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let params = ModelParams::landau(o.b, o.mu, 0.0);
    let grid = Grid::bulk_cylinder(o.h, o.circumference, o.half_height)?;
    let f0s: Vec<DistributionSpec> = o.f0.iter().map(GapWindow::f0).collect();
    let study = zero_t_decay_study(&params, &grid, &o.temperatures, &f0s, o.delta_b)?;
    let mut decay = Table::new("decay", &["T", "inverse_T", "derivative", "distance", "dropped"]);
    for p in &study.points {
        decay.push(&[
            p.temperature,
            1.0 / p.temperature,
            p.derivative,
            p.distance,
            f64::from(u8::from(p.dropped)),
        ]);
    }
    let mut f0 = Table::new("f0_derivatives", &["e_minus", "e_plus", "derivative"]);
    for (w, d) in o.f0.iter().zip(&study.f0_derivatives) {
        f0.push(&[w.e_minus, w.e_plus, *d]);
    }
    let ratio = study
        .points
        .windows(2)
        .map(|w| w[1].distance / w[0].distance)
        .fold(0.0, f64::max);
    Ok(Outcome {
        checks: vec![
            Check::below("decrease_ratio", ratio, th.get("decrease_ratio")),
            Check::below("fit_slope", study.slope.unwrap_or(f64::NAN), th.get("fit_slope")),
            Check::at_least("fit_r_squared", study.r_squared.unwrap_or(f64::NAN), th.get("fit_r_squared")),
            Check::at_most("f0_spread", study.f0_spread, th.get("f0_spread")),
        ],
        tables: vec![decay, f0],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StredaOptions {
    pub b: f64,
    pub h: f64,
    pub circumference: f64,
    pub half_height: f64,
    pub gaps: Vec<GapWindow>,
    pub delta_b: f64,
}

impl Default for StredaOptions {
    fn default() -> Self {
        Self {
            b: 1.0,
            h: 0.25,
            circumference: 24.0,
            half_height: 10.0,
            gaps: first_two_gaps(),
            delta_b: 1e-3,
        }
    }
}

/// Chern marker of the Fermi projector and `2π·∂_b B_{F0}` for each gap.
pub(super) fn streda(o: &StredaOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let params = ModelParams::landau(o.b, 0.0, 0.0);
    let grid = Grid::bulk_cylinder(o.h, o.circumference, o.half_height)?;
    let solved = Solved::build(&grid, &params, None, None, false)?;
    let mask = SiteMask::unit_cell(&grid, central_cell_origin(&grid));
    let margin = WALL_MARGIN * params.magnetic_length();
    let mut table = Table::new(
        "invariants",
        &["e_minus", "e_plus", "expected", "chern", "chern_imag", "idempotency_defect", "streda", "streda_step_error"],
    );
    let mut checks = Vec::new();
    for (k, w) in windows(ctx, &o.gaps)?.iter().enumerate() {
        let expected = w.landau_count(o.b) as f64;
        let p = fermi_projector(&solved, w.e_minus, w.e_plus, Some(margin))?;
        let c = chern_marker(&p, &mask)?;
        let s = streda_derivative(&w.f0(), &params, &grid, o.delta_b)?;
        table.push(&[
            w.e_minus,
            w.e_plus,
            expected,
            c.value,
            c.imag,
            c.idempotency_defect,
            s.value,
            s.step_error,
        ]);
        let g = k + 1;
        checks.push(Check::at_most(
            format!("chern_gap{g}"),
            (c.value - expected).abs(),
            th.get("chern_distance"),
        ));
        checks.push(Check::at_most(
            format!("streda_gap{g}"),
            (s.value - expected).abs(),
            th.get("streda_distance"),
        ));
    }
    Ok(Outcome {
        checks,
        tables: vec![table],
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralFlowOptions {
    pub b: f64,
    pub h: f64,
    pub top: f64,
    pub gaps: Vec<GapWindow>,
    pub k_count: usize,
    pub max_refinements: usize,
}

impl Default for SpectralFlowOptions {
    fn default() -> Self {
        Self {
            b: 1.0,
            h: 0.25,
            top: 10.0,
            gaps: first_two_gaps(),
            k_count: 101,
            max_refinements: 4,
        }
    }
}

pub(super) fn spectral_flow(o: &SpectralFlowOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    let params = ModelParams::landau(o.b, 0.0, 0.0);
    let mut summary = Table::new(
        "spectral_flow",
        &["e_minus", "e_plus", "expected", "flow", "raw", "endpoint_mismatch", "k_count"],
    );
    let mut tables = Vec::new();
    let mut checks = Vec::new();
    for (k, w) in windows(ctx, &o.gaps)?.iter().enumerate() {
        let opts = FlowOptions {
            k_count: ctx.k_count.unwrap_or(o.k_count),
            max_refinements: o.max_refinements,
            // The integer test is a reported check here, not an error.
            integer_tolerance: f64::INFINITY,
            order: w.order,
        };
        let f = edge_spectral_flow(&params, o.h, o.top, (w.e_minus, w.e_plus), &opts)?;
        let expected = w.landau_count(o.b) as f64;
        summary.push(&[
            w.e_minus,
            w.e_plus,
            expected,
            f.flow as f64,
            f.raw,
            f.endpoint_mismatch,
            f.k_count as f64,
        ]);
        let g = k + 1;
        checks.push(Check::at_most(
            format!("flow_gap{g}"),
            (f.flow as f64 - expected).abs(),
            th.get("flow_distance"),
        ));
        checks.push(Check::at_most(
            format!("raw_integer_gap{g}"),
            (f.raw - f.raw.round()).abs(),
            th.get("raw_integer_distance"),
        ));
        let mut bands = Table::new(&format!("bands_gap{g}"), &["k1", "branch_id", "lambda"]);
        for br in &f.bands.branches {
            for (i, v) in br.values.iter().enumerate() {
                bands.push(&[f.bands.k[br.start + i], br.id as f64, *v]);
            }
        }
        tables.push(bands);
    }
    tables.insert(0, summary);
    Ok(Outcome { checks, tables })
}
