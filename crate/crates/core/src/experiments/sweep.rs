use serde::{Deserialize, Serialize};

use super::{Check, Context, Outcome, Table};
use crate::ensemble::{run_sweep, ObservableRegistry, SweepGeometry, SweepPlan};
use crate::error::{config, Result};
use crate::model::ModelParams;

pub(super) const THRESHOLDS: [(&str, f64); 2] = [("differing_widths", 0.0), ("failed_rows", 0.0)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepOptions {
    pub plan: SweepPlan,
    /// The plan is rerun at each width and the CSV bytes compared.
    pub verify_widths: Vec<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        let base = ModelParams {
            lambda_dis: 0.3,
            ..ModelParams::landau(1.0, 1.0, 0.1)
        };
        let mut plan = SweepPlan::new(
            "bulk_density",
            base,
            SweepGeometry {
                h: 0.5,
                circumference: 4.0,
                height: 4.0,
            },
        );
        plan.b = vec![0.9, 1.0, 1.1];
        plan.replicas = (0..8).collect();
        Self {
            plan,
            verify_widths: vec![1, 4],
        }
    }
}

/// Runs the plan with the master seed of the config. The first width is the
/// configured thread count; the CSV of that run is the artifact.
pub(super) fn run(o: &SweepOptions, ctx: &Context) -> Result<Outcome> {
    let th = &ctx.thresholds;
    if o.verify_widths.contains(&0) {
        return config("verify_widths must be positive");
    }
    let registry = ObservableRegistry::builtin();
    let mut plan = o.plan.clone();
    plan.master_seed = ctx.seed;
    plan.cutoff = ctx.cutoff.clone().unwrap_or(plan.cutoff);
    let mut widths = vec![plan.threads.unwrap_or(ctx.threads)];
    widths.extend(o.verify_widths.iter().copied());
    let mut reference: Option<(Vec<u8>, crate::ensemble::SweepTable)> = None;
    let mut differing = 0usize;
    for w in widths {
        plan.threads = Some(w);
        let t = run_sweep(&plan, &registry)?;
        let bytes = t.to_csv_bytes()?;
        match &reference {
            None => reference = Some((bytes, t)),
            Some((r, _)) if *r != bytes => differing += 1,
            Some(_) => {}
        }
    }
    let (_, table) = reference.expect("at least one width");
    let header = table.header();
    let mut out = Table::new("sweep", &header.iter().map(String::as_str).collect::<Vec<_>>());
    for rec in table.records() {
        out.push_strings(rec);
    }
    Ok(Outcome {
        checks: vec![
            Check::at_most("differing_widths", differing as f64, th.get("differing_widths")),
            Check::at_most("failed_rows", table.failures() as f64, th.get("failed_rows")),
        ],
        tables: vec![out],
    })
}
