use super::{Observable, SweepPlan, Task};
use crate::bulk::{bulk_density, equilibrium_current_check, pressure_density_magnetization};
use crate::edge::EdgeSystem;
use crate::error::Result;
use crate::landau::{landau_thermo, LandauParams};
use crate::model::{DisorderConfig, DisorderSpec, Grid, ModelParams};
use crate::spectral::DistributionSpec;

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Disorder sample of a task, or `None` for a clean model.
pub fn task_disorder(
    plan: &SweepPlan,
    task: &Task,
    params: &ModelParams,
    grid: &Grid,
) -> Result<Option<DisorderConfig>> {
    if params.is_clean() {
        return Ok(None);
    }
    DisorderSpec {
        seed: task.seed,
        law: plan.disorder.law,
        bump: plan.disorder.bump,
        x1_period: plan.disorder.x1_period,
    }
    .sample(grid)
    .map(Some)
}

fn bulk_grid(plan: &SweepPlan) -> Result<Grid> {
    let g = plan.geometry;
    Grid::bulk_cylinder(g.h, g.circumference, g.height)
}

/// Closed-form Landau thermodynamics: `p, n, m, m_circ, m_res, sigma_H`.
pub struct LandauObservable;

impl Observable for LandauObservable {
    fn name(&self) -> &str {
        "landau"
    }
    fn columns(&self) -> Vec<String> {
        cols(&["p", "n", "m", "m_circ", "m_res", "sigma_H"])
    }
    fn evaluate(&self, _: &SweepPlan, t: &Task) -> Result<Vec<f64>> {
        let th = landau_thermo(&LandauParams::new(t.b, t.mu, t.temperature)?);
        Ok(vec![th.p, th.n, th.m, th.m_circ, th.m_res, th.sigma_h])
    }
}

/// `B_F` for Fermi–Dirac `F` on the central cell of a bulk cylinder.
pub struct BulkDensityObservable;

impl Observable for BulkDensityObservable {
    fn name(&self) -> &str {
        "bulk_density"
    }
    fn columns(&self) -> Vec<String> {
        cols(&["value"])
    }
    fn evaluate(&self, plan: &SweepPlan, t: &Task) -> Result<Vec<f64>> {
        let p = t.params(&plan.base);
        let grid = bulk_grid(plan)?;
        let d = task_disorder(plan, t, &p, &grid)?;
        let f = DistributionSpec::fd(t.mu, t.temperature);
        Ok(vec![bulk_density(&f, &p, &grid, d.as_ref())?.value])
    }
}

/// Pressure, density and magnetization `−∂_b p`.
pub struct PressureObservable;

impl Observable for PressureObservable {
    fn name(&self) -> &str {
        "pressure"
    }
    fn columns(&self) -> Vec<String> {
        cols(&["p", "n", "m"])
    }
    fn evaluate(&self, plan: &SweepPlan, t: &Task) -> Result<Vec<f64>> {
        let p = t.params(&plan.base);
        let grid = bulk_grid(plan)?;
        let d = task_disorder(plan, t, &p, &grid)?;
        let th = pressure_density_magnetization(&p, &grid, d.as_ref())?;
        Ok(vec![th.p, th.n, th.m])
    }
}

/// Total edge current with Fermi–Dirac weight (the current of `F = gcp`).
pub struct EdgeCurrentObservable;

impl Observable for EdgeCurrentObservable {
    fn name(&self) -> &str {
        "edge_current"
    }
    fn columns(&self) -> Vec<String> {
        cols(&["I", "operator_path"])
    }
    fn evaluate(&self, plan: &SweepPlan, t: &Task) -> Result<Vec<f64>> {
        let p = t.params(&plan.base);
        let g = plan.geometry;
        let grid = Grid::edge_cylinder(g.h, g.circumference, g.height)?;
        let d = task_disorder(plan, t, &p, &grid)?;
        let sys = EdgeSystem::build(&grid, &p, d.as_ref(), None)?;
        let i = sys.total_current(&DistributionSpec::fd(t.mu, t.temperature), &plan.cutoff, t.l)?;
        Ok(vec![i.value, i.operator_path])
    }
}

/// Unit-cell equilibrium current in both directions for the `F = gcp` weight.
pub struct EquilibriumCurrentObservable;

impl Observable for EquilibriumCurrentObservable {
    fn name(&self) -> &str {
        "equilibrium_current"
    }
    fn columns(&self) -> Vec<String> {
        cols(&["x1", "x2", "scale"])
    }
    fn evaluate(&self, plan: &SweepPlan, t: &Task) -> Result<Vec<f64>> {
        let p = t.params(&plan.base);
        let grid = bulk_grid(plan)?;
        let d = task_disorder(plan, t, &p, &grid)?;
        let ens: Vec<DisorderConfig> = d.into_iter().collect();
        let c = equilibrium_current_check(&DistributionSpec::gcp(t.mu, t.temperature), &p, &grid, &ens)?;
        Ok(vec![c.x1.value, c.x2.value, c.scale])
    }
}
