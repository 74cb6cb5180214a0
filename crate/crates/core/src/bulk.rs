//! Bulk observables: generalized IDOS, strip density, thermodynamics and the
//! vanishing equilibrium current.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::model::{DisorderConfig, DisorderSpec, Direction, Grid, ModelParams};
use crate::solve::Solved;
use crate::spectral::{DistributionSpec, SiteMask};

/// Default step for derivatives in b and μ.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Cells closer than this many magnetic lengths to a wall are flagged.
pub const WALL_MARGIN: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    SingleSample,
    EnsembleMean,
    SpatialMean,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SingleSample => "single_sample",
            Self::EnsembleMean => "ensemble_mean",
            Self::SpatialMean => "spatial_mean",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkReport {
    pub value: f64,
    pub estimator_kind: EstimatorKind,
    pub n_samples: usize,
    pub std_error: f64,
    pub geometry: String,
    pub params: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Mean and standard error of the mean (sample std / √N); the error is zero for N = 1.
pub fn mean_and_error(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyGroup("no samples".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

impl BulkReport {
    pub fn single(value: f64, grid: &Grid, params: &ModelParams) -> Self {
        Self {
            value,
            estimator_kind: EstimatorKind::SingleSample,
            n_samples: 1,
            std_error: 0.0,
            geometry: grid.fingerprint(),
            params: params.fingerprint(),
            warnings: Vec::new(),
        }
    }

    /// Mean report over samples; a single sample degrades to `SingleSample`.
    pub fn from_samples(
        kind: EstimatorKind,
        values: &[f64],
        grid: &Grid,
        params: &ModelParams,
    ) -> Result<Self> {
        let (value, std_error) = mean_and_error(values)?;
        if !value.is_finite() {
            return Err(Error::NonFinite("bulk sample mean".into()));
        }
        let estimator_kind = if values.len() == 1 {
            EstimatorKind::SingleSample
        } else {
            kind
        };
        Ok(Self {
            value,
            estimator_kind,
            n_samples: values.len(),
            std_error,
            geometry: grid.fingerprint(),
            params: params.fingerprint(),
            warnings: Vec::new(),
        })
    }
}

/// Lower x₂ edge of the unit cell centred between the walls.
pub fn central_cell_origin(grid: &Grid) -> f64 {
    let mid = 0.5 * (grid.x2_offset() + grid.x2_max());
    let lo = mid - 0.5;
    // Snap to a row so the cell holds exactly 1/h rows.
    grid.x2_offset() + ((lo - grid.x2_offset()) / grid.spacing()).ceil() * grid.spacing()
}

fn wall_warnings(grid: &Grid, params: &ModelParams, x2_lo: f64, x2_hi: f64) -> Vec<String> {
    let d = grid.wall_distance(x2_lo).min(grid.wall_distance(x2_hi));
    let need = WALL_MARGIN * params.magnetic_length();
    if d < need {
        vec![format!(
            "evaluation cell is {d:.3} from a wall, less than {WALL_MARGIN} magnetic lengths ({need:.3})"
        )]
    } else {
        Vec::new()
    }
}

/// `Tr(χ F(H))/|cell|` over the unit cell starting at `x2_lo`.
pub fn cell_density(solved: &Solved, f: &DistributionSpec, x2_lo: f64) -> Result<f64> {
    let mask = SiteMask::unit_cell(solved.grid(), x2_lo);
    solved.trace(&mask, |x| f.eval(x))
}

fn check_bulk_grid(grid: &Grid) -> Result<()> {
    if !grid.is_periodic() {
        return config("bulk observables need a grid periodic in x1");
    }
    if grid.circumference().unwrap() < 1.0 - 1e-9 {
        return config("circumference must cover one unit cell");
    }
    Ok(())
}

/// Generalized IDOS `B_F` on the central unit cell of a bulk cylinder.
pub fn bulk_density(
    f: &DistributionSpec,
    params: &ModelParams,
    grid: &Grid,
    disorder: Option<&DisorderConfig>,
) -> Result<BulkReport> {
    f.validate()?;
    check_bulk_grid(grid)?;
    let solved = Solved::build(grid, params, disorder, None, false)?;
    let lo = central_cell_origin(grid);
    let value = cell_density(&solved, f, lo)?;
    let mut report = BulkReport::single(value, grid, params);
    report.warnings = wall_warnings(grid, params, lo, lo + 1.0);
    Ok(report)
}

/// Strip density `(1/L)·Tr(χ_{[0,1)×[0,L)} F(H^E))` on an edge grid.
pub fn strip_density_rho(
    f: &DistributionSpec,
    params: &ModelParams,
    l_strip: f64,
    grid: &Grid,
    disorder: Option<&DisorderConfig>,
) -> Result<BulkReport> {
    f.validate()?;
    check_bulk_grid(grid)?;
    if !(l_strip > 0.0) || l_strip > grid.x2_max() / 3.0 + 1e-9 {
        return config(format!(
            "strip height {l_strip} must lie in (0, H_top/3 = {}]",
            grid.x2_max() / 3.0
        ));
    }
    let solved = Solved::build(grid, params, disorder, None, true)?;
    strip_density_of(&solved, f, l_strip)
}

pub fn strip_density_of(solved: &Solved, f: &DistributionSpec, l_strip: f64) -> Result<BulkReport> {
    let grid = solved.grid();
    let mask = SiteMask::rectangle(grid, 0.0, 1.0, 0.0, l_strip);
    let value = solved.trace(&mask, |x| f.eval(x))? / l_strip;
    Ok(BulkReport::single(value, grid, solved.ham.params()))
}

/// Fourth-order central difference with a Richardson pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticDerivative {
    /// Estimate at the finer step.
    pub value: f64,
    pub coarse: f64,
    pub fine: f64,
    /// `|fine − coarse|/15`, the Richardson step-error estimate.
    pub step_error: f64,
    pub delta: f64,
}

pub fn central_difference4(
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
    x0: f64,
    delta: f64,
) -> Result<f64> {
    let offsets = [2.0, 1.0, -1.0, -2.0];
    let vals = offsets
        .par_iter()
        .map(|o| f(x0 + o * delta))
        .collect::<Result<Vec<_>>>()?;
    let d = (-vals[0] + 8.0 * vals[1] - 8.0 * vals[2] + vals[3]) / (12.0 * delta);
    if !d.is_finite() {
        return Err(Error::NonFinite(format!("difference quotient at {x0}")));
    }
    Ok(d)
}

pub fn magnetic_derivative(
    observable: &(dyn Fn(f64) -> Result<f64> + Sync),
    b0: f64,
    delta: f64,
) -> Result<MagneticDerivative> {
    if !(delta > 0.0 && delta.is_finite()) {
        return config(format!("step must be positive, got {delta}"));
    }
    let coarse = central_difference4(observable, b0, delta)?;
    let fine = central_difference4(observable, b0, 0.5 * delta)?;
    Ok(MagneticDerivative {
        value: fine,
        coarse,
        fine,
        step_error: (fine - coarse).abs() / 15.0,
        delta,
    })
}

/// `b ↦ B_F(b)` on a fixed grid and disorder sample.
pub fn density_in_b<'a>(
    f: &'a DistributionSpec,
    params: &'a ModelParams,
    grid: &'a Grid,
    disorder: Option<&'a DisorderConfig>,
) -> impl Fn(f64) -> Result<f64> + Sync + 'a {
    move |b| Ok(bulk_density(f, &params.with_b(b), grid, disorder)?.value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thermodynamics {
    pub p: f64,
    pub n: f64,
    /// `∂_𝔅 p = −∂_b p`.
    pub m: f64,
    pub dp_db: f64,
    pub dp_dfield: f64,
    /// `∂_μ p` by differencing, for comparison with `n`.
    pub n_from_pressure: f64,
    pub m_step_error: f64,
    pub warnings: Vec<String>,
}

pub fn pressure_density_magnetization(
    params: &ModelParams,
    grid: &Grid,
    disorder: Option<&DisorderConfig>,
) -> Result<Thermodynamics> {
    if !(params.temperature > 0.0) {
        return config("pressure needs T > 0");
    }
    check_bulk_grid(grid)?;
    let gcp = DistributionSpec::gcp(params.mu, params.temperature);
    let fd = DistributionSpec::fd(params.mu, params.temperature);
    let solved = Solved::build(grid, params, disorder, None, false)?;
    let lo = central_cell_origin(grid);
    let p = -cell_density(&solved, &gcp, lo)?;
    let n = cell_density(&solved, &fd, lo)?;
    let pressure_mu = |mu: f64| Ok(-cell_density(&solved, &gcp.with_mu(mu), lo)?);
    let n_from_pressure = central_difference4(&pressure_mu, params.mu, DEFAULT_STEP)?;
    let pressure_b = |b: f64| Ok(-bulk_density(&gcp, &params.with_b(b), grid, disorder)?.value);
    let d = magnetic_derivative(&pressure_b, params.b, DEFAULT_STEP)?;
    Ok(Thermodynamics {
        p,
        n,
        m: -d.value,
        dp_db: d.value,
        dp_dfield: -d.value,
        n_from_pressure,
        m_step_error: d.step_error,
        warnings: wall_warnings(grid, params, lo, lo + 1.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentCheck {
    pub x1: BulkReport,
    pub x2: BulkReport,
    /// Typical magnitude of the summed terms, `Σ_x Σ_y |J_xy|·|F'(H)_yx|` over the cell.
    pub scale: f64,
}

fn cell_current(
    solved: &Solved,
    weight: &DistributionSpec,
    dir: Direction,
    x2_lo: f64,
) -> Result<(f64, f64)> {
    let cd = solved.current_diagonal(dir, |x| weight.eval(x))?;
    let folded = SiteMask::unit_cell(solved.grid(), x2_lo).fold(&solved.stencil.layout)?;
    let v = crate::spectral::mask::weighted_sum(&cd.values, &folded)?;
    let s: f64 = cd.scale.iter().zip(&folded).map(|(a, w)| a * w).sum();
    Ok((v.re, s))
}

/// `Tr(χ J_d F'(H))` on the central unit cell, for each sample (or the clean model).
pub fn equilibrium_current_check(
    f: &DistributionSpec,
    params: &ModelParams,
    grid: &Grid,
    ensemble: &[DisorderConfig],
) -> Result<CurrentCheck> {
    f.validate()?;
    check_bulk_grid(grid)?;
    let weight = f
        .derivative_spec()
        .ok_or_else(|| Error::Config(format!("{} has no derivative distribution", f.name())))?;
    let lo = central_cell_origin(grid);
    let one = |d: Option<&DisorderConfig>| -> Result<[(f64, f64); 2]> {
        let s = Solved::build(grid, params, d, None, false)?;
        Ok([
            cell_current(&s, &weight, Direction::X1, lo)?,
            cell_current(&s, &weight, Direction::X2, lo)?,
        ])
    };
    let rows: Vec<[(f64, f64); 2]> = if ensemble.is_empty() {
        vec![one(None)?]
    } else {
        ensemble
            .par_iter()
            .map(|d| one(Some(d)))
            .collect::<Result<_>>()?
    };
    let x1: Vec<f64> = rows.iter().map(|r| r[0].0).collect();
    let x2: Vec<f64> = rows.iter().map(|r| r[1].0).collect();
    let scale = rows.iter().map(|r| r[0].1.max(r[1].1)).sum::<f64>() / rows.len() as f64;
    let warnings = wall_warnings(grid, params, lo, lo + 1.0);
    let mut r1 = BulkReport::from_samples(EstimatorKind::EnsembleMean, &x1, grid, params)?;
    let mut r2 = BulkReport::from_samples(EstimatorKind::EnsembleMean, &x2, grid, params)?;
    r1.warnings.clone_from(&warnings);
    r2.warnings = warnings;
    Ok(CurrentCheck { x1: r1, x2: r2, scale })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialEnsemble {
    pub spatial: BulkReport,
    pub ensemble: BulkReport,
    pub difference: f64,
    pub combined_std_error: f64,
}

/// Mean over `M` vertically stacked unit cells of one sample against the mean
/// over `M` samples of the central cell, `M = seeds.len()`.
///
/// `template` fixes the law and bump; its seed is replaced by each entry of `seeds`.
pub fn spatial_vs_ensemble(
    f: &DistributionSpec,
    params: &ModelParams,
    grid: &Grid,
    template: &DisorderSpec,
    seeds: &[u64],
) -> Result<SpatialEnsemble> {
    f.validate()?;
    check_bulk_grid(grid)?;
    let m = seeds.len();
    if m == 0 {
        return Err(Error::EmptyGroup("spatial_vs_ensemble needs at least one seed".into()));
    }
    let sample = |seed: u64| -> Result<Option<DisorderConfig>> {
        if params.is_clean() {
            return Ok(None);
        }
        DisorderSpec {
            seed,
            ..template.clone()
        }
        .sample(grid)
        .map(Some)
    };
    let centre = central_cell_origin(grid);
    // Cells j = 0..M are stacked symmetrically about the centre; M = 1 is the central cell.
    let first = centre - ((m - 1) / 2) as f64;
    let d0 = sample(seeds[0])?;
    let s0 = Solved::build(grid, params, d0.as_ref(), None, false)?;
    let spatial_vals = (0..m)
        .map(|j| cell_density(&s0, f, first + j as f64))
        .collect::<Result<Vec<_>>>()?;
    let ensemble_vals = seeds
        .par_iter()
        .enumerate()
        .map(|(i, &seed)| {
            if i == 0 {
                return cell_density(&s0, f, first + ((m - 1) / 2) as f64);
            }
            let d = sample(seed)?;
            let s = Solved::build(grid, params, d.as_ref(), None, false)?;
            cell_density(&s, f, centre)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut spatial =
        BulkReport::from_samples(EstimatorKind::SpatialMean, &spatial_vals, grid, params)?;
    spatial.warnings = wall_warnings(grid, params, first, first + m as f64);
    let ensemble =
        BulkReport::from_samples(EstimatorKind::EnsembleMean, &ensemble_vals, grid, params)?;
    let combined = spatial.std_error.hypot(ensemble.std_error);
    Ok(SpatialEnsemble {
        difference: spatial.value - ensemble.value,
        combined_std_error: combined,
        spatial,
        ensemble,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landau::{landau_thermo, LandauParams};

    fn small() -> (Grid, ModelParams) {
        (
            Grid::bulk_cylinder(0.25, 8.0, 6.0).unwrap(),
            ModelParams::landau(1.0, 1.0, 0.1),
        )
    }

    #[test]
    fn completeness_sum_rule() {
        let (g, p) = small();
        let r = bulk_density(&DistributionSpec::Constant { value: 1.0 }, &p, &g, None).unwrap();
        assert!((r.value - 1.0 / (0.25 * 0.25)).abs() < 1e-10);
        assert_eq!(r.estimator_kind, EstimatorKind::SingleSample);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn cell_snaps_to_rows() {
        let g = Grid::bulk_cylinder(0.2, 4.0, 3.0).unwrap();
        let lo = central_cell_origin(&g);
        assert!((lo + 0.4).abs() < 1e-12);
        let mask = SiteMask::unit_cell(&g, lo);
        assert!((mask.area(0.2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn near_wall_cell_is_flagged() {
        let g = Grid::bulk_cylinder(0.25, 4.0, 2.0).unwrap();
        let r = bulk_density(&DistributionSpec::fd(1.0, 0.1), &ModelParams::landau(1.0, 1.0, 0.1), &g, None)
            .unwrap();
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn one_filled_level() {
        let (g, p) = small();
        let r = bulk_density(&DistributionSpec::fd(1.0, 0.1), &p, &g, None).unwrap();
        let want = landau_thermo(&LandauParams::new(1.0, 1.0, 0.1).unwrap()).n;
        assert!((r.value - want).abs() / want < 0.01, "{} vs {want}", r.value);
    }

    #[test]
    fn derivative_is_exact_on_quartics() {
        let f = |b: f64| Ok(b * b);
        let d = magnetic_derivative(&f, 3.0, 1e-3).unwrap();
        assert!((d.value - 6.0).abs() < 1e-8);
        let q = |b: f64| Ok(b.powi(4) - b);
        let d = magnetic_derivative(&q, 0.5, 1e-2).unwrap();
        assert!((d.value - (4.0 * 0.125 - 1.0)).abs() < 1e-10);
        let c = |_: f64| Ok(2.5);
        assert_eq!(magnetic_derivative(&c, 1.0, 1e-3).unwrap().value, 0.0);
        assert!(magnetic_derivative(&c, 1.0, 0.0).is_err());
    }

    #[test]
    fn nonfinite_observable_propagates() {
        let f = |b: f64| Ok(if b > 1.0 { f64::NAN } else { b });
        assert!(magnetic_derivative(&f, 1.0, 1e-3).is_err());
    }

    #[test]
    fn thermodynamics_consistency() {
        let (g, p) = small();
        let t = pressure_density_magnetization(&p, &g, None).unwrap();
        assert!((t.n - t.n_from_pressure).abs() < 1e-4);
        assert_eq!(t.dp_dfield, -t.dp_db);
        assert_eq!(t.m, t.dp_dfield);
        assert!(t.m_step_error < 1e-6);
        assert!(pressure_density_magnetization(&p.with_temperature(0.0), &g, None).is_err());
    }

    #[test]
    fn strip_height_is_bounded() {
        let g = Grid::edge_cylinder(0.25, 4.0, 12.0).unwrap();
        let (_, p) = small();
        let f = DistributionSpec::Constant { value: 1.0 };
        assert!(strip_density_rho(&f, &p, 4.5, &g, None).is_err());
        let r = strip_density_rho(&f, &p, 4.0, &g, None).unwrap();
        assert!((r.value - 16.0).abs() < 1e-10);
    }

    #[test]
    fn clean_equilibrium_current_vanishes() {
        let (g, p) = small();
        let c = equilibrium_current_check(&DistributionSpec::gcp(1.0, 0.1), &p, &g, &[]).unwrap();
        assert!(c.scale > 0.0);
        assert!(c.x1.value.abs() <= 1e-6 * c.scale);
        assert!(c.x2.value.abs() <= 1e-6 * c.scale);
    }

    #[test]
    fn wall_cell_carries_current() {
        let g = Grid::bulk_cylinder(0.25, 4.0, 6.0).unwrap();
        let p = ModelParams::landau(1.0, 1.0, 0.1);
        let s = Solved::build(&g, &p, None, None, false).unwrap();
        let w = DistributionSpec::fd(1.0, 0.1);
        let (v, scale) = cell_current(&s, &w, Direction::X1, -6.0).unwrap();
        assert!(v.abs() > 1e-3 * scale, "{v} vs {scale}");
    }

    #[test]
    fn spatial_mean_guard_cases() {
        let (g, p) = small();
        let t = DisorderSpec {
            seed: 0,
            law: Default::default(),
            bump: Default::default(),
            x1_period: Some(1),
        };
        let f = DistributionSpec::fd(1.0, 0.1);
        let r = spatial_vs_ensemble(&f, &p, &g, &t, &[3]).unwrap();
        assert_eq!(r.difference, 0.0);
        let mut pd = p;
        pd.lambda_dis = 0.5;
        let r = spatial_vs_ensemble(&f, &pd, &g, &t, &[9]).unwrap();
        assert_eq!(r.difference, 0.0);
        assert!(spatial_vs_ensemble(&f, &p, &g, &t, &[]).is_err());
    }
}
