//! Edge current profiles, the cutoff-regularized total edge current and the
//! quantities derived from it.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::landau::{landau_thermo, LandauParams};
use crate::model::{DisorderConfig, Direction, Grid, ModelParams, NearEdgePotential};
use crate::solve::Solved;
use crate::spectral::{mask, DistributionSpec, SiteMask, SmoothOrder};

/// Cutoff `g` on `[0, 1]` with `g(0) = 1` and `g(1) = 0`; extended by 1 below
/// and 0 above.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffSpec {
    Linear,
    Smoothstep {
        #[serde(default)]
        order: SmoothOrder,
    },
    /// Monotone cubic Hermite interpolation through `(t, g)` nodes (C¹).
    UserTable { t: Vec<f64>, g: Vec<f64> },
}

impl Default for CutoffSpec {
    fn default() -> Self {
        Self::Smoothstep {
            order: SmoothOrder::Quintic,
        }
    }
}

impl std::str::FromStr for CutoffSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "smoothstep" => Ok(Self::default()),
            other => config(format!("unknown cutoff `{other}` (linear|smoothstep)")),
        }
    }
}

impl CutoffSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Smoothstep { .. } => "smoothstep",
            Self::UserTable { .. } => "user_table",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Self::UserTable { t, g } = self else {
            return Ok(());
        };
        if t.len() != g.len() || t.len() < 2 {
            return config("cutoff table needs at least two (t, g) pairs of equal length");
        }
        if t.iter().chain(g).any(|v| !v.is_finite()) {
            return config("cutoff table entries must be finite");
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return config("cutoff table abscissae must increase strictly");
        }
        if t[0] != 0.0 || g[0] != 1.0 || *t.last().unwrap() != 1.0 || *g.last().unwrap() != 0.0 {
            return config("cutoff table must satisfy g(0) = 1 and g(1) = 0 exactly");
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x >= 1.0 {
            return 0.0;
        }
        match self {
            Self::Linear => 1.0 - x,
            Self::Smoothstep { order } => 1.0 - order.step(x),
            Self::UserTable { t, g } => hermite(t, g, x),
        }
    }
}

/// Fritsch–Carlson slopes keep the interpolant monotone on monotone data.
fn hermite(t: &[f64], g: &[f64], x: f64) -> f64 {
    let n = t.len();
    let secant: Vec<f64> = (0..n - 1).map(|i| (g[i + 1] - g[i]) / (t[i + 1] - t[i])).collect();
    let slope = |i: usize| -> f64 {
        if i == 0 {
            return secant[0];
        }
        if i == n - 1 {
            return secant[n - 2];
        }
        let (a, b) = (secant[i - 1], secant[i]);
        if a * b <= 0.0 {
            0.0
        } else {
            let (w1, w2) = (2.0 * (t[i + 1] - t[i]) + (t[i] - t[i - 1]), (t[i + 1] - t[i]) + 2.0 * (t[i] - t[i - 1]));
            (w1 + w2) / (w1 / a + w2 / b)
        }
    };
    let i = t.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let hseg = t[i + 1] - t[i];
    let s = (x - t[i]) / hseg;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * g[i]
        + (s3 - 2.0 * s2 + s) * hseg * slope(i)
        + (-2.0 * s3 + 3.0 * s2) * g[i + 1]
        + (s3 - s2) * hseg * slope(i + 1)
}

/// Which Dirichlet wall carries the physical edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSide {
    /// Edge at x₂ = 0, material above.
    Bottom,
    /// Edge at x₂ = 0, material below.
    Top,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentProfile {
    /// Distance from the edge row.
    pub x2: Vec<f64>,
    pub j1e: Vec<f64>,
    pub j1e_imag: Vec<f64>,
    /// Bulk profile at the same points, tiled from one period; empty when not computed.
    pub j1b: Vec<f64>,
    pub spacing: f64,
    pub params: String,
    pub geometry: String,
}

impl CurrentProfile {
    pub fn peak(&self) -> f64 {
        self.j1e.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Averages of `j1E` over consecutive windows of the given length.
    pub fn window_averages(&self, start: f64, width: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut lo = start;
        let top = self.x2.last().copied().unwrap_or(0.0);
        while lo + width <= top + 1e-9 {
            let (mut s, mut c) = (0.0, 0usize);
            for (x, j) in self.x2.iter().zip(&self.j1e) {
                if *x >= lo - 1e-9 && *x < lo + width - 1e-9 {
                    s += j;
                    c += 1;
                }
            }
            if c > 0 {
                out.push((lo, s / c as f64));
            }
            lo += width;
        }
        out
    }

    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x2", "j1E", "j1B"])?;
        for (i, x) in self.x2.iter().enumerate() {
            let jb = self.j1b.get(i).map(|v| v.to_string()).unwrap_or_default();
            w.write_record([x.to_string(), self.j1e[i].to_string(), jb])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Total edge current from both evaluation paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCurrent {
    pub value: f64,
    pub operator_path: f64,
    pub imag: f64,
    pub l: f64,
}

/// A solved edge cylinder and the orientation needed to measure distances from its edge.
pub struct EdgeSystem {
    pub solved: Solved,
    pub side: EdgeSide,
}

impl EdgeSystem {
    /// Edge at x₂ = 0 with material above, on an edge cylinder.
    pub fn build(
        grid: &Grid,
        params: &ModelParams,
        disorder: Option<&DisorderConfig>,
        near_edge: Option<&NearEdgePotential>,
    ) -> Result<Self> {
        Ok(Self {
            solved: Solved::build(grid, params, disorder, near_edge, true)?,
            side: EdgeSide::Bottom,
        })
    }

    /// Mirror image: rows on `[−top, 0]`, edge at the top wall.
    pub fn build_top(h: f64, circumference: f64, top: f64, params: &ModelParams) -> Result<Self> {
        let g = Grid::edge_cylinder(h, circumference, top)?;
        let g = g.shifted(-g.x2_max());
        let g = Grid::new(&crate::model::GridSpec {
            bc_x2: crate::model::BoundaryX2::DirichletBoth,
            ..g.spec()
        })?;
        Ok(Self {
            solved: Solved::build(&g, params, None, None, false)?,
            side: EdgeSide::Top,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.solved.grid()
    }

    pub fn depth(&self) -> f64 {
        self.grid().x2_max() - self.grid().x2_offset()
    }

    fn distance(&self, x2: f64) -> f64 {
        match self.side {
            EdgeSide::Bottom => x2 - self.grid().x2_offset(),
            EdgeSide::Top => self.grid().x2_max() - x2,
        }
    }

    fn cell_length(&self) -> f64 {
        let l = self.solved.stencil.layout;
        l.cols as f64 * l.spacing
    }

    /// Cell-0 diagonal of `J₁·w(H^E)`.
    pub fn current_diagonal(&self, weight: &DistributionSpec) -> Result<Vec<c64>> {
        weight.validate()?;
        Ok(self
            .solved
            .current_diagonal(Direction::X1, |x| weight.eval(x))?
            .values)
    }

    /// Row profile of a precomputed diagonal: x₁-average over one fiber cell.
    pub fn profile_from(&self, diag: &[c64]) -> CurrentProfile {
        let layout = self.solved.stencil.layout;
        let h = layout.spacing;
        let norm = 1.0 / (self.cell_length() * h);
        let mut re = vec![0.0; layout.rows];
        let mut im = vec![0.0; layout.rows];
        for (a, d) in diag.iter().enumerate() {
            let (_, i2) = layout.local_coords(a);
            re[i2] += d.re * norm;
            im[i2] += d.im * norm;
        }
        let mut x2: Vec<f64> = (0..layout.rows).map(|r| self.distance(layout.x2(r))).collect();
        if self.side == EdgeSide::Top {
            x2.reverse();
            re.reverse();
            im.reverse();
        }
        CurrentProfile {
            x2,
            j1e: re,
            j1e_imag: im,
            j1b: Vec::new(),
            spacing: h,
            params: self.solved.ham.params().fingerprint(),
            geometry: self.grid().fingerprint(),
        }
    }

    pub fn profile(&self, weight: &DistributionSpec) -> Result<CurrentProfile> {
        Ok(self.profile_from(&self.current_diagonal(weight)?))
    }

    fn check_strip(&self, cutoff: &CutoffSpec, l: f64) -> Result<()> {
        cutoff.validate()?;
        let limit = self.depth() / 3.0;
        if !(l > 0.0) || l > limit + 1e-9 {
            return config(format!("cutoff length {l} must lie in (0, H_top/3 = {limit}]"));
        }
        Ok(())
    }

    /// `−(1/|cell|)·Tr(χ_g J₁ w(H^E))` with χ_g = g(dist/L) on one fiber cell.
    pub fn operator_current(&self, diag: &[c64], cutoff: &CutoffSpec, l: f64) -> Result<c64> {
        self.check_strip(cutoff, l)?;
        let cell = self.cell_length();
        let eps = 1e-9 * self.grid().spacing();
        let m = SiteMask::from_fn(self.grid(), |x1, x2| {
            if x1 < cell - eps {
                cutoff.eval(self.distance(x2) / l)
            } else {
                0.0
            }
        });
        let folded = m.fold(&self.solved.stencil.layout)?;
        Ok(-mask::weighted_sum(diag, &folded)? / cell)
    }

    /// Both paths for one weight and cutoff.
    pub fn total_current(
        &self,
        weight: &DistributionSpec,
        cutoff: &CutoffSpec,
        l: f64,
    ) -> Result<EdgeCurrent> {
        let diag = self.current_diagonal(weight)?;
        self.total_from(&diag, cutoff, l)
    }

    pub fn total_from(&self, diag: &[c64], cutoff: &CutoffSpec, l: f64) -> Result<EdgeCurrent> {
        let op = self.operator_current(diag, cutoff, l)?;
        let value = total_edge_current(&self.profile_from(diag), cutoff, l)?;
        Ok(EdgeCurrent {
            value,
            operator_path: op.re,
            imag: op.im,
            l,
        })
    }
}

/// `−Σ_{x₂≤L} g(x₂/L)·j1E(x₂)·h`.
pub fn total_edge_current(profile: &CurrentProfile, cutoff: &CutoffSpec, l: f64) -> Result<f64> {
    cutoff.validate()?;
    let depth = profile.x2.last().copied().unwrap_or(0.0) - profile.x2.first().copied().unwrap_or(0.0);
    if !(l > 0.0) || l > depth / 3.0 + 1e-9 {
        return config(format!("cutoff length {l} must lie in (0, H_top/3 = {}]", depth / 3.0));
    }
    let v: f64 = profile
        .x2
        .iter()
        .zip(&profile.j1e)
        .map(|(x, j)| -cutoff.eval(x / l) * j * profile.spacing)
        .sum();
    if !v.is_finite() {
        return Err(Error::NonFinite("edge current".into()));
    }
    Ok(v)
}

/// `I^E` from the anti-derivative `J(x₂) = Σ_{x' ≤ x₂} j1E·h`: the current is
/// `−J` once `J` has settled, read off as its mean over `[lo, hi)`. The window
/// must sit in the interior, past the edge layer and short of any far wall.
pub fn antiderivative_current(profile: &CurrentProfile, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return config(format!("settling window [{lo}, {hi}) is empty"));
    }
    let mut acc = 0.0;
    let (mut s, mut c) = (0.0, 0usize);
    for (x, j) in profile.x2.iter().zip(&profile.j1e) {
        acc += j * profile.spacing;
        if *x >= lo - 1e-9 && *x < hi - 1e-9 {
            s += acc;
            c += 1;
        }
    }
    if c == 0 {
        return config(format!("settling window [{lo}, {hi}) holds no grid rows"));
    }
    Ok(-s / c as f64)
}

/// Rows of the bulk surrogate's central period, tiled onto `x2`.
pub fn bulk_profile(bulk: &Solved, weight: &DistributionSpec, x2: &[f64]) -> Result<Vec<f64>> {
    let cd = bulk.current_diagonal(Direction::X1, |x| weight.eval(x))?;
    let layout = bulk.stencil.layout;
    let h = layout.spacing;
    let norm = 1.0 / (layout.cols as f64 * h * h);
    let mut rows = vec![0.0; layout.rows];
    for (a, d) in cd.values.iter().enumerate() {
        rows[layout.local_coords(a).1] += d.re * norm;
    }
    let grid = bulk.grid();
    let lo = crate::bulk::central_cell_origin(grid);
    Ok(x2
        .iter()
        .map(|x| {
            let y = lo + (x - lo).rem_euclid(1.0);
            grid.row_of(y).map_or(0.0, |r| rows[r])
        })
        .collect())
}

/// `j1E` for fd(H^E) together with the tiled bulk profile of the same model
/// without disorder.
pub fn current_profile(
    params: &ModelParams,
    grid: &Grid,
    disorder: Option<&DisorderConfig>,
) -> Result<CurrentProfile> {
    if !(params.temperature > 0.0) {
        return config("current profile needs T > 0");
    }
    let fd = DistributionSpec::fd(params.mu, params.temperature);
    let sys = EdgeSystem::build(grid, params, disorder, None)?;
    let mut prof = sys.profile(&fd)?;
    let c = grid
        .circumference()
        .ok_or_else(|| Error::Config("edge grid must be periodic in x1".into()))?;
    let half = (12.0 * params.magnetic_length()).max(4.0);
    let bulk_grid = Grid::bulk_cylinder(grid.spacing(), c, half)?;
    let bulk = Solved::build(&bulk_grid, params, None, None, false)?;
    prof.j1b = bulk_profile(&bulk, &fd, &prof.x2)?;
    Ok(prof)
}

pub fn transport_edge_current(i_total: f64, m_circ: f64) -> f64 {
    i_total - m_circ
}

/// `−∂_μ(I^E − m_circ)` on the clean Landau model, with `m_circ` from the
/// analytic oracle. One diagonalization serves every μ.
pub fn edge_conductance(
    sys: &EdgeSystem,
    cutoff: &CutoffSpec,
    l: f64,
    delta_mu: f64,
) -> Result<f64> {
    let p = *sys.solved.ham.params();
    if !(p.temperature > 0.0) {
        return config("edge conductance needs T > 0");
    }
    if !p.is_clean() || p.v_amp != 0.0 || p.a_periodic_amp != 0.0 {
        return config("m_circ is only available for the clean Landau model");
    }
    if !(delta_mu > 0.0 && delta_mu.is_finite()) {
        return config("delta_mu must be positive");
    }
    let tr = |mu: f64| -> Result<f64> {
        let i = sys.total_current(&DistributionSpec::fd(mu, p.temperature), cutoff, l)?;
        let lp = LandauParams::new(p.b, mu, p.temperature)?;
        Ok(transport_edge_current(i.value, landau_thermo(&lp).m_circ))
    };
    let d = (tr(p.mu + delta_mu)? - tr(p.mu - delta_mu)?) / (2.0 * delta_mu);
    Ok(-d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceRow {
    pub l: f64,
    pub base: f64,
    pub perturbed: f64,
    pub difference: f64,
    pub relative: f64,
}

/// `I^E` for the current weight `weight` with and without a near-edge
/// potential at each cutoff length.
pub fn edge_perturbation_invariance(
    grid: &Grid,
    params: &ModelParams,
    disorder: Option<&DisorderConfig>,
    w: &NearEdgePotential,
    weight: &DistributionSpec,
    cutoff: &CutoffSpec,
    lengths: &[f64],
) -> Result<Vec<InvarianceRow>> {
    w.validate()?;
    let shortest = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    if lengths.is_empty() || w.support() >= shortest {
        return config(format!(
            "near-edge support {} must stay below the shortest strip {shortest}",
            w.support()
        ));
    }
    let base = EdgeSystem::build(grid, params, disorder, None)?;
    let pert = EdgeSystem::build(grid, params, disorder, Some(w))?;
    let db = base.current_diagonal(weight)?;
    let dp = pert.current_diagonal(weight)?;
    lengths
        .iter()
        .map(|&l| {
            let b = base.total_from(&db, cutoff, l)?.value;
            let p = pert.total_from(&dp, cutoff, l)?.value;
            Ok(InvarianceRow {
                l,
                base: b,
                perturbed: p,
                difference: (p - b).abs(),
                relative: (p - b).abs() / b.abs().max(f64::MIN_POSITIVE),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_edge(b: f64) -> (Grid, ModelParams) {
        (
            Grid::edge_cylinder(0.25, 8.0, 18.0).unwrap(),
            ModelParams::landau(b, 0.7, 0.1),
        )
    }

    #[test]
    fn cutoff_endpoints_and_tables() {
        for c in [CutoffSpec::Linear, CutoffSpec::default()] {
            assert_eq!(c.eval(0.0), 1.0);
            assert_eq!(c.eval(1.0), 0.0);
            assert_eq!(c.eval(-3.0), 1.0);
            assert_eq!(c.eval(7.0), 0.0);
        }
        let t = CutoffSpec::UserTable {
            t: vec![0.0, 0.3, 1.0],
            g: vec![1.0, 0.8, 0.0],
        };
        t.validate().unwrap();
        assert!((t.eval(0.3) - 0.8).abs() < 1e-15);
        let bad = CutoffSpec::UserTable {
            t: vec![0.0, 1.0],
            g: vec![0.9, 0.0],
        };
        assert!(bad.validate().is_err());
        assert!("sharp".parse::<CutoffSpec>().is_err());
        assert_eq!("linear".parse::<CutoffSpec>().unwrap(), CutoffSpec::Linear);
    }

    #[test]
    fn paths_agree() {
        let (g, p) = small_edge(1.0);
        let sys = EdgeSystem::build(&g, &p, None, None).unwrap();
        let fd = DistributionSpec::fd(p.mu, p.temperature);
        for c in [CutoffSpec::Linear, CutoffSpec::default()] {
            let i = sys.total_current(&fd, &c, 6.0).unwrap();
            assert!((i.value - i.operator_path).abs() < 1e-10);
            assert!(i.imag.abs() < 1e-10);
        }
        assert!(sys.total_current(&fd, &CutoffSpec::Linear, 6.5).is_err());
    }

    #[test]
    fn time_reversal_kills_current() {
        let (g, _) = small_edge(0.0);
        let mut p = ModelParams::landau(0.0, 0.7, 0.1);
        p.v_amp = 0.2;
        let sys = EdgeSystem::build(&g, &p, None, None).unwrap();
        let prof = sys.profile(&DistributionSpec::fd(0.7, 0.1)).unwrap();
        assert!(prof.peak() < 1e-8);
        let i = total_edge_current(&prof, &CutoffSpec::default(), 6.0).unwrap();
        assert!(i.abs() < 1e-8);
    }

    #[test]
    fn reflected_edge_flips_sign() {
        let p = ModelParams::landau(1.0, 0.7, 0.1);
        let fd = DistributionSpec::fd(0.7, 0.1);
        let bottom = EdgeSystem::build(&Grid::edge_cylinder(0.25, 8.0, 18.0).unwrap(), &p, None, None)
            .unwrap();
        let top = EdgeSystem::build_top(0.25, 8.0, 18.0, &p).unwrap();
        let c = CutoffSpec::default();
        let ib = bottom.total_current(&fd, &c, 6.0).unwrap();
        let it = top.total_current(&fd, &c, 6.0).unwrap();
        assert!(ib.value.abs() > 1e-3);
        assert!((ib.value + it.value).abs() < 1e-8, "{} {}", ib.value, it.value);
        assert!((it.value - it.operator_path).abs() < 1e-10);
    }

    #[test]
    fn antiderivative_matches_cutoff_current() {
        let p = ModelParams::landau(1.0, 0.7, 0.1);
        let g = Grid::edge_cylinder(0.25, 8.0, 36.0).unwrap();
        let sys = EdgeSystem::build(&g, &p, None, None).unwrap();
        let prof = sys.profile(&DistributionSpec::fd(0.7, 0.1)).unwrap();
        // Settled: the anti-derivative is flat across the interior.
        let near = antiderivative_current(&prof, 10.0, 16.0).unwrap();
        let far = antiderivative_current(&prof, 16.0, 26.0).unwrap();
        assert!((near - far).abs() < 1e-7 * far.abs(), "{near} {far}");
        // The smooth cutoff approaches it as L grows, with O((x/L)³) bias.
        let gap = |l: f64| {
            let i = total_edge_current(&prof, &CutoffSpec::default(), l).unwrap();
            (i - far).abs() / far.abs()
        };
        assert!(far.abs() > 1e-3);
        assert!(gap(12.0) < 1e-3, "{}", gap(12.0));
        assert!(gap(12.0) < gap(6.0) / 4.0, "{} {}", gap(12.0), gap(6.0));
        assert!(antiderivative_current(&prof, 5.0, 5.0).is_err());
    }

    #[test]
    fn clean_bulk_profile_vanishes() {
        // Guiding centres sit 2π/(bC) apart; C = 12 makes their ripple negligible.
        let g = Grid::bulk_cylinder(0.25, 12.0, 8.0).unwrap();
        let p = ModelParams::landau(1.0, 0.7, 0.1);
        let s = Solved::build(&g, &p, None, None, false).unwrap();
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * 0.25).collect();
        let jb = bulk_profile(&s, &DistributionSpec::fd(0.7, 0.1), &xs).unwrap();
        assert!(jb.iter().all(|v| v.abs() < 1e-8), "{jb:?}");
    }

    #[test]
    fn zero_ridge_is_exact() {
        let (g, p) = small_edge(1.0);
        let w = NearEdgePotential::gaussian_ridge(0.0, 1.0, 0.3);
        let fd = DistributionSpec::fd(p.mu, p.temperature);
        let rows =
            edge_perturbation_invariance(&g, &p, None, &w, &fd, &CutoffSpec::default(), &[5.0, 6.0])
                .unwrap();
        assert!(rows.iter().all(|r| r.difference == 0.0));
        let wide = NearEdgePotential::gaussian_ridge(0.5, 1.0, 0.6);
        assert!(
            edge_perturbation_invariance(&g, &p, None, &wide, &fd, &CutoffSpec::default(), &[5.0]).is_err()
        );
    }

    #[test]
    fn transport_pass_through() {
        assert_eq!(transport_edge_current(0.25, 0.0), 0.25);
    }
}
