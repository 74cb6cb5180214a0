use faer::{c64, Mat};

use super::disorder::DisorderConfig;
use super::grid::Grid;
use super::params::{ModelParams, NearEdgePotential};
use super::stencil::{BlochStencil, Direction, Stencil};
use crate::error::{config, Result};

/// Discretized magnetic Schrödinger operator in the site basis.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianMatrix {
    stencil: Stencil,
    params: ModelParams,
    edge: bool,
}

/// Optional ingredients beyond `(grid, params)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Extras<'a> {
    pub disorder: Option<&'a DisorderConfig>,
    pub near_edge: Option<&'a NearEdgePotential>,
}

pub fn assemble_hamiltonian(
    grid: &Grid,
    params: &ModelParams,
    disorder: Option<&DisorderConfig>,
    edge: bool,
) -> Result<HamiltonianMatrix> {
    assemble_with(
        grid,
        params,
        Extras {
            disorder,
            near_edge: None,
        },
        edge,
    )
}

/// Peierls phase of the `+e₁` hop on row `x₂`: `b·x₂·h − ∫𝒜₁`.
pub fn x1_hop_phase(params: &ModelParams, x2: f64, h: f64) -> f64 {
    let (a1, _) = params.periodic_vector_potential(0.0, x2);
    params.b * x2 * h - h * a1
}

pub fn assemble_with(
    grid: &Grid,
    params: &ModelParams,
    extras: Extras<'_>,
    edge: bool,
) -> Result<HamiltonianMatrix> {
    params.validate()?;
    if edge && grid.x2_offset() != 0.0 {
        return config(format!(
            "edge operator needs the physical wall at x2 = 0, grid starts at {}",
            grid.x2_offset()
        ));
    }
    if let Some(w) = extras.near_edge {
        w.validate()?;
        if !edge {
            return config("near-edge potential requires an edge grid");
        }
    }
    let h = grid.spacing();
    let n = grid.n_sites();
    let t = -0.5 / (h * h);
    let dis = match extras.disorder {
        Some(d) if params.lambda_dis != 0.0 => d.site_potential(grid, params.lambda_dis),
        _ => vec![0.0; n],
    };
    let mut diagonal = Vec::with_capacity(n);
    let mut hop_x1 = Vec::with_capacity(n);
    let mut hop_x2 = Vec::with_capacity(n);
    for (s, &v_dis) in dis.iter().enumerate() {
        let (i1, i2) = grid.coords(s);
        let (x1, x2) = grid.position(s);
        let w = extras.near_edge.map_or(0.0, |w| w.value(x2));
        diagonal.push(2.0 / (h * h) + params.potential(x1, x2) + v_dis + w);
        hop_x1.push(
            grid.x1_neighbor(i1)
                .map(|_| c64::cis(x1_hop_phase(params, x2, h)) * t),
        );
        hop_x2.push(grid.x2_neighbor(i2).map(|_| {
            let (_, a2) = params.periodic_vector_potential(x1, 0.0);
            c64::cis(-h * a2) * t
        }));
    }
    Ok(HamiltonianMatrix {
        stencil: Stencil::from_parts(grid.clone(), diagonal, hop_x1, hop_x2),
        params: *params,
        edge,
    })
}

impl HamiltonianMatrix {
    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn grid(&self) -> &Grid {
        self.stencil.grid()
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn is_edge(&self) -> bool {
        self.edge
    }

    pub fn dim(&self) -> usize {
        self.stencil.dim()
    }

    pub fn to_dense(&self) -> Mat<c64> {
        self.stencil.to_dense()
    }

    pub fn current(&self, dir: Direction) -> Stencil {
        self.stencil.current(dir)
    }

    pub fn x1_period(&self) -> usize {
        self.stencil.x1_period()
    }

    pub fn bloch(&self) -> Result<BlochStencil> {
        self.stencil.bloch(self.x1_period())
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "{};{};edge={}",
            self.grid().fingerprint(),
            self.params.fingerprint(),
            self.edge
        )
    }
}

/// Conjugate by the magnetic-translation phase `D = diag(e^{−i b s x₁})`
/// and relabel the grid as shifted by `shift` along x₂.
///
/// For an integer shift the result equals the operator assembled on the
/// translated sample. On a periodic cylinder the seam matches only when
/// `b·s·C` is a multiple of 2π.
pub fn gauge_shift(ham: &HamiltonianMatrix, shift: f64) -> Result<HamiltonianMatrix> {
    let grid = ham.grid();
    let h = grid.spacing();
    let whole = shift.round();
    if (shift - whole).abs() > 1e-12 || ((shift / h) - (shift / h).round()).abs() > 1e-9 {
        return config(format!("shift {shift} is not a lattice translation"));
    }
    if whole == 0.0 {
        return Ok(ham.clone());
    }
    let b = ham.params.b;
    let phases: Vec<c64> = (0..grid.n_sites())
        .map(|s| c64::cis(-b * whole * grid.position(s).0))
        .collect();
    let stencil = ham.stencil.conjugate_diagonal(&phases, grid.shifted(whole))?;
    Ok(HamiltonianMatrix {
        stencil,
        params: ham.params,
        edge: ham.edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::disorder::{sample_disorder, DisorderLaw};
    use crate::model::grid::{BoundaryX1, BoundaryX2, GridSpec};
    use crate::spectral::eigen::eig_hermitian;

    fn grid(h: f64, w: usize, ht: usize, x2o: f64, bc: BoundaryX1) -> Grid {
        Grid::new(&GridSpec {
            h,
            width: w,
            height: ht,
            x2_offset: x2o,
            bc_x1: bc,
            bc_x2: BoundaryX2::DirichletBoth,
        })
        .unwrap()
    }

    #[test]
    fn two_by_two_spectrum() {
        let g = grid(1.0, 2, 2, 0.0, BoundaryX1::Dirichlet);
        let ham = assemble_hamiltonian(&g, &ModelParams::landau(0.0, 0.0, 0.0), None, false)
            .unwrap();
        let spec = eig_hermitian(ham.to_dense().as_ref()).unwrap();
        let want = [1.0, 2.0, 2.0, 3.0];
        for (e, w) in spec.eigenvalues.iter().zip(want) {
            assert!((e - w).abs() < 1e-12, "{e} vs {w}");
        }
    }

    #[test]
    fn peierls_phase_on_row() {
        let g = grid(0.5, 4, 6, 0.0, BoundaryX1::Periodic);
        let ham =
            assemble_hamiltonian(&g, &ModelParams::landau(1.0, 0.0, 0.0), None, false).unwrap();
        let row = g.row_of(2.0).unwrap();
        let t = ham.stencil().hop_x1(g.index(1, row)).unwrap();
        assert!((t.arg() - (1.0 - std::f64::consts::PI)).abs() < 1e-12);
        assert!((t.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn edge_requires_zero_offset() {
        let g = grid(0.5, 4, 6, -1.0, BoundaryX1::Periodic);
        let p = ModelParams::landau(1.0, 0.0, 0.0);
        assert!(assemble_hamiltonian(&g, &p, None, true).is_err());
        assert!(assemble_hamiltonian(&g, &p, None, false).is_ok());
    }

    #[test]
    fn nonzeros_match_bonds() {
        let g = grid(0.5, 5, 4, 0.0, BoundaryX1::Periodic);
        let mut p = ModelParams::landau(0.7, 0.0, 0.0);
        p.v_amp = 0.2;
        let ham = assemble_hamiltonian(&g, &p, None, false).unwrap();
        assert_eq!(ham.stencil().offdiag_nonzeros(), g.n_bonds());
        assert_eq!(g.n_bonds(), 5 * 4 + 5 * 3);
    }

    #[test]
    fn clean_periods() {
        let g = grid(0.25, 16, 8, -1.0, BoundaryX1::Periodic);
        let mut p = ModelParams::landau(0.9, 0.0, 0.0);
        assert_eq!(assemble_hamiltonian(&g, &p, None, false).unwrap().x1_period(), 1);
        p.v_amp = 0.3;
        assert_eq!(assemble_hamiltonian(&g, &p, None, false).unwrap().x1_period(), 4);
        p.v_amp = 0.0;
        p.a_periodic_amp = 0.1;
        assert_eq!(assemble_hamiltonian(&g, &p, None, false).unwrap().x1_period(), 4);
    }

    #[test]
    fn shift_zero_is_identity() {
        let g = grid(0.5, 6, 6, -1.5, BoundaryX1::Periodic);
        let ham =
            assemble_hamiltonian(&g, &ModelParams::landau(0.8, 0.0, 0.0), None, false).unwrap();
        assert_eq!(gauge_shift(&ham, 0.0).unwrap(), ham);
        assert!(gauge_shift(&ham, 0.5).is_err());
        assert!(gauge_shift(&ham, 0.3).is_err());
    }

    #[test]
    fn shift_matches_translated_disorder() {
        let g = grid(0.5, 8, 12, -3.0, BoundaryX1::Dirichlet);
        let mut p = ModelParams::landau(0.8, 0.0, 0.0);
        p.v_amp = 0.25;
        p.lambda_dis = 0.5;
        let d = sample_disorder(11, &g, DisorderLaw::Uniform);
        let ham = assemble_hamiltonian(&g, &p, Some(&d), false).unwrap();
        let moved = gauge_shift(&ham, 1.0).unwrap();
        let direct =
            assemble_hamiltonian(&g.shifted(1.0), &p, Some(&d.translated(0, 1)), false).unwrap();
        let a = moved.to_dense();
        let b = direct.to_dense();
        let mut diff = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                diff = diff.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        assert!(diff < 1e-10, "{diff}");
    }
}
