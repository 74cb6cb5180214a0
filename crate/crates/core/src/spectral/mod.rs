//! Eigendecompositions, functional calculus and masked traces.

pub mod bloch;
pub mod decay;
pub mod distribution;
pub mod eigen;
pub mod mask;
pub mod operator;

use std::io::Write;
use std::path::Path;

use faer::c64;

pub use bloch::{BlochSpectrum, Weighted};
pub use decay::{kernel_decay_probe, linear_fit, DecayProbe};
pub use distribution::{DistributionSpec, SmoothOrder};
pub use eigen::{eig_hermitian, Spectrum};
pub use mask::SiteMask;
pub use operator::{KOperator, OperatorMatrix};

use crate::error::{Error, Result};
use crate::model::{Direction, Grid, HamiltonianMatrix};

pub fn real(x: f64) -> c64 {
    c64::new(x, 0.0)
}

/// Spectrum of a Hamiltonian, reduced over its smallest x₁ period.
pub fn spectrum_of(ham: &HamiltonianMatrix) -> Result<BlochSpectrum> {
    BlochSpectrum::compute(&ham.bloch()?)
}

pub fn matrix_function(spec: &BlochSpectrum, f: &DistributionSpec) -> Result<OperatorMatrix> {
    f.validate()?;
    Ok(spec.operator(|x| real(f.eval(x))))
}

/// `i[H, X_d]` in the block layout of `H`'s Bloch reduction.
pub fn current_operator(ham: &HamiltonianMatrix, dir: Direction) -> Result<OperatorMatrix> {
    let st = ham.current(dir).bloch(ham.x1_period())?;
    Ok(OperatorMatrix::from_stencil(&st))
}

fn checked_trace(diag: &[c64], folded: &[f64]) -> Result<f64> {
    let v = mask::weighted_sum(diag, folded)?;
    let scale = mask::weighted_scale(diag, folded).max(f64::MIN_POSITIVE);
    if v.im.abs() > 1e-10 * scale.max(1.0) {
        return Err(Error::NonFinite(format!(
            "masked trace has imaginary part {:.3e} (scale {scale:.3e})",
            v.im
        )));
    }
    Ok(v.re)
}

/// `Tr(χ A)` for a Hermitian `A`; `Σ_x w(x)·A_xx` equals the diagonal-integral
/// Riemann sum with weight h².
pub fn masked_trace(a: &OperatorMatrix, mask: &SiteMask) -> Result<f64> {
    let folded = mask.fold(&a.layout)?;
    checked_trace(&a.cell_diagonal(), &folded)
}

/// `Tr(χ A)` for a general `A`.
pub fn masked_trace_complex(a: &OperatorMatrix, mask: &SiteMask) -> Result<c64> {
    let folded = mask.fold(&a.layout)?;
    mask::weighted_sum(&a.cell_diagonal(), &folded)
}

/// Dump an operator diagonal as `i1,i2,x1,x2,value`.
pub fn write_diagonal_csv(grid: &Grid, a: &OperatorMatrix, path: &Path) -> Result<()> {
    if a.dim() != grid.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_sites(),
            got: a.dim(),
        });
    }
    let diag = a.cell_diagonal();
    let bd = diag.len();
    let file = std::fs::File::create(path).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "i1,i2,x1,x2,value")?;
    // Sites are visited in linear order so that global index s → local s mod bd.
    for s in 0..grid.n_sites() {
        let (i1, i2) = grid.coords(s);
        let (x1, x2) = grid.position(s);
        writeln!(w, "{i1},{i2},{x1},{x2},{}", diag[s % bd].re)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_hamiltonian, CellLayout, ModelParams};
    use faer::Mat;

    fn dense(diag: &[f64]) -> BlochSpectrum {
        let n = diag.len();
        let m = Mat::from_fn(n, n, |i, j| if i == j { real(diag[i]) } else { real(0.0) });
        BlochSpectrum::from_dense(eig_hermitian(m.as_ref()).unwrap(), CellLayout::dense(n))
    }

    #[test]
    fn constant_gives_identity() {
        let g = Grid::bulk_cylinder(0.5, 2.0, 1.0).unwrap();
        let ham = assemble_hamiltonian(&g, &ModelParams::landau(1.0, 0.0, 0.0), None, false)
            .unwrap();
        let sp = spectrum_of(&ham).unwrap();
        let id = matrix_function(&sp, &DistributionSpec::Constant { value: 1.0 }).unwrap();
        let d = id.to_dense();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d[(i, j)] - real(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn fd_on_two_levels() {
        let sp = dense(&[0.0, 1.0]);
        let m = matrix_function(&sp, &DistributionSpec::fd(0.5, 0.25)).unwrap();
        assert!((m.blocks[0][(0, 0)].re - 0.8808).abs() < 5e-5);
        assert!((m.blocks[0][(1, 1)].re - 0.1192).abs() < 5e-5);
        assert!(m.blocks[0][(0, 1)].norm() < 1e-15);
        assert!(matrix_function(&sp, &DistributionSpec::fd(0.5, 0.0)).is_err());
    }

    #[test]
    fn gapped_below_window_is_identity() {
        let sp = dense(&[-1.0, 0.1, 0.3]);
        let m = matrix_function(&sp, &DistributionSpec::gapped(0.5, 1.5)).unwrap();
        let d = m.to_dense();
        for i in 0..3 {
            assert!((d[(i, i)].re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_site_current() {
        // Sites at x₁ = 0, 1 with hop t: J₁₂ = i·t, J₂₁ = −i·t̄.
        let g = Grid::new(&crate::model::GridSpec {
            h: 1.0,
            width: 2,
            height: 2,
            x2_offset: 0.0,
            bc_x1: crate::model::BoundaryX1::Dirichlet,
            bc_x2: crate::model::BoundaryX2::DirichletBoth,
        })
        .unwrap();
        let ham = assemble_hamiltonian(&g, &ModelParams::landau(0.3, 0.0, 0.0), None, false)
            .unwrap();
        let j = current_operator(&ham, Direction::X1).unwrap().to_dense();
        let (x, y) = (g.index(0, 1), g.index(1, 1));
        let t = ham.stencil().hop_x1(x).unwrap();
        assert!((j[(x, y)] - c64::new(0.0, 1.0) * t).norm() < 1e-15);
        assert!((j[(y, x)] - c64::new(0.0, -1.0) * t.conj()).norm() < 1e-15);
    }

    #[test]
    fn diagonal_hamiltonian_has_no_current() {
        let g = Grid::bulk_cylinder(1.0, 3.0, 1.0).unwrap();
        let ham =
            assemble_hamiltonian(&g, &ModelParams::landau(0.0, 0.0, 0.0), None, false).unwrap();
        let n = g.n_sites();
        let diag_only = crate::model::Stencil::from_parts(
            g.clone(),
            ham.stencil().diagonal().to_vec(),
            vec![None; n],
            vec![None; n],
        );
        let j = diag_only.current(Direction::X1).to_dense();
        assert!(eigen::max_abs(j.as_ref()) == 0.0);
    }

    #[test]
    fn mask_traces() {
        let g = Grid::bulk_cylinder(0.25, 2.0, 2.0).unwrap();
        let mut id = OperatorMatrix::identity(CellLayout::whole_grid(&g));
        // Kernel diagonal 1 is the matrix h²·I.
        id.blocks[0] = id.blocks[0].clone() * faer::Scale(real(0.0625));
        let cell = SiteMask::unit_cell(&g, -0.5);
        assert!((masked_trace(&id, &cell).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(masked_trace(&id, &SiteMask::zeros(g.n_sites())).unwrap(), 0.0);
        assert!(masked_trace(&id, &SiteMask::zeros(3)).is_err());
    }
}
