use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::model::{BlochStencil, CellLayout, Direction, Grid};

/// Block-circulant operator: `blocks[δ][a, b] = A[(c, a), (c + δ mod cells, b)]`.
/// A dense matrix is the case `cells = 1`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub layout: CellLayout,
    pub blocks: Vec<Mat<c64>>,
}

/// The same operator after the cell Fourier transform: `fibers[j] = Σ_δ A_δ e^{ik_jδ}`.
#[derive(Clone, Debug)]
pub struct KOperator {
    pub layout: CellLayout,
    pub fibers: Vec<Mat<c64>>,
}

impl CellLayout {
    /// Layout of an unstructured n×n matrix.
    pub fn dense(n: usize) -> Self {
        Self {
            cells: 1,
            cols: 1,
            rows: n,
            spacing: 1.0,
            x2_offset: 0.0,
        }
    }

    pub fn whole_grid(grid: &Grid) -> Self {
        Self {
            cells: 1,
            cols: grid.width(),
            rows: grid.height(),
            spacing: grid.spacing(),
            x2_offset: grid.x2_offset(),
        }
    }
}

fn phase_table(layout: &CellLayout, sign: f64) -> Vec<Vec<c64>> {
    let ks = layout.momenta();
    ks.iter()
        .map(|k| {
            (0..layout.cells)
                .map(|d| c64::cis(sign * k * d as f64))
                .collect()
        })
        .collect()
}

impl OperatorMatrix {
    pub fn from_dense(m: Mat<c64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self {
            layout: CellLayout::dense(m.nrows()),
            blocks: vec![m],
        }
    }

    pub fn zeros(layout: CellLayout) -> Self {
        let bd = layout.block_dim();
        Self {
            layout,
            blocks: (0..layout.cells).map(|_| Mat::zeros(bd, bd)).collect(),
        }
    }

    pub fn identity(layout: CellLayout) -> Self {
        let mut out = Self::zeros(layout);
        for a in 0..layout.block_dim() {
            out.blocks[0][(a, a)] = c64::new(1.0, 0.0);
        }
        out
    }

    /// Real-space blocks of a stencil (both bond orientations).
    pub fn from_stencil(st: &BlochStencil) -> Self {
        let mut out = Self::zeros(st.layout);
        let nc = st.layout.cells as i64;
        for (a, d) in st.diagonal.iter().enumerate() {
            out.blocks[0][(a, a)] += c64::new(*d, 0.0);
        }
        for hop in &st.hops {
            let fwd = (hop.dc as i64).rem_euclid(nc) as usize;
            let back = (-hop.dc as i64).rem_euclid(nc) as usize;
            out.blocks[fwd][(hop.from, hop.to)] += hop.value;
            out.blocks[back][(hop.to, hop.from)] += hop.value.conj();
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.layout.n_sites()
    }

    pub fn entry(&self, x: usize, y: usize) -> c64 {
        let (cx, a) = self.layout.split(x);
        let (cy, b) = self.layout.split(y);
        let d = (cy + self.layout.cells - cx) % self.layout.cells;
        self.blocks[d][(a, b)]
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// Diagonal over the sites of cell 0 (every cell carries the same values).
    pub fn cell_diagonal(&self) -> Vec<c64> {
        (0..self.layout.block_dim())
            .map(|a| self.blocks[0][(a, a)])
            .collect()
    }

    pub fn to_k(&self) -> KOperator {
        let bd = self.layout.block_dim();
        let table = phase_table(&self.layout, 1.0);
        let fibers = table
            .iter()
            .map(|ph| {
                let mut f = Mat::<c64>::zeros(bd, bd);
                for (d, blk) in self.blocks.iter().enumerate() {
                    let p = ph[d];
                    for j in 0..bd {
                        for i in 0..bd {
                            f[(i, j)] += blk[(i, j)] * p;
                        }
                    }
                }
                f
            })
            .collect();
        KOperator {
            layout: self.layout,
            fibers,
        }
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        Ok(self.to_k().matmul(&other.to_k())?.to_real())
    }

    pub fn sub(&self, other: &OperatorMatrix) -> OperatorMatrix {
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a - b)
            .collect();
        OperatorMatrix {
            layout: self.layout,
            blocks,
        }
    }

    /// `[X_d, A]`, entries `(x_d − y_d)·A_xy` with minimal-image x₁ displacements.
    pub fn position_commutator(&self, dir: Direction) -> OperatorMatrix {
        let l = self.layout;
        let bd = l.block_dim();
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(d, blk)| {
                Mat::from_fn(bd, bd, |a, b| {
                    let disp = match dir {
                        Direction::X1 => l.dx1(a, d, b),
                        Direction::X2 => l.dx2(a, b),
                    };
                    blk[(a, b)] * (-disp)
                })
            })
            .collect();
        OperatorMatrix { layout: l, blocks }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| super::eigen::max_abs(b.as_ref()))
            .fold(0.0, f64::max)
    }

    /// `max |A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let nc = self.layout.cells;
        let bd = self.layout.block_dim();
        let mut worst = 0.0f64;
        for d in 0..nc {
            let back = (nc - d) % nc;
            for a in 0..bd {
                for b in 0..bd {
                    let v = self.blocks[d][(a, b)] - self.blocks[back][(b, a)].conj();
                    worst = worst.max(v.norm());
                }
            }
        }
        worst
    }
}

impl KOperator {
    pub fn sub(&self, other: &KOperator) -> KOperator {
        KOperator {
            layout: self.layout,
            fibers: self.fibers.iter().zip(&other.fibers).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &KOperator) -> Result<KOperator> {
        if self.layout.block_dim() != other.layout.block_dim()
            || self.fibers.len() != other.fibers.len()
        {
            return Err(Error::DimensionMismatch {
                expected: self.layout.n_sites(),
                got: other.layout.n_sites(),
            });
        }
        crate::sequential_kernels();
        let fibers = self
            .fibers
            .iter()
            .zip(&other.fibers)
            .map(|(a, b)| a * b)
            .collect();
        Ok(KOperator {
            layout: self.layout,
            fibers,
        })
    }

    pub fn to_real(&self) -> OperatorMatrix {
        let l = self.layout;
        let bd = l.block_dim();
        let nc = l.cells as f64;
        let table = phase_table(&l, -1.0);
        let blocks = (0..l.cells)
            .map(|d| {
                let mut blk = Mat::<c64>::zeros(bd, bd);
                for (kj, f) in self.fibers.iter().enumerate() {
                    let p = table[kj][d] / nc;
                    for j in 0..bd {
                        for i in 0..bd {
                            blk[(i, j)] += f[(i, j)] * p;
                        }
                    }
                }
                blk
            })
            .collect();
        OperatorMatrix { layout: l, blocks }
    }

    /// Diagonal of the real-space operator on cell 0.
    pub fn cell_diagonal(&self) -> Vec<c64> {
        let nc = self.fibers.len() as f64;
        (0..self.layout.block_dim())
            .map(|a| self.fibers.iter().map(|f| f[(a, a)]).sum::<c64>() / nc)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_hamiltonian, Grid, ModelParams};

    fn small() -> (crate::model::HamiltonianMatrix, BlochStencil) {
        let g = Grid::bulk_cylinder(0.5, 3.0, 1.5).unwrap();
        let mut p = ModelParams::landau(0.7, 0.0, 0.0);
        p.v_amp = 0.2;
        let ham = assemble_hamiltonian(&g, &p, None, false).unwrap();
        let st = ham.stencil().bloch(2).unwrap();
        (ham, st)
    }

    #[test]
    fn stencil_blocks_rebuild_dense() {
        let (ham, st) = small();
        let op = OperatorMatrix::from_stencil(&st);
        let a = op.to_dense();
        let b = ham.to_dense();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                assert!((a[(i, j)] - b[(i, j)]).norm() < 1e-13);
            }
        }
        assert!(op.hermiticity_defect() < 1e-14);
    }

    #[test]
    fn k_roundtrip_and_product() {
        let (ham, st) = small();
        let op = OperatorMatrix::from_stencil(&st);
        let back = op.to_k().to_real();
        assert!(back.sub(&op).max_abs() < 1e-12);
        let sq = op.matmul(&op).unwrap().to_dense();
        let d = ham.to_dense();
        let want = &d * &d;
        for i in 0..sq.nrows() {
            for j in 0..sq.ncols() {
                assert!((sq[(i, j)] - want[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn position_commutator_matches_dense() {
        let (ham, st) = small();
        let op = OperatorMatrix::from_stencil(&st);
        let c = op.position_commutator(Direction::X1).to_dense();
        let j = ham.current(Direction::X1).to_dense();
        // i[H, X₁] = −i[X₁, H].
        for r in 0..c.nrows() {
            for s in 0..c.ncols() {
                assert!((c64::new(0.0, -1.0) * c[(r, s)] - j[(r, s)]).norm() < 1e-12);
            }
        }
    }
}
