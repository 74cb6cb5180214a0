use std::collections::HashMap;

use faer::{c64, Mat};

use super::grid::Grid;
use crate::error::{config, Error, Result};

/// One nearest-neighbour bond `from → to` (forward along +e₁ or +e₂).
/// The matrix carries `value` at `[from, to]` and its conjugate at `[to, from]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bond {
    pub from: usize,
    pub to: usize,
    pub value: c64,
    pub dx1: f64,
    pub dx2: f64,
    pub seam: bool,
}

/// Hermitian 5-point operator on a grid, stored as a real diagonal plus
/// the two forward hops of every site.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    grid: Grid,
    diagonal: Vec<f64>,
    hop_x1: Vec<Option<c64>>,
    hop_x2: Vec<Option<c64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    X1,
    X2,
}

impl Stencil {
    pub(crate) fn from_parts(
        grid: Grid,
        diagonal: Vec<f64>,
        hop_x1: Vec<Option<c64>>,
        hop_x2: Vec<Option<c64>>,
    ) -> Self {
        let n = grid.n_sites();
        assert!(diagonal.len() == n && hop_x1.len() == n && hop_x2.len() == n);
        Self {
            grid,
            diagonal,
            hop_x1,
            hop_x2,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn hop_x1(&self, site: usize) -> Option<c64> {
        self.hop_x1[site]
    }

    pub fn hop_x2(&self, site: usize) -> Option<c64> {
        self.hop_x2[site]
    }

    pub fn bonds(&self) -> Vec<Bond> {
        let g = &self.grid;
        let h = g.spacing();
        let mut out = Vec::with_capacity(g.n_bonds());
        for s in 0..self.dim() {
            let (i1, i2) = g.coords(s);
            if let (Some(v), Some((j1, seam))) = (self.hop_x1[s], g.x1_neighbor(i1)) {
                out.push(Bond {
                    from: s,
                    to: g.index(j1, i2),
                    value: v,
                    dx1: h,
                    dx2: 0.0,
                    seam,
                });
            }
            if let (Some(v), Some(j2)) = (self.hop_x2[s], g.x2_neighbor(i2)) {
                out.push(Bond {
                    from: s,
                    to: g.index(i1, j2),
                    value: v,
                    dx1: 0.0,
                    dx2: h,
                    seam: false,
                });
            }
        }
        out
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.dim();
        let mut m = Mat::<c64>::zeros(n, n);
        for (i, d) in self.diagonal.iter().enumerate() {
            m[(i, i)] = c64::new(*d, 0.0);
        }
        for b in self.bonds() {
            m[(b.from, b.to)] += b.value;
            m[(b.to, b.from)] += b.value.conj();
        }
        m
    }

    /// Bond-wise `i[A, X_d]`: `J_xy = i·A_xy·(y_d − x_d)` with forward displacement `+h`.
    pub fn current(&self, dir: Direction) -> Stencil {
        let h = self.grid.spacing();
        let n = self.dim();
        let scale = |v: Option<c64>| v.map(|t| c64::new(0.0, h) * t);
        let (hop_x1, hop_x2) = match dir {
            Direction::X1 => (self.hop_x1.iter().map(|v| scale(*v)).collect(), vec![None; n]),
            Direction::X2 => (vec![None; n], self.hop_x2.iter().map(|v| scale(*v)).collect()),
        };
        Stencil::from_parts(self.grid.clone(), vec![0.0; n], hop_x1, hop_x2)
    }

    /// `D·A·D†` for the diagonal unitary `D = diag(phases)`.
    pub fn conjugate_diagonal(&self, phases: &[c64], grid: Grid) -> Result<Stencil> {
        if phases.len() != self.dim() || grid.n_sites() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: phases.len(),
            });
        }
        let g = &self.grid;
        let mut hop_x1 = self.hop_x1.clone();
        let mut hop_x2 = self.hop_x2.clone();
        for s in 0..self.dim() {
            let (i1, i2) = g.coords(s);
            if let (Some(v), Some((j1, _))) = (hop_x1[s], g.x1_neighbor(i1)) {
                hop_x1[s] = Some(phases[s] * v * phases[g.index(j1, i2)].conj());
            }
            if let (Some(v), Some(j2)) = (hop_x2[s], g.x2_neighbor(i2)) {
                hop_x2[s] = Some(phases[s] * v * phases[g.index(i1, j2)].conj());
            }
        }
        Ok(Stencil::from_parts(grid, self.diagonal.clone(), hop_x1, hop_x2))
    }

    pub fn max_abs(&self) -> f64 {
        let d = self.diagonal.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.hop_x1
            .iter()
            .chain(&self.hop_x2)
            .flatten()
            .fold(d, |a, v| a.max(v.norm()))
    }

    /// Number of distinct nonzero upper-triangle entries off the diagonal.
    pub fn offdiag_nonzeros(&self) -> usize {
        let mut seen: HashMap<(usize, usize), c64> = HashMap::new();
        for b in self.bonds() {
            let key = (b.from.min(b.to), b.from.max(b.to));
            let v = if b.from < b.to { b.value } else { b.value.conj() };
            *seen.entry(key).or_insert(c64::new(0.0, 0.0)) += v;
        }
        seen.values().filter(|v| v.norm() > 0.0).count()
    }

    fn site_matches(&self, s: usize, t: usize, tol: f64) -> bool {
        let close = |a: Option<c64>, b: Option<c64>| match (a, b) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).norm() <= tol,
            _ => false,
        };
        (self.diagonal[s] - self.diagonal[t]).abs() <= tol
            && close(self.hop_x1[s], self.hop_x1[t])
            && close(self.hop_x2[s], self.hop_x2[t])
    }

    /// Whether the operator commutes with the column shift `i₁ → i₁ + p`.
    pub fn invariant_under_shift(&self, p: usize) -> bool {
        let g = &self.grid;
        if !g.is_periodic() || p == 0 || !g.width().is_multiple_of(p) {
            return false;
        }
        let tol = 1e-11 * self.max_abs().max(1.0);
        (0..self.dim()).all(|s| {
            let (i1, i2) = g.coords(s);
            self.site_matches(s, g.index((i1 + p) % g.width(), i2), tol)
        })
    }

    /// Smallest column period compatible with the operator (the width if none smaller).
    pub fn x1_period(&self) -> usize {
        let w = self.grid.width();
        if !self.grid.is_periodic() {
            return w;
        }
        (1..=w)
            .filter(|p| w.is_multiple_of(*p))
            .find(|&p| p == w || self.invariant_under_shift(p))
            .unwrap_or(w)
    }

    /// Block-circulant reduction over cells of `period` columns.
    pub fn bloch(&self, period: usize) -> Result<BlochStencil> {
        let g = &self.grid;
        if period == 0 || !g.width().is_multiple_of(period) {
            return config(format!("cell period {period} does not divide width {}", g.width()));
        }
        if period != g.width() && !self.invariant_under_shift(period) {
            return config(format!("operator is not invariant under a {period}-column shift"));
        }
        let layout = CellLayout {
            cells: g.width() / period,
            cols: period,
            rows: g.height(),
            spacing: g.spacing(),
            x2_offset: g.x2_offset(),
        };
        let bd = layout.block_dim();
        let mut hops = Vec::new();
        // Cell 0 carries a representative of every bond class.
        for a in 0..bd {
            let (p, i2) = layout.local_coords(a);
            let s = g.index(p, i2);
            if let Some(v) = self.hop_x1[s] {
                let (to_p, dc) = if p + 1 < period {
                    (p + 1, 0)
                } else {
                    (0, 1)
                };
                hops.push(CellHop {
                    from: a,
                    to: layout.local_index(to_p, i2),
                    dc,
                    value: v,
                });
            }
            if let Some(v) = self.hop_x2[s] {
                hops.push(CellHop {
                    from: a,
                    to: layout.local_index(p, i2 + 1),
                    dc: 0,
                    value: v,
                });
            }
        }
        Ok(BlochStencil {
            layout,
            diagonal: self.diagonal[..bd].to_vec(),
            hops,
        })
    }
}

/// Partition of a periodic grid into `cells` cells of `cols` columns.
/// Local index `a = p·rows + i₂`; global site `c·cols·rows + a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellLayout {
    pub cells: usize,
    pub cols: usize,
    pub rows: usize,
    pub spacing: f64,
    pub x2_offset: f64,
}

impl CellLayout {
    pub fn block_dim(&self) -> usize {
        self.cols * self.rows
    }

    pub fn n_sites(&self) -> usize {
        self.cells * self.block_dim()
    }

    pub fn local_index(&self, p: usize, i2: usize) -> usize {
        p * self.rows + i2
    }

    pub fn local_coords(&self, a: usize) -> (usize, usize) {
        (a / self.rows, a % self.rows)
    }

    pub fn split(&self, site: usize) -> (usize, usize) {
        (site / self.block_dim(), site % self.block_dim())
    }

    pub fn site(&self, cell: usize, a: usize) -> usize {
        cell * self.block_dim() + a
    }

    pub fn x2(&self, a: usize) -> f64 {
        self.x2_offset + self.local_coords(a).1 as f64 * self.spacing
    }

    pub fn circumference(&self) -> f64 {
        (self.cells * self.cols) as f64 * self.spacing
    }

    /// Quasi-momenta `2πj/cells` (phase per cell).
    pub fn momenta(&self) -> Vec<f64> {
        (0..self.cells)
            .map(|j| std::f64::consts::TAU * j as f64 / self.cells as f64)
            .collect()
    }

    /// Minimal-image x₁ displacement from `(0, a)` to `(δ, b)`.
    pub fn dx1(&self, a: usize, delta: usize, b: usize) -> f64 {
        let cols = (delta * self.cols + self.local_coords(b).0) as f64
            - self.local_coords(a).0 as f64;
        let raw = cols * self.spacing;
        let c = self.circumference();
        raw - c * (raw / c).round()
    }

    pub fn dx2(&self, a: usize, b: usize) -> f64 {
        (self.local_coords(b).1 as f64 - self.local_coords(a).1 as f64) * self.spacing
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellHop {
    pub from: usize,
    pub to: usize,
    /// Cell offset of `to` relative to `from`.
    pub dc: i32,
    pub value: c64,
}

/// Translation-reduced stencil: fiber `h(k) = Σ_δ B_δ e^{ikδ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochStencil {
    pub layout: CellLayout,
    pub diagonal: Vec<f64>,
    pub hops: Vec<CellHop>,
}

impl BlochStencil {
    pub fn block_dim(&self) -> usize {
        self.layout.block_dim()
    }

    pub fn fiber(&self, k: f64) -> Mat<c64> {
        let n = self.block_dim();
        let mut m = Mat::<c64>::zeros(n, n);
        for (a, d) in self.diagonal.iter().enumerate() {
            m[(a, a)] = c64::new(*d, 0.0);
        }
        for hop in &self.hops {
            let ph = c64::cis(k * hop.dc as f64);
            m[(hop.from, hop.to)] += hop.value * ph;
            m[(hop.to, hop.from)] += (hop.value * ph).conj();
        }
        m
    }

    /// Real fiber, available when every hop phase is real at this k.
    pub fn real_fiber(&self, k: f64) -> Option<Mat<f64>> {
        let n = self.block_dim();
        let mut m = Mat::<f64>::zeros(n, n);
        for (a, d) in self.diagonal.iter().enumerate() {
            m[(a, a)] = *d;
        }
        for hop in &self.hops {
            let v = hop.value * c64::cis(k * hop.dc as f64);
            if hop.from == hop.to {
                m[(hop.from, hop.from)] += 2.0 * v.re;
            } else {
                if v.im.abs() > 1e-14 * v.norm().max(1.0) {
                    return None;
                }
                m[(hop.from, hop.to)] += v.re;
                m[(hop.to, hop.from)] += v.re;
            }
        }
        Some(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::grid::{BoundaryX1, BoundaryX2, GridSpec};

    fn ring(width: usize) -> Stencil {
        let g = Grid::new(&GridSpec {
            h: 1.0,
            width,
            height: 2,
            x2_offset: 0.0,
            bc_x1: BoundaryX1::Periodic,
            bc_x2: BoundaryX2::DirichletBoth,
        })
        .unwrap();
        let n = g.n_sites();
        let hop_x1 = (0..n).map(|s| Some(c64::new(0.3, 0.1 * (s / 2) as f64))).collect();
        let hop_x2 = (0..n).map(|s| (s % 2 == 0).then_some(c64::new(-0.5, 0.0))).collect();
        Stencil::from_parts(g, vec![1.0; n], hop_x1, hop_x2)
    }

    #[test]
    fn dense_is_hermitian() {
        let m = ring(5).to_dense();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                assert_eq!(m[(i, j)], m[(j, i)].conj());
            }
        }
    }

    #[test]
    fn seam_current_sign() {
        let s = ring(5);
        let j = s.current(Direction::X1).to_dense();
        let g = s.grid();
        let last = g.index(4, 0);
        let first = g.index(0, 0);
        let t = s.hop_x1(last).unwrap();
        // x₁ displacement from the last column to column 0 is +h across the seam.
        assert!((j[(last, first)] - c64::new(0.0, 1.0) * t).norm() < 1e-15);
        assert!((j[(first, last)] - (c64::new(0.0, 1.0) * t).conj()).norm() < 1e-15);
        assert!((0..j.nrows()).all(|i| j[(i, i)] == c64::new(0.0, 0.0)));
    }

    #[test]
    fn fiber_of_single_cell_is_dense() {
        let s = ring(4);
        let b = s.bloch(4).unwrap();
        let f = b.fiber(0.0);
        let d = s.to_dense();
        for i in 0..8 {
            for j in 0..8 {
                assert!((f[(i, j)] - d[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn period_detection() {
        assert_eq!(ring(6).x1_period(), 6);
        let g = ring(6).grid().clone();
        let n = g.n_sites();
        let uniform = Stencil::from_parts(
            g,
            vec![1.0; n],
            vec![Some(c64::new(0.2, 0.3)); n],
            vec![None; n],
        );
        assert_eq!(uniform.x1_period(), 1);
        assert!(uniform.bloch(4).is_err());
        assert!(uniform.bloch(3).is_ok());
    }
}
