use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Boundary condition along the cylinder axis x₁.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryX1 {
    Periodic,
    Dirichlet,
}

/// Boundary condition across the cylinder (x₂). Both variants remove the
/// bonds leaving the first and last row; the tag records whether the grid
/// is meant as a bulk surrogate (walls on both sides, cell in the middle)
/// or as an edge surrogate (physical wall at the bottom, far wall on top).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryX2 {
    DirichletBoth,
    DirichletBottomTop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    #[serde(rename = "W")]
    pub width: usize,
    #[serde(rename = "H")]
    pub height: usize,
    #[serde(default)]
    pub x2_offset: f64,
    pub bc_x1: BoundaryX1,
    pub bc_x2: BoundaryX2,
}

/// Rectangular site grid. Site `(i1, i2)` sits at `(i1·h, x2_offset + i2·h)`
/// and has linear index `i1·height + i2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    spacing: f64,
    width: usize,
    height: usize,
    x2_offset: f64,
    bc_x1: BoundaryX1,
    bc_x2: BoundaryX2,
}

impl Grid {
    pub fn new(spec: &GridSpec) -> Result<Self> {
        if !(spec.h.is_finite() && spec.h > 0.0) {
            return config(format!("grid spacing must be positive, got {}", spec.h));
        }
        if spec.width < 2 || spec.height < 2 {
            return config(format!(
                "grid needs at least 2x2 sites, got {}x{}",
                spec.width, spec.height
            ));
        }
        if !spec.x2_offset.is_finite() {
            return config("x2_offset must be finite");
        }
        Ok(Self {
            spacing: spec.h,
            width: spec.width,
            height: spec.height,
            x2_offset: spec.x2_offset,
            bc_x1: spec.bc_x1,
            bc_x2: spec.bc_x2,
        })
    }

    /// Cylinder of the given circumference, rows spanning `[-half_height, half_height]`.
    pub fn bulk_cylinder(h: f64, circumference: f64, half_height: f64) -> Result<Self> {
        let width = (circumference / h).round() as usize;
        let half_rows = (half_height / h).round() as usize;
        Self::new(&GridSpec {
            h,
            width,
            height: 2 * half_rows + 1,
            x2_offset: -(half_rows as f64) * h,
            bc_x1: BoundaryX1::Periodic,
            bc_x2: BoundaryX2::DirichletBoth,
        })
    }

    /// Cylinder with the physical edge at x₂ = 0 and a far wall at `top`.
    pub fn edge_cylinder(h: f64, circumference: f64, top: f64) -> Result<Self> {
        let width = (circumference / h).round() as usize;
        let rows = (top / h).round() as usize + 1;
        Self::new(&GridSpec {
            h,
            width,
            height: rows,
            x2_offset: 0.0,
            bc_x1: BoundaryX1::Periodic,
            bc_x2: BoundaryX2::DirichletBottomTop,
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            h: self.spacing,
            width: self.width,
            height: self.height,
            x2_offset: self.x2_offset,
            bc_x1: self.bc_x1,
            bc_x2: self.bc_x2,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn x2_offset(&self) -> f64 {
        self.x2_offset
    }

    pub fn bc_x1(&self) -> BoundaryX1 {
        self.bc_x1
    }

    pub fn bc_x2(&self) -> BoundaryX2 {
        self.bc_x2
    }

    pub fn is_periodic(&self) -> bool {
        self.bc_x1 == BoundaryX1::Periodic
    }

    pub fn n_sites(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        debug_assert!(i1 < self.width && i2 < self.height);
        i1 * self.height + i2
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.height, site % self.height)
    }

    pub fn x1(&self, i1: usize) -> f64 {
        i1 as f64 * self.spacing
    }

    pub fn x2(&self, i2: usize) -> f64 {
        self.x2_offset + i2 as f64 * self.spacing
    }

    pub fn position(&self, site: usize) -> (f64, f64) {
        let (i1, i2) = self.coords(site);
        (self.x1(i1), self.x2(i2))
    }

    pub fn circumference(&self) -> Option<f64> {
        self.is_periodic()
            .then_some(self.width as f64 * self.spacing)
    }

    /// Top coordinate of the last row.
    pub fn x2_max(&self) -> f64 {
        self.x2(self.height - 1)
    }

    /// Number of sites per unit length when `1/h` is an integer.
    pub fn sites_per_unit(&self) -> Option<usize> {
        let inv = 1.0 / self.spacing;
        let n = inv.round();
        ((inv - n).abs() < 1e-9 && n >= 1.0).then_some(n as usize)
    }

    /// Neighbour across the +e₁ bond, with a flag for the periodic seam.
    pub fn x1_neighbor(&self, i1: usize) -> Option<(usize, bool)> {
        if i1 + 1 < self.width {
            Some((i1 + 1, false))
        } else if self.is_periodic() {
            Some((0, true))
        } else {
            None
        }
    }

    pub fn x2_neighbor(&self, i2: usize) -> Option<usize> {
        (i2 + 1 < self.height).then_some(i2 + 1)
    }

    /// Number of +e₁ bonds in one row (seam included).
    pub fn x1_bonds_per_row(&self) -> usize {
        if self.is_periodic() {
            self.width
        } else {
            self.width - 1
        }
    }

    pub fn n_bonds(&self) -> usize {
        self.x1_bonds_per_row() * self.height + self.width * (self.height - 1)
    }

    /// Minimal-image x₁ displacement `to − from`.
    pub fn dx1(&self, from_i1: usize, to_i1: usize) -> f64 {
        let raw = (to_i1 as f64 - from_i1 as f64) * self.spacing;
        match self.circumference() {
            Some(c) => raw - c * (raw / c).round(),
            None => raw,
        }
    }

    /// Distance of row `i2` to the nearest Dirichlet wall (one ghost row past each end).
    pub fn wall_distance(&self, x2: f64) -> f64 {
        let bottom = self.x2_offset - self.spacing;
        let top = self.x2_max() + self.spacing;
        (x2 - bottom).min(top - x2)
    }

    /// Row index closest to coordinate `x2`.
    pub fn row_of(&self, x2: f64) -> Option<usize> {
        let r = ((x2 - self.x2_offset) / self.spacing).round();
        (r >= 0.0 && (r as usize) < self.height).then_some(r as usize)
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "h={};W={};H={};x2o={};bc1={:?};bc2={:?}",
            self.spacing, self.width, self.height, self.x2_offset, self.bc_x1, self.bc_x2
        )
    }

    /// Same grid translated by `shift` along x₂.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            x2_offset: self.x2_offset + shift,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(h: f64, w: usize, ht: usize, bc_x1: BoundaryX1) -> GridSpec {
        GridSpec {
            h,
            width: w,
            height: ht,
            x2_offset: 0.0,
            bc_x1,
            bc_x2: BoundaryX2::DirichletBoth,
        }
    }

    #[test]
    fn smallest_grid() {
        let g = Grid::new(&spec(1.0, 2, 2, BoundaryX1::Dirichlet)).unwrap();
        assert_eq!(g.n_sites(), 4);
        let idx: Vec<_> = (0..2)
            .flat_map(|i1| (0..2).map(move |i2| (i1, i2)))
            .map(|(a, b)| g.index(a, b))
            .collect();
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert_eq!(g.x1_neighbor(1), None);
        assert_eq!(g.n_bonds(), 4);
    }

    #[test]
    fn periodic_wiring() {
        let g = Grid::new(&spec(0.5, 4, 6, BoundaryX1::Periodic)).unwrap();
        assert_eq!(g.n_sites(), 24);
        assert_eq!(g.x1_bonds_per_row(), 4);
        let seams = (0..4).filter(|&i| g.x1_neighbor(i).unwrap().1).count();
        assert_eq!(seams, 1);
        assert_eq!(g.x1_neighbor(3), Some((0, true)));
    }

    #[test]
    fn positions() {
        let g = Grid::new(&spec(0.25, 32, 120, BoundaryX1::Periodic)).unwrap();
        assert_eq!(g.position(g.index(0, 0)), (0.0, 0.0));
        assert_eq!(g.position(g.index(31, 119)), (7.75, 29.75));
    }

    #[test]
    fn bijection() {
        let g = Grid::new(&spec(0.3, 5, 7, BoundaryX1::Periodic)).unwrap();
        for s in 0..g.n_sites() {
            let (a, b) = g.coords(s);
            assert_eq!(g.index(a, b), s);
        }
    }

    #[test]
    fn seam_displacement_is_minimal_image() {
        let g = Grid::new(&spec(0.5, 6, 2, BoundaryX1::Periodic)).unwrap();
        assert_eq!(g.dx1(0, 5), -0.5);
        assert_eq!(g.dx1(5, 0), 0.5);
        let d = Grid::new(&spec(0.5, 6, 2, BoundaryX1::Dirichlet)).unwrap();
        assert_eq!(d.dx1(0, 5), 2.5);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Grid::new(&spec(0.0, 4, 4, BoundaryX1::Periodic)).is_err());
        assert!(Grid::new(&spec(-1.0, 4, 4, BoundaryX1::Periodic)).is_err());
        assert!(Grid::new(&spec(0.5, 1, 4, BoundaryX1::Periodic)).is_err());
        assert!(Grid::new(&spec(0.5, 4, 1, BoundaryX1::Periodic)).is_err());
    }

    #[test]
    fn cylinders() {
        let b = Grid::bulk_cylinder(0.2, 8.0, 12.0).unwrap();
        assert_eq!(b.width(), 40);
        assert_eq!(b.height(), 121);
        assert!((b.x2(60)).abs() < 1e-12);
        let e = Grid::edge_cylinder(0.5, 8.0, 60.0).unwrap();
        assert_eq!(e.height(), 121);
        assert_eq!(e.x2_offset(), 0.0);
        assert_eq!(e.sites_per_unit(), Some(2));
    }
}
