//! Discretized bulk and edge magnetic Hamiltonians in the Landau gauge.

pub mod disorder;
pub mod grid;
pub mod hamiltonian;
pub mod params;
pub mod stencil;

pub use disorder::{sample_disorder, sample_disorder_periodic, Bump, DisorderConfig, DisorderLaw, DisorderSpec};
pub use grid::{BoundaryX1, BoundaryX2, Grid, GridSpec};
pub use hamiltonian::{assemble_hamiltonian, assemble_with, gauge_shift, Extras, HamiltonianMatrix};
pub use params::{ModelParams, NearEdgePotential};
pub use stencil::{BlochStencil, Bond, CellHop, CellLayout, Direction, Stencil};
