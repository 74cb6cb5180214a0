//! Gapped-regime invariants: Fermi projector, Chern marker, Středa derivative,
//! zero-temperature decay and edge spectral flow.

pub mod flow;
pub mod projector;
pub mod streda;

pub use flow::{edge_spectral_flow, Branch, EdgeBands, FlowOptions, SpectralFlow};
pub use projector::{certify_gap, chern_marker, fermi_projector, projector_rank, ChernReport};
pub use streda::{
    gapped_derivative, streda_derivative, zero_t_decay_study, DecayPoint, DecayStudy, StredaReport,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bulk::central_cell_origin;
    use crate::model::{Grid, ModelParams};
    use crate::solve::Solved;
    use crate::spectral::{DistributionSpec, SiteMask};

    fn clean(h: f64, c: f64, half: f64) -> (Grid, Solved) {
        let g = Grid::bulk_cylinder(h, c, half).unwrap();
        let s = Solved::build(&g, &ModelParams::landau(1.0, 1.0, 0.0), None, None, false).unwrap();
        (g, s)
    }

    #[test]
    fn trivial_projectors() {
        let (g, s) = clean(0.5, 6.0, 3.0);
        let (lo, hi) = s.spectrum.spectral_range();
        let zero = fermi_projector(&s, lo - 2.0, lo - 1.0, None).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let one = fermi_projector(&s, hi + 1.0, hi + 2.0, None).unwrap();
        let mask = SiteMask::unit_cell(&g, central_cell_origin(&g));
        for p in [&zero, &one] {
            let c = chern_marker(p, &mask).unwrap();
            assert!(c.value.abs() < 1e-9, "{}", c.value);
        }
        assert!(fermi_projector(&s, 1.0, 0.5, None).is_err());
    }

    #[test]
    fn gap_violation_names_the_energy() {
        let (_, s) = clean(0.5, 6.0, 3.0);
        let l = s.spectrum.fibers[0].eigenvalues[3];
        match fermi_projector(&s, l - 1e-6, l + 1e-6, None) {
            Err(crate::Error::GapViolated { energy, .. }) => assert!((energy - l).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rank_counts_states_below_window() {
        let (_, s) = clean(0.25, 6.0, 6.0);
        let p = fermi_projector(&s, 0.9, 1.1, Some(5.0)).unwrap();
        let tr: f64 = (0..p.dim()).map(|x| p.entry(x, x).re).sum();
        let rank = projector_rank(&s, 0.9);
        assert!((tr - rank as f64).abs() < 1e-8);
        assert!(rank > 0);
    }

    #[test]
    fn constant_f0_has_no_derivative() {
        let g = Grid::bulk_cylinder(0.25, 8.0, 6.0).unwrap();
        let p = ModelParams::landau(1.0, 1.0, 0.0);
        let f = DistributionSpec::Constant { value: 1.0 };
        let obs = |b: f64| {
            let s = Solved::build(&g, &p.with_b(b), None, None, false)?;
            crate::bulk::cell_density(&s, &f, central_cell_origin(&g))
        };
        let d = crate::bulk::magnetic_derivative(&obs, 1.0, 1e-3).unwrap();
        assert!(d.value.abs() < 1e-8);
        assert!(streda_derivative(&f, &p, &g, 1e-3).is_err());
    }

    #[test]
    fn gap_closure_reports_b() {
        let g = Grid::bulk_cylinder(0.25, 8.0, 6.0).unwrap();
        let p = ModelParams::landau(1.0, 1.0, 0.0);
        // Window straddling the lowest level at b near 1.
        let f0 = DistributionSpec::gapped(0.45, 0.55);
        match streda_derivative(&f0, &p, &g, 1e-3) {
            Err(crate::Error::GapClosed { b, .. }) => assert!((b - 1.0).abs() < 3e-3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_window_has_zero_flow() {
        let p = ModelParams::landau(1.0, 0.0, 0.0);
        let f = edge_spectral_flow(&p, 0.5, 6.0, (-3.0, -2.0), &FlowOptions::default()).unwrap();
        assert_eq!(f.flow, 0);
        assert!(f.bands.branches.is_empty());
        assert!(f.endpoint_mismatch < 1e-8);
    }

    #[test]
    fn first_gap_flow_is_one() {
        let p = ModelParams::landau(1.0, 0.0, 0.0);
        let opts = FlowOptions {
            k_count: 101,
            ..Default::default()
        };
        let f = edge_spectral_flow(&p, 0.25, 10.0, (0.8, 1.2), &opts).unwrap();
        assert_eq!(f.flow, 1, "{f:?}");
        assert!((f.raw - 1.0).abs() < 1e-6);
        assert!(f.endpoint_mismatch < 1e-8);
    }

    #[test]
    fn decay_study_validates_input() {
        let g = Grid::bulk_cylinder(0.5, 4.0, 3.0).unwrap();
        let p = ModelParams::landau(1.0, 1.0, 0.0);
        let f0 = [DistributionSpec::gapped(0.8, 1.2)];
        assert!(zero_t_decay_study(&p, &g, &[0.1, 0.2], &f0, 1e-3).is_err());
        assert!(zero_t_decay_study(&p, &g, &[], &f0, 1e-3).is_err());
        assert!(zero_t_decay_study(&p, &g, &[0.1], &[], 1e-3).is_err());
    }
}
