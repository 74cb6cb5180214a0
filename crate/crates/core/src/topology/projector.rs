use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{config, Error, Result};
use crate::model::Direction;
use crate::solve::Solved;
use crate::spectral::{masked_trace_complex, OperatorMatrix, SiteMask};

/// States with less interior weight than this are wall states and may sit in the gap.
pub const WALL_STATE_WEIGHT: f64 = 1e-3;

/// Checks that no bulk eigenvalue lies in `[e_minus, e_plus]`.
///
/// With `wall_margin`, eigenvectors carrying less than [`WALL_STATE_WEIGHT`]
/// of their norm farther than `wall_margin` from the Dirichlet walls are exempt.
pub fn certify_gap(
    solved: &Solved,
    e_minus: f64,
    e_plus: f64,
    wall_margin: Option<f64>,
) -> Result<()> {
    if !(e_minus < e_plus) {
        return config(format!("gap window needs E- < E+, got [{e_minus}, {e_plus}]"));
    }
    let inside = |l: f64| (e_minus..=e_plus).contains(&l);
    let weights = wall_margin.map(|m| solved.interior_weights(m));
    for (j, s) in solved.spectrum.fibers.iter().enumerate() {
        for (n, &l) in s.eigenvalues.iter().enumerate() {
            if !inside(l) {
                continue;
            }
            let exempt = weights.as_ref().is_some_and(|w| w[j][n] < WALL_STATE_WEIGHT);
            if !exempt {
                return Err(Error::GapViolated {
                    energy: l,
                    lower: e_minus,
                    upper: e_plus,
                });
            }
        }
    }
    Ok(())
}

/// Spectral projection onto eigenvalues below `e_minus`, after certifying the gap.
pub fn fermi_projector(
    solved: &Solved,
    e_minus: f64,
    e_plus: f64,
    wall_margin: Option<f64>,
) -> Result<OperatorMatrix> {
    certify_gap(solved, e_minus, e_plus, wall_margin)?;
    Ok(solved
        .spectrum
        .operator(|l| crate::spectral::real(if l < e_minus { 1.0 } else { 0.0 })))
}

/// Rank of the projector, counted from the spectrum.
pub fn projector_rank(solved: &Solved, e_minus: f64) -> usize {
    solved
        .spectrum
        .fibers
        .iter()
        .map(|s| s.eigenvalues.iter().filter(|&&l| l < e_minus).count())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernReport {
    pub value: f64,
    pub imag: f64,
    pub idempotency_defect: f64,
}

/// `2π·Tr(χ P i[[X₁,P],[X₂,P]])` over the mask.
pub fn chern_marker(p: &OperatorMatrix, mask: &SiteMask) -> Result<ChernReport> {
    let pk = p.to_k();
    let idempotency_defect = pk.matmul(&pk)?.to_real().sub(p).max_abs();
    let ak = p.position_commutator(Direction::X1).to_k();
    let bk = p.position_commutator(Direction::X2).to_k();
    let comm = ak.matmul(&bk)?.sub(&bk.matmul(&ak)?);
    let prod = pk.matmul(&comm)?.to_real();
    let t = masked_trace_complex(&prod, mask)? * faer::c64::new(0.0, TAU);
    Ok(ChernReport {
        value: t.re,
        imag: t.im,
        idempotency_defect,
    })
}
