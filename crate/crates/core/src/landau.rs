//! Closed forms for the pure Landau Hamiltonian `½(−i∇ − bA)²` on the plane.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{config, Result};
use crate::spectral::DistributionSpec;

pub fn landau_level(n: usize, b: f64) -> f64 {
    b * (n as f64 + 0.5)
}

/// Density of each level per unit area, `b/2π`.
pub fn landau_idos_per_level(b: f64) -> f64 {
    b / TAU
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandauParams {
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    /// Levels `0..n_max` enter the sums.
    pub n_max: usize,
}

/// Levels with `e_n − μ ≥ 40·T` contribute below `e^{−40}` to every sum.
const TAIL_SPAN: f64 = 40.0;

impl LandauParams {
    pub fn new(b: f64, mu: f64, temperature: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return config(format!("Landau oracle needs b > 0, got {b}"));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return config(format!("Landau oracle needs T > 0, got {temperature}"));
        }
        if !mu.is_finite() {
            return config("mu must be finite");
        }
        let top = (mu + TAIL_SPAN * temperature) / b - 0.5;
        let n_max = (top.max(0.0).ceil() as usize) + 1;
        Ok(Self {
            b,
            mu,
            temperature,
            n_max,
        })
    }

    fn fd(&self) -> DistributionSpec {
        DistributionSpec::fd(self.mu, self.temperature)
    }

    /// Occupation of the first omitted level.
    pub fn tail_bound(&self) -> f64 {
        self.fd().eval(landau_level(self.n_max, self.b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandauThermo {
    pub p: f64,
    pub n: f64,
    /// `−∂_b p = ∂_𝔅 p` with `𝔅 = −b`.
    pub m: f64,
    pub m_circ: f64,
    pub m_res: f64,
    pub sigma_h: f64,
    /// `∂_b p`, the same derivative in the b convention.
    pub dp_db: f64,
    pub dn_db: f64,
    pub n_max: usize,
}

pub fn landau_thermo(lp: &LandauParams) -> LandauThermo {
    let b = lp.b;
    let fd = lp.fd();
    let gcp = DistributionSpec::gcp(lp.mu, lp.temperature);
    let (mut s_gcp, mut s_fd, mut s_fd_w, mut s_fdp_w) = (0.0, 0.0, 0.0, 0.0);
    for n in 0..lp.n_max {
        let e = landau_level(n, b);
        let w = n as f64 + 0.5;
        let occ = fd.eval(e);
        s_gcp += gcp.eval(e);
        s_fd += occ;
        s_fd_w += occ * w;
        s_fdp_w += fd.derivative(e) * w;
    }
    let p = -b / TAU * s_gcp;
    let n = b / TAU * s_fd;
    let m_circ = b / TAU * s_fd_w;
    let m_res = s_gcp / TAU;
    LandauThermo {
        p,
        n,
        m: m_circ + m_res,
        m_circ,
        m_res,
        sigma_h: n / b,
        dp_db: -(m_circ + m_res),
        dn_db: s_fd / TAU + b / TAU * s_fdp_w,
        n_max: lp.n_max,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StredaChain {
    pub sigma_h: f64,
    /// `∂_b n + ∂_μ m_circ`.
    pub via_density: f64,
    /// `−∂_μ m_res`.
    pub via_residual: f64,
    pub max_gap: f64,
}

/// Fourth-order central difference `(−f₂ + 8f₁ − 8f₋₁ + f₋₂)/(12δ)`.
pub fn central4(f: impl Fn(f64) -> f64, x: f64, delta: f64) -> f64 {
    (-f(x + 2.0 * delta) + 8.0 * f(x + delta) - 8.0 * f(x - delta) + f(x - 2.0 * delta))
        / (12.0 * delta)
}

pub fn landau_streda_chain(lp: &LandauParams, delta_mu: f64) -> Result<StredaChain> {
    if !(delta_mu.is_finite() && delta_mu > 0.0) {
        return config("delta_mu must be positive");
    }
    let at = |mu: f64| {
        // Keep one truncation for all stencil points.
        let mut q = LandauParams::new(lp.b, mu, lp.temperature).expect("validated");
        q.n_max = q.n_max.max(lp.n_max) + 2;
        landau_thermo(&q)
    };
    let base = at(lp.mu);
    let dm_circ = central4(|mu| at(mu).m_circ, lp.mu, delta_mu);
    let dm_res = central4(|mu| at(mu).m_res, lp.mu, delta_mu);
    let via_density = base.dn_db + dm_circ;
    let via_residual = -dm_res;
    let s = base.sigma_h;
    let max_gap = (s - via_density)
        .abs()
        .max((s - via_residual).abs())
        .max((via_density - via_residual).abs());
    Ok(StredaChain {
        sigma_h: s,
        via_density,
        via_residual,
        max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn levels() {
        assert_eq!(landau_level(0, 1.0), 0.5);
        assert_eq!(landau_level(2, 0.5), 1.25);
        for b in [0.3, 1.0, 2.7] {
            assert!((landau_level(0, b) - landau_level(1, b) + b).abs() < 1e-15);
        }
    }

    #[test]
    fn idos() {
        assert!((landau_idos_per_level(TAU) - 1.0).abs() < 1e-15);
        assert!((landau_idos_per_level(1.0) - 0.15915).abs() < 1e-5);
        assert_eq!(landau_idos_per_level(2.0 * 0.7), 2.0 * landau_idos_per_level(0.7));
    }

    #[test]
    fn cold_limit() {
        let lp = LandauParams::new(1.0, 1.0, 1e-3).unwrap();
        assert!(lp.tail_bound() <= 1e-14);
        let t = landau_thermo(&lp);
        assert!((t.n - 0.15915).abs() < 1e-5);
        assert!((t.p - 0.07958).abs() < 1e-5);
        assert!((t.m_res + 0.07958).abs() < 1e-5);
        assert!((t.m - t.m_circ - t.m_res).abs() < 1e-14);
        assert!((t.sigma_h * lp.b - t.n).abs() < 1e-16);
    }

    #[test]
    fn thermo_derivatives_match_differences() {
        let lp = LandauParams::new(1.0, 1.0, 0.1).unwrap();
        let t = landau_thermo(&lp);
        let at_b = |b: f64| {
            let mut q = LandauParams::new(b, lp.mu, lp.temperature).unwrap();
            q.n_max = lp.n_max + 3;
            landau_thermo(&q)
        };
        let dp = central4(|b| at_b(b).p, 1.0, 1e-3);
        assert!((dp - t.dp_db).abs() < 1e-10, "{dp} vs {}", t.dp_db);
        let dn = central4(|b| at_b(b).n, 1.0, 1e-3);
        assert!((dn - t.dn_db).abs() < 1e-9);
        let n_mu = central4(
            |mu| landau_thermo(&LandauParams { mu, ..lp }).p,
            lp.mu,
            1e-3,
        );
        assert!((n_mu - t.n).abs() < 1e-10);
    }

    #[test]
    fn chain_at_reference_point() {
        let c = landau_streda_chain(&LandauParams::new(1.0, 1.0, 0.1).unwrap(), 1e-3).unwrap();
        assert!(c.max_gap < 1e-6, "{c:?}");
        let cold = landau_streda_chain(&LandauParams::new(1.0, 1.0, 0.02).unwrap(), 1e-3).unwrap();
        assert!((cold.sigma_h - 1.0 / TAU).abs() < 1e-4);
        let empty = landau_streda_chain(&LandauParams::new(1.0, -3.0, 0.1).unwrap(), 1e-3).unwrap();
        assert!(empty.sigma_h.abs() < 1e-10);
        assert!(empty.via_density.abs() < 1e-8 && empty.via_residual.abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LandauParams::new(0.0, 1.0, 0.1).is_err());
        assert!(LandauParams::new(1.0, 1.0, 0.0).is_err());
        assert!(landau_streda_chain(&LandauParams::new(1.0, 1.0, 0.1).unwrap(), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn split_and_triple_identity(
            b in 0.5f64..2.0,
            mu in 0.2f64..3.0,
            t in 0.05f64..0.5,
        ) {
            let lp = LandauParams::new(b, mu, t).unwrap();
            let th = landau_thermo(&lp);
            prop_assert!((th.m - th.m_circ - th.m_res).abs() <= 1e-14 * th.m.abs().max(1.0));
            prop_assert!(lp.tail_bound() <= 1e-14);
            let c = landau_streda_chain(&lp, 1e-3).unwrap();
            prop_assert!(c.max_gap < 1e-6, "{:?}", c);
        }
    }
}
