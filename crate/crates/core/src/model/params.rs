use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub b: f64,
    #[serde(rename = "V_amp", default)]
    pub v_amp: f64,
    #[serde(rename = "A_periodic_amp", default)]
    pub a_periodic_amp: f64,
    #[serde(default)]
    pub lambda_dis: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(rename = "T", default)]
    pub temperature: f64,
}

impl ModelParams {
    /// Pure Landau model: no periodic potential, no disorder.
    pub fn landau(b: f64, mu: f64, temperature: f64) -> Self {
        Self {
            b,
            v_amp: 0.0,
            a_periodic_amp: 0.0,
            lambda_dis: 0.0,
            mu,
            temperature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.b,
            self.v_amp,
            self.a_periodic_amp,
            self.lambda_dis,
            self.mu,
            self.temperature,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return config("model parameters must be finite");
        }
        if self.temperature < 0.0 {
            return config(format!("T must be >= 0, got {}", self.temperature));
        }
        if self.lambda_dis < 0.0 {
            return config(format!("lambda_dis must be >= 0, got {}", self.lambda_dis));
        }
        Ok(())
    }

    pub fn with_b(self, b: f64) -> Self {
        Self { b, ..self }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        Self {
            temperature,
            ..self
        }
    }

    /// Magnetic length 1/√|b|; infinite at b = 0.
    pub fn magnetic_length(&self) -> f64 {
        1.0 / self.b.abs().sqrt()
    }

    pub fn is_clean(&self) -> bool {
        self.lambda_dis == 0.0
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "b={};V={};A={};lam={};mu={};T={}",
            self.b, self.v_amp, self.a_periodic_amp, self.lambda_dis, self.mu, self.temperature
        )
    }

    /// ℤ²-periodic scalar potential.
    pub fn potential(&self, x1: f64, x2: f64) -> f64 {
        if self.v_amp == 0.0 {
            return 0.0;
        }
        let tau = std::f64::consts::TAU;
        self.v_amp * ((tau * x1).cos() + (tau * x2).cos())
    }

    /// Periodic vector potential 𝒜 = A_amp·(cos 2πx₂, cos 2πx₁).
    pub fn periodic_vector_potential(&self, x1: f64, x2: f64) -> (f64, f64) {
        let tau = std::f64::consts::TAU;
        let a = self.a_periodic_amp;
        (a * (tau * x2).cos(), a * (tau * x1).cos())
    }
}

/// Potential confined to a strip next to the physical edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NearEdgePotential {
    /// `amplitude·exp(−(x₂−center)²/(2·width²))`, cut to zero for x₂ ≥ support.
    GaussianRidge {
        amplitude: f64,
        center: f64,
        width: f64,
        support: f64,
    },
}

impl NearEdgePotential {
    pub fn gaussian_ridge(amplitude: f64, center: f64, width: f64) -> Self {
        // 8 widths past the center the ridge is below 1e-13 of its peak.
        Self::GaussianRidge {
            amplitude,
            center,
            width,
            support: center + 8.0 * width,
        }
    }

    pub fn support(&self) -> f64 {
        match self {
            Self::GaussianRidge { support, .. } => *support,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::GaussianRidge {
                amplitude,
                center,
                width,
                support,
            } => {
                if ![amplitude, center, width, support].iter().all(|v| v.is_finite()) {
                    return config("near-edge potential parameters must be finite");
                }
                if width <= 0.0 || support <= 0.0 {
                    return config("near-edge potential needs positive width and support");
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, x2: f64) -> f64 {
        match *self {
            Self::GaussianRidge {
                amplitude,
                center,
                width,
                support,
            } => {
                if x2 < 0.0 || x2 >= support {
                    0.0
                } else {
                    let z = (x2 - center) / width;
                    amplitude * (-0.5 * z * z).exp()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ModelParams::landau(1.0, 1.0, 0.05).validate().is_ok());
        assert!(ModelParams::landau(1.0, 1.0, -0.1).validate().is_err());
        let mut p = ModelParams::landau(1.0, 1.0, 0.1);
        p.lambda_dis = -0.3;
        assert!(p.validate().is_err());
        p.lambda_dis = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_names() {
        let p: ModelParams =
            serde_json::from_str(r#"{"b":1.0,"V_amp":0.2,"lambda_dis":0.0,"mu":1.0,"T":0.05}"#)
                .unwrap();
        assert_eq!(p.v_amp, 0.2);
        assert_eq!(p.temperature, 0.05);
        assert_eq!(p.a_periodic_amp, 0.0);
    }

    #[test]
    fn potential_is_periodic() {
        let mut p = ModelParams::landau(1.0, 0.0, 0.0);
        p.v_amp = 0.3;
        for &(x, y) in &[(0.1, 0.7), (0.33, 2.5), (-1.2, 0.05)] {
            assert!((p.potential(x, y) - p.potential(x + 1.0, y - 2.0)).abs() < 1e-12);
        }
        assert!((p.potential(0.0, 0.0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn ridge_support() {
        let w = NearEdgePotential::gaussian_ridge(0.5, 1.0, 0.3);
        assert_eq!(w.value(1.0), 0.5);
        assert_eq!(w.value(w.support()), 0.0);
        assert_eq!(w.value(-0.1), 0.0);
        assert!(w.value(w.support() - 1e-9) < 1e-12);
    }
}
