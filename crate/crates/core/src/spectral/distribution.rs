use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Interpolation between 1 and 0 inside the gap window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothOrder {
    /// `3t² − 2t³`, C¹.
    Cubic,
    /// `10t³ − 15t⁴ + 6t⁵`, C².
    #[default]
    Quintic,
    /// `35t⁴ − 84t⁵ + 70t⁶ − 20t⁷`, C³.
    Septic,
}

impl SmoothOrder {
    /// Smoothstep rising from s(0) = 0 to s(1) = 1.
    pub fn step(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Self::Cubic => t * t * (3.0 - 2.0 * t),
            Self::Quintic => t * t * t * (10.0 + t * (-15.0 + 6.0 * t)),
            Self::Septic => {
                let t4 = t * t * t * t;
                t4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
            }
        }
    }

    pub fn step_prime(self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        let u = t * (1.0 - t);
        match self {
            Self::Cubic => 6.0 * u,
            Self::Quintic => 30.0 * u * u,
            Self::Septic => 140.0 * u * u * u,
        }
    }
}

/// The function family F applied to Hamiltonians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Grand-canonical potential `−T·ln(1 + e^{−(x−μ)/T})`.
    Gcp { mu: f64, temperature: f64 },
    /// Fermi–Dirac `(e^{(x−μ)/T} + 1)^{−1}`.
    Fd { mu: f64, temperature: f64 },
    /// `d fd/dx = −fd·(1 − fd)/T`.
    FdPrime { mu: f64, temperature: f64 },
    /// 1 below `e_minus`, 0 above `e_plus`, smoothstep in between.
    GappedF0 {
        e_minus: f64,
        e_plus: f64,
        #[serde(default)]
        order: SmoothOrder,
    },
    GaussianTest { center: f64, width: f64 },
    Constant { value: f64 },
}

fn fd(z: f64) -> f64 {
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// `ln(1 + e^y)` without overflow.
fn softplus(y: f64) -> f64 {
    y.max(0.0) + (-y.abs()).exp().ln_1p()
}

impl DistributionSpec {
    pub fn gcp(mu: f64, temperature: f64) -> Self {
        Self::Gcp { mu, temperature }
    }

    pub fn fd(mu: f64, temperature: f64) -> Self {
        Self::Fd { mu, temperature }
    }

    pub fn fd_prime(mu: f64, temperature: f64) -> Self {
        Self::FdPrime { mu, temperature }
    }

    pub fn gapped(e_minus: f64, e_plus: f64) -> Self {
        Self::GappedF0 {
            e_minus,
            e_plus,
            order: SmoothOrder::Quintic,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gcp { .. } => "gcp",
            Self::Fd { .. } => "fd",
            Self::FdPrime { .. } => "fd_prime",
            Self::GappedF0 { .. } => "gapped_f0",
            Self::GaussianTest { .. } => "gaussian_test",
            Self::Constant { .. } => "constant",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gcp { mu, temperature }
            | Self::Fd { mu, temperature }
            | Self::FdPrime { mu, temperature } => {
                if !mu.is_finite() || !temperature.is_finite() {
                    return config("distribution parameters must be finite");
                }
                if temperature <= 0.0 {
                    return config(format!(
                        "{} needs T > 0 (got {temperature}); use gapped_f0 at zero temperature",
                        self.name()
                    ));
                }
            }
            Self::GappedF0 { e_minus, e_plus, .. } => {
                if !(e_minus.is_finite() && e_plus.is_finite() && e_minus < e_plus) {
                    return config(format!("gap window [{e_minus}, {e_plus}] is empty"));
                }
            }
            Self::GaussianTest { center, width } => {
                if !(center.is_finite() && width.is_finite() && width > 0.0) {
                    return config("gaussian_test needs a positive width");
                }
            }
            Self::Constant { value } => {
                if !value.is_finite() {
                    return config("constant distribution must be finite");
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Gcp { mu, temperature } => -temperature * softplus(-(x - mu) / temperature),
            Self::Fd { mu, temperature } => fd((x - mu) / temperature),
            Self::FdPrime { mu, temperature } => {
                let f = fd((x - mu) / temperature);
                -f * (1.0 - f) / temperature
            }
            Self::GappedF0 {
                e_minus,
                e_plus,
                order,
            } => 1.0 - order.step((x - e_minus) / (e_plus - e_minus)),
            Self::GaussianTest { center, width } => {
                let z = (x - center) / width;
                (-0.5 * z * z).exp()
            }
            Self::Constant { value } => value,
        }
    }

    /// Analytic first derivative in x.
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Self::Gcp { mu, temperature } => fd((x - mu) / temperature),
            Self::Fd { mu, temperature } => {
                let f = fd((x - mu) / temperature);
                -f * (1.0 - f) / temperature
            }
            Self::FdPrime { mu, temperature } => {
                let f = fd((x - mu) / temperature);
                let d = -f * (1.0 - f) / temperature;
                -d * (1.0 - 2.0 * f) / temperature
            }
            Self::GappedF0 {
                e_minus,
                e_plus,
                order,
            } => {
                let w = e_plus - e_minus;
                -order.step_prime((x - e_minus) / w) / w
            }
            Self::GaussianTest { center, width } => {
                let z = (x - center) / width;
                -z / width * (-0.5 * z * z).exp()
            }
            Self::Constant { .. } => 0.0,
        }
    }

    /// Derivative as another member of the family, where one exists.
    pub fn derivative_spec(&self) -> Option<Self> {
        match *self {
            Self::Gcp { mu, temperature } => Some(Self::Fd { mu, temperature }),
            Self::Fd { mu, temperature } => Some(Self::FdPrime { mu, temperature }),
            Self::Constant { .. } => Some(Self::Constant { value: 0.0 }),
            _ => None,
        }
    }

    pub fn with_mu(&self, new_mu: f64) -> Self {
        match *self {
            Self::Gcp { temperature, .. } => Self::Gcp {
                mu: new_mu,
                temperature,
            },
            Self::Fd { temperature, .. } => Self::Fd {
                mu: new_mu,
                temperature,
            },
            Self::FdPrime { temperature, .. } => Self::FdPrime {
                mu: new_mu,
                temperature,
            },
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fd_two_level_values() {
        let f = DistributionSpec::fd(0.5, 0.25);
        assert!((f.eval(0.0) - 0.8808).abs() < 5e-5);
        assert!((f.eval(1.0) - 0.1192).abs() < 5e-5);
    }

    #[test]
    fn zero_temperature_rejected() {
        assert!(DistributionSpec::fd(0.0, 0.0).validate().is_err());
        assert!(DistributionSpec::gcp(0.0, 0.0).validate().is_err());
        assert!(DistributionSpec::gapped(0.5, 1.5).validate().is_ok());
        assert!(DistributionSpec::gapped(1.5, 0.5).validate().is_err());
    }

    #[test]
    fn gapped_endpoints() {
        for order in [SmoothOrder::Cubic, SmoothOrder::Quintic, SmoothOrder::Septic] {
            let f = DistributionSpec::GappedF0 {
                e_minus: 0.7,
                e_plus: 1.3,
                order,
            };
            assert_eq!(f.eval(0.7), 1.0);
            assert_eq!(f.eval(-5.0), 1.0);
            assert_eq!(f.eval(1.3), 0.0);
            assert_eq!(f.eval(9.0), 0.0);
            assert_eq!(f.derivative(0.7), 0.0);
            assert_eq!(f.derivative(1.3), 0.0);
        }
    }

    #[test]
    fn extreme_arguments_are_finite() {
        let g = DistributionSpec::gcp(0.0, 1e-3);
        assert!(g.eval(-50.0).is_finite() && (g.eval(-50.0) + 50.0).abs() < 1e-12);
        assert_eq!(g.eval(50.0), -0.0);
        let f = DistributionSpec::fd(0.0, 1e-3);
        assert_eq!(f.eval(-50.0), 1.0);
        assert_eq!(f.eval(50.0), 0.0);
    }

    fn central(f: &DistributionSpec, x: f64) -> f64 {
        let d = 1e-5;
        (f.eval(x + d) - f.eval(x - d)) / (2.0 * d)
    }

    proptest! {
        // |x − μ|/T ≤ 20 keeps the exact value representably inside (0, 1).
        #[test]
        fn fd_in_open_unit_interval(x in -3.0f64..3.0, mu in -1.0f64..1.0, t in 0.2f64..2.0) {
            let v = DistributionSpec::fd(mu, t).eval(x);
            prop_assert!(v > 0.0 && v < 1.0);
        }

        #[test]
        fn analytic_derivatives_match_differences(x in -2.0f64..2.0, mu in -1.0f64..1.0, t in 0.1f64..1.0) {
            for f in [
                DistributionSpec::gcp(mu, t),
                DistributionSpec::fd(mu, t),
                DistributionSpec::fd_prime(mu, t),
                DistributionSpec::GaussianTest { center: mu, width: t },
            ] {
                let scale = 1.0 / (t * t * t);
                prop_assert!((f.derivative(x) - central(&f, x)).abs() < 1e-6 * scale);
            }
        }

        #[test]
        fn gcp_derivative_is_fd(x in -2.0f64..2.0, mu in -1.0f64..1.0, t in 0.1f64..1.0) {
            let g = DistributionSpec::gcp(mu, t);
            prop_assert!((central(&g, x) - DistributionSpec::fd(mu, t).eval(x)).abs() < 1e-8);
        }

        #[test]
        fn gapped_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let f = DistributionSpec::gapped(0.5, 1.5);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(f.eval(0.5 + lo) >= f.eval(0.5 + hi));
            prop_assert!(f.derivative(0.5 + a) <= 0.0);
        }
    }
}
