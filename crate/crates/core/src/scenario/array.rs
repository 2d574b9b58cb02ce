use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{CVector, Error, Result, C64};

fn half_wavelength() -> f64 {
    0.5
}

/// Uniform linear array with `num_antennas` elements spaced `spacing`
/// wavelengths apart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UlaConfig {
    pub num_antennas: usize,
    #[serde(default = "half_wavelength")]
    pub spacing: f64,
}

impl UlaConfig {
    pub fn new(num_antennas: usize, spacing: f64) -> Result<Self> {
        let cfg = Self {
            num_antennas,
            spacing,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn half_wavelength(num_antennas: usize) -> Self {
        Self {
            num_antennas,
            spacing: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(Error::InvalidConfig("num_antennas must be >= 1".into()));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        Ok(())
    }

    pub fn steering_vector(&self, angle: f64) -> CVector {
        steering_vector(self, angle)
    }
}

/// Array response `a(angle)`: entry `n` is `exp(j n 2 pi spacing sin(angle))`.
pub fn steering_vector(cfg: &UlaConfig, angle: f64) -> CVector {
    let step = 2.0 * PI * cfg.spacing * angle.sin();
    CVector::from_iterator(
        cfg.num_antennas,
        (0..cfg.num_antennas).map(|n| C64::from_polar(1.0, step * n as f64)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: &CVector, b: &[C64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x.re, y.re, epsilon = 1e-12);
            assert_abs_diff_eq!(x.im, y.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn broadside_is_all_ones() {
        let a = steering_vector(&UlaConfig::half_wavelength(4), 0.0);
        close(&a, &[C64::new(1.0, 0.0); 4]);
    }

    #[test]
    fn endfire_alternates_sign() {
        let a = steering_vector(&UlaConfig::half_wavelength(2), PI / 2.0);
        close(&a, &[C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
    }

    #[test]
    fn thirty_degrees_gives_quarter_turn() {
        let a = steering_vector(&UlaConfig::half_wavelength(2), PI / 6.0);
        close(&a, &[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
    }

    #[test]
    fn unit_modulus_and_norm() {
        let cfg = UlaConfig::new(37, 0.7).unwrap();
        for k in 0..50 {
            let angle = -1.5 + 3.0 * k as f64 / 50.0;
            let a = cfg.steering_vector(angle);
            for z in a.iter() {
                assert_abs_diff_eq!(z.norm(), 1.0, epsilon = 1e-12);
            }
            assert_abs_diff_eq!(a.norm_squared(), 37.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(UlaConfig::new(0, 0.5).is_err());
        assert!(UlaConfig::new(4, 0.0).is_err());
        assert!(UlaConfig::new(4, f64::NAN).is_err());
    }
}
