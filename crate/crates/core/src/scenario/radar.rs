use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::array::{steering_vector, UlaConfig};
use crate::{CMatrix, Error, Result, C64};

/// Passive radar capture parameters at the RSU.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarSimConfig {
    /// Radar transmit power `P_r` in watts.
    pub tx_power: f64,
    /// Number of snapshots `I`.
    pub num_samples: usize,
    /// Sampling time `T_r` in seconds.
    pub sample_time: f64,
    /// Radar carrier `f_r` in Hz.
    pub carrier: f64,
    /// Receiver noise power per antenna, watts.
    pub noise_power: f64,
}

impl Default for RadarSimConfig {
    fn default() -> Self {
        Self {
            tx_power: 1.0,
            num_samples: 256,
            sample_time: 1e-9,
            carrier: 76e9,
            noise_power: 1e-12,
        }
    }
}

impl RadarSimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power", self.tx_power),
            ("sample_time", self.sample_time),
            ("carrier", self.carrier),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("radar {name} must be positive, got {v}")));
            }
        }
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("radar num_samples must be >= 1".into()));
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidConfig("radar noise_power must be >= 0".into()));
        }
        Ok(())
    }
}

/// A far-field radar reflector seen by the RSU array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarSource {
    pub angle: f64,
    pub gain: C64,
}

/// Draws from `CN(0, power)`.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, power: f64) -> C64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// Snapshot matrix `Y` (`N x I`) of a constant-envelope radar waveform.
///
/// Column `i` is `sum_s sqrt(P_r) gain_s exp(j psi_si) a(angle_s) + noise`.
/// The inter-element delay of a half-wavelength array at the radar carrier
/// is exactly the array steering phase, so it enters through `a(angle)`. The
/// common-distance phase `psi_si` is drawn i.i.d. uniform per source and
/// sample.
pub fn simulate_radar_snapshots<R: Rng + ?Sized>(
    sources: &[RadarSource],
    rx: &UlaConfig,
    cfg: &RadarSimConfig,
    rng: &mut R,
) -> CMatrix {
    let n = rx.num_antennas;
    let samples = cfg.num_samples;
    let amp = cfg.tx_power.sqrt();
    let responses: Vec<_> = sources
        .iter()
        .map(|s| steering_vector(rx, s.angle) * (s.gain * amp))
        .collect();
    let mut y = CMatrix::zeros(n, samples);
    for i in 0..samples {
        let mut col = y.column_mut(i);
        for resp in &responses {
            let rot = C64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI);
            col.axpy(rot, resp, C64::new(1.0, 0.0));
        }
        if cfg.noise_power > 0.0 {
            for z in col.iter_mut() {
                *z += complex_gaussian(rng, cfg.noise_power);
            }
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(noise: f64, samples: usize) -> RadarSimConfig {
        RadarSimConfig {
            tx_power: 1.0,
            num_samples: samples,
            sample_time: 1e-9,
            carrier: 76e9,
            noise_power: noise,
        }
    }

    #[test]
    fn single_source_columns_are_rotations() {
        let rx = UlaConfig::half_wavelength(8);
        let gain = C64::new(0.4, -0.3);
        let src = [RadarSource { angle: 0.37, gain }];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = simulate_radar_snapshots(&src, &rx, &cfg(0.0, 20), &mut rng);
        let base = steering_vector(&rx, 0.37) * gain;
        for i in 0..20 {
            let col = y.column(i);
            let rot = col[0] / base[0];
            assert!((rot.norm() - 1.0).abs() < 1e-12);
            for n in 0..8 {
                assert!((col[n] - base[n] * rot).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn no_sources_no_noise_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = simulate_radar_snapshots(&[], &UlaConfig::half_wavelength(4), &cfg(0.0, 7), &mut rng);
        assert_eq!(y.shape(), (4, 7));
        assert!(y.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn noiseless_rank_bounded_by_source_count() {
        let rx = UlaConfig::half_wavelength(16);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in 1..=3 {
            let src: Vec<_> = (0..k)
                .map(|s| RadarSource {
                    angle: -0.8 + 0.5 * s as f64,
                    gain: C64::new(1.0 + s as f64, 0.2),
                })
                .collect();
            let y = simulate_radar_snapshots(&src, &rx, &cfg(0.0, 40), &mut rng);
            let sv = y.singular_values();
            let rank = sv.iter().filter(|&&s| s > 1e-8 * sv.max()).count();
            assert!(rank <= k, "rank {rank} > {k}");
        }
    }

    #[test]
    fn noise_power_matches() {
        let rx = UlaConfig::half_wavelength(8);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = simulate_radar_snapshots(&[], &rx, &cfg(2.0, 4000), &mut rng);
        let per_entry = y.norm_squared() / (8.0 * 4000.0);
        assert!((per_entry - 2.0).abs() < 0.05, "{per_entry}");
    }

    #[test]
    fn validation() {
        assert!(cfg(0.0, 1).validate().is_ok());
        assert!(cfg(-1.0, 1).validate().is_err());
        assert!(cfg(0.0, 0).validate().is_err());
        assert!(RadarSimConfig { carrier: 0.0, ..cfg(0.0, 1) }.validate().is_err());
    }
}
