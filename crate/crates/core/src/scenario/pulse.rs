use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Raised-cosine pulse shaping and the number of channel taps kept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseConfig {
    pub rolloff: f64,
    /// Signaling interval `T_c` in seconds.
    pub interval: f64,
    pub num_taps: usize,
}

impl Default for PulseConfig {
    /// Rolloff 0.4 at `T_c = 1 / 491.52 MHz`, 16 taps.
    fn default() -> Self {
        Self {
            rolloff: 0.4,
            interval: 1.0 / 491.52e6,
            num_taps: 16,
        }
    }
}

impl PulseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::InvalidConfig(format!(
                "rolloff must lie in [0, 1], got {}",
                self.rolloff
            )));
        }
        if !(self.interval > 0.0 && self.interval.is_finite()) {
            return Err(Error::InvalidConfig("pulse interval must be positive".into()));
        }
        if self.num_taps == 0 {
            return Err(Error::InvalidConfig("num_taps must be >= 1".into()));
        }
        Ok(())
    }

    /// Pulse value at delay `t` seconds.
    pub fn eval(&self, t: f64) -> f64 {
        raised_cosine(t, self.rolloff, self.interval)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Raised-cosine impulse response normalized to 1 at `t = 0`.
///
/// The removable singularity at `|t| = interval / (2 rolloff)` is replaced by
/// its limit `(pi / 4) sinc(1 / (2 rolloff))`.
pub fn raised_cosine(t: f64, rolloff: f64, interval: f64) -> f64 {
    let x = t / interval;
    let edge = 2.0 * rolloff * x;
    if rolloff > 0.0 && (edge.abs() - 1.0).abs() < 1e-10 {
        return PI / 4.0 * sinc(1.0 / (2.0 * rolloff));
    }
    sinc(x) * (PI * rolloff * x).cos() / (1.0 - edge * edge)
}
