use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::array::{steering_vector, UlaConfig};
use super::pulse::PulseConfig;
use crate::{CMatrix, Error, Result, C64};

/// One propagation path inside a cluster, relative to the cluster means.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRay {
    pub gain: C64,
    pub rel_delay: f64,
    pub rel_aoa_shift: f64,
    pub rel_aod_shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathCluster {
    pub mean_delay: f64,
    /// Mean angle at the RSU (transmit) array.
    pub mean_aoa: f64,
    /// Mean angle at the vehicle (receive) array.
    pub mean_aod: f64,
    pub rays: Vec<PathRay>,
}

impl PathCluster {
    pub fn power(&self) -> f64 {
        self.rays.iter().map(|r| r.gain.norm_sqr()).sum()
    }
}

/// Time-domain channel: `taps[d]` is the `N_V x N_RSU` matrix at delay `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelTaps {
    #[serde(with = "matrix_list")]
    pub taps: Vec<CMatrix>,
}

/// Frequency-domain channel: `response[k]` is the matrix on subcarrier `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelFreq {
    pub response: Vec<CMatrix>,
}

impl ChannelTaps {
    pub fn num_taps(&self) -> usize {
        self.taps.len()
    }

    /// `(rows, cols)` of every tap, i.e. `(N_V, N_RSU)`.
    pub fn dims(&self) -> (usize, usize) {
        self.taps.first().map_or((0, 0), |m| m.shape())
    }
}

impl ChannelFreq {
    pub fn num_subcarriers(&self) -> usize {
        self.response.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.response.first().map_or((0, 0), |m| m.shape())
    }
}

/// Delay-domain MIMO channel of a clustered geometric model.
///
/// `H[d] = sum_c sum_r gain * p(d T_c - tau_c - tau_r) * a_rx(aod) a_tx(aoa)^H`
/// for `d = 0..num_taps`, with `tx` the RSU array and `rx` the vehicle array.
pub fn channel_taps(
    clusters: &[PathCluster],
    tx: &UlaConfig,
    rx: &UlaConfig,
    pulse: &PulseConfig,
) -> Result<ChannelTaps> {
    if clusters.is_empty() {
        return Err(Error::InvalidConfig("channel needs at least one cluster".into()));
    }
    let (n_rx, n_tx) = (rx.num_antennas, tx.num_antennas);
    let mut taps = vec![CMatrix::zeros(n_rx, n_tx); pulse.num_taps];
    for cluster in clusters {
        for ray in &cluster.rays {
            let a_tx = steering_vector(tx, cluster.mean_aoa + ray.rel_aoa_shift);
            let a_rx = steering_vector(rx, cluster.mean_aod + ray.rel_aod_shift);
            if a_tx.len() != n_tx || a_rx.len() != n_rx {
                return Err(Error::DimensionMismatch(
                    "steering vector length disagrees with array config".into(),
                ));
            }
            let outer = &a_rx * a_tx.adjoint();
            let delay = cluster.mean_delay + ray.rel_delay;
            for (d, tap) in taps.iter_mut().enumerate() {
                let p = pulse.eval(d as f64 * pulse.interval - delay);
                if p != 0.0 {
                    add_scaled(tap, ray.gain * p, &outer);
                }
            }
        }
    }
    Ok(ChannelTaps { taps })
}

/// `H[k] = sum_d H[d] exp(-j 2 pi k d / K)` for `k = 0..num_subcarriers`.
pub fn channel_freq_response(taps: &ChannelTaps, num_subcarriers: usize) -> Result<ChannelFreq> {
    if num_subcarriers == 0 {
        return Err(Error::InvalidConfig("need at least one subcarrier".into()));
    }
    let (rows, cols) = taps.dims();
    let k_total = num_subcarriers as f64;
    let response = (0..num_subcarriers)
        .map(|k| {
            let mut h = CMatrix::zeros(rows, cols);
            for (d, tap) in taps.taps.iter().enumerate() {
                let phase = -2.0 * PI * (k * d) as f64 / k_total;
                add_scaled(&mut h, C64::from_polar(1.0, phase), tap);
            }
            h
        })
        .collect();
    Ok(ChannelFreq { response })
}

fn add_scaled(dst: &mut CMatrix, alpha: C64, src: &CMatrix) {
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d += alpha * s;
    }
}

/// Compact serde form for a list of complex matrices: row-major
/// `[re, im]` pairs plus dimensions.
pub(crate) mod matrix_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::{CMatrix, C64};

    #[derive(Serialize, Deserialize)]
    struct Packed {
        rows: usize,
        cols: usize,
        data: Vec<Vec<C64>>,
    }

    pub fn serialize<S: Serializer>(list: &[CMatrix], s: S) -> Result<S::Ok, S::Error> {
        let (rows, cols) = list.first().map_or((0, 0), |m| m.shape());
        let data = list
            .iter()
            .map(|m| {
                let mut flat = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    for c in 0..cols {
                        flat.push(m[(r, c)]);
                    }
                }
                flat
            })
            .collect();
        Packed { rows, cols, data }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMatrix>, D::Error> {
        let packed = Packed::deserialize(d)?;
        packed
            .data
            .into_iter()
            .map(|flat| {
                if flat.len() != packed.rows * packed.cols {
                    return Err(serde::de::Error::custom(format!(
                        "tap has {} entries, expected {}x{}",
                        flat.len(),
                        packed.rows,
                        packed.cols
                    )));
                }
                Ok(CMatrix::from_row_slice(packed.rows, packed.cols, &flat))
            })
            .collect()
    }
}
