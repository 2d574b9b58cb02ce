//! Spectral efficiency, exhaustive pair search and overhead-aware rate.

use serde::{Deserialize, Serialize};

use super::codebook::Codebook;
use crate::scenario::ChannelFreq;
use crate::{CVector, Error, Result};

const BOLTZMANN: f64 = 1.380_649e-23;

/// Link parameters for rate evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    /// Hz.
    pub bandwidth: f64,
    /// Total transmit power in watts, split evenly over subcarriers.
    pub tx_power: f64,
    /// Noise power per subcarrier in watts.
    pub noise_power: f64,
    /// Duration of one training block, seconds.
    pub symbol_period: f64,
    pub coherence_time: f64,
    pub num_subcarriers: usize,
}

impl RateConfig {
    /// Thermal noise `k T B` at 290 K with the given noise figure.
    pub fn thermal_noise(bandwidth: f64, noise_figure_db: f64) -> f64 {
        BOLTZMANN * 290.0 * bandwidth * 10f64.powf(noise_figure_db / 10.0)
    }

    /// `T_coh = 4 N_RSU N_V T_sym`.
    pub fn with_array_coherence(mut self, n_rsu: usize, n_v: usize) -> Self {
        self.coherence_time = (4 * n_rsu * n_v) as f64 * self.symbol_period;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("bandwidth", self.bandwidth),
            ("tx_power", self.tx_power),
            ("noise_power", self.noise_power),
            ("symbol_period", self.symbol_period),
            ("coherence_time", self.coherence_time),
        ];
        for (name, v) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("rate.{name} must be positive, got {v}")));
            }
        }
        if self.num_subcarriers == 0 {
            return Err(Error::InvalidConfig("rate.num_subcarriers must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for RateConfig {
    fn default() -> Self {
        let bandwidth = 491.52e6;
        Self {
            bandwidth,
            tx_power: 10f64.powf((24.0 - 30.0) / 10.0),
            noise_power: Self::thermal_noise(bandwidth, 7.0),
            symbol_period: 4.7667e-6,
            coherence_time: 0.0,
            num_subcarriers: 64,
        }
        .with_array_coherence(64, 16)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub tx_index: usize,
    pub rx_index: usize,
    /// bits/s/Hz of the selected pair.
    pub spectral_efficiency: f64,
    pub overhead_blocks: usize,
}

fn check_dims(ch: &ChannelFreq, f: &CVector, w: &CVector) -> Result<()> {
    let (rows, cols) = ch.dims();
    if rows != w.len() || cols != f.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel is {rows}x{cols}, beams are rx {} / tx {}",
            w.len(),
            f.len()
        )));
    }
    Ok(())
}

/// `|w^H H[k] f|^2` for every subcarrier.
pub fn beam_gains(ch: &ChannelFreq, f: &CVector, w: &CVector) -> Result<Vec<f64>> {
    check_dims(ch, f, w)?;
    Ok(ch.response.iter().map(|h| w.dotc(&(h * f)).norm_sqr()).collect())
}

/// `(1/K) sum_k log2(1 + P_c / (K sigma^2) |w^H H[k] f|^2)`.
pub fn spectral_efficiency(ch: &ChannelFreq, f: &CVector, w: &CVector, cfg: &RateConfig) -> Result<f64> {
    let gains = beam_gains(ch, f, w)?;
    if gains.is_empty() {
        return Ok(0.0);
    }
    let k = gains.len() as f64;
    let snr = cfg.tx_power / (k * cfg.noise_power);
    Ok(gains.iter().map(|g| (1.0 + snr * g).log2()).sum::<f64>() / k)
}

/// Picks the candidate pair with the largest received energy summed over
/// subcarriers; ties go to the smallest `(tx, rx)`.
pub fn beam_search(
    ch: &ChannelFreq,
    tx_cb: &Codebook,
    tx_candidates: &[usize],
    rx_cb: &Codebook,
    rx_candidates: &[usize],
    cfg: &RateConfig,
) -> Result<SearchResult> {
    if tx_candidates.is_empty() || rx_candidates.is_empty() {
        return Err(Error::InvalidConfig("beam search needs candidates on both sides".into()));
    }
    if let Some(&bad) = tx_candidates.iter().find(|&&i| i >= tx_cb.len()) {
        return Err(Error::DimensionMismatch(format!("tx beam {bad} outside codebook")));
    }
    if let Some(&bad) = rx_candidates.iter().find(|&&i| i >= rx_cb.len()) {
        return Err(Error::DimensionMismatch(format!("rx beam {bad} outside codebook")));
    }
    let mut tx_sorted = tx_candidates.to_vec();
    tx_sorted.sort_unstable();
    let mut rx_sorted = rx_candidates.to_vec();
    rx_sorted.sort_unstable();

    let mut best = (f64::NEG_INFINITY, 0, 0);
    for &t in &tx_sorted {
        let f = &tx_cb.codewords[t];
        check_dims(ch, f, &rx_cb.codewords[rx_sorted[0]])?;
        // H[k] f once per transmit beam
        let hf: Vec<CVector> = ch.response.iter().map(|h| h * f).collect();
        for &r in &rx_sorted {
            let w = &rx_cb.codewords[r];
            let energy: f64 = hf.iter().map(|v| w.dotc(v).norm_sqr()).sum();
            if energy > best.0 {
                best = (energy, t, r);
            }
        }
    }
    let (_, t, r) = best;
    Ok(SearchResult {
        tx_index: t,
        rx_index: r,
        spectral_efficiency: spectral_efficiency(ch, &tx_cb.codewords[t], &rx_cb.codewords[r], cfg)?,
        overhead_blocks: tx_candidates.len() * rx_candidates.len(),
    })
}

/// Fraction of the coherence time left for data, `max(0, 1 - blocks T_sym / T_coh)`.
pub fn overhead_factor(overhead_blocks: usize, cfg: &RateConfig) -> f64 {
    (1.0 - overhead_blocks as f64 * (cfg.symbol_period / cfg.coherence_time)).max(0.0)
}

/// `overhead_factor * B * se` in bits/s.
pub fn effective_rate(se: f64, overhead_blocks: usize, cfg: &RateConfig) -> f64 {
    overhead_factor(overhead_blocks, cfg) * cfg.bandwidth * se
}
