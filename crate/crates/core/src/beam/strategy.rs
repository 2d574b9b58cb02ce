//! The four beam-training strategies and their per-sample rate rows.

use serde::{Deserialize, Serialize};

use super::codebook::{candidate_window, reference_angle, Codebook};
use super::rate::{beam_search, effective_rate, RateConfig, SearchResult};
use crate::covariance::{toeplitz_from_column, ToeplitzColumn};
use crate::nn::{aps_net_apply, col_net_apply, NetworkParams};
use crate::scenario::ChannelFreq;
use crate::spectrum::{aps, from_log_scale, similarity, Aps, DftGrid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Full RSU x full vehicle sweep.
    Exhaustive,
    /// Window around the radar APS peak.
    RadarOnly,
    /// Window around the peak of the APS predicted from the radar APS.
    ApsPred,
    /// Window around the peak of the APS of the predicted covariance column.
    CovPred,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Exhaustive,
        Strategy::RadarOnly,
        Strategy::ApsPred,
        Strategy::CovPred,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::RadarOnly => "radar_only",
            Strategy::ApsPred => "aps_pred",
            Strategy::CovPred => "cov_pred",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

/// RSU-side search window per strategy; the vehicle side is always swept fully.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Windows {
    pub radar_only: usize,
    pub aps_pred: usize,
    pub cov_pred: usize,
}

impl Default for Windows {
    fn default() -> Self {
        Self {
            radar_only: 12,
            aps_pred: 12,
            cov_pred: 2,
        }
    }
}

impl Windows {
    pub fn uniform(size: usize) -> Self {
        Self {
            radar_only: size,
            aps_pred: size,
            cov_pred: size,
        }
    }

    pub fn get(&self, strategy: Strategy) -> Option<usize> {
        match strategy {
            Strategy::Exhaustive => None,
            Strategy::RadarOnly => Some(self.radar_only),
            Strategy::ApsPred => Some(self.aps_pred),
            Strategy::CovPred => Some(self.cov_pred),
        }
    }
}

/// Codebooks, grid and link parameters shared by every sample.
#[derive(Clone, Debug)]
pub struct BeamSetup {
    /// RSU codebook.
    pub tx: Codebook,
    /// Vehicle codebook.
    pub rx: Codebook,
    pub grid: DftGrid,
    pub rate: RateConfig,
    pub windows: Windows,
    /// Window length `L` of the similarity score.
    pub similarity_window: usize,
}

/// Trained models available to the learned strategies.
#[derive(Clone, Copy, Debug, Default)]
pub struct Models<'a> {
    pub aps: Option<&'a NetworkParams>,
    pub col: Option<&'a NetworkParams>,
}

/// What a strategy sees of one test sample.
#[derive(Clone, Debug)]
pub struct LinkSample {
    pub id: u64,
    pub freq: ChannelFreq,
    pub radar_column: ToeplitzColumn,
    pub radar_aps_log: Aps,
    /// True communication APS (linear), for the similarity column.
    pub comm_aps: Aps,
}

/// One row of a rate report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrategyRow {
    pub id: u64,
    pub strategy: Strategy,
    pub result: SearchResult,
    pub rate_bps: f64,
    /// Similarity of the guiding APS to the true one; absent for exhaustive search.
    pub similarity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub strategy: Strategy,
    pub mean_rate: f64,
    pub mean_se: f64,
    pub mean_similarity: Option<f64>,
    pub rows: Vec<StrategyRow>,
}

/// Linear APS that steers a strategy's window, or `None` for exhaustive search.
pub fn guide_aps(strategy: Strategy, sample: &LinkSample, models: Models<'_>, grid: &DftGrid) -> Result<Option<Aps>> {
    let missing = |what: &str| Error::MissingModel(format!("strategy {strategy} needs the {what} model"));
    Ok(match strategy {
        Strategy::Exhaustive => None,
        Strategy::RadarOnly => Some(from_log_scale(&sample.radar_aps_log)),
        Strategy::ApsPred => {
            let net = models.aps.ok_or_else(|| missing("aps"))?;
            Some(from_log_scale(&aps_net_apply(net, &sample.radar_aps_log)?))
        }
        Strategy::CovPred => {
            let net = models.col.ok_or_else(|| missing("col"))?;
            let col = col_net_apply(net, &sample.radar_column)?;
            Some(aps(&toeplitz_from_column(&col), grid)?)
        }
    })
}

/// Runs one strategy on one sample.
pub fn run_strategy(sample: &LinkSample, strategy: Strategy, models: Models<'_>, setup: &BeamSetup) -> Result<StrategyRow> {
    let all_rx: Vec<usize> = (0..setup.rx.len()).collect();
    let guide = guide_aps(strategy, sample, models, &setup.grid)?;
    let tx_candidates = match (&guide, setup.windows.get(strategy)) {
        (Some(d), Some(size)) => candidate_window(&setup.tx, reference_angle(d, &setup.grid), size)?,
        _ => (0..setup.tx.len()).collect(),
    };
    let result = beam_search(&sample.freq, &setup.tx, &tx_candidates, &setup.rx, &all_rx, &setup.rate)?;
    Ok(StrategyRow {
        id: sample.id,
        strategy,
        result,
        rate_bps: effective_rate(result.spectral_efficiency, result.overhead_blocks, &setup.rate),
        similarity: guide.map(|d| similarity(&d, &sample.comm_aps, setup.similarity_window)),
    })
}

/// Means over the rows of a single strategy.
pub fn summarize(strategy: Strategy, rows: Vec<StrategyRow>) -> RateReport {
    let n = rows.len().max(1) as f64;
    let sims: Vec<f64> = rows.iter().filter_map(|r| r.similarity).collect();
    RateReport {
        strategy,
        mean_rate: rows.iter().map(|r| r.rate_bps).sum::<f64>() / n,
        mean_se: rows.iter().map(|r| r.result.spectral_efficiency).sum::<f64>() / n,
        mean_similarity: (!sims.is_empty()).then(|| sims.iter().sum::<f64>() / sims.len() as f64),
        rows,
    }
}
