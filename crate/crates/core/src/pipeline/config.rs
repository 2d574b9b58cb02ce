//! Experiment configuration: one JSON document holding every knob.

use serde::{Deserialize, Serialize};

use crate::beam::{RateConfig, Windows};
use crate::covariance::ProjectionMethod;
use crate::nn::TrainConfig;
use crate::scenario::GeneratorConfig;
use crate::spectrum::{GridSpacing, DEFAULT_FLOOR_DB};
use crate::{Error, Result};

/// How measured covariances are mapped onto the Toeplitz-PSD cone before
/// APS extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    /// Project both radar and communication covariances; when off they are
    /// only averaged along diagonals.
    pub enabled: bool,
    /// Relative stopping tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub method: ProjectionMethod,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            tol: 1e-6,
            max_iter: 500,
            method: ProjectionMethod::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub grid: GridSpacing,
    pub floor_db: f64,
    /// `L` of the similarity score.
    pub similarity_window: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            grid: GridSpacing::default(),
            floor_db: DEFAULT_FLOOR_DB,
            similarity_window: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    /// Phase-shifter resolution of both codebooks; `null` for ideal phases.
    pub phase_bits: Option<u32>,
    pub windows: Windows,
    /// Coherence-time multipliers of the rate sweep.
    pub coherence_sweep: Vec<f64>,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            phase_bits: Some(2),
            windows: Windows::default(),
            coherence_sweep: vec![0.25, 0.5, 1.0, 2.0, 4.0],
        }
    }
}

/// Record counts of the train / validation / test splits, assigned by id in
/// that order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train: 1200,
            val: 300,
            test: 500,
        }
    }
}

impl SplitConfig {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub generator: GeneratorConfig,
    pub projection: ProjectionConfig,
    pub spectrum: SpectrumConfig,
    pub train_aps: TrainConfig,
    pub train_col: TrainConfig,
    pub rate: RateConfig,
    pub beam: BeamConfig,
    pub split: SplitConfig,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            projection: ProjectionConfig::default(),
            spectrum: SpectrumConfig::default(),
            train_aps: TrainConfig::default(),
            train_col: TrainConfig::default(),
            rate: RateConfig::default(),
            beam: BeamConfig::default(),
            split: SplitConfig::default(),
            master_seed: 2024,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON document. Errors name the offending field
    /// path and the line/column where parsing stopped.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::InvalidConfig(format!(
                "field `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.generator.validate()?;
        self.train_aps.validate()?;
        self.train_col.validate()?;
        self.rate.validate()?;
        let n = self.generator.rsu.num_antennas;
        if n % 4 != 0 {
            return bad(format!("generator.rsu.num_antennas must be divisible by 4 for the APS model, got {n}"));
        }
        if self.rate.num_subcarriers != self.generator.num_subcarriers {
            return bad(format!(
                "rate.num_subcarriers ({}) differs from generator.num_subcarriers ({})",
                self.rate.num_subcarriers, self.generator.num_subcarriers
            ));
        }
        if !(self.projection.tol > 0.0) || self.projection.max_iter == 0 {
            return bad("projection needs tol > 0 and max_iter >= 1".into());
        }
        if self.spectrum.similarity_window == 0 || self.spectrum.similarity_window > n {
            return bad(format!("spectrum.similarity_window must lie in 1..={n}"));
        }
        if self.split.train == 0 || self.split.val == 0 || self.split.test == 0 {
            return bad("split sizes must all be >= 1".into());
        }
        if self.beam.phase_bits == Some(0) {
            return bad("beam.phase_bits must be >= 1 or null".into());
        }
        let w = &self.beam.windows;
        for (name, size) in [("radar_only", w.radar_only), ("aps_pred", w.aps_pred), ("cov_pred", w.cov_pred)] {
            if size == 0 || size > n {
                return bad(format!("beam.windows.{name} must lie in 1..={n}, got {size}"));
            }
        }
        if self.beam.coherence_sweep.iter().any(|m| !(*m > 0.0)) {
            return bad("beam.coherence_sweep multipliers must be positive".into());
        }
        Ok(())
    }
}
