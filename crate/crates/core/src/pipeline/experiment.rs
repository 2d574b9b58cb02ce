//! In-memory experiment steps: training, similarity evaluation and rate
//! evaluation over dataset records.

use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::dataset::{experiment_grid, DatasetRecord, SplitRole};
use crate::beam::{codebook_for, effective_rate, run_strategy, BeamSetup, Models, Strategy, StrategyRow, Windows};
use crate::nn::{
    aps_net_apply, col_net_apply, train, ColApsOperator, ModelKind, NetworkParams, Objective, Samples, TrainConfig,
    TrainOutcome,
};
use crate::covariance::toeplitz_from_column;
use crate::spectrum::{aps, from_log_scale, similarity, DftGrid};
use crate::{Error, Result};

/// Records of one split, in file order.
pub fn split_records<'a>(cfg: &ExperimentConfig, records: &'a [DatasetRecord], role: SplitRole) -> Vec<&'a DatasetRecord> {
    records.iter().filter(|r| cfg.split.role(r.id) == role).collect()
}

/// The test split, or every record when the file holds no test ids (a
/// stand-alone test file).
pub fn evaluation_records<'a>(cfg: &ExperimentConfig, records: &'a [DatasetRecord]) -> Vec<&'a DatasetRecord> {
    let test = split_records(cfg, records, SplitRole::Test);
    if test.is_empty() {
        records.iter().collect()
    } else {
        test
    }
}

/// Network inputs and loss targets. The APS model maps radar dB spectra to
/// communication dB spectra; the column model maps the two-channel radar
/// column to a column whose APS should match the linear communication APS.
pub fn training_samples(model: ModelKind, records: &[&DatasetRecord], grid: &DftGrid) -> Result<Samples> {
    let mut s = Samples::default();
    for r in records {
        match model {
            ModelKind::Aps => {
                s.inputs.push(r.radar_aps_log.values.clone());
                s.targets.push(r.comm_aps_log.values.clone());
            }
            ModelKind::Col => {
                s.inputs.push(r.radar_cov_column.to_channels());
                s.targets.push(r.comm_aps_from_column(grid)?.values);
            }
        }
    }
    Ok(s)
}

pub fn objective(model: ModelKind, grid: &DftGrid) -> Result<Objective> {
    Ok(match model {
        ModelKind::Aps => Objective::Mse,
        ModelKind::Col => Objective::ColAps(ColApsOperator::new(grid)?),
    })
}

pub fn train_config(cfg: &ExperimentConfig, model: ModelKind) -> &TrainConfig {
    match model {
        ModelKind::Aps => &cfg.train_aps,
        ModelKind::Col => &cfg.train_col,
    }
}

/// Trains one model on the given records. The input normalizer is the
/// training set's max-abs value (inputs and targets for the APS model,
/// inputs only for the column model).
pub fn train_model(
    cfg: &ExperimentConfig,
    model: ModelKind,
    train_records: &[&DatasetRecord],
    val_records: &[&DatasetRecord],
    tcfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let grid = experiment_grid(cfg)?;
    let train_set = training_samples(model, train_records, &grid)?;
    let val_set = training_samples(model, val_records, &grid)?;
    let n = cfg.generator.rsu.num_antennas;
    let mut init = NetworkParams::init(model, n, &mut tcfg.init_rng())?;
    init.normalizer = match model {
        ModelKind::Aps => train_set.max_abs(),
        ModelKind::Col => train_set.input_max_abs(),
    };
    train(init, &objective(model, &grid)?, &train_set, &val_set, tcfg)
}

/// Checks that loaded parameters fit the experiment's array.
pub fn check_model(cfg: &ExperimentConfig, params: &NetworkParams, want: ModelKind) -> Result<()> {
    if params.model != want {
        return Err(Error::DimensionMismatch(format!(
            "expected {} model parameters, got {}",
            want.name(),
            params.model.name()
        )));
    }
    let n = cfg.generator.rsu.num_antennas;
    let out = params.output_shape(&want.input_shape(n))?;
    if out != want.input_shape(n) {
        return Err(Error::DimensionMismatch(format!(
            "{} model maps {:?} to {out:?} for {n} antennas",
            want.name(),
            want.input_shape(n)
        )));
    }
    Ok(())
}

/// Similarity to the true communication APS of each predictor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimilarityRow {
    pub id: u64,
    pub radar: f64,
    pub aps_pred: Option<f64>,
    pub cov_pred: Option<f64>,
}

pub fn evaluate_similarity(
    cfg: &ExperimentConfig,
    records: &[&DatasetRecord],
    models: Models<'_>,
) -> Result<Vec<SimilarityRow>> {
    let grid = experiment_grid(cfg)?;
    let l = cfg.spectrum.similarity_window;
    if let Some(p) = models.aps {
        check_model(cfg, p, ModelKind::Aps)?;
    }
    if let Some(p) = models.col {
        check_model(cfg, p, ModelKind::Col)?;
    }
    records
        .par_iter()
        .map(|r| {
            let truth = r.comm_aps();
            let aps_pred = models
                .aps
                .map(|p| aps_net_apply(p, &r.radar_aps_log).map(|d| similarity(&from_log_scale(&d), &truth, l)))
                .transpose()?;
            let cov_pred = models
                .col
                .map(|p| -> Result<f64> {
                    let col = col_net_apply(p, &r.radar_cov_column)?;
                    Ok(similarity(&aps(&toeplitz_from_column(&col), &grid)?, &truth, l))
                })
                .transpose()?;
            Ok(SimilarityRow {
                id: r.id,
                radar: similarity(&r.radar_aps(), &truth, l),
                aps_pred,
                cov_pred,
            })
        })
        .collect()
}

/// Mean and nearest-rank percentiles of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

/// Nearest-rank percentile: the `ceil(p/100 * n)`-th smallest value.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn summarize_values(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(Summary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        p10: nearest_rank(&sorted, 10.0),
        p50: nearest_rank(&sorted, 50.0),
        p90: nearest_rank(&sorted, 90.0),
    })
}

/// Codebooks, grid and rate parameters of an experiment, with an optional
/// window override applied to every windowed strategy.
pub fn beam_setup(cfg: &ExperimentConfig, window: Option<usize>) -> Result<BeamSetup> {
    let n = cfg.generator.rsu.num_antennas;
    let windows = match window {
        Some(w) if w == 0 || w > n => {
            return Err(Error::InvalidConfig(format!("window must lie in 1..={n}, got {w}")));
        }
        Some(w) => Windows::uniform(w),
        None => cfg.beam.windows.clone(),
    };
    Ok(BeamSetup {
        tx: codebook_for(&cfg.generator.rsu, cfg.beam.phase_bits)?,
        rx: codebook_for(&cfg.generator.vehicle, cfg.beam.phase_bits)?,
        grid: experiment_grid(cfg)?,
        rate: cfg.rate.clone(),
        windows,
        similarity_window: cfg.spectrum.similarity_window,
    })
}

/// One row per `(record, strategy)`, records in input order and strategies
/// in the given order within each record.
pub fn rate_rows(
    cfg: &ExperimentConfig,
    records: &[&DatasetRecord],
    strategies: &[Strategy],
    models: Models<'_>,
    setup: &BeamSetup,
) -> Result<Vec<StrategyRow>> {
    if let Some(p) = models.aps {
        check_model(cfg, p, ModelKind::Aps)?;
    }
    if let Some(p) = models.col {
        check_model(cfg, p, ModelKind::Col)?;
    }
    let per_record: Vec<Vec<StrategyRow>> = records
        .par_iter()
        .map(|r| {
            let sample = r.link_sample(cfg)?;
            strategies
                .iter()
                .map(|&s| run_strategy(&sample, s, models, setup))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_record.into_iter().flatten().collect())
}

/// Mean effective rate of one strategy at a scaled coherence time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub strategy: Strategy,
    pub multiplier: f64,
    pub coherence_time: f64,
    pub mean_rate: f64,
}

pub fn coherence_sweep(setup: &BeamSetup, rows: &[StrategyRow], strategies: &[Strategy], multipliers: &[f64]) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &m in multipliers {
        let mut rate = setup.rate.clone();
        rate.coherence_time *= m;
        for &s in strategies {
            let sel: Vec<&StrategyRow> = rows.iter().filter(|r| r.strategy == s).collect();
            let mean = sel
                .iter()
                .map(|r| effective_rate(r.result.spectral_efficiency, r.result.overhead_blocks, &rate))
                .sum::<f64>()
                / sel.len().max(1) as f64;
            out.push(SweepPoint {
                strategy: s,
                multiplier: m,
                coherence_time: rate.coherence_time,
                mean_rate: mean,
            });
        }
    }
    out
}
