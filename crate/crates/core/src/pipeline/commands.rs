//! File-level commands behind the `r2c` binary. Each reads its inputs,
//! runs the matching experiment step and writes its outputs in one go.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::ExperimentConfig;
use super::dataset::{generate_records, read_dataset_file, write_dataset_file, DatasetHeader, SplitRole, FORMAT_VERSION};
use super::experiment::{
    beam_setup, coherence_sweep, evaluate_similarity, evaluation_records, rate_rows, split_records,
    summarize_values, train_config, train_model, SimilarityRow, SweepPoint,
};
use crate::beam::{summarize, Models, RateReport, Strategy, StrategyRow};
use crate::nn::{EpochRecord, ModelKind, NetworkParams, TrainOutcome};
use crate::{Error, Result};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "R2C_THREADS";

/// Parses a config file, or returns `None` when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<Option<ExperimentConfig>> {
    path.map(|p| {
        let text = fs::read_to_string(p).map_err(|e| Error::io_at(p, e))?;
        ExperimentConfig::from_json(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", p.display())),
            other => other,
        })
    })
    .transpose()
}

pub fn load_params(path: &Path) -> Result<NetworkParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedData(format!("{}: {e}", path.display())))
}

pub fn save_params(path: &Path, params: &NetworkParams) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io_at(path, e))?;
    serde_json::to_writer(BufWriter::new(file), params)?;
    Ok(())
}

/// `dir/name.ext` becomes `dir/name.<suffix>`.
pub fn sibling_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn history_path(params_out: &Path) -> PathBuf {
    sibling_path(params_out, "history.csv")
}

pub fn summary_path(csv_out: &Path) -> PathBuf {
    sibling_path(csv_out, "summary.csv")
}

pub fn sweep_path(csv_out: &Path) -> PathBuf {
    sibling_path(csv_out, "sweep.csv")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io_at(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `count` records (default: the configured split total) under `seed`
/// (default: the configured master seed).
pub fn cmd_generate(config: Option<&Path>, out: &Path, count: Option<usize>, seed: Option<u64>) -> Result<DatasetHeader> {
    let cfg = load_config(config)?.unwrap_or_default();
    cfg.validate()?;
    let seed = seed.unwrap_or(cfg.master_seed);
    let count = count.unwrap_or(cfg.split.total());
    let records = generate_records(&cfg, seed, count)?;
    let header = DatasetHeader {
        format_version: FORMAT_VERSION,
        seed,
        count,
        config: cfg,
    };
    write_dataset_file(out, &header, &records)?;
    Ok(header)
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["epoch", "train_loss", "val_loss"])?;
    for h in history {
        w.write_record([h.epoch.to_string(), h.train_loss.to_string(), h.val_loss.to_string()])?;
    }
    w.flush().map_err(|e| Error::io_at(path, e))?;
    Ok(())
}

/// Trains `model`. Without `val`, the dataset's own train/val splits are
/// used; with `val`, every record of `data` trains and every record of `val`
/// validates. Writes the parameters to `out` and the history next to it.
pub fn cmd_train(
    config: Option<&Path>,
    model: ModelKind,
    data: &Path,
    val: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
) -> Result<TrainOutcome> {
    let (header, records) = read_dataset_file(data)?;
    let cfg = load_config(config)?.unwrap_or(header.config);
    let val_file = val.map(read_dataset_file).transpose()?;
    let (train_recs, val_recs) = match &val_file {
        Some((_, v)) => (records.iter().collect(), v.iter().collect()),
        None => (
            split_records(&cfg, &records, SplitRole::Train),
            split_records(&cfg, &records, SplitRole::Val),
        ),
    };
    let mut tcfg = train_config(&cfg, model).clone();
    if let Some(s) = seed {
        tcfg.seed = s;
    }
    let outcome = train_model(&cfg, model, &train_recs, &val_recs, &tcfg)?;
    save_params(out, &outcome.params)?;
    write_history(&history_path(out), &outcome.history)?;
    Ok(outcome)
}

fn load_models(aps: Option<&Path>, col: Option<&Path>) -> Result<(Option<NetworkParams>, Option<NetworkParams>)> {
    Ok((aps.map(load_params).transpose()?, col.map(load_params).transpose()?))
}

/// Per-record similarity of each available predictor, followed by `mean`,
/// `p10`, `p50` and `p90` rows.
pub fn cmd_eval(
    config: Option<&Path>,
    aps_params: Option<&Path>,
    col_params: Option<&Path>,
    data: &Path,
    out: &Path,
) -> Result<Vec<SimilarityRow>> {
    let (header, records) = read_dataset_file(data)?;
    let cfg = load_config(config)?.unwrap_or(header.config);
    let (aps, col) = load_models(aps_params, col_params)?;
    let models = Models {
        aps: aps.as_ref(),
        col: col.as_ref(),
    };
    let rows = evaluate_similarity(&cfg, &evaluation_records(&cfg, &records), models)?;
    write_similarity(out, &rows)?;
    Ok(rows)
}

pub fn write_similarity(path: &Path, rows: &[SimilarityRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["id", "radar", "aps_pred", "cov_pred"])?;
    for r in rows {
        w.write_record([r.id.to_string(), r.radar.to_string(), opt(r.aps_pred), opt(r.cov_pred)])?;
    }
    let columns: [Vec<f64>; 3] = [
        rows.iter().map(|r| r.radar).collect(),
        rows.iter().filter_map(|r| r.aps_pred).collect(),
        rows.iter().filter_map(|r| r.cov_pred).collect(),
    ];
    let summaries: Vec<_> = columns.iter().map(|c| summarize_values(c)).collect();
    for (name, pick) in [
        ("mean", (|s: &super::experiment::Summary| s.mean) as fn(&_) -> f64),
        ("p10", |s| s.p10),
        ("p50", |s| s.p50),
        ("p90", |s| s.p90),
    ] {
        let mut rec = vec![name.to_string()];
        rec.extend(summaries.iter().map(|s| opt(s.as_ref().map(pick))));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io_at(path, e))?;
    Ok(())
}

/// Outputs of a rate run.
#[derive(Clone, Debug)]
pub struct RateOutput {
    pub reports: Vec<RateReport>,
    pub sweep: Vec<SweepPoint>,
}

/// Per-sample rate rows in `out`, per-strategy means in `<stem>.summary.csv`
/// and the coherence-time sweep in `<stem>.sweep.csv`. Exhaustive search is
/// always included.
pub fn cmd_rate(
    config: Option<&Path>,
    aps_params: Option<&Path>,
    col_params: Option<&Path>,
    data: &Path,
    out: &Path,
    strategies: &[Strategy],
    window: Option<usize>,
) -> Result<RateOutput> {
    let (header, records) = read_dataset_file(data)?;
    let cfg = load_config(config)?.unwrap_or(header.config);
    let (aps, col) = load_models(aps_params, col_params)?;
    let models = Models {
        aps: aps.as_ref(),
        col: col.as_ref(),
    };
    let mut strategies = strategies.to_vec();
    if !strategies.contains(&Strategy::Exhaustive) {
        strategies.insert(0, Strategy::Exhaustive);
    }
    strategies.dedup();
    let setup = beam_setup(&cfg, window)?;
    let rows = rate_rows(&cfg, &evaluation_records(&cfg, &records), &strategies, models, &setup)?;
    let sweep = coherence_sweep(&setup, &rows, &strategies, &cfg.beam.coherence_sweep);
    write_rate_rows(out, &rows)?;
    let reports: Vec<RateReport> = strategies
        .iter()
        .map(|&s| summarize(s, rows.iter().filter(|r| r.strategy == s).cloned().collect()))
        .collect();
    write_rate_summary(&summary_path(out), &reports)?;
    write_sweep(&sweep_path(out), &sweep)?;
    Ok(RateOutput { reports, sweep })
}

pub fn write_rate_rows(path: &Path, rows: &[StrategyRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "id",
        "strategy",
        "tx_index",
        "rx_index",
        "overhead_blocks",
        "se_bpshz",
        "rate_bps",
        "similarity_L5",
    ])?;
    for r in rows {
        w.write_record([
            r.id.to_string(),
            r.strategy.to_string(),
            r.result.tx_index.to_string(),
            r.result.rx_index.to_string(),
            r.result.overhead_blocks.to_string(),
            r.result.spectral_efficiency.to_string(),
            r.rate_bps.to_string(),
            opt(r.similarity),
        ])?;
    }
    w.flush().map_err(|e| Error::io_at(path, e))?;
    Ok(())
}

pub fn write_rate_summary(path: &Path, reports: &[RateReport]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["strategy", "samples", "mean_rate_bps", "mean_se_bpshz", "mean_similarity_L5"])?;
    for r in reports {
        w.write_record([
            r.strategy.to_string(),
            r.rows.len().to_string(),
            r.mean_rate.to_string(),
            r.mean_se.to_string(),
            opt(r.mean_similarity),
        ])?;
    }
    w.flush().map_err(|e| Error::io_at(path, e))?;
    Ok(())
}

pub fn write_sweep(path: &Path, sweep: &[SweepPoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["strategy", "coherence_multiplier", "coherence_time_s", "mean_rate_bps"])?;
    for p in sweep {
        w.write_record([
            p.strategy.to_string(),
            p.multiplier.to_string(),
            p.coherence_time.to_string(),
            p.mean_rate.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io_at(path, e))?;
    Ok(())
}
