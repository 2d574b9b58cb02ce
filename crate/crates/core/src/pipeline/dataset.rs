//! Paired radar/communication dataset records and their JSON-lines file.
//!
//! The first line is a [`DatasetHeader`] carrying the format version and the
//! full configuration; every further line is one [`DatasetRecord`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ProjectionConfig, SplitConfig};
use crate::beam::LinkSample;
use crate::covariance::{
    first_column, project_toeplitz, project_toeplitz_psd_with, toeplitz_from_column, CovarianceMatrix,
    ToeplitzColumn,
};
use crate::scenario::{
    channel_freq_response, channel_taps, generate_paired_scenario, sample_rng, ChannelFreq, ChannelTaps,
    PathCluster,
};
use crate::spectrum::{aps, dft_grid_with, from_log_scale, to_log_scale, Aps, DftGrid};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub seed: u64,
    pub count: usize,
    pub config: ExperimentConfig,
}

/// One paired sample. Covariances are projected, scaled to unit average
/// diagonal and stored by first column; APS values are in dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: u64,
    pub radar_cov_column: ToeplitzColumn,
    pub comm_cov_column: ToeplitzColumn,
    pub radar_aps_log: Aps,
    pub comm_aps_log: Aps,
    /// Geometric paths of the communication channel. The channel taps are a
    /// pure function of these and the generator config, so they are rebuilt
    /// on load instead of being stored.
    pub comm_paths: Vec<PathCluster>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitRole {
    Train,
    Val,
    Test,
}

impl SplitConfig {
    /// Split of a record id: the first `train` ids train, the next `val`
    /// validate, the rest test.
    pub fn role(&self, id: u64) -> SplitRole {
        let id = id as usize;
        if id < self.train {
            SplitRole::Train
        } else if id < self.train + self.val {
            SplitRole::Val
        } else {
            SplitRole::Test
        }
    }
}

/// The APS grid of an experiment.
pub fn experiment_grid(cfg: &ExperimentConfig) -> Result<DftGrid> {
    let rsu = &cfg.generator.rsu;
    dft_grid_with(rsu.num_antennas, rsu.spacing, cfg.spectrum.grid)
}

/// Maps a measured covariance onto the Toeplitz-PSD cone (or only onto the
/// Toeplitz subspace when projection is disabled) and scales it to unit
/// average diagonal.
pub fn condition_covariance(r: &CovarianceMatrix, proj: &ProjectionConfig) -> Result<CovarianceMatrix> {
    let t = if proj.enabled {
        let out = project_toeplitz_psd_with(r, proj.tol, proj.max_iter, proj.method);
        if !out.converged && out.residual > 100.0 * proj.tol {
            return Err(Error::NonConvergence {
                residual: out.residual,
                iterations: out.iterations,
                result: Box::new(out.matrix),
            });
        }
        out.matrix
    } else {
        CovarianceMatrix::new(project_toeplitz(r.matrix()))?
    };
    let mean_diag = t.trace() / t.dim() as f64;
    Ok(if mean_diag > 0.0 { t.scaled(1.0 / mean_diag) } else { t })
}

/// Generates sample `id` under `seed` and reduces it to a record.
pub fn build_record(cfg: &ExperimentConfig, grid: &DftGrid, seed: u64, id: u64) -> Result<DatasetRecord> {
    let mut rng = sample_rng(seed, id);
    let s = generate_paired_scenario(&cfg.generator, id, &mut rng)?;
    let radar = condition_covariance(&s.radar_cov, &cfg.projection)?;
    let comm = condition_covariance(&s.comm_cov, &cfg.projection)?;
    let floor = cfg.spectrum.floor_db;
    Ok(DatasetRecord {
        id,
        radar_cov_column: first_column(&radar)?,
        comm_cov_column: first_column(&comm)?,
        radar_aps_log: to_log_scale(&aps(&radar, grid)?, floor),
        comm_aps_log: to_log_scale(&aps(&comm, grid)?, floor),
        comm_paths: s.clusters_comm,
    })
}

/// Records `0..count`, generated in parallel and returned in id order.
pub fn generate_records(cfg: &ExperimentConfig, seed: u64, count: usize) -> Result<Vec<DatasetRecord>> {
    cfg.validate()?;
    let grid = experiment_grid(cfg)?;
    (0..count as u64)
        .into_par_iter()
        .map(|id| build_record(cfg, &grid, seed, id))
        .collect()
}

impl DatasetRecord {
    pub fn comm_taps(&self, cfg: &ExperimentConfig) -> Result<ChannelTaps> {
        let g = &cfg.generator;
        channel_taps(&self.comm_paths, &g.rsu, &g.vehicle, &g.pulse)
    }

    pub fn comm_freq(&self, cfg: &ExperimentConfig) -> Result<ChannelFreq> {
        channel_freq_response(&self.comm_taps(cfg)?, cfg.generator.num_subcarriers)
    }

    /// Linear communication APS (from the stored dB values).
    pub fn comm_aps(&self) -> Aps {
        from_log_scale(&self.comm_aps_log)
    }

    pub fn radar_aps(&self) -> Aps {
        from_log_scale(&self.radar_aps_log)
    }

    /// Linear APS of the stored communication column, the target of the
    /// column model's loss.
    pub fn comm_aps_from_column(&self, grid: &DftGrid) -> Result<Aps> {
        aps(&toeplitz_from_column(&self.comm_cov_column), grid)
    }

    pub fn link_sample(&self, cfg: &ExperimentConfig) -> Result<LinkSample> {
        Ok(LinkSample {
            id: self.id,
            freq: self.comm_freq(cfg)?,
            radar_column: self.radar_cov_column.clone(),
            radar_aps_log: self.radar_aps_log.clone(),
            comm_aps: self.comm_aps(),
        })
    }

    fn check(&self, n: usize) -> Result<()> {
        let lens = [
            self.radar_cov_column.len(),
            self.comm_cov_column.len(),
            self.radar_aps_log.len(),
            self.comm_aps_log.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::MalformedData(format!(
                "record {}: lengths {lens:?} do not match {n} antennas",
                self.id
            )));
        }
        Ok(())
    }
}

/// Writes the header line followed by one record per line.
pub fn write_dataset<W: Write>(mut w: W, header: &DatasetHeader, records: &[DatasetRecord]) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(path: &Path, header: &DatasetHeader, records: &[DatasetRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io_at(path, e))?;
    write_dataset(BufWriter::new(file), header, records)
}

/// Reads a dataset, checking the format version before anything else.
pub fn read_dataset<R: BufRead>(r: R) -> Result<(DatasetHeader, Vec<DatasetRecord>)> {
    let mut lines = r.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::MalformedData("empty dataset file".into()))??;
    let raw: serde_json::Value =
        serde_json::from_str(&first).map_err(|e| Error::MalformedData(format!("header line: {e}")))?;
    let found = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::MalformedData("header has no format_version".into()))?;
    if found != FORMAT_VERSION as u64 {
        return Err(Error::FormatVersion {
            found: found.min(u32::MAX as u64) as u32,
            expected: FORMAT_VERSION,
        });
    }
    let header: DatasetHeader =
        serde_json::from_value(raw).map_err(|e| Error::MalformedData(format!("header line: {e}")))?;
    header.config.validate()?;
    let n = header.config.generator.rsu.num_antennas;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedData(format!("line {}: {e}", i + 2)))?;
        rec.check(n)?;
        records.push(rec);
    }
    Ok((header, records))
}

pub fn read_dataset_file(path: &Path) -> Result<(DatasetHeader, Vec<DatasetRecord>)> {
    let file = File::open(path).map_err(|e| Error::io_at(path, e))?;
    read_dataset(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::similarity;

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.generator.rsu.num_antennas = 16;
        cfg.generator.vehicle.num_antennas = 4;
        cfg.generator.num_subcarriers = 8;
        cfg.rate.num_subcarriers = 8;
        cfg
    }

    #[test]
    fn records_are_conditioned() {
        let cfg = small_config();
        let recs = generate_records(&cfg, 3, 4).unwrap();
        assert_eq!(recs.len(), 4);
        for (i, r) in recs.iter().enumerate() {
            assert_eq!(r.id, i as u64);
            assert!((r.radar_cov_column.col[0].re - 1.0).abs() < 1e-12);
            assert!((r.comm_cov_column.col[0].re - 1.0).abs() < 1e-12);
            let t = toeplitz_from_column(&r.comm_cov_column);
            assert!(t.min_eigenvalue() >= -1e-9);
        }
    }

    #[test]
    fn file_round_trip_is_exact() {
        let cfg = small_config();
        let recs = generate_records(&cfg, 5, 3).unwrap();
        let header = DatasetHeader {
            format_version: FORMAT_VERSION,
            seed: 5,
            count: 3,
            config: cfg,
        };
        let mut buf = Vec::new();
        write_dataset(&mut buf, &header, &recs).unwrap();
        let (h, back) = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, recs);
        let mut again = Vec::new();
        write_dataset(&mut again, &h, &back).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = "{\"format_version\": 99}\n";
        assert!(matches!(
            read_dataset(text.as_bytes()),
            Err(Error::FormatVersion { found: 99, expected: FORMAT_VERSION })
        ));
        assert!(matches!(read_dataset("".as_bytes()), Err(Error::MalformedData(_))));
    }

    #[test]
    fn taps_rebuild_from_paths() {
        let cfg = small_config();
        let rec = &generate_records(&cfg, 9, 1).unwrap()[0];
        let mut rng = sample_rng(9, 0);
        let s = generate_paired_scenario(&cfg.generator, 0, &mut rng).unwrap();
        assert_eq!(rec.comm_taps(&cfg).unwrap(), s.comm_taps);
    }

    #[test]
    fn zero_mismatch_spectra_agree() {
        let cfg = small_config();
        let recs = generate_records(&cfg, 11, 20).unwrap();
        let mean: f64 = recs.iter().map(|r| similarity(&r.radar_aps(), &r.comm_aps(), 5)).sum::<f64>() / 20.0;
        assert!(mean >= 0.9, "mean similarity {mean}");
    }

    #[test]
    fn split_roles() {
        let s = SplitConfig {
            train: 2,
            val: 1,
            test: 1,
        };
        let roles: Vec<_> = (0..5).map(|i| s.role(i)).collect();
        assert_eq!(
            roles,
            vec![SplitRole::Train, SplitRole::Train, SplitRole::Val, SplitRole::Test, SplitRole::Test]
        );
    }
}
