use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::array::UlaConfig;
use super::channel::{channel_freq_response, channel_taps, ChannelTaps, PathCluster, PathRay};
use super::pulse::PulseConfig;
use super::radar::{complex_gaussian, simulate_radar_snapshots, RadarSimConfig, RadarSource};
use crate::covariance::{comm_covariance, sample_covariance, CovarianceMatrix};
use crate::{Error, Result};

/// Parametric radar/communication mismatch.
///
/// The radar sees every communication ray at its own angle plus:
///
/// - `angle_bias_std`: a systematic offset shared by all samples (a fixed
///   boresight misalignment between the radar and communication arrays).
///   Being deterministic, it is the learnable part of the mismatch.
/// - `global_angle_offset_std`: a per-sample random offset common to all
///   clusters.
/// - `angle_jitter_std`: a per-cluster random offset.
/// - `gain_perturb_std`: per-cluster log-normal amplitude factor
///   `exp(gain_perturb_std * n)`, `n ~ N(0, 1)`.
/// - `cluster_drop_prob`: probability that the radar misses a cluster.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MismatchConfig {
    pub angle_bias_std: f64,
    pub angle_jitter_std: f64,
    pub gain_perturb_std: f64,
    pub cluster_drop_prob: f64,
    pub global_angle_offset_std: f64,
}

impl MismatchConfig {
    /// 3 degree systematic bias and 0.2 gain perturbation.
    pub fn moderate() -> Self {
        Self {
            angle_bias_std: 3f64.to_radians(),
            gain_perturb_std: 0.2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let stds = [
            ("angle_bias_std", self.angle_bias_std),
            ("angle_jitter_std", self.angle_jitter_std),
            ("gain_perturb_std", self.gain_perturb_std),
            ("global_angle_offset_std", self.global_angle_offset_std),
        ];
        for (name, v) in stds {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("mismatch {name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.cluster_drop_prob) {
            return Err(Error::InvalidConfig(format!(
                "cluster_drop_prob must lie in [0, 1), got {}",
                self.cluster_drop_prob
            )));
        }
        Ok(())
    }
}

/// Priors of the shared cluster geometry. Angles in radians, delays in
/// seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryPriors {
    pub min_clusters: usize,
    pub max_clusters: usize,
    pub min_rays: usize,
    pub max_rays: usize,
    /// Standard deviation of ray angles around the cluster mean.
    pub ray_angle_spread: f64,
    /// Mean power drop from one cluster index to the next.
    pub cluster_decay_db: f64,
    pub min_cluster_delay: f64,
    pub max_cluster_delay: f64,
    /// Ray delays are uniform on `[0, ray_delay_spread]` after the cluster delay.
    pub ray_delay_spread: f64,
    pub min_path_loss_db: f64,
    pub max_path_loss_db: f64,
}

/// Everything needed to draw one paired radar/communication scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// RSU array, shared by communication and passive radar.
    pub rsu: UlaConfig,
    pub vehicle: UlaConfig,
    pub pulse: PulseConfig,
    pub radar: RadarSimConfig,
    pub mismatch: MismatchConfig,
    pub num_subcarriers: usize,
    pub priors: GeometryPriors,
}

impl Default for GeometryPriors {
    fn default() -> Self {
        let tc = 1.0 / 491.52e6;
        Self {
            min_clusters: 1,
            max_clusters: 4,
            min_rays: 1,
            max_rays: 5,
            ray_angle_spread: 2f64.to_radians(),
            cluster_decay_db: 6.0,
            min_cluster_delay: 2.0 * tc,
            max_cluster_delay: 9.0 * tc,
            ray_delay_spread: 3.0 * tc,
            min_path_loss_db: 95.0,
            max_path_loss_db: 110.0,
        }
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            rsu: UlaConfig::half_wavelength(64),
            vehicle: UlaConfig::half_wavelength(16),
            pulse: PulseConfig::default(),
            radar: RadarSimConfig::default(),
            mismatch: MismatchConfig::default(),
            num_subcarriers: 64,
            priors: GeometryPriors::default(),
        }
    }
}

impl GeometryPriors {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("priors: {msg}")));
        if self.min_clusters == 0 || self.max_clusters < self.min_clusters {
            return bad("need 1 <= min_clusters <= max_clusters");
        }
        if self.min_rays == 0 || self.max_rays < self.min_rays {
            return bad("need 1 <= min_rays <= max_rays");
        }
        if !(self.ray_angle_spread >= 0.0) || !(self.ray_delay_spread >= 0.0) {
            return bad("spreads must be >= 0");
        }
        if !(self.min_cluster_delay >= 0.0 && self.max_cluster_delay >= self.min_cluster_delay) {
            return bad("need 0 <= min_cluster_delay <= max_cluster_delay");
        }
        if !(self.max_path_loss_db >= self.min_path_loss_db) || !self.cluster_decay_db.is_finite() {
            return bad("invalid path loss range or decay");
        }
        Ok(())
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.rsu.validate()?;
        self.vehicle.validate()?;
        self.pulse.validate()?;
        self.radar.validate()?;
        self.mismatch.validate()?;
        self.priors.validate()?;
        if self.num_subcarriers == 0 {
            return Err(Error::InvalidConfig("num_subcarriers must be >= 1".into()));
        }
        Ok(())
    }
}

/// One paired draw: shared geometry, communication channel and both
/// covariances at the RSU.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSample {
    pub id: u64,
    pub clusters_comm: Vec<PathCluster>,
    pub comm_taps: ChannelTaps,
    pub radar_cov: CovarianceMatrix,
    pub comm_cov: CovarianceMatrix,
}

/// Independent random stream for sample `id` under `master_seed`.
pub fn sample_rng(master_seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(id);
    rng
}

fn uniform_sine_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (2.0 * rng.random::<f64>() - 1.0).asin()
}

/// Draws the shared communication cluster geometry.
pub fn draw_clusters<R: Rng + ?Sized>(priors: &GeometryPriors, rng: &mut R) -> Vec<PathCluster> {
    let num_clusters = rng.random_range(priors.min_clusters..=priors.max_clusters);
    let path_loss_db = priors.min_path_loss_db + (priors.max_path_loss_db - priors.min_path_loss_db) * rng.random::<f64>();
    let base_power = 10f64.powf(-path_loss_db / 10.0);
    let spread = Normal::new(0.0, priors.ray_angle_spread).expect("validated spread");
    (0..num_clusters)
        .map(|c| {
            let power = base_power * 10f64.powf(-priors.cluster_decay_db * c as f64 / 10.0);
            let num_rays = rng.random_range(priors.min_rays..=priors.max_rays);
            let mean_delay = priors.min_cluster_delay
                + (priors.max_cluster_delay - priors.min_cluster_delay) * rng.random::<f64>();
            let mean_aoa = uniform_sine_angle(rng);
            let mean_aod = uniform_sine_angle(rng);
            let rays = (0..num_rays)
                .map(|_| PathRay {
                    gain: complex_gaussian(rng, power / num_rays as f64),
                    rel_delay: priors.ray_delay_spread * rng.random::<f64>(),
                    rel_aoa_shift: spread.sample(rng),
                    rel_aod_shift: spread.sample(rng),
                })
                .collect();
            PathCluster {
                mean_delay,
                mean_aoa,
                mean_aod,
                rays,
            }
        })
        .collect()
}

/// Radar reflectors derived from the communication clusters under `mismatch`.
pub fn radar_sources<R: Rng + ?Sized>(
    clusters: &[PathCluster],
    mismatch: &MismatchConfig,
    rng: &mut R,
) -> Vec<RadarSource> {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let global = mismatch.global_angle_offset_std * std_normal.sample(rng);
    let mut out = Vec::new();
    for cluster in clusters {
        // draw everything up front so the stream does not depend on which
        // mismatch terms are active
        let dropped = rng.random::<f64>() < mismatch.cluster_drop_prob;
        let jitter = mismatch.angle_jitter_std * std_normal.sample(rng);
        let amp = (mismatch.gain_perturb_std * std_normal.sample(rng)).exp();
        if dropped {
            continue;
        }
        let offset = mismatch.angle_bias_std + global + jitter;
        out.extend(cluster.rays.iter().map(|ray| RadarSource {
            angle: cluster.mean_aoa + ray.rel_aoa_shift + offset,
            gain: ray.gain * amp,
        }));
    }
    out
}

/// Draws one paired scenario. A pure function of `(gen, id, rng state)`.
pub fn generate_paired_scenario<R: Rng + ?Sized>(
    gen: &GeneratorConfig,
    id: u64,
    rng: &mut R,
) -> Result<ScenarioSample> {
    gen.validate()?;
    let clusters = draw_clusters(&gen.priors, rng);
    let taps = channel_taps(&clusters, &gen.rsu, &gen.vehicle, &gen.pulse)?;
    let freq = channel_freq_response(&taps, gen.num_subcarriers)?;
    let comm_cov = comm_covariance(&freq, gen.vehicle.num_antennas)?;

    let sources = radar_sources(&clusters, &gen.mismatch, rng);
    let y = simulate_radar_snapshots(&sources, &gen.rsu, &gen.radar, rng);
    let radar_cov = sample_covariance(&y)?;

    Ok(ScenarioSample {
        id,
        clusters_comm: clusters,
        comm_taps: taps,
        radar_cov,
        comm_cov,
    })
}
