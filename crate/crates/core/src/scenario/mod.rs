//! Array geometry, wideband geometric channels, radar snapshots and the
//! paired radar/communication scenario generator.

mod array;
mod channel;
mod generator;
mod pulse;
mod radar;

pub use array::{steering_vector, UlaConfig};
pub use channel::{channel_freq_response, channel_taps, ChannelFreq, ChannelTaps, PathCluster, PathRay};
pub use generator::{
    draw_clusters, generate_paired_scenario, radar_sources, sample_rng, GeneratorConfig, GeometryPriors,
    MismatchConfig, ScenarioSample,
};
pub use pulse::{raised_cosine, PulseConfig};
pub use radar::{simulate_radar_snapshots, RadarSimConfig, RadarSource};
