//! Draws one paired radar / communication scenario and compares where each
//! side sees its strongest angular power.
//!
//! ```bash
//! cargo run --release --example paired_scenario
//! ```

use r2c::scenario::{generate_paired_scenario, sample_rng, GeneratorConfig, MismatchConfig};
use r2c::spectrum::{aps, dft_grid, similarity};

fn main() -> r2c::Result<()> {
    let gen = GeneratorConfig {
        mismatch: MismatchConfig::moderate(),
        ..GeneratorConfig::default()
    };
    let grid = dft_grid(gen.rsu.num_antennas, gen.rsu.spacing)?;

    for id in 0..5 {
        let s = generate_paired_scenario(&gen, id, &mut sample_rng(7, id))?;
        let comm = aps(&s.comm_cov, &grid)?;
        let radar = aps(&s.radar_cov, &grid)?;
        println!(
            "sample {id}: {} clusters, {} taps | comm peak {:6.2} deg, radar peak {:6.2} deg, S_5 = {:.3}",
            s.clusters_comm.len(),
            s.comm_taps.taps.len(),
            grid.angles[comm.argmax()].to_degrees(),
            grid.angles[radar.argmax()].to_degrees(),
            similarity(&radar, &comm, 5),
        );
        for (c, cl) in s.clusters_comm.iter().enumerate() {
            println!(
                "    cluster {c}: RSU angle {:6.2} deg, {} rays, power {:.2e}",
                cl.mean_aoa.to_degrees(),
                cl.rays.len(),
                cl.power()
            );
        }
    }
    Ok(())
}
