//! Beam search over 2-bit phase-quantized codebooks: exhaustive versus a
//! window around a radar-derived angle, and what the saved overhead is
//! worth in effective rate.
//!
//! ```bash
//! cargo run --release --example beam_training
//! ```

use r2c::beam::{beam_search, candidate_window, codebook_for, effective_rate, overhead_factor, reference_angle, RateConfig};
use r2c::covariance::{comm_covariance, project_toeplitz_psd};
use r2c::scenario::{channel_freq_response, generate_paired_scenario, sample_rng, GeneratorConfig, MismatchConfig};
use r2c::spectrum::{aps, dft_grid};

fn main() -> r2c::Result<()> {
    let gen = GeneratorConfig {
        mismatch: MismatchConfig::moderate(),
        ..GeneratorConfig::default()
    };
    let (n_tx, n_rx) = (gen.rsu.num_antennas, gen.vehicle.num_antennas);
    let rate = RateConfig::default();
    let tx = codebook_for(&gen.rsu, Some(2))?;
    let rx = codebook_for(&gen.vehicle, Some(2))?;
    let grid = dft_grid(n_tx, gen.rsu.spacing)?;
    let all_tx: Vec<usize> = (0..tx.len()).collect();
    let all_rx: Vec<usize> = (0..rx.len()).collect();

    println!("coherence time {:.3} ms, {n_tx} x {n_rx} beam pairs", rate.coherence_time * 1e3);
    for blocks in [n_tx * n_rx, 12 * n_rx, 2 * n_rx] {
        println!("    {blocks:5} training blocks keep {:.7} of the coherence time", overhead_factor(blocks, &rate));
    }

    for id in 0..6 {
        let s = generate_paired_scenario(&gen, id, &mut sample_rng(11, id))?;
        let freq = channel_freq_response(&s.comm_taps, gen.num_subcarriers)?;
        let exhaustive = beam_search(&freq, &tx, &all_tx, &rx, &all_rx, &rate)?;

        let radar = aps(&project_toeplitz_psd(&s.radar_cov, 1e-6, 500)?, &grid)?;
        let window = candidate_window(&tx, reference_angle(&radar, &grid), 12)?;
        let windowed = beam_search(&freq, &tx, &window, &rx, &all_rx, &rate)?;
        let truth = aps(&comm_covariance(&freq, n_rx)?, &grid)?;

        println!(
            "sample {id}: comm peak bin {:2} | exhaustive tx {:2} SE {:.3} -> {:.3} Gbps | radar window tx {:2} SE {:.3} -> {:.3} Gbps",
            truth.argmax(),
            exhaustive.tx_index,
            exhaustive.spectral_efficiency,
            effective_rate(exhaustive.spectral_efficiency, exhaustive.overhead_blocks, &rate) / 1e9,
            windowed.tx_index,
            windowed.spectral_efficiency,
            effective_rate(windowed.spectral_efficiency, windowed.overhead_blocks, &rate) / 1e9,
        );
    }
    Ok(())
}
