//! Beam codebooks, search strategies, spectral efficiency and the
//! overhead-aware effective rate.

pub mod codebook;
pub mod rate;
pub mod strategy;

pub use codebook::{
    build_codebook, candidate_window, codebook_angles, codebook_for, quantize_phase, reference_angle,
    unquantized_codebook, Codebook,
};
pub use rate::{
    beam_gains, beam_search, effective_rate, overhead_factor, spectral_efficiency, RateConfig, SearchResult,
};
pub use strategy::{
    guide_aps, run_strategy, summarize, BeamSetup, LinkSample, Models, RateReport, Strategy, StrategyRow, Windows,
};
