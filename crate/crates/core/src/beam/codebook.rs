//! Phase-quantized DFT codebooks and candidate selection.

use std::f64::consts::PI;

use crate::scenario::UlaConfig;
use crate::spectrum::{Aps, DftGrid};
use crate::{CVector, Error, Result, C64};

/// Constant-modulus beams pointing at `arcsin((2n - N - 1) / N)`, `n = 1..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub codewords: Vec<CVector>,
    /// `None` for unquantized phases.
    pub phase_bits: Option<u32>,
    /// Nominal pointing angles, ascending.
    pub angles: Vec<f64>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn array_size(&self) -> usize {
        self.codewords.first().map_or(0, |c| c.len())
    }
}

/// Nominal angles `arcsin((2n - N - 1) / N)` for `n = 1..=N`.
pub fn codebook_angles(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| ((2.0 * i as f64 - n as f64 - 1.0) / n as f64).asin())
        .collect()
}

/// Rounds `phase` to the nearest multiple of `2 pi / 2^bits` in `[0, 2 pi)`;
/// exact ties go to the smaller multiple.
pub fn quantize_phase(phase: f64, bits: u32) -> f64 {
    let levels = 1u64 << bits;
    let step = 2.0 * PI / levels as f64;
    let q = phase.rem_euclid(2.0 * PI) / step;
    let k = (q - 0.5).ceil() as u64 % levels;
    k as f64 * step
}

fn codebook(n: usize, spacing: f64, phase_bits: Option<u32>) -> Result<Codebook> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("codebook needs at least 2 beams, got {n}")));
    }
    if phase_bits == Some(0) {
        return Err(Error::InvalidConfig("phase_bits must be at least 1".into()));
    }
    let array = UlaConfig::new(n, spacing)?;
    let angles = codebook_angles(n);
    let amp = 1.0 / (n as f64).sqrt();
    let codewords = angles
        .iter()
        .map(|&a| {
            array.steering_vector(a).map(|z| {
                let phase = match phase_bits {
                    Some(b) => quantize_phase(z.arg(), b),
                    None => z.arg(),
                };
                C64::from_polar(amp, phase)
            })
        })
        .collect();
    Ok(Codebook {
        codewords,
        phase_bits,
        angles,
    })
}

/// Half-wavelength codebook with `phase_bits`-bit phase shifters.
pub fn build_codebook(n: usize, phase_bits: u32) -> Result<Codebook> {
    codebook(n, 0.5, Some(phase_bits))
}

/// Codebook with ideal phase shifters for an array of the given spacing.
pub fn unquantized_codebook(n: usize, spacing: f64) -> Result<Codebook> {
    codebook(n, spacing, None)
}

/// Quantized codebook for an arbitrary array spacing; `None` keeps ideal phases.
pub fn codebook_for(array: &UlaConfig, phase_bits: Option<u32>) -> Result<Codebook> {
    codebook(array.num_antennas, array.spacing, phase_bits)
}

/// Grid angle of the strongest APS bin (lower index on ties).
pub fn reference_angle(d: &Aps, grid: &DftGrid) -> f64 {
    grid.angles[d.argmax()]
}

/// The `size` beams whose nominal angles are closest to `reference`, ties to
/// the lower index, returned in ascending index order.
pub fn candidate_window(cb: &Codebook, reference: f64, size: usize) -> Result<Vec<usize>> {
    if size == 0 || size > cb.len() {
        return Err(Error::InvalidConfig(format!(
            "window {size} outside 1..={} beams",
            cb.len()
        )));
    }
    let mut idx: Vec<usize> = (0..cb.len()).collect();
    idx.sort_by(|&a, &b| {
        let da = (cb.angles[a] - reference).abs();
        let db = (cb.angles[b] - reference).abs();
        da.total_cmp(&db).then(a.cmp(&b))
    });
    idx.truncate(size);
    idx.sort_unstable();
    Ok(idx)
}
