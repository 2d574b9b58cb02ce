//! Angular power spectrum (APS) over a DFT angle grid and the windowed
//! similarity score between two spectra.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::covariance::CovarianceMatrix;
use crate::{CMatrix, Error, Result, C64};

pub const DEFAULT_FLOOR_DB: f64 = -80.0;

/// How grid angles are placed over `[-pi/2, pi/2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpacing {
    /// Bin-centered and uniform in `sin(theta)`; makes `F^H F = N I` at
    /// half-wavelength spacing and lines bins up with the beam codebook.
    #[default]
    UniformSine,
    /// Bin-centered and uniform in `theta`.
    UniformAngle,
}

/// Steering matrix `F = [f(theta_0), ..., f(theta_{N-1})]`.
///
/// Columns use the array's own phase convention,
/// `f(theta)[n] = exp(j n 2 pi spacing sin(theta))`, so that the quadratic
/// form `f^H R f` peaks at the bin of a source at `theta`.
#[derive(Clone, Debug, PartialEq)]
pub struct DftGrid {
    pub matrix: CMatrix,
    pub angles: Vec<f64>,
}

impl DftGrid {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Index of the grid angle closest to `angle` in `sin` distance.
    pub fn nearest_bin(&self, angle: f64) -> usize {
        let s = angle.sin();
        let mut best = 0;
        for (i, a) in self.angles.iter().enumerate() {
            if (a.sin() - s).abs() < (self.angles[best].sin() - s).abs() {
                best = i;
            }
        }
        best
    }
}

pub fn dft_grid(n: usize, spacing: f64) -> Result<DftGrid> {
    dft_grid_with(n, spacing, GridSpacing::UniformSine)
}

pub fn dft_grid_with(n: usize, spacing: f64, kind: GridSpacing) -> Result<DftGrid> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("DFT grid needs N >= 2, got {n}")));
    }
    let angles: Vec<f64> = (0..n)
        .map(|i| {
            let centre = (2 * i + 1) as f64 / n as f64;
            match kind {
                GridSpacing::UniformSine => (centre - 1.0).asin(),
                GridSpacing::UniformAngle => PI / 2.0 * (centre - 1.0),
            }
        })
        .collect();
    let matrix = CMatrix::from_fn(n, n, |row, col| {
        C64::from_polar(1.0, row as f64 * 2.0 * PI * spacing * angles[col].sin())
    });
    Ok(DftGrid { matrix, angles })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApsScale {
    Linear,
    LogDb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aps {
    pub values: Vec<f64>,
    pub scale: ApsScale,
}

impl Aps {
    /// Linear-scale spectrum; negative entries are clamped to zero.
    pub fn linear(values: Vec<f64>) -> Self {
        Self {
            values: values.into_iter().map(|v| v.max(0.0)).collect(),
            scale: ApsScale::Linear,
        }
    }

    pub fn log_db(values: Vec<f64>) -> Self {
        Self {
            values,
            scale: ApsScale::LogDb,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the largest entry, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Diagonal of `F^H R F` before clamping, as a plain vector.
pub(crate) fn aps_raw(r: &CMatrix, grid: &DftGrid) -> Result<Vec<f64>> {
    let f = &grid.matrix;
    if r.nrows() != f.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "covariance is {0}x{0}, grid expects {1}",
            r.nrows(),
            f.nrows()
        )));
    }
    let rf = r * f;
    Ok((0..f.ncols())
        .map(|i| f.column(i).dotc(&rf.column(i)).re)
        .collect())
}

/// APS `d[i] = Re(f_i^H R f_i)`; roundoff negatives are clamped to zero.
pub fn aps(r: &CovarianceMatrix, grid: &DftGrid) -> Result<Aps> {
    let raw = aps_raw(r.matrix(), grid)?;
    Ok(Aps::linear(raw))
}

/// `10 log10(max(d, 10^(floor_db / 10)))` entrywise.
pub fn to_log_scale(d: &Aps, floor_db: f64) -> Aps {
    debug_assert_eq!(d.scale, ApsScale::Linear);
    let floor = 10f64.powf(floor_db / 10.0);
    Aps::log_db(d.values.iter().map(|&v| 10.0 * v.max(floor).log10()).collect())
}

pub fn from_log_scale(d: &Aps) -> Aps {
    debug_assert_eq!(d.scale, ApsScale::LogDb);
    Aps::linear(d.values.iter().map(|&v| 10f64.powf(v / 10.0)).collect())
}

/// Indices of the `l` largest entries in descending order of value; ties go
/// to the lower index.
pub fn top_indices(d: &Aps, l: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d.values[b].total_cmp(&d.values[a]).then(a.cmp(&b)));
    idx.truncate(l);
    idx
}

/// Windowed similarity of `d1` against reference `d2`:
/// `sum_{i in top_L(d1)} d2[i] / sum_{i in top_L(d2)} d2[i]`.
///
/// Lies in `[0, 1]`; an all-zero reference gives 1.
pub fn similarity(d1: &Aps, d2: &Aps, l: usize) -> f64 {
    assert_eq!(d1.len(), d2.len(), "similarity needs equal-length spectra");
    assert!(l >= 1 && l <= d1.len(), "window {l} out of range");
    // both sums run in descending order so that rounding cannot lift the
    // numerator above the denominator
    let mut picked: Vec<f64> = top_indices(d1, l).iter().map(|&i| d2.values[i]).collect();
    picked.sort_by(|a, b| b.total_cmp(a));
    let num: f64 = picked.iter().sum();
    let den: f64 = top_indices(d2, l).iter().map(|&i| d2.values[i]).sum();
    if den <= 0.0 {
        1.0
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::UlaConfig;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_point_grid_angles() {
        let g = dft_grid(2, 0.5).unwrap();
        assert_abs_diff_eq!(g.angles[0], -PI / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.angles[1], PI / 6.0, epsilon = 1e-12);
        assert!(dft_grid(1, 0.5).is_err());
    }

    #[test]
    fn grid_is_orthogonal_at_half_wavelength() {
        for n in [4, 16, 64] {
            let g = dft_grid(n, 0.5).unwrap();
            let gram = g.matrix.ad_mul(&g.matrix);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { n as f64 } else { 0.0 };
                    assert!((gram[(i, j)] - C64::new(want, 0.0)).norm() < 1e-9);
                }
            }
            assert!(g.angles.windows(2).all(|w| w[0] < w[1]));
            assert!(g.angles[0] >= -PI / 2.0 && *g.angles.last().unwrap() < PI / 2.0);
        }
    }

    #[test]
    fn uniform_angle_grid() {
        let g = dft_grid_with(4, 0.5, GridSpacing::UniformAngle).unwrap();
        let want = [-3.0 * PI / 8.0, -PI / 8.0, PI / 8.0, 3.0 * PI / 8.0];
        for (a, w) in g.angles.iter().zip(want) {
            assert_abs_diff_eq!(*a, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn aps_examples() {
        let n = 8;
        let g = dft_grid(n, 0.5).unwrap();
        let d = aps(&CovarianceMatrix::identity(n), &g).unwrap();
        assert!(d.values.iter().all(|&v| (v - n as f64).abs() < 1e-9));

        let a = UlaConfig::half_wavelength(n).steering_vector(g.angles[5]);
        let r = CovarianceMatrix::new(&a * a.adjoint()).unwrap();
        let d = aps(&r, &g).unwrap();
        assert_eq!(d.argmax(), 5);
        assert_abs_diff_eq!(d.values[5], (n * n) as f64, epsilon = 1e-9);

        let d = aps(&CovarianceMatrix::zeros(n), &g).unwrap();
        assert!(d.values.iter().all(|&v| v == 0.0));
        assert!(aps(&CovarianceMatrix::identity(4), &g).is_err());
    }

    #[test]
    fn log_scale_examples() {
        let d = Aps::linear(vec![1.0, 0.0, 100.0]);
        let l = to_log_scale(&d, DEFAULT_FLOOR_DB);
        assert_eq!(l.values, vec![0.0, -80.0, 20.0]);
        let back = from_log_scale(&l);
        assert_abs_diff_eq!(back.values[2], 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(back.values[1], 1e-8, epsilon = 1e-20);
    }

    #[test]
    fn top_indices_examples() {
        assert_eq!(top_indices(&Aps::linear(vec![4.0, 3.0, 2.0, 1.0]), 2), vec![0, 1]);
        assert_eq!(top_indices(&Aps::linear(vec![1.0; 4]), 2), vec![0, 1]);
        assert_eq!(top_indices(&Aps::linear(vec![0.0, 0.0, 5.0, 6.0]), 2), vec![3, 2]);
    }

    #[test]
    fn similarity_examples() {
        let d1 = Aps::linear(vec![0.0, 0.0, 5.0, 6.0]);
        let d2 = Aps::linear(vec![4.0, 3.0, 2.0, 1.0]);
        assert_abs_diff_eq!(similarity(&d1, &d2, 2), 3.0 / 7.0, epsilon = 1e-12);
        assert_eq!(similarity(&d2, &d2, 3), 1.0);
        let disjoint = Aps::linear(vec![0.0, 0.0, 1.0, 2.0]);
        let reference = Aps::linear(vec![7.0, 1.0, 0.0, 0.0]);
        assert_eq!(similarity(&disjoint, &reference, 2), 0.0);
        let zero = Aps::linear(vec![0.0; 4]);
        assert_eq!(similarity(&d1, &zero, 2), 1.0);
    }

    #[test]
    fn same_bins_in_another_order_stay_at_one() {
        // 0.1 + 0.2 + 0.3 and 0.3 + 0.2 + 0.1 round differently
        let d1 = Aps::linear(vec![3.0, 2.0, 1.0]);
        let d2 = Aps::linear(vec![0.1, 0.2, 0.3]);
        assert_eq!(similarity(&d1, &d2, 3), 1.0);
    }

    #[test]
    fn linear_construction_clamps() {
        assert_eq!(Aps::linear(vec![-1e-12, 2.0]).values, vec![0.0, 2.0]);
    }
}
