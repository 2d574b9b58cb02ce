//! Training losses.

use super::tensor::Tensor;
use crate::covariance::{toeplitz_from_column, ToeplitzColumn};
use crate::spectrum::{aps_raw, Aps, DftGrid};
use crate::{Error, Result};

/// Mean squared error over all entries and its gradient `2 (pred - target) / count`.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape != target.shape {
        return Err(Error::DimensionMismatch(format!(
            "prediction {:?} vs target {:?}",
            pred.shape, target.shape
        )));
    }
    let count = pred.len() as f64;
    let mut grad = pred.zeros_like();
    let mut loss = 0.0;
    for ((g, p), t) in grad.data.iter_mut().zip(&pred.data).zip(&target.data) {
        let e = p - t;
        loss += e * e;
        *g = 2.0 * e / count;
    }
    Ok((loss / count, grad))
}

/// The map from a two-channel column `[Re r; Im r]` to the (unclamped) APS of
/// its Hermitian Toeplitz embedding.
///
/// Both steps are real-linear, so the whole chain is a fixed `N x 2N` matrix,
/// built once per grid by pushing the unit columns through the embedding.
#[derive(Clone, Debug)]
pub struct ColApsOperator {
    n: usize,
    /// Row-major `n x 2n`.
    a: Vec<f64>,
}

impl ColApsOperator {
    pub fn new(grid: &DftGrid) -> Result<Self> {
        let n = grid.len();
        let mut a = vec![0.0; n * 2 * n];
        for j in 0..2 * n {
            let mut unit = vec![0.0; 2 * n];
            unit[j] = 1.0;
            let t = toeplitz_from_column(&ToeplitzColumn::from_channels(&unit));
            for (i, v) in aps_raw(t.matrix(), grid)?.into_iter().enumerate() {
                a[i * 2 * n + j] = v;
            }
        }
        Ok(Self { n, a })
    }

    /// Number of grid bins.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unclamped APS of the column given as two channels.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), 2 * self.n);
        self.a
            .chunks_exact(2 * self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `||A x - d||^2 / N` and its gradient `2 A^T (A x - d) / N`.
    pub fn loss(&self, x: &[f64], d: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != 2 * self.n || d.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "column of {} channels and APS of {} bins for a {}-bin grid",
                x.len(),
                d.len(),
                self.n
            )));
        }
        let n = self.n as f64;
        let mut grad = vec![0.0; 2 * self.n];
        let mut loss = 0.0;
        for ((row, ax), di) in self.a.chunks_exact(2 * self.n).zip(self.apply(x)).zip(d) {
            let e = ax - di;
            loss += e * e;
            for (g, a) in grad.iter_mut().zip(row) {
                *g += 2.0 * e * a / n;
            }
        }
        Ok((loss / n, grad))
    }
}

/// Loss between the APS of the predicted column's Toeplitz matrix and a
/// target linear APS, with the gradient in the two-channel layout of
/// [`ToeplitzColumn::to_channels`].
pub fn col_aps_loss(r_hat: &ToeplitzColumn, d_c: &Aps, grid: &DftGrid) -> Result<(f64, Vec<f64>)> {
    ColApsOperator::new(grid)?.loss(&r_hat.to_channels(), &d_c.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::CovarianceMatrix;
    use crate::scenario::UlaConfig;
    use crate::spectrum::{aps, dft_grid};
    use crate::C64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mse_examples() {
        let a = Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap();
        let z = Tensor::zeros(&[1, 2]);
        assert_eq!(mse_loss(&a, &a).unwrap().0, 0.0);
        let (l, g) = mse_loss(&a, &z).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g.data, vec![1.0, 1.0]);
        assert!(mse_loss(&a, &Tensor::zeros(&[2, 1])).is_err());
    }

    #[test]
    fn mse_gradient_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Tensor::new(vec![2, 3], (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let t = Tensor::new(vec![2, 3], (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let (_, g) = mse_loss(&p, &t).unwrap();
        let eps = 1e-6;
        for i in 0..6 {
            let mut hi = p.clone();
            hi.data[i] += eps;
            let mut lo = p.clone();
            lo.data[i] -= eps;
            let fd = (mse_loss(&hi, &t).unwrap().0 - mse_loss(&lo, &t).unwrap().0) / (2.0 * eps);
            assert!((fd - g.data[i]).abs() < 1e-8);
        }
    }

    fn random_column(rng: &mut ChaCha8Rng, n: usize) -> ToeplitzColumn {
        let mut col: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        col[0].im = 0.0;
        ToeplitzColumn { col }
    }

    #[test]
    fn operator_matches_direct_aps() {
        let n = 8;
        let grid = dft_grid(n, 0.5).unwrap();
        let op = ColApsOperator::new(&grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = random_column(&mut rng, n);
        let direct = aps_raw(toeplitz_from_column(&r).matrix(), &grid).unwrap();
        for (a, b) in op.apply(&r.to_channels()).iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn true_column_gives_zero_loss() {
        let n = 16;
        let cfg = UlaConfig::half_wavelength(n);
        let grid = dft_grid(n, 0.5).unwrap();
        let a = cfg.steering_vector(0.3);
        let r = CovarianceMatrix::new(&a * a.adjoint()).unwrap();
        let d = aps(&r, &grid).unwrap();
        let col = crate::covariance::first_column(&r).unwrap();
        let (loss, _) = col_aps_loss(&col, &d, &grid).unwrap();
        let scale: f64 = d.values.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!(loss <= 1e-12 * scale);
    }

    #[test]
    fn gradient_matches_differences() {
        let n = 8;
        let grid = dft_grid(n, 0.5).unwrap();
        let op = ColApsOperator::new(&grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_column(&mut rng, n).to_channels();
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let (_, g) = op.loss(&x, &d).unwrap();
        let eps = 1e-5;
        for i in 0..2 * n {
            let mut hi = x.clone();
            hi[i] += eps;
            let mut lo = x.clone();
            lo[i] -= eps;
            let fd = (op.loss(&hi, &d).unwrap().0 - op.loss(&lo, &d).unwrap().0) / (2.0 * eps);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-8);
            assert!(rel < 1e-5, "component {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn loss_scales_quadratically() {
        let n = 8;
        let grid = dft_grid(n, 0.5).unwrap();
        let op = ColApsOperator::new(&grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_column(&mut rng, n).to_channels();
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
        let c = 3.0;
        let xs: Vec<f64> = x.iter().map(|v| c * v).collect();
        let ds: Vec<f64> = d.iter().map(|v| c * v).collect();
        let (l1, _) = op.loss(&x, &d).unwrap();
        let (l2, _) = op.loss(&xs, &ds).unwrap();
        assert!((l2 - c * c * l1).abs() <= 1e-10 * l2);
    }
}
