//! Spatial covariance estimation and the Toeplitz-Hermitian-PSD structure.
//!
//! A far-field covariance seen by a uniform linear array is Hermitian,
//! positive semi-definite and Toeplitz, so after projection onto that cone it
//! is fully described by its first column. [`project_toeplitz_psd`] computes
//! the metric (Frobenius) projection onto the intersection of the
//! Toeplitz-Hermitian subspace and the PSD cone, either with Dykstra's
//! alternating projections or with a quasi-Newton method on the dual.

use serde::{Deserialize, Serialize};

use crate::hermitian;
use crate::scenario::ChannelFreq;
use crate::{CMatrix, Error, Result, C64};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Relative Toeplitz tolerance accepted by [`first_column`].
pub const TOEPLITZ_CHECK_TOL: f64 = 1e-6;

/// Hermitian `N x N` spatial covariance. Construction symmetrizes the input.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    data: CMatrix,
}

/// First column `r` of a Hermitian Toeplitz covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzColumn {
    pub col: Vec<C64>,
}

impl CovarianceMatrix {
    pub fn new(data: CMatrix) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let adj = data.adjoint();
        let data = (data + adj).unscale(2.0);
        Ok(Self { data })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: CMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.scale(s),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian::eigenvalues(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Largest absolute deviation of an entry from the mean of its diagonal.
    pub fn toeplitz_deviation(&self) -> f64 {
        toeplitz_deviation(&self.data)
    }
}

fn toeplitz_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for k in -(n as isize - 1)..n as isize {
        let cells: Vec<C64> = diagonal_cells(n, k).map(|(i, j)| m[(i, j)]).collect();
        let mean = cells.iter().sum::<C64>() / cells.len() as f64;
        for z in cells {
            worst = worst.max((z - mean).norm());
        }
    }
    worst
}

/// Indices on diagonal `k` (`i - j = k`).
fn diagonal_cells(n: usize, k: isize) -> impl Iterator<Item = (usize, usize)> {
    let len = n - k.unsigned_abs();
    (0..len).map(move |t| {
        if k >= 0 {
            (t + k as usize, t)
        } else {
            (t, t + k.unsigned_abs())
        }
    })
}

/// Communication covariance at the RSU averaged over subcarriers:
/// `R = (1/K) sum_k (1/N_V) H[k]^H H[k]`.
pub fn comm_covariance(ch: &ChannelFreq, num_vehicle_antennas: usize) -> Result<CovarianceMatrix> {
    if ch.response.is_empty() {
        return Err(Error::InvalidConfig("channel has no subcarriers".into()));
    }
    let (rows, cols) = ch.dims();
    if rows != num_vehicle_antennas {
        return Err(Error::DimensionMismatch(format!(
            "channel has {rows} vehicle antennas, expected {num_vehicle_antennas}"
        )));
    }
    let mut acc = CMatrix::zeros(cols, cols);
    for h in &ch.response {
        acc += h.ad_mul(h);
    }
    let scale = 1.0 / (ch.response.len() * num_vehicle_antennas) as f64;
    CovarianceMatrix::new(acc.scale(scale))
}

/// `R = (1/I) Y Y^H` for an `N x I` snapshot matrix.
pub fn sample_covariance(y: &CMatrix) -> Result<CovarianceMatrix> {
    if y.ncols() == 0 {
        return Err(Error::InvalidConfig("need at least one snapshot".into()));
    }
    let r = (y * y.adjoint()).unscale(y.ncols() as f64);
    CovarianceMatrix::new(r)
}

/// Algorithm behind [`project_toeplitz_psd_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMethod {
    /// L-BFGS on the dual of the nearest Toeplitz-PSD problem.
    #[default]
    DualQuasiNewton,
    /// Dykstra's alternating projections.
    Dykstra,
}

/// Outcome of a projection run.
#[derive(Clone, Debug)]
pub struct Projection {
    pub matrix: CovarianceMatrix,
    pub iterations: usize,
    /// Final stopping residual, relative to `||R||_F`.
    pub residual: f64,
    pub converged: bool,
}

/// Frobenius projection onto Hermitian Toeplitz matrices: average each diagonal.
pub fn project_toeplitz(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut col = vec![C64::new(0.0, 0.0); n];
    for (k, slot) in col.iter_mut().enumerate() {
        // pair diagonal k with the conjugate of diagonal -k
        let mut sum = C64::new(0.0, 0.0);
        for (i, j) in diagonal_cells(n, k as isize) {
            sum += m[(i, j)] + m[(j, i)].conj();
        }
        *slot = sum / (2 * (n - k)) as f64;
    }
    col[0].im = 0.0;
    toeplitz_matrix(&col)
}

/// Frobenius projection of a Hermitian matrix onto the PSD cone.
pub fn project_psd(m: &CMatrix) -> CMatrix {
    hermitian::psd_part(m).0
}

fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Shifts a Hermitian Toeplitz matrix by a multiple of the identity so that
/// its smallest eigenvalue is not negative. The shift keeps the Toeplitz
/// structure and is bounded by the solver residual.
fn lift_to_psd(mut y: CMatrix) -> CMatrix {
    let lmin = hermitian::eigenvalues(&y).first().copied().unwrap_or(0.0);
    if lmin < 0.0 {
        for i in 0..y.nrows() {
            y[(i, i)].re -= lmin;
        }
    }
    y
}

fn dykstra(r: &CMatrix, scale: f64, tol: f64, max_iter: usize) -> (CMatrix, usize, f64, bool) {
    let n = r.nrows();
    let mut x = r.clone();
    let mut p = CMatrix::zeros(n, n);
    let mut q = CMatrix::zeros(n, n);
    let mut y_prev: Option<CMatrix> = None;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let xp = &x + &p;
        let y = project_toeplitz(&xp);
        p = xp - &y;
        let yq = &y + &q;
        x = project_psd(&yq);
        q = yq - &x;

        let gap = (&x - &y).norm();
        let step = y_prev.as_ref().map_or(f64::INFINITY, |prev| (&y - prev).norm());
        residual = if gap == 0.0 { 0.0 } else { gap.max(step) } / scale;
        if residual < tol {
            return (y, it, residual, true);
        }
        y_prev = Some(y);
    }
    (y_prev.unwrap_or(x), max_iter, residual, false)
}

/// Dual of `min ||X - R||^2 s.t. X Toeplitz, X PSD`: minimize
/// `theta(Y) = ||P_psd(R + Y)||^2 / 2` over `Y` orthogonal to the Toeplitz
/// subspace. The gradient is the non-Toeplitz part of `X = P_psd(R + Y)`, so
/// at the optimum `X` is Toeplitz and equals the projection.
fn dual_quasi_newton(r: &CMatrix, scale: f64, tol: f64, max_iter: usize) -> (CMatrix, usize, f64, bool) {
    const MEMORY: usize = 12;
    let eval = |y: &CMatrix| {
        let (x, energy) = hermitian::psd_part(&(r + y));
        let toe = project_toeplitz(&x);
        let grad = &x - &toe;
        (0.5 * energy, grad, toe)
    };
    let n = r.nrows();
    let mut y = CMatrix::zeros(n, n);
    let (mut theta, mut grad, mut toe) = eval(&y);
    let mut history: std::collections::VecDeque<(CMatrix, CMatrix, f64)> = Default::default();
    for it in 0..max_iter {
        let residual = grad.norm() / scale;
        if residual < tol {
            return (toe, it, residual, true);
        }
        // two-loop recursion
        let mut d = -&grad;
        let mut alphas = Vec::with_capacity(history.len());
        for (s, g, rho) in history.iter().rev() {
            let a = rho * inner(s, &d);
            d -= g * C64::new(a, 0.0);
            alphas.push(a);
        }
        if let Some((s, g, _)) = history.back() {
            d *= C64::new(inner(s, g) / inner(g, g), 0.0);
        }
        for ((s, g, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * inner(g, &d);
            d += s * C64::new(a - b, 0.0);
        }
        let mut slope = inner(&grad, &d);
        if slope >= 0.0 {
            history.clear();
            d = -&grad;
            slope = -grad.norm_squared();
        }
        let mut step = 1.0;
        let accepted = loop {
            let trial = &y + &d * C64::new(step, 0.0);
            let (t_theta, t_grad, t_toe) = eval(&trial);
            // the slack absorbs rounding in theta once the decrease is near machine precision
            if t_theta <= theta + 1e-4 * step * slope + 1e-13 * theta || step < 1e-10 {
                break (trial, t_theta, t_grad, t_toe);
            }
            step *= 0.5;
        };
        let (y_new, theta_new, grad_new, toe_new) = accepted;
        let s = &y_new - &y;
        let g = &grad_new - &grad;
        let curvature = inner(&s, &g);
        if curvature > 1e-16 * s.norm() * g.norm() {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, g, 1.0 / curvature));
        }
        y = y_new;
        theta = theta_new;
        grad = grad_new;
        toe = toe_new;
    }
    let residual = grad.norm() / scale;
    (toe, max_iter, residual, residual < tol)
}

/// Projection onto the Toeplitz-Hermitian-PSD cone with diagnostics.
///
/// Both methods converge to the Frobenius-nearest Toeplitz-Hermitian-PSD
/// matrix. The returned matrix is exactly Toeplitz and Hermitian, and it is
/// lifted by a multiple of the identity no larger than the final residual so
/// that it is PSD as well. Iteration stops once the distance between the PSD
/// and Toeplitz iterates (and, for Dykstra, the step between successive
/// iterates) falls below `tol * ||R||_F`.
pub fn project_toeplitz_psd_with(
    r: &CovarianceMatrix,
    tol: f64,
    max_iter: usize,
    method: ProjectionMethod,
) -> Projection {
    let scale = r.frobenius();
    if scale == 0.0 {
        return Projection {
            matrix: r.clone(),
            iterations: 0,
            residual: 0.0,
            converged: true,
        };
    }
    let max_iter = max_iter.max(1);
    let (y, iterations, residual, converged) = match method {
        ProjectionMethod::Dykstra => dykstra(&r.data, scale, tol, max_iter),
        ProjectionMethod::DualQuasiNewton => dual_quasi_newton(&r.data, scale, tol, max_iter),
    };
    Projection {
        matrix: CovarianceMatrix { data: lift_to_psd(y) },
        iterations,
        residual,
        converged,
    }
}

pub fn project_toeplitz_psd_detailed(r: &CovarianceMatrix, tol: f64, max_iter: usize) -> Projection {
    project_toeplitz_psd_with(r, tol, max_iter, ProjectionMethod::default())
}

/// Projection onto the Toeplitz-Hermitian-PSD cone.
///
/// Fails with [`Error::NonConvergence`] (carrying the last iterate) only when
/// `max_iter` is exhausted with a residual above `100 * tol`.
pub fn project_toeplitz_psd(r: &CovarianceMatrix, tol: f64, max_iter: usize) -> Result<CovarianceMatrix> {
    let out = project_toeplitz_psd_detailed(r, tol, max_iter);
    if !out.converged && out.residual > 100.0 * tol {
        return Err(Error::NonConvergence {
            residual: out.residual,
            iterations: out.iterations,
            result: Box::new(out.matrix),
        });
    }
    Ok(out.matrix)
}

/// First column of a Toeplitz covariance.
///
/// The input must be Toeplitz to within [`TOEPLITZ_CHECK_TOL`] relative to
/// its largest entry.
pub fn first_column(r: &CovarianceMatrix) -> Result<ToeplitzColumn> {
    let peak = r.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let dev = r.toeplitz_deviation();
    if dev > TOEPLITZ_CHECK_TOL * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::NotToeplitz(dev));
    }
    let mut col: Vec<C64> = r.data.column(0).iter().copied().collect();
    if let Some(c0) = col.first_mut() {
        c0.im = 0.0;
    }
    Ok(ToeplitzColumn { col })
}

fn toeplitz_matrix(col: &[C64]) -> CMatrix {
    let n = col.len();
    CMatrix::from_fn(n, n, |i, j| if i >= j { col[i - j] } else { col[j - i].conj() })
}

/// Hermitian Toeplitz matrix with first column `r`. Not necessarily PSD.
pub fn toeplitz_from_column(r: &ToeplitzColumn) -> CovarianceMatrix {
    let mut col = r.col.clone();
    if let Some(c0) = col.first_mut() {
        c0.im = 0.0;
    }
    CovarianceMatrix {
        data: toeplitz_matrix(&col),
    }
}

impl ToeplitzColumn {
    pub fn len(&self) -> usize {
        self.col.len()
    }

    pub fn is_empty(&self) -> bool {
        self.col.is_empty()
    }

    /// Interleaved `[re_0..re_{N-1}, im_0..im_{N-1}]` two-channel layout.
    pub fn to_channels(&self) -> Vec<f64> {
        self.col.iter().map(|z| z.re).chain(self.col.iter().map(|z| z.im)).collect()
    }

    pub fn from_channels(data: &[f64]) -> Self {
        let n = data.len() / 2;
        Self {
            col: (0..n).map(|i| C64::new(data[i], data[n + i])).collect(),
        }
    }
}
