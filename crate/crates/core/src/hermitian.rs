//! Hermitian eigendecomposition backed by `faer`.

use faer::{Mat, Side};

use crate::{CMatrix, C64};

fn to_faer(m: &CMatrix) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigenvalues in nondecreasing order.
pub(crate) fn eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("Hermitian eigenvalue iteration failed")
}

/// Projection of a Hermitian matrix onto the PSD cone together with
/// `sum(max(lambda, 0)^2)`. Returns the input untouched when it is already PSD.
pub(crate) fn psd_part(m: &CMatrix) -> (CMatrix, f64) {
    let a = to_faer(m);
    let eig = a.self_adjoint_eigen(Side::Lower).expect("Hermitian eigendecomposition failed");
    let s = eig.S().column_vector();
    let n = m.nrows();
    let lambdas: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    let energy = lambdas.iter().map(|l| l.max(0.0).powi(2)).sum();
    if lambdas.iter().all(|&l| l >= 0.0) {
        return (m.clone(), energy);
    }
    let u = eig.U();
    // only the nonnegative part of the spectrum contributes
    let keep: Vec<usize> = (0..n).filter(|&i| lambdas[i] > 0.0).collect();
    let k = keep.len();
    let mut scaled = Mat::<C64>::zeros(n, k);
    let mut basis = Mat::<C64>::zeros(n, k);
    for (c, &i) in keep.iter().enumerate() {
        for r in 0..n {
            basis[(r, c)] = u[(r, i)];
            scaled[(r, c)] = u[(r, i)] * lambdas[i];
        }
    }
    let out = &scaled * basis.adjoint();
    let x = CMatrix::from_fn(n, n, |i, j| (out[(i, j)] + out[(j, i)].conj()) * 0.5);
    (x, energy)
}
