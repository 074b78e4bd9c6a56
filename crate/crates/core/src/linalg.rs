//! Bridges to the dense kernels (symmetric eigensolver, complex LU) plus a few
//! norm helpers shared across the crate.

use faer::prelude::Solve;
use faer::Mat;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn to_faer_c(m: &DMatrix<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigenvalues and orthonormal eigenvectors of a real symmetric matrix,
/// eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    let evd = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| CoreError::EigenSolver(format!("{e:?} (n={n})")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let vals = DVector::from_fn(n, |i, _| s[i]);
    let vecs = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((vals, vecs))
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = m.nrows();
    let vals = to_faer(m)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| CoreError::EigenSolver(format!("{e:?} (n={n})")))?;
    Ok(DVector::from_vec(vals))
}

/// Cached LU factorization of a complex dense matrix.
pub struct ComplexLu {
    lu: faer::linalg::solvers::PartialPivLu<Complex64>,
    n: usize,
}

impl ComplexLu {
    pub fn new(m: &DMatrix<Complex64>) -> Result<Self> {
        let n = m.nrows();
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::NonFinite {
                context: "LU factorization input".into(),
            });
        }
        let lu = to_faer_c(m).partial_piv_lu();
        Ok(Self { lu, n })
    }

    pub fn solve(&self, rhs: &DVector<Complex64>) -> DVector<Complex64> {
        let b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        DVector::from_fn(self.n, |i, _| x[(i, 0)])
    }
}

/// Two-norm estimate by power iteration on `M^T M`.
pub fn norm2_est(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    // fixed deterministic seed vector
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i * 2654435761) % 1000) as f64 / 1000.0);
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..25 {
        let w = m.transpose() * (m * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        est = nw.sqrt();
        v = w / nw;
    }
    est
}

/// Grid-weighted L2 norm of a complex vector: `sqrt(h) * ||v||_2`.
pub fn grid_norm(v: &DVector<Complex64>, h: f64) -> f64 {
    v.norm() * h.sqrt()
}

/// Real matrix applied to a complex vector without forming a complex matrix.
pub fn apply_real_to_complex(m: &DMatrix<f64>, v: &DVector<Complex64>) -> DVector<Complex64> {
    let re = DVector::from_fn(v.len(), |i, _| v[i].re);
    let im = DVector::from_fn(v.len(), |i, _| v[i].im);
    let mre = m * re;
    let mim = m * im;
    DVector::from_fn(v.len(), |i, _| Complex64::new(mre[i], mim[i]))
}
