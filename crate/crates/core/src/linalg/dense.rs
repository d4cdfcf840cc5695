use std::sync::Once;

use faer::{Mat, Par, Side};

use super::{DenseMatrix, C64};
use crate::error::{GadgetError, Result};

static SEQUENTIAL: Once = Once::new();

/// Dense kernels run single-threaded so results are bitwise reproducible;
/// concurrency comes from independent sweep points instead.
fn sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Eigenvalues ascending, eigenvectors as matching columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

fn is_real(m: &DenseMatrix) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

/// Full eigendecomposition of a Hermitian matrix (lower triangle is read).
pub fn eigh(m: &DenseMatrix) -> Result<EigenDecomposition> {
    sequential();
    let n = m.nrows();
    if is_real(m) {
        let re = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re);
        let e = re
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| GadgetError::numeric("eigh", format!("{e:?}")))?;
        let values = e.S().column_vector().iter().copied().collect();
        let u = e.U();
        let vectors = DenseMatrix::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0));
        Ok(EigenDecomposition { values, vectors })
    } else {
        let e = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| GadgetError::numeric("eigh", format!("{e:?}")))?;
        let values = e.S().column_vector().iter().map(|v| v.re).collect();
        Ok(EigenDecomposition {
            values,
            vectors: e.U().to_owned(),
        })
    }
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &DenseMatrix) -> Result<Vec<f64>> {
    sequential();
    let n = m.nrows();
    if is_real(m) {
        Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)].re)
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| GadgetError::numeric("eigvalsh", format!("{e:?}")))
    } else {
        m.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| GadgetError::numeric("eigvalsh", format!("{e:?}")))
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    sequential();
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let s = m
        .singular_values()
        .map_err(|e| GadgetError::numeric("spectral_norm", format!("{e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

pub fn identity(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Entrywise `max |a - b|`.
pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

/// Entrywise `max |M - M^dagger|`.
pub fn hermitian_defect(m: &DenseMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
