//! Numerical kernels: sparse Hermitian operators, dense eigensolvers, Lanczos, and Krylov solvers.

mod dense;
mod krylov;
mod lanczos;
mod sparse;

pub use dense::{
    eigh, eigvalsh, hermitian_defect, identity, max_abs_diff, spectral_norm, EigenDecomposition,
};
pub use krylov::{cg, minres, KrylovOptions, KrylovOutcome};
pub use lanczos::{lowest_eigenpairs, LanczosOptions};
pub use sparse::SparseOperator;

pub use num_complex::Complex64 as C64;

/// Dense complex matrix.
pub type DenseMatrix = faer::Mat<C64>;

/// Hermitian linear map applied matrix-free.
pub trait HermitianOp: Sync {
    fn dim(&self) -> usize;
    /// Writes `A x` into `y`.
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// `base + shift * I + penalty * P`, with `P` the projector onto the listed basis states.
pub struct ShiftedOp<'a, A: HermitianOp + ?Sized> {
    pub base: &'a A,
    pub shift: f64,
    pub penalty: f64,
    pub penalized: &'a [usize],
    pub scale: f64,
}

impl<'a, A: HermitianOp + ?Sized> ShiftedOp<'a, A> {
    pub fn new(base: &'a A) -> Self {
        Self {
            base,
            shift: 0.0,
            penalty: 0.0,
            penalized: &[],
            scale: 1.0,
        }
    }
}

impl<A: HermitianOp + ?Sized> HermitianOp for ShiftedOp<'_, A> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.base.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = (*yi + xi * self.shift) * self.scale;
        }
        if self.penalty != 0.0 {
            for &i in self.penalized {
                y[i] += x[i] * (self.penalty * self.scale);
            }
        }
    }
}

impl HermitianOp for DenseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                acc += self[(i, j)] * xj;
            }
            *yi = acc;
        }
    }
}

/// Sesquilinear inner product `<a, b>` (conjugate-linear in `a`).
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [C64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}
