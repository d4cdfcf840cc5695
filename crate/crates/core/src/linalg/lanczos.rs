use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{axpy, dot, norm, scale, HermitianOp, C64};
use crate::error::{GadgetError, Result};

/// Controls for the deflated Lanczos eigensolver.
#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Residual `|A v - theta v|` accepted, relative to `max(1, scale)`.
    pub tol: f64,
    /// Krylov subspace size per restart cycle.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Seed for random starting vectors.
    pub seed: u64,
    /// Rough magnitude of the operator, used to make `tol` relative.
    pub scale: f64,
}

/// Seed used for iterative starts unless the caller overrides it.
pub const DEFAULT_SEED: u64 = 0x5EED_2B0D;

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            krylov_dim: 64,
            max_restarts: 400,
            seed: DEFAULT_SEED,
            scale: 1.0,
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

/// Orthogonalizes `v` against every vector of every set, two full passes; returns the remaining norm.
fn orthogonalize(v: &mut [C64], sets: &[&[Vec<C64>]]) -> f64 {
    for _ in 0..2 {
        for q in sets.iter().flat_map(|s| s.iter()) {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
    norm(v)
}

struct RitzPair {
    value: f64,
    vector: Vec<C64>,
    residual: f64,
}

/// Lowest eigenpair of `op` on the orthogonal complement of `locked`.
fn lowest_in_complement(
    op: &(impl HermitianOp + ?Sized),
    locked: &[Vec<C64>],
    start: Vec<C64>,
    opts: &LanczosOptions,
) -> Result<RitzPair> {
    let n = op.dim();
    let free = n - locked.len();
    let m_max = opts.krylov_dim.min(free).max(1);
    let threshold = opts.tol * opts.scale.max(1.0);
    let mut start = start;
    let mut last_residual = f64::INFINITY;
    for _ in 0..=opts.max_restarts {
        let mut q = start;
        let nq = orthogonalize(&mut q, &[locked]);
        if nq == 0.0 {
            return Err(GadgetError::numeric(
                "lanczos",
                "start vector lies in the locked subspace",
            ));
        }
        scale(1.0 / nq, &mut q);
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m_max);
        let mut alphas = Vec::with_capacity(m_max);
        let mut betas: Vec<f64> = Vec::with_capacity(m_max);
        let mut w = vec![C64::new(0.0, 0.0); n];
        basis.push(q);
        loop {
            let j = basis.len() - 1;
            op.apply(&basis[j], &mut w);
            let alpha = dot(&basis[j], &w).re;
            alphas.push(alpha);
            let wn = norm(&w);
            let b = orthogonalize(&mut w, &[locked, &basis]);
            // A remainder at roundoff level means the Krylov space is invariant.
            if basis.len() == m_max || b <= 1e-12 * wn {
                break;
            }
            betas.push(b);
            let mut next = w.clone();
            scale(1.0 / b, &mut next);
            basis.push(next);
        }
        let k = basis.len();
        let t = Mat::<f64>::from_fn(k, k, |i, j| {
            if i == j {
                alphas[i]
            } else if i == j + 1 {
                betas[j]
            } else if j == i + 1 {
                betas[i]
            } else {
                0.0
            }
        });
        let e = t
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| GadgetError::numeric("lanczos", format!("{e:?}")))?;
        let s = e.U().col(0);
        let mut ritz = vec![C64::new(0.0, 0.0); n];
        for (i, v) in basis.iter().enumerate() {
            axpy(C64::new(s[i], 0.0), v, &mut ritz);
        }
        let nr = orthogonalize(&mut ritz, &[locked]);
        scale(1.0 / nr, &mut ritz);
        // Measure the residual directly rather than trusting the recurrence.
        op.apply(&ritz, &mut w);
        let theta = dot(&ritz, &w).re;
        axpy(C64::new(-theta, 0.0), &ritz, &mut w);
        orthogonalize(&mut w, &[locked]);
        let residual = norm(&w);
        last_residual = residual;
        if residual <= threshold || k == free {
            return Ok(RitzPair {
                value: theta,
                vector: ritz,
                residual,
            });
        }
        start = ritz;
    }
    Err(GadgetError::numeric(
        "lanczos",
        format!(
            "no convergence after {} restarts (residual {last_residual:.3e}, threshold {threshold:.3e})",
            opts.max_restarts
        ),
    ))
}

/// The `count` smallest eigenpairs of a Hermitian operator, ascending.
///
/// One pair is locked per Lanczos run; a final run on the complement of the
/// locked vectors catches any level that an earlier run skipped.
pub fn lowest_eigenpairs(
    op: &(impl HermitianOp + ?Sized),
    count: usize,
    opts: &LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let n = op.dim();
    if count > n {
        return Err(GadgetError::malformed(
            "lowest_eigenpairs",
            format!("requested {count} eigenpairs of a {n}-dimensional operator"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut pairs: Vec<(f64, Vec<C64>)> = Vec::with_capacity(count + 1);
    let threshold = opts.tol * opts.scale.max(1.0);
    let mut checks = 0;
    while pairs.len() < count || (pairs.len() < n && checks < count + 2) {
        let locked: Vec<Vec<C64>> = pairs.iter().map(|(_, v)| v.clone()).collect();
        let start = random_vector(&mut rng, n);
        let found = lowest_in_complement(op, &locked, start, opts)?;
        if pairs.len() < count {
            pairs.push((found.value, found.vector));
            continue;
        }
        checks += 1;
        let largest = pairs.last().map(|p| p.0).unwrap_or(f64::NEG_INFINITY);
        if found.value < largest - 10.0 * threshold.max(found.residual) {
            pairs.push((found.value, found.vector));
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            pairs.pop();
        } else {
            break;
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().unzip())
}
