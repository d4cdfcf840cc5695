use super::{axpy, dot, norm, HermitianOp, C64};

/// Stopping rule shared by the Krylov solvers.
#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    /// Relative residual `|b - A x| / |b|` to reach.
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovOutcome {
    pub x: Vec<C64>,
    pub iterations: usize,
    /// True relative residual of the returned iterate.
    pub rel_residual: f64,
    pub converged: bool,
}

fn true_residual(op: &(impl HermitianOp + ?Sized), b: &[C64], x: &[C64], bnorm: f64) -> f64 {
    let mut ax = vec![C64::new(0.0, 0.0); b.len()];
    op.apply(x, &mut ax);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(a, bi)| (bi - a).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / bnorm
}

fn zero_rhs(n: usize) -> KrylovOutcome {
    KrylovOutcome {
        x: vec![C64::new(0.0, 0.0); n],
        iterations: 0,
        rel_residual: 0.0,
        converged: true,
    }
}

/// Minimum-residual solve of `A x = b` for Hermitian, possibly indefinite `A`.
/// `inv_precond`, if given, holds the positive diagonal of the inverse preconditioner.
pub fn minres(
    op: &(impl HermitianOp + ?Sized),
    b: &[C64],
    inv_precond: Option<&[f64]>,
    opts: KrylovOptions,
) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return zero_rhs(n);
    }
    let precond = |r: &[C64], out: &mut Vec<C64>| {
        out.clear();
        match inv_precond {
            Some(d) => out.extend(r.iter().zip(d).map(|(ri, di)| ri * *di)),
            None => out.extend_from_slice(r),
        }
    };
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = Vec::with_capacity(n);
    precond(&r1, &mut y);
    let beta1 = dot(&r1, &y).re.sqrt();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![zero; n];
    let mut w2 = vec![zero; n];
    let mut v = vec![zero; n];
    let mut av = vec![zero; n];
    let mut iterations = 0;
    let mut rel_residual = 1.0;
    for itn in 1..=opts.max_iter {
        iterations = itn;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi * s;
        }
        op.apply(&v, &mut av);
        if itn >= 2 {
            axpy(C64::new(-beta / oldb, 0.0), &r1, &mut av);
        }
        let alfa = dot(&v, &av).re;
        axpy(C64::new(-alfa / beta, 0.0), &r2, &mut av);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&av);
        precond(&r2, &mut y);
        oldb = beta;
        beta = dot(&r2, &y).re.max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - w1 * oldeps - w2[i] * delta) / gamma;
            x[i] += w[i] * phi;
        }
        let estimate = phibar / beta1;
        if estimate <= opts.rel_tol || beta <= f64::EPSILON * beta1 {
            rel_residual = true_residual(op, b, &x, bnorm);
            if rel_residual <= opts.rel_tol || beta <= f64::EPSILON * beta1 {
                break;
            }
        }
    }
    if iterations == opts.max_iter {
        rel_residual = true_residual(op, b, &x, bnorm);
    }
    KrylovOutcome {
        converged: rel_residual <= opts.rel_tol,
        x,
        iterations,
        rel_residual,
    }
}

/// Conjugate gradients for Hermitian positive definite `A`.
pub fn cg(op: &(impl HermitianOp + ?Sized), b: &[C64], opts: KrylovOptions) -> KrylovOutcome {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return zero_rhs(n);
    }
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![zero; n];
    let mut rr = dot(&r, &r).re;
    let mut iterations = 0;
    for itn in 1..=opts.max_iter {
        iterations = itn;
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap).re;
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        axpy(C64::new(alpha, 0.0), &p, &mut x);
        axpy(C64::new(-alpha, 0.0), &ap, &mut r);
        let rr_new = dot(&r, &r).re;
        if rr_new.sqrt() <= opts.rel_tol * bnorm * 0.5 {
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + *pi * beta;
        }
    }
    let rel_residual = true_residual(op, b, &x, bnorm);
    KrylovOutcome {
        converged: rel_residual <= opts.rel_tol,
        x,
        iterations,
        rel_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn indefinite() -> DenseMatrix {
        let mut m = DenseMatrix::zeros(3, 3);
        m[(0, 0)] = C64::new(2.0, 0.0);
        m[(1, 1)] = C64::new(-1.0, 0.0);
        m[(2, 2)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.3, 0.2);
        m[(1, 0)] = C64::new(0.3, -0.2);
        m
    }

    #[test]
    fn minres_solves_indefinite() {
        let m = indefinite();
        let b = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.5)];
        let out = minres(&m, &b, None, KrylovOptions::default());
        assert!(out.converged, "{}", out.rel_residual);
        let prec = [0.5, 1.0, 2.0];
        let out = minres(&m, &b, Some(&prec), KrylovOptions::default());
        assert!(out.converged, "{}", out.rel_residual);
    }

    #[test]
    fn cg_solves_spd() {
        let mut m = indefinite();
        m[(1, 1)] = C64::new(3.0, 0.0);
        let b = vec![C64::new(1.0, 0.0), C64::new(2.0, -1.0), C64::new(0.0, 0.0)];
        let out = cg(&m, &b, KrylovOptions::default());
        assert!(out.converged);
    }
}
