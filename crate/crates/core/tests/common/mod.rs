//! Fixtures and independent dense oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wgadget::gadget2::{build_gadget, desk_plan, GadgetHamiltonian, GadgetPlan};
use wgadget::linalg::{DenseMatrix, C64};
use wgadget::model::{CoupledTerm, TargetHamiltonian};
use wgadget::{Pauli, PauliSum};

pub const PAULIS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn single(p: Option<Pauli>) -> [[C64; 2]; 2] {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match p {
        None => [[l, o], [o, l]],
        Some(Pauli::X) => [[o, l], [l, o]],
        Some(Pauli::Y) => [[o, -i], [i, o]],
        Some(Pauli::Z) => [[l, o], [o, -l]],
    }
}

/// Dense Pauli string by explicit Kronecker products; qubit `q` is bit `q` of the index.
pub fn kron_string(n: usize, factors: &[(usize, Pauli)]) -> DenseMatrix {
    let mut m = DenseMatrix::from_fn(1, 1, |_, _| C64::new(1.0, 0.0));
    for q in 0..n {
        let p = factors.iter().find(|f| f.0 == q).map(|f| f.1);
        let s = single(p);
        let d = m.nrows();
        m = DenseMatrix::from_fn(2 * d, 2 * d, |r, c| s[r / d][c / d] * m[(r % d, c % d)]);
    }
    m
}

/// Dense sum of `coeff * string` terms.
pub fn dense_sum(n: usize, terms: &[(f64, Vec<(usize, Pauli)>)]) -> DenseMatrix {
    let dim = 1 << n;
    let mut out = DenseMatrix::zeros(dim, dim);
    for (c, f) in terms {
        let p = kron_string(n, f);
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += p[(i, j)] * *c;
            }
        }
    }
    out
}

/// Dense oracle of a Pauli sum built from its terms.
pub fn dense_of(sum: &PauliSum) -> DenseMatrix {
    let terms: Vec<(f64, Vec<(usize, Pauli)>)> = sum
        .terms()
        .iter()
        .map(|t| (t.coeff(), t.factors().to_vec()))
        .collect();
    dense_sum(sum.n_qubits(), &terms)
}

pub fn zz_target(gamma: f64) -> TargetHamiltonian {
    TargetHamiltonian::new(
        2,
        vec![CoupledTerm::two(gamma, (0, Pauli::Z), (1, Pauli::Z)).unwrap()],
        PauliSum::new(2),
    )
    .unwrap()
}

pub fn zzz_target(gamma: f64) -> TargetHamiltonian {
    TargetHamiltonian::new(
        3,
        vec![CoupledTerm::three(gamma, (0, Pauli::Z), (1, Pauli::Z), (2, Pauli::Z)).unwrap()],
        PauliSum::new(3),
    )
    .unwrap()
}

/// `Z0 Z1 + X1 X2`.
pub fn two_term_target() -> TargetHamiltonian {
    TargetHamiltonian::new(
        3,
        vec![
            CoupledTerm::two(1.0, (0, Pauli::Z), (1, Pauli::Z)).unwrap(),
            CoupledTerm::two(1.0, (1, Pauli::X), (2, Pauli::X)).unwrap(),
        ],
        PauliSum::new(3),
    )
    .unwrap()
}

/// Shape limits for randomized gadgets.
#[derive(Clone, Copy)]
pub struct Shape {
    pub max_targets: usize,
    pub max_terms: usize,
    pub max_r: usize,
    pub max_c: usize,
    pub h_else: bool,
}

pub const SMALL: Shape = Shape {
    max_targets: 3,
    max_terms: 2,
    max_r: 2,
    max_c: 2,
    h_else: true,
};

/// Random 2-local target with `|gamma|` in `[0.2, 1]` and, optionally, a weak 1-local `h_else`.
pub fn random_target(rng: &mut ChaCha8Rng, shape: Shape) -> TargetHamiltonian {
    let n = rng.random_range(2..=shape.max_targets);
    let m = rng.random_range(1..=shape.max_terms);
    let mut terms = Vec::new();
    for _ in 0..m {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let mag = rng.random_range(0.2..=1.0);
        let gamma = if rng.random_bool(0.5) { mag } else { -mag };
        terms.push(
            CoupledTerm::two(
                gamma,
                (a, PAULIS[rng.random_range(0..3)]),
                (b, PAULIS[rng.random_range(0..3)]),
            )
            .unwrap(),
        );
    }
    let mut h_else = PauliSum::new(n);
    if shape.h_else {
        for q in 0..n {
            h_else
                .add(
                    rng.random_range(-0.2..=0.2),
                    &[(q, PAULIS[rng.random_range(0..3)])],
                )
                .unwrap();
        }
    }
    TargetHamiltonian::new(n, terms, h_else).unwrap()
}

/// Desk plan with `Delta` uniform in `[160, 320] M gamma_max`.
pub fn admissible_plan(
    rng: &mut ChaCha8Rng,
    target: &TargetHamiltonian,
    shape: Shape,
) -> GadgetPlan {
    let r = rng.random_range(1..=shape.max_r);
    let c = rng.random_range(1..=shape.max_c);
    let delta = 160.0 * target.m() as f64 * target.gamma_max() * rng.random_range(1.0..=2.0);
    desk_plan(target, r, c, delta / c as f64, 0.1).unwrap()
}

pub fn random_gadget(rng: &mut ChaCha8Rng, shape: Shape) -> (TargetHamiltonian, GadgetHamiltonian) {
    let t = random_target(rng, shape);
    let p = admissible_plan(rng, &t, shape);
    let g = build_gadget(&t, &p).unwrap();
    (t, g)
}

/// Same target with `h_else` removed.
pub fn without_h_else(t: &TargetHamiltonian) -> TargetHamiltonian {
    TargetHamiltonian::new(
        t.n_qubits(),
        t.coupled_terms().to_vec(),
        PauliSum::new(t.n_qubits()),
    )
    .unwrap()
}

/// `(1 / (z - Delta)) sum_j R beta_j^2 (A - s B)^2` on the target register.
pub fn second_order_oracle(t: &TargetHamiltonian, plan: &GadgetPlan, z: f64) -> DenseMatrix {
    let n = t.n_qubits();
    let dim = 1 << n;
    let mut out = DenseMatrix::zeros(dim, dim);
    let terms: Vec<&CoupledTerm> = t
        .coupled_terms()
        .iter()
        .filter(|c| c.gamma != 0.0)
        .collect();
    for (term, beta) in terms.iter().zip(&plan.betas) {
        let a = kron_string(n, &[term.site_a()]);
        let b = kron_string(n, &[term.site_b()]);
        let s = if term.gamma >= 0.0 { 1.0 } else { -1.0 };
        let d = DenseMatrix::from_fn(dim, dim, |i, j| a[(i, j)] - b[(i, j)] * s);
        let sq = &d * &d;
        let w = plan.r as f64 * beta * beta / (z - plan.delta);
        for i in 0..dim {
            for j in 0..dim {
                out[(i, j)] += sq[(i, j)] * w;
            }
        }
    }
    out
}

/// Frobenius norm; bounds the spectral norm from above.
pub fn frobenius(m: &DenseMatrix) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// Dense Hermitian spectrum by Jacobi rotations on the real symmetric embedding
/// `[[Re, -Im], [Im, Re]]`, where each eigenvalue appears twice; returns one copy of each.
pub fn jacobi_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let n = m.nrows();
    let k = 2 * n;
    let mut a = vec![vec![0.0f64; k]; k];
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            a[i][j] = v.re;
            a[i + n][j + n] = v.re;
            a[i][j + n] = -v.im;
            a[i + n][j] = v.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..k)
            .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..k {
            for q in p + 1..k {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..k {
                    let (arp, arq) = (a[r][p], a[r][q]);
                    a[r][p] = c * arp - s * arq;
                    a[r][q] = s * arp + c * arq;
                }
                for r in 0..k {
                    let (apr, aqr) = (a[p][r], a[q][r]);
                    a[p][r] = c * apr - s * aqr;
                    a[q][r] = s * apr + c * aqr;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..k).map(|i| a[i][i]).collect();
    vals.sort_by(f64::total_cmp);
    vals.into_iter().step_by(2).collect()
}
