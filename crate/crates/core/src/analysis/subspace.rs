use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::HighBlock;
use crate::error::{GadgetError, Result};
use crate::gadget2::{build_gadget, desk_plan, GadgetHamiltonian};
use crate::linalg::{self, LanczosOptions, SparseOperator};
use crate::model::{lowest_energy, CoupledTerm, TargetHamiltonian};
use crate::pauli::{Pauli, PauliSum, PauliTerm};
use crate::verify::{self, DENSE_EIGEN_QUBITS};

/// Slack allowed when comparing the simplified and original high-subspace energies.
pub const MONOTONICITY_TOL: f64 = 1e-9;

/// Smallest eigenvalue of `A` compressed to the basis states `low_dim..`.
fn compressed_min(sum: &PauliSum, low_dim: usize) -> Result<f64> {
    const OP: &str = "check_subspace_condition";
    let dim = 1usize << sum.n_qubits();
    if low_dim >= dim {
        return Err(GadgetError::malformed(OP, "high subspace is empty"));
    }
    if sum.is_diagonal() {
        let d = sum.diagonal()?;
        return Ok(d[low_dim..].iter().copied().fold(f64::INFINITY, f64::min));
    }
    let op: SparseOperator = sum.to_sparse_operator()?;
    let block = HighBlock { op: &op, low_dim };
    if sum.n_qubits() <= DENSE_EIGEN_QUBITS {
        return Ok(linalg::eigvalsh(&block.to_dense())?[0]);
    }
    let opts = LanczosOptions {
        scale: sum.one_norm(),
        ..LanczosOptions::default()
    };
    let (values, _) = linalg::lowest_eigenpairs(&block, 1, &opts)?;
    Ok(values[0])
}

/// Where the perturbed spectrum sits relative to the cutoff `lambda_* = Delta / 2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubspaceReport {
    /// Lowest energy of `H~` compressed to `L+`.
    pub e_plus: f64,
    pub lambda_star: f64,
    /// `e_plus > lambda_star`.
    pub ok: bool,
    /// Largest of the `2^n_target` lowest eigenvalues of `H~`.
    pub low_side_max: f64,
    pub low_side_ok: bool,
    pub gap: f64,
    /// `53 Delta / 72`, reported but not gated.
    pub sharper_bound: f64,
    pub meets_sharper_bound: bool,
    /// `Delta - 4 M R beta_max^2 / Delta` for 2-body gadgets; at least `79 Delta / 80`
    /// when `Delta >= 160 M gamma_max`.
    pub bounding_floor: Option<f64>,
    pub notes: Vec<String>,
}

/// Computes `E_+ = min spec(Pi+ H~ Pi+)` and the low-side maximum, and compares both with `Delta / 2`.
pub fn check_subspace_condition(g: &GadgetHamiltonian) -> Result<SubspaceReport> {
    let total = g.total();
    let low_dim = 1usize << g.n_target;
    let e_plus = compressed_min(&total, low_dim)?;
    let low = verify::lowest_eigs(&total, low_dim)?;
    let low_side_max = low.values.last().copied().unwrap_or(f64::NEG_INFINITY);
    let lambda_star = g.gap / 2.0;
    let sharper_bound = 53.0 * g.gap / 72.0;
    let bounding_floor = g.two_body_plan().map(|p| {
        let m = p.betas.len() as f64;
        let b = p.beta_max();
        p.delta - 4.0 * m * p.r as f64 * b * b / p.delta
    });
    let mut notes = Vec::new();
    if let Some(p) = g.two_body_plan() {
        if !p.subspace_hypothesis_ok {
            notes.push("Delta is below 160 M gamma_max; the condition is not guaranteed".into());
        }
    }
    Ok(SubspaceReport {
        e_plus,
        lambda_star,
        ok: e_plus > lambda_star,
        low_side_max,
        low_side_ok: low_side_max < lambda_star,
        gap: g.gap,
        sharper_bound,
        meets_sharper_bound: e_plus >= sharper_bound,
        bounding_floor,
        notes,
    })
}

/// Decoupled toy chain `sum_k S_k`, `S_k = (Delta/2)(I - Z_k) - 2 beta X_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundingChain {
    pub n: usize,
    pub delta: f64,
    pub beta: f64,
    /// Lowest energy on states orthogonal to `|0..0>`.
    pub e_n: f64,
    /// `40 n beta^2 / (9 Delta)`.
    pub slack: f64,
    /// `3 Delta / 4 - slack`.
    pub lower_bound: f64,
    pub holds: bool,
}

pub fn bounding_chain_energy(n: usize, delta: f64, beta: f64) -> Result<BoundingChain> {
    const OP: &str = "bounding_chain_energy";
    if n == 0 || n > DENSE_EIGEN_QUBITS {
        return Err(GadgetError::malformed(
            OP,
            format!("chain length {n} must be in 1..={DENSE_EIGEN_QUBITS}"),
        ));
    }
    if !(delta > 0.0) {
        return Err(GadgetError::malformed(
            OP,
            format!("Delta = {delta} must be positive"),
        ));
    }
    let mut h = PauliSum::new(n);
    for k in 0..n {
        h.add(delta / 2.0, &[])?;
        h.add(-delta / 2.0, &[(k, Pauli::Z)])?;
        h.add(-2.0 * beta, &[(k, Pauli::X)])?;
    }
    let e_n = compressed_min(&h.canonicalize(), 1)?;
    let slack = 40.0 * n as f64 * beta * beta / (9.0 * delta);
    let lower_bound = 0.75 * delta - slack;
    Ok(BoundingChain {
        n,
        delta,
        beta,
        e_n,
        slack,
        lower_bound,
        holds: e_n >= lower_bound - 1e-12 * delta,
    })
}

/// Ancilla-only Hamiltonian with targets decoupled: each coupling `c P (x) Q_anc` becomes
/// `-|c| Q_anc`, and `h_else` is replaced by its smallest eigenvalue.
pub fn simplified_hamiltonian(g: &GadgetHamiltonian) -> Result<PauliSum> {
    const OP: &str = "simplified_hamiltonian";
    let nt = g.n_target;
    let n_anc = g.n_total - nt;
    let mut out = PauliSum::new(n_anc);
    let shift = |t: &PauliTerm| -> Result<PauliTerm> {
        PauliTerm::new(t.coeff(), t.factors().iter().map(|&(q, p)| (q - nt, p)))
    };
    for t in g.h.terms() {
        if t.factors().iter().any(|&(q, _)| q < nt) {
            return Err(GadgetError::malformed(
                OP,
                "unperturbed part acts on target qubits",
            ));
        }
        out.push(shift(t)?)?;
    }
    let mut h_else = PauliSum::new(nt);
    for t in g.v.terms() {
        let (tgt, anc): (Vec<_>, Vec<_>) = t.factors().iter().partition(|&&(q, _)| q < nt);
        if anc.is_empty() {
            h_else.push(t.clone())?;
        } else if tgt.is_empty() {
            out.push(shift(t)?)?;
        } else {
            out.push(PauliTerm::new(
                -t.coeff().abs(),
                anc.iter().map(|&(q, p)| (q - nt, p)),
            )?)?;
        }
    }
    if !h_else.is_empty() {
        out.add(lowest_energy(&h_else)?, &[])?;
    }
    Ok(out.canonicalize())
}

/// One monotonicity comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecouplingTrial {
    pub label: String,
    pub n_total: usize,
    pub e_plus: f64,
    pub e_plus_simplified: f64,
    /// `e_plus_simplified <= e_plus + tolerance`.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecouplingReport {
    pub gadget: DecouplingTrial,
    pub trials: Vec<DecouplingTrial>,
    pub tolerance: f64,
    pub all_hold: bool,
}

fn monotonicity_trial(label: String, g: &GadgetHamiltonian) -> Result<DecouplingTrial> {
    let e_plus = compressed_min(&g.total(), 1usize << g.n_target)?;
    let e_plus_simplified = compressed_min(&simplified_hamiltonian(g)?, 1)?;
    Ok(DecouplingTrial {
        label,
        n_total: g.n_total,
        e_plus,
        e_plus_simplified,
        holds: e_plus_simplified <= e_plus + MONOTONICITY_TOL,
    })
}

const PAULIS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

/// Random desk-scale 2-body gadget: 2 or 3 targets, 1 or 2 terms, `R, C <= 2`,
/// `Delta` between 160 and 320 `M gamma_max`, and half the time a 1-local `h_else`.
fn random_gadget(rng: &mut ChaCha8Rng) -> Result<(String, GadgetHamiltonian)> {
    let n = rng.random_range(2..=3usize);
    let m = rng.random_range(1..=2usize);
    let mut terms = Vec::with_capacity(m);
    for _ in 0..m {
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let mag = rng.random_range(0.2..=1.0);
        let gamma = if rng.random_bool(0.5) { mag } else { -mag };
        let pa = PAULIS[rng.random_range(0..3)];
        let pb = PAULIS[rng.random_range(0..3)];
        terms.push(CoupledTerm::two(gamma, (a, pa), (b, pb))?);
    }
    let mut h_else = PauliSum::new(n);
    if rng.random_bool(0.5) {
        for q in 0..n {
            h_else.add(
                rng.random_range(-0.3..=0.3),
                &[(q, PAULIS[rng.random_range(0..3)])],
            )?;
        }
    }
    let target = TargetHamiltonian::new(n, terms, h_else)?;
    let r = rng.random_range(1..=2usize);
    let c = rng.random_range(1..=2usize);
    let delta = 160.0 * m as f64 * target.gamma_max() * rng.random_range(1.0..=2.0);
    let plan = desk_plan(&target, r, c, delta / c as f64, 0.1)?;
    let g = build_gadget(&target, &plan)?;
    Ok((format!("n={n} M={m} R={r} C={c} Delta={delta:.3}"), g))
}

/// Checks `E'_+ <= E_+` for `g` and for `trials` random small gadgets drawn from `seed`.
pub fn check_decoupling_monotonicity(
    g: &GadgetHamiltonian,
    trials: usize,
    seed: u64,
) -> Result<DecouplingReport> {
    let gadget = monotonicity_trial("input".to_string(), g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(trials);
    for i in 0..trials {
        let (label, rg) = random_gadget(&mut rng)?;
        out.push(monotonicity_trial(format!("trial {i}: {label}"), &rg)?);
    }
    let all_hold = gadget.holds && out.iter().all(|t| t.holds);
    Ok(DecouplingReport {
        gadget,
        trials: out,
        tolerance: MONOTONICITY_TOL,
        all_hold,
    })
}

/// Ferromagnetic doubler `-J (Z_a Z_x + Z_x Z_b + Z_a Z_y + Z_y Z_b)` with `a, b, x, y = 0, 1, 2, 3`.
pub fn classical_doubler(j: f64) -> Result<PauliSum> {
    let mut h = PauliSum::new(4);
    for (u, v) in [(0, 2), (2, 1), (0, 3), (3, 1)] {
        h.add(-j, &[(u, Pauli::Z), (v, Pauli::Z)])?;
    }
    Ok(h)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublerReport {
    pub j: f64,
    pub ground_energy: f64,
    /// Basis states (bit `q` is spin `q`) at the ground energy.
    pub ground_states: Vec<usize>,
    /// Every ground state has `a = b`.
    pub ground_aligned: bool,
    pub excitation_gap: f64,
}

pub fn classical_doubler_report(j: f64) -> Result<DoublerReport> {
    if !(j > 0.0 && j.is_finite()) {
        return Err(GadgetError::malformed(
            "classical_doubler",
            format!("J = {j} must be positive"),
        ));
    }
    let energies = classical_doubler(j)?.diagonal()?;
    let ground_energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * j;
    let ground_states: Vec<usize> = (0..energies.len())
        .filter(|&s| energies[s] - ground_energy <= tol)
        .collect();
    let ground_aligned = ground_states.iter().all(|&s| (s & 1) == ((s >> 1) & 1));
    let excitation_gap = energies
        .iter()
        .filter(|&&e| e - ground_energy > tol)
        .fold(f64::INFINITY, |a, &e| a.min(e))
        - ground_energy;
    Ok(DoublerReport {
        j,
        ground_energy,
        ground_states,
        ground_aligned,
        excitation_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubler_gap() {
        let r = classical_doubler_report(1.5).unwrap();
        assert_eq!(r.ground_energy, -6.0);
        assert!(r.ground_aligned);
        assert!((r.excitation_gap - 6.0).abs() < 1e-12);
    }

    #[test]
    fn single_site_chain_sits_at_gap() {
        let c = bounding_chain_energy(1, 40.0, 1.3).unwrap();
        assert!((c.e_n - 40.0).abs() < 1e-12);
        assert!(c.holds);
    }
}
