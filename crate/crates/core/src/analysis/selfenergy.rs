use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::bounds::{series_bound_at, tail_bound, BoundInputs, BoundKind};
use super::subspace::{check_subspace_condition, SubspaceReport};
use super::HighBlock;
use crate::error::{GadgetError, Result};
use crate::gadget2::GadgetHamiltonian;
use crate::linalg::{
    self, DenseMatrix, HermitianOp, KrylovOptions, ShiftedOp, SparseOperator, C64,
};
use crate::model::{operator_norm, TargetHamiltonian};
use crate::pauli::PauliSum;
use crate::verify::DENSE_EIGEN_QUBITS;

/// Condition estimate of `H+ - z` above which a solve is refused.
const CONDITION_LIMIT: f64 = 1e12;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Order-by-order terms of the self-energy expansion,
/// `T_1 = V-` and `T_k = V-+ (G+ V+)^(k-2) G+ V+-` with `G+(z) = Pi+ (z - H)^-1 Pi+`.
///
/// Each column of `L-` is propagated through `V` and the diagonal resolvent once,
/// yielding every order in a single pass.
pub struct SeriesEngine {
    low_dim: usize,
    v: SparseOperator,
    h_diag: Vec<f64>,
}

impl SeriesEngine {
    pub fn new(g: &GadgetHamiltonian) -> Result<Self> {
        Self::from_parts(&g.h, &g.v, g.n_target)
    }

    /// Engine for `H + V` on `h.n_qubits()` qubits whose first `n_target` qubits are the
    /// simulated system; `H` must be diagonal.
    pub fn from_parts(h: &PauliSum, v: &PauliSum, n_target: usize) -> Result<Self> {
        const OP: &str = "SeriesEngine::new";
        if !h.is_diagonal() {
            return Err(GadgetError::malformed(
                OP,
                "unperturbed part must be diagonal",
            ));
        }
        if h.n_qubits() != v.n_qubits() || n_target > h.n_qubits() {
            return Err(GadgetError::malformed(OP, "H and V registers disagree"));
        }
        Ok(Self {
            low_dim: 1usize << n_target,
            v: v.to_sparse_operator()?,
            h_diag: h.diagonal()?,
        })
    }

    /// `H-`, the unperturbed energies of the `L-` basis states.
    pub fn low_energies(&self) -> &[f64] {
        &self.h_diag[..self.low_dim]
    }

    /// `T_1 ..= T_max_order` at `z`, as dense `2^n_target` blocks.
    pub fn terms(&self, z: f64, max_order: usize) -> Result<Vec<DenseMatrix>> {
        const OP: &str = "self_energy_term";
        if max_order == 0 {
            return Err(GadgetError::malformed(OP, "order must be at least 1"));
        }
        let high = &self.h_diag[self.low_dim..];
        let closest = high
            .iter()
            .map(|&h| (z - h).abs())
            .fold(f64::INFINITY, f64::min);
        if !(closest > 1e-12 * z.abs().max(1.0)) {
            return Err(GadgetError::numeric(
                OP,
                format!("z = {z} is a pole of the unperturbed resolvent on L+"),
            ));
        }
        let resolvent: Vec<f64> = high.iter().map(|&h| 1.0 / (z - h)).collect();
        let columns: Vec<Vec<Vec<C64>>> = (0..self.low_dim)
            .into_par_iter()
            .map(|l| self.column(l, &resolvent, max_order))
            .collect();
        Ok((0..max_order)
            .map(|k| DenseMatrix::from_fn(self.low_dim, self.low_dim, |i, j| columns[j][k][i]))
            .collect())
    }

    fn column(&self, l: usize, resolvent: &[f64], max_order: usize) -> Vec<Vec<C64>> {
        let low = self.low_dim;
        let dim = self.h_diag.len();
        let mut x = vec![zero(); dim];
        let mut y = vec![zero(); dim];
        x[l] = C64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(max_order);
        for k in 1..=max_order {
            self.v.apply(&x, &mut y);
            out.push(y[..low].to_vec());
            if k == max_order {
                break;
            }
            x[..low].fill(zero());
            for ((xi, yi), g) in x[low..].iter_mut().zip(&y[low..]).zip(resolvent) {
                *xi = yi * g;
            }
        }
        out
    }
}

/// One series order at one `z`, with its analytic bound.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesTerm {
    pub order: usize,
    pub z: f64,
    #[serde(skip)]
    pub operator: DenseMatrix,
    /// Spectral norm of the `L-` block.
    pub norm: f64,
    pub analytic_bound: Option<f64>,
    pub bound_kind: Option<BoundKind>,
    pub bound_note: Option<String>,
}

impl SeriesTerm {
    /// `norm <= analytic_bound` up to `tol`, or `None` without an applicable bound.
    pub fn within_bound(&self, tol: f64) -> Option<bool> {
        self.analytic_bound.map(|b| self.norm <= b + tol)
    }
}

/// Bound inputs of a 2-body gadget; `None` for other builders.
pub(crate) fn bound_inputs(g: &GadgetHamiltonian) -> Result<Option<BoundInputs>> {
    let Some(plan) = g.two_body_plan() else {
        return Ok(None);
    };
    let gamma_max = plan
        .betas
        .iter()
        .map(|b| 2.0 * plan.r as f64 * b * b / plan.delta)
        .fold(0.0, f64::max);
    let h_else = on_targets(&g.h_else_part(), g.n_target)?;
    Ok(Some(BoundInputs {
        delta: plan.delta,
        m: plan.betas.len(),
        gamma_max,
        h_else_norm: operator_norm(&h_else)?,
    }))
}

fn on_targets(sum: &PauliSum, n_target: usize) -> Result<PauliSum> {
    let map: BTreeMap<usize, usize> = (0..n_target).map(|q| (q, q)).collect();
    sum.embed(&map, n_target)
}

fn wrap_terms(
    ops: Vec<DenseMatrix>,
    z: f64,
    inputs: Option<&BoundInputs>,
) -> Result<Vec<SeriesTerm>> {
    ops.into_iter()
        .enumerate()
        .map(|(i, operator)| {
            let order = i + 1;
            let norm = linalg::spectral_norm(&operator)?;
            let bound = inputs.map(|b| series_bound_at(b, order, z));
            Ok(SeriesTerm {
                order,
                z,
                operator,
                norm,
                analytic_bound: bound.as_ref().and_then(|b| b.value),
                bound_kind: bound.as_ref().map(|b| b.kind),
                bound_note: bound.and_then(|b| b.note),
            })
        })
        .collect()
}

/// `T_1 ..= T_max_order` at `z`.
pub fn self_energy_terms(
    g: &GadgetHamiltonian,
    max_order: usize,
    z: f64,
) -> Result<Vec<SeriesTerm>> {
    let engine = SeriesEngine::new(g)?;
    let inputs = bound_inputs(g)?;
    wrap_terms(engine.terms(z, max_order)?, z, inputs.as_ref())
}

/// `T_k` at `z`.
pub fn self_energy_term(g: &GadgetHamiltonian, k: usize, z: f64) -> Result<SeriesTerm> {
    Ok(self_energy_terms(g, k, z)?.pop().expect("k >= 1 terms"))
}

enum Backend {
    /// Eigenbasis of `H+` and the coupling `U^dagger H+-` in it.
    Dense {
        values: Vec<f64>,
        coupling: DenseMatrix,
    },
    Iterative {
        op: SparseOperator,
        /// Columns of `H+-`, one per `L-` basis state.
        coupling: Vec<Vec<C64>>,
    },
}

/// Exact self-energy `Sigma-(z) = z I - (Pi- (z - H~)^-1 Pi-)^-1`, evaluated through the
/// equivalent Schur complement `H~- + H~-+ (z - H~+)^-1 H~+-`.
///
/// Small registers diagonalize `H~+` once and reuse it for every `z`; larger ones solve
/// each column with preconditioned MINRES.
pub struct SelfEnergySolver {
    low_dim: usize,
    h_low: DenseMatrix,
    backend: Backend,
}

impl SelfEnergySolver {
    pub fn new(g: &GadgetHamiltonian) -> Result<Self> {
        let op = g.total().to_sparse_operator()?;
        let low_dim = 1usize << g.n_target;
        let nh = op.dim() - low_dim;
        let mut h_low = DenseMatrix::zeros(low_dim, low_dim);
        let mut coupling = vec![vec![zero(); nh]; low_dim];
        for (l, col) in coupling.iter_mut().enumerate() {
            for (c, v) in op.row(l) {
                if c < low_dim {
                    h_low[(l, c)] = v;
                } else {
                    // H~[c, l] = conj(H~[l, c])
                    col[c - low_dim] = v.conj();
                }
            }
        }
        let backend = if g.n_total <= DENSE_EIGEN_QUBITS {
            let e = linalg::eigh(&HighBlock { op: &op, low_dim }.to_dense())?;
            let w = DenseMatrix::from_fn(nh, low_dim, |h, l| {
                (0..nh)
                    .map(|r| e.vectors[(r, h)].conj() * coupling[l][r])
                    .sum()
            });
            Backend::Dense {
                values: e.values,
                coupling: w,
            }
        } else {
            Backend::Iterative { op, coupling }
        };
        Ok(Self {
            low_dim,
            h_low,
            backend,
        })
    }

    pub fn at(&self, z: f64) -> Result<DenseMatrix> {
        const OP: &str = "self_energy_exact";
        let n = self.low_dim;
        match &self.backend {
            Backend::Dense { values, coupling } => {
                let (lo, hi) = values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| {
                    let d = (e - z).abs();
                    (lo.min(d), hi.max(d))
                });
                if values.is_empty() {
                    return Ok(self.h_low.clone());
                }
                if !(lo > 0.0) || hi / lo > CONDITION_LIMIT {
                    return Err(GadgetError::numeric(
                        OP,
                        format!("z = {z}: H+ - z has condition estimate {:e}", hi / lo),
                    ));
                }
                let inv: Vec<f64> = values.iter().map(|e| 1.0 / (e - z)).collect();
                Ok(DenseMatrix::from_fn(n, n, |i, j| {
                    let s: C64 = inv
                        .iter()
                        .enumerate()
                        .map(|(h, g)| coupling[(h, i)].conj() * coupling[(h, j)] * g)
                        .sum();
                    self.h_low[(i, j)] - s
                }))
            }
            Backend::Iterative { op, coupling } => {
                let block = HighBlock { op, low_dim: n };
                let shifted = ShiftedOp {
                    shift: -z,
                    ..ShiftedOp::new(&block)
                };
                let precond: Vec<f64> = block
                    .diagonal()
                    .iter()
                    .map(|d| {
                        let a = (d - z).abs();
                        if a > 1e-12 {
                            1.0 / a
                        } else {
                            1.0
                        }
                    })
                    .collect();
                let solved: Vec<Vec<C64>> = coupling
                    .par_iter()
                    .map(|b| {
                        let out = linalg::minres(&shifted, b, Some(&precond), KrylovOptions::default());
                        if out.converged {
                            Ok(out.x)
                        } else {
                            Err(GadgetError::numeric(
                                OP,
                                format!(
                                    "z = {z}: solve stalled at relative residual {:e} after {} iterations",
                                    out.rel_residual, out.iterations
                                ),
                            ))
                        }
                    })
                    .collect::<Result<_>>()?;
                Ok(DenseMatrix::from_fn(n, n, |i, j| {
                    self.h_low[(i, j)] - linalg::dot(&coupling[i], &solved[j])
                }))
            }
        }
    }
}

/// `Sigma-(z)` on `L-`.
pub fn self_energy_exact(g: &GadgetHamiltonian, z: f64) -> Result<DenseMatrix> {
    SelfEnergySolver::new(g)?.at(z)
}

/// `H_eff = H_targ + known_shift I` on the target register, the operator the low-energy
/// self-energy should reproduce.
pub fn effective_target(target: &TargetHamiltonian, g: &GadgetHamiltonian) -> Result<DenseMatrix> {
    if target.n_qubits() != g.n_target {
        return Err(GadgetError::malformed(
            "effective_target",
            format!(
                "target has {} qubits but the gadget simulates {}",
                target.n_qubits(),
                g.n_target
            ),
        ));
    }
    let mut s = target.realize();
    s.add(g.known_shift, &[])?;
    s.to_dense()
}

/// `eps + |h_else| + sum_j |gamma_j|`, the half-width of the `z` range.
pub fn z_max_for(target: &TargetHamiltonian, epsilon: f64) -> Result<f64> {
    Ok(epsilon + operator_norm(target.h_else())? + target.gamma_abs_sum())
}

/// `points` uniformly spaced values on `[-z_max, z_max]`; a single point sits at 0.
pub fn z_grid(z_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| -z_max + 2.0 * z_max * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Self-energy diagnostics at one `z`.
#[derive(Clone, Debug, Serialize)]
pub struct ZPointReport {
    pub z: f64,
    /// `|Sigma-(z) - H_eff|`.
    pub exact_vs_effective: f64,
    /// `|Sigma-(z) - (H- + sum_{k <= K} T_k)|`.
    pub series_vs_exact: f64,
    /// Analytic bound on the orders beyond `K`.
    pub tail_bound: Option<f64>,
    pub terms: Vec<SeriesTerm>,
}

/// Self-energy check over a `z` grid.
#[derive(Clone, Debug, Serialize)]
pub struct SelfEnergyReport {
    pub n_target: usize,
    pub max_order: usize,
    pub epsilon: f64,
    pub z_max: f64,
    pub known_shift: f64,
    pub bound_inputs: Option<BoundInputs>,
    pub points: Vec<ZPointReport>,
    pub max_exact_vs_effective: f64,
    /// Orders whose norm exceeds an applicable bound, plus grid points whose series
    /// truncation error exceeds the tail bound.
    pub bound_violations: usize,
    pub subspace: SubspaceReport,
    pub notes: Vec<String>,
}

/// Exact and truncated self-energy on the `z` grid, against the effective target and
/// the analytic bounds, together with the subspace condition.
pub fn self_energy_report(
    target: &TargetHamiltonian,
    g: &GadgetHamiltonian,
    epsilon: f64,
    points: usize,
    max_order: usize,
) -> Result<SelfEnergyReport> {
    let z_max = z_max_for(target, epsilon)?;
    let heff = effective_target(target, g)?;
    let solver = SelfEnergySolver::new(g)?;
    let engine = SeriesEngine::new(g)?;
    let inputs = bound_inputs(g)?;
    let mut notes = Vec::new();
    if inputs.is_none() {
        notes.push("analytic bounds cover the 2-body construction only".to_string());
    }
    let h_low = engine.low_energies().to_vec();
    let mut rows = Vec::with_capacity(points);
    let mut violations = 0;
    for z in z_grid(z_max, points) {
        let exact = solver.at(z)?;
        let terms = wrap_terms(engine.terms(z, max_order)?, z, inputs.as_ref())?;
        let mut partial = DenseMatrix::from_fn(h_low.len(), h_low.len(), |i, j| {
            C64::new(if i == j { h_low[i] } else { 0.0 }, 0.0)
        });
        for t in &terms {
            partial += &t.operator;
        }
        let scale = exact.norm_max().max(1.0);
        let series_vs_exact = linalg::spectral_norm(&(&exact - &partial))?;
        let tail = inputs.as_ref().and_then(|b| tail_bound(b, max_order, z));
        violations += terms
            .iter()
            .filter(|t| t.within_bound(1e-9 * scale) == Some(false))
            .count();
        if tail.is_some_and(|b| series_vs_exact > b + 1e-9 * scale) {
            violations += 1;
        }
        rows.push(ZPointReport {
            z,
            exact_vs_effective: linalg::spectral_norm(&(&exact - &heff))?,
            series_vs_exact,
            tail_bound: tail,
            terms,
        });
    }
    let max_exact_vs_effective = rows
        .iter()
        .map(|r| r.exact_vs_effective)
        .fold(0.0, f64::max);
    Ok(SelfEnergyReport {
        n_target: g.n_target,
        max_order,
        epsilon,
        z_max,
        known_shift: g.known_shift,
        bound_inputs: inputs,
        points: rows,
        max_exact_vs_effective,
        bound_violations: violations,
        subspace: check_subspace_condition(g)?,
        notes,
    })
}
