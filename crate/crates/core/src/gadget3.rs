//! 3-local reductions: a serial composition (strong mediator stage, then the weak 2-body
//! gadget on its output), coupling-strength amplification, and the experimental direct
//! construction with three ancilla families.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self_energy_exact, SeriesEngine};
use crate::error::{GadgetError, Result};
use crate::gadget2::{
    add_core, add_core_links, build_gadget, desk_plan, ground_gap_of_h, GadgetHamiltonian,
    GadgetPlan, PlanRecord, QubitRole,
};
use crate::linalg::{self, DenseMatrix, C64};
use crate::model::{split_strong_terms, CoupledTerm, TargetHamiltonian, PSD_TOL};
use crate::pauli::{Pauli, PauliSum, PauliTerm, SPARSE_QUBIT_CEILING};
use crate::verify::loglog_slope;

/// Largest non-`{I, AB, F, ABF}` part a calibrated mediator may leave behind.
pub const CALIBRATION_TOL: f64 = 1e-8;

/// Signed cube root of `gamma Delta^2 / (2 R)`.
pub fn cubic_strength(gamma: f64, delta: f64, r: usize) -> f64 {
    (gamma * delta * delta / (2.0 * r as f64)).cbrt()
}

fn nonzero_terms(target: &TargetHamiltonian) -> Vec<&CoupledTerm> {
    target
        .coupled_terms()
        .iter()
        .filter(|t| t.gamma != 0.0)
        .collect()
}

fn require_three_local(target: &TargetHamiltonian, op: &'static str) -> Result<()> {
    match target.coupled_terms().iter().find(|t| t.locality() != 3) {
        Some(t) => Err(GadgetError::wrong_builder(
            op,
            format!(
                "{}-local coupled term present; use the 2-body builder",
                t.locality()
            ),
        )),
        None => Ok(()),
    }
}

/// Stage-1 parameters: one mediator per 3-local term, all mediators linked to a shared
/// core of size `C1` with coupling `J1 = Delta1 / C1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediatorPlan {
    #[serde(rename = "Delta1")]
    pub delta: f64,
    #[serde(rename = "C1")]
    pub core: usize,
    #[serde(rename = "J1")]
    pub j: f64,
}

/// Stage-2 core and ancilla sizes, applied to every strong 2-local term of stage 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakStagePlan {
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "J")]
    pub j: f64,
}

/// Parameters of a serial 3-body gadget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerialPlan {
    pub stage1: MediatorPlan,
    pub stage2: WeakStagePlan,
    pub epsilon: f64,
    /// `(eps1, eps2)` with `eps1 + eps2 <= epsilon`.
    pub error_split: (f64, f64),
    /// Split stage-1 terms stronger than this before stage 2; `None` keeps them whole.
    pub split_cap: Option<f64>,
}

impl SerialPlan {
    /// Desk plan with an even error split and no stage-2 splitting.
    pub fn desk(
        delta1: f64,
        c1: usize,
        r2: usize,
        c2: usize,
        delta2: f64,
        epsilon: f64,
    ) -> Result<Self> {
        const OP: &str = "SerialPlan::desk";
        if c1 == 0 || c2 == 0 || r2 == 0 {
            return Err(GadgetError::malformed(OP, "C1, R and C must be at least 1"));
        }
        if !(delta1 > 0.0 && delta2 > 0.0 && delta1.is_finite() && delta2.is_finite()) {
            return Err(GadgetError::malformed(
                OP,
                format!("Delta1 = {delta1} and Delta2 = {delta2} must be positive"),
            ));
        }
        if !(epsilon > 0.0) {
            return Err(GadgetError::malformed(
                OP,
                format!("epsilon = {epsilon} must be positive"),
            ));
        }
        Ok(Self {
            stage1: MediatorPlan {
                delta: delta1,
                core: c1,
                j: delta1 / c1 as f64,
            },
            stage2: WeakStagePlan {
                r: r2,
                c: c2,
                j: delta2 / c2 as f64,
            },
            epsilon,
            error_split: (epsilon / 2.0, epsilon / 2.0),
            split_cap: None,
        })
    }
}

/// Compensation measured for one mediator on a 3-qubit probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub term: usize,
    /// Mediator coupling `beta = xi = cbrt(gamma Delta1^2 / 2)`.
    pub beta: f64,
    /// Coefficient of the added `A B` term.
    pub ab_compensation: f64,
    /// Coefficient of the added 1-local `F` term.
    pub field_compensation: f64,
    /// Identity part of the second plus third order.
    pub constant: f64,
    /// Measured `A B F` coefficient.
    pub effective_gamma: f64,
    /// Spectral norm of everything outside `{I, AB, F, ABF}`.
    pub residual: f64,
}

/// Probe register: `A, B, F` on qubits 0, 1, 2, mediator 3, mediator core `4..4 + C1`.
fn mediator_probe(
    term: &CoupledTerm,
    beta: f64,
    plan: &MediatorPlan,
) -> Result<(PauliSum, PauliSum)> {
    let n = 4 + plan.core;
    let core: Vec<usize> = (4..n).collect();
    let mut h = PauliSum::new(n);
    add_core_links(&mut h, 3, &core, plan.j)?;
    add_core(&mut h, &core, plan.j)?;
    let s = term.sites();
    let (pa, pb, pf) = (s[0].1, s[1].1, s[2].1);
    let mut v = PauliSum::new(n);
    v.add(beta, &[(0, pa), (3, Pauli::X)])?;
    v.add(beta, &[(1, pb), (3, Pauli::X)])?;
    v.add(beta / 2.0, &[(2, pf)])?;
    v.add(-beta / 2.0, &[(2, pf), (3, Pauli::Z)])?;
    Ok((h.canonicalize(), v))
}

/// `Tr(P M) / 2^n` for a unit-coefficient Pauli string `P`.
fn pauli_coefficient(m: &DenseMatrix, n: usize, factors: &[(usize, Pauli)]) -> Result<f64> {
    let p = PauliSum::from_terms(n, [PauliTerm::new(1.0, factors.iter().copied())?])?.to_dense()?;
    let dim = m.nrows();
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            tr += p[(j, i)] * m[(i, j)];
        }
    }
    Ok(tr.re / dim as f64)
}

fn pauli_matrix(n: usize, terms: &[(f64, Vec<(usize, Pauli)>)]) -> Result<DenseMatrix> {
    let mut s = PauliSum::new(n);
    for (c, f) in terms {
        s.add(*c, f)?;
    }
    s.to_dense()
}

/// Decomposes `T_2(0) + T_3(0)` of one mediator and returns the compensation that cancels
/// its `A B` and `F` parts.
pub fn calibrate_mediator(
    index: usize,
    term: &CoupledTerm,
    plan: &MediatorPlan,
) -> Result<Calibration> {
    const OP: &str = "calibrate_mediator";
    if term.locality() != 3 {
        return Err(GadgetError::wrong_builder(
            OP,
            "calibration needs a 3-local term",
        ));
    }
    let beta = cubic_strength(term.gamma, plan.delta, 1);
    let (h, v) = mediator_probe(term, beta, plan)?;
    let orders = SeriesEngine::from_parts(&h, &v, 3)?.terms(0.0, 3)?;
    let sum = &orders[1] + &orders[2];
    let s = term.sites();
    let (pa, pb, pf) = (s[0].1, s[1].1, s[2].1);
    let ab = vec![(0, pa), (1, pb)];
    let f = vec![(2, pf)];
    let abf = vec![(0, pa), (1, pb), (2, pf)];
    let constant = pauli_coefficient(&sum, 3, &[])?;
    let c_ab = pauli_coefficient(&sum, 3, &ab)?;
    let c_f = pauli_coefficient(&sum, 3, &f)?;
    let c_abf = pauli_coefficient(&sum, 3, &abf)?;
    let kept = pauli_matrix(3, &[(constant, vec![]), (c_ab, ab), (c_f, f), (c_abf, abf)])?;
    let residual = linalg::spectral_norm(&(&sum - &kept))?;
    if residual > CALIBRATION_TOL {
        return Err(GadgetError::numeric(
            OP,
            format!("term {index}: residual {residual:e} exceeds {CALIBRATION_TOL:e}"),
        ));
    }
    Ok(Calibration {
        term: index,
        beta,
        ab_compensation: -c_ab,
        field_compensation: -c_f,
        constant,
        effective_gamma: c_abf,
        residual,
    })
}

/// Role of a stage-1 strong 2-local term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrongTermKind {
    /// `beta A X_w`
    CouplingA,
    /// `beta B X_w`
    CouplingB,
    /// `-(xi/2) F Z_w`, the off-diagonal half of `xi F |1><1|_w`.
    Projector,
    /// Calibrated `A B` compensation.
    Compensation,
}

/// One strong term produced by stage 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongTerm {
    /// Index of the 3-local target term it came from.
    pub origin: usize,
    pub kind: StrongTermKind,
    pub gamma: f64,
}

/// Stage tree of a serial gadget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub stage1_terms: Vec<StrongTerm>,
    /// For every coupled term of stage 2 (direct-ancilla family), the stage-1 term it gadgetizes.
    pub stage2_origin: Vec<usize>,
}

impl Provenance {
    /// The 3-local target term behind stage-2 term `j`.
    pub fn origin_of(&self, j: usize) -> Option<usize> {
        self.stage2_origin
            .get(j)
            .map(|&s| self.stage1_terms[s].origin)
    }
}

/// Resolved parameters of a built serial gadget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SerialPlanRecord {
    pub stage1: MediatorPlan,
    pub calibrations: Vec<Calibration>,
    /// Sum of the calibrated identity parts.
    pub stage1_shift: f64,
    /// Identity added to the stage-1 `h_else` to make it non-negative.
    pub stage1_psd_shift: f64,
    pub stage2: GadgetPlan,
    pub epsilon: f64,
    pub error_split: (f64, f64),
    pub split_cap: Option<f64>,
}

/// Stage 1: the strong 2-local Hamiltonian on `n + M + C1` qubits, and its term list.
fn mediator_stage(
    target: &TargetHamiltonian,
    terms: &[&CoupledTerm],
    cals: &[Calibration],
    plan: &MediatorPlan,
) -> Result<(TargetHamiltonian, Vec<StrongTerm>)> {
    let n = target.n_qubits();
    let m = terms.len();
    let n1 = n + m + plan.core;
    let core: Vec<usize> = (n + m..n1).collect();
    let mut h_else = target.h_else().widened(n1)?;
    let mut coupled = Vec::with_capacity(4 * m);
    let mut strong = Vec::with_capacity(4 * m);
    for (j, (t, cal)) in terms.iter().zip(cals).enumerate() {
        let w = n + j;
        let (a, b, f) = (t.site_a(), t.site_b(), t.site_f().expect("3-local"));
        let beta = cal.beta;
        add_core_links(&mut h_else, w, &core, plan.j)?;
        h_else.add(beta / 2.0 + cal.field_compensation, &[f])?;
        for (gamma, term, kind) in [
            (
                beta,
                CoupledTerm::two(beta, a, (w, Pauli::X))?,
                StrongTermKind::CouplingA,
            ),
            (
                beta,
                CoupledTerm::two(beta, b, (w, Pauli::X))?,
                StrongTermKind::CouplingB,
            ),
            (
                -beta / 2.0,
                CoupledTerm::two(-beta / 2.0, f, (w, Pauli::Z))?,
                StrongTermKind::Projector,
            ),
            (
                cal.ab_compensation,
                CoupledTerm::two(cal.ab_compensation, a, b)?,
                StrongTermKind::Compensation,
            ),
        ] {
            coupled.push(term);
            strong.push(StrongTerm {
                origin: j,
                kind,
                gamma,
            });
        }
    }
    add_core(&mut h_else, &core, plan.j)?;
    Ok((
        TargetHamiltonian::new(n1, coupled, h_else.canonicalize())?,
        strong,
    ))
}

fn trivial_gadget(
    target: &TargetHamiltonian,
    plan: PlanRecord,
    experimental: bool,
) -> GadgetHamiltonian {
    let n = target.n_qubits();
    GadgetHamiltonian {
        n_total: n,
        n_target: n,
        roles: vec![QubitRole::Target; n],
        h: PauliSum::new(n),
        v: target.h_else().canonicalize(),
        plan,
        known_shift: 0.0,
        psd_shift: target.psd_shift(),
        gap: 0.0,
        experimental,
        provenance: None,
        notes: vec!["target has no nonzero coupled terms; gadget is the bare target".into()],
    }
}

/// Serial 3-body gadget: each 3-local term `gamma A B F` gets a mediator `w` coupled by
/// `beta A X_w + beta B X_w + xi F |1><1|_w` with `beta = xi = cbrt(gamma Delta1^2 / 2)`,
/// plus calibrated `A B` and `F` compensations; every resulting strong 2-local term is
/// then replaced by the weak 2-body gadget.
pub fn build_serial_3body(
    target: &TargetHamiltonian,
    plan: &SerialPlan,
) -> Result<GadgetHamiltonian> {
    const OP: &str = "build_serial_3body";
    require_three_local(target, OP)?;
    if plan.error_split.0 + plan.error_split.1 > plan.epsilon * (1.0 + 1e-12) {
        return Err(GadgetError::malformed(OP, "error split exceeds the budget"));
    }
    let terms = nonzero_terms(target);
    let n = target.n_qubits();
    if terms.is_empty() {
        let placeholder = SerialPlanRecord {
            stage1: plan.stage1.clone(),
            calibrations: Vec::new(),
            stage1_shift: 0.0,
            stage1_psd_shift: 0.0,
            stage2: desk_plan(
                target,
                plan.stage2.r,
                plan.stage2.c,
                plan.stage2.j,
                plan.error_split.1,
            )?,
            epsilon: plan.epsilon,
            error_split: plan.error_split,
            split_cap: plan.split_cap,
        };
        return Ok(trivial_gadget(
            target,
            PlanRecord::Serial(Box::new(placeholder)),
            false,
        ));
    }
    let m = terms.len();
    let n1 = n + m + plan.stage1.core;
    if n1 > SPARSE_QUBIT_CEILING {
        return Err(GadgetError::resource(
            OP,
            format!("stage 1 alone needs {n1} qubits, above the ceiling {SPARSE_QUBIT_CEILING}"),
        ));
    }
    let cals: Vec<Calibration> = terms
        .par_iter()
        .enumerate()
        .map(|(j, t)| calibrate_mediator(j, t, &plan.stage1))
        .collect::<Result<_>>()?;
    let stage1_shift: f64 = cals.iter().map(|c| c.constant).sum();
    let (stage1, strong) = mediator_stage(target, &terms, &cals, &plan.stage1)?;
    let (stage1, psd) = stage1.with_psd_shift(PSD_TOL)?;

    let (stage2_target, stage2_origin) = match plan.split_cap {
        None => (stage1, (0..strong.len()).collect()),
        Some(cap) => {
            let mut origin = Vec::new();
            for (i, t) in stage1.coupled_terms().iter().enumerate() {
                let one = TargetHamiltonian::new(n1, vec![t.clone()], PauliSum::new(n1))?;
                origin.extend(std::iter::repeat(i).take(split_strong_terms(&one, cap)?.m()));
            }
            (split_strong_terms(&stage1, cap)?, origin)
        }
    };
    let stage2_plan = desk_plan(
        &stage2_target,
        plan.stage2.r,
        plan.stage2.c,
        plan.stage2.j,
        plan.error_split.1,
    )?;
    let g2 = build_gadget(&stage2_target, &stage2_plan)?;

    let mut roles = g2.roles.clone();
    for (j, role) in roles[n..n + m].iter_mut().enumerate() {
        *role = QubitRole::Mediator { term: j };
    }
    for (index, role) in roles[n + m..n1].iter_mut().enumerate() {
        *role = QubitRole::MediatorCore { index };
    }
    // Mediator penalties are diagonal and ancilla-only: they belong to the unperturbed part.
    let mut h = g2.h.clone();
    let mut v = PauliSum::new(g2.n_total);
    for t in g2.v.terms() {
        let ancilla_only = !t.is_identity() && t.factors().iter().all(|&(q, _)| q >= n);
        if ancilla_only && t.is_diagonal() {
            h.push(t.clone())?;
        } else {
            v.push(t.clone())?;
        }
    }
    let mut notes = stage2_plan.notes.clone();
    notes.push(format!(
        "stage-1 shift {stage1_shift} and non-negativity shift {psd} folded into known_shift"
    ));
    let mut g = GadgetHamiltonian {
        n_total: g2.n_total,
        n_target: n,
        roles,
        h: h.canonicalize(),
        v,
        plan: PlanRecord::Serial(Box::new(SerialPlanRecord {
            stage1: plan.stage1.clone(),
            calibrations: cals,
            stage1_shift,
            stage1_psd_shift: psd,
            stage2: stage2_plan,
            epsilon: plan.epsilon,
            error_split: plan.error_split,
            split_cap: plan.split_cap,
        })),
        known_shift: stage1_shift + g2.known_shift + psd,
        psd_shift: target.psd_shift(),
        gap: 0.0,
        experimental: false,
        provenance: Some(Provenance {
            stage1_terms: strong,
            stage2_origin,
        }),
        notes,
    };
    g.gap = ground_gap_of_h(&g)?.1;
    Ok(g)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta >= 1.0 && theta.is_finite()) {
        return Err(GadgetError::malformed(
            "amplify",
            format!("theta = {theta} must be finite and at least 1"),
        ));
    }
    Ok(())
}

/// Gadget for `theta H`: the scaled target is split into copies no stronger than the
/// original `gamma_max`, then built with the same `R`, `C`, `J` as `plan`.
pub fn amplify(h: &TargetHamiltonian, theta: f64, plan: &GadgetPlan) -> Result<GadgetHamiltonian> {
    const OP: &str = "amplify";
    check_theta(theta)?;
    if h.max_locality() == 3 {
        return Err(GadgetError::wrong_builder(
            OP,
            "3-local input; use the serial amplification",
        ));
    }
    let scaled = h.without_zero_terms().scaled(theta);
    let split = if h.gamma_max() > 0.0 {
        split_strong_terms(&scaled, h.gamma_max())?
    } else {
        scaled
    };
    let mut rebound = desk_plan(&split, plan.r, plan.c, plan.j, plan.epsilon)?;
    rebound.mode = plan.mode;
    rebound.d = plan.d;
    rebound.safety = plan.safety;
    rebound.notes.extend(plan.notes.iter().cloned());
    if theta != 1.0 {
        rebound.notes.push(format!(
            "amplified by theta = {theta}: {} coupled terms",
            split.m()
        ));
    }
    build_gadget(&split, &rebound)
}

/// [`amplify`] for 3-local targets, through the serial builder.
pub fn amplify_serial(
    h: &TargetHamiltonian,
    theta: f64,
    plan: &SerialPlan,
) -> Result<GadgetHamiltonian> {
    check_theta(theta)?;
    let scaled = h.without_zero_terms().scaled(theta);
    let split = if h.gamma_max() > 0.0 {
        split_strong_terms(&scaled, h.gamma_max())?
    } else {
        scaled
    };
    build_serial_3body(&split, plan)
}

/// Parameters of the direct 3-body construction with sum, difference and field ancillas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectPlan {
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    /// `beta_j = xi_j = cbrt(gamma_j Delta^2 / (2R))`, signed.
    pub betas: Vec<f64>,
    /// `kappa_j = sqrt(|gamma_j| Delta / (2R))`.
    pub kappas: Vec<f64>,
    /// Field ancillas couple through `(F - I)` for every term instead of `(F + sgn(gamma) I)`.
    pub literal_field_sign: bool,
    pub notes: Vec<String>,
}

impl DirectPlan {
    pub fn desk(target: &TargetHamiltonian, r: usize, c: usize, j: f64) -> Result<Self> {
        const OP: &str = "DirectPlan::desk";
        if r == 0 || c == 0 {
            return Err(GadgetError::malformed(OP, "R and C must be at least 1"));
        }
        if !(j > 0.0 && j.is_finite()) {
            return Err(GadgetError::malformed(
                OP,
                format!("J = {j} must be positive"),
            ));
        }
        let delta = j * c as f64;
        let terms = nonzero_terms(target);
        Ok(Self {
            r,
            c,
            j,
            delta,
            betas: terms
                .iter()
                .map(|t| cubic_strength(t.gamma, delta, r))
                .collect(),
            kappas: terms
                .iter()
                .map(|t| crate::gadget2::coupling_strength(t.gamma, delta, r))
                .collect(),
            literal_field_sign: false,
            notes: Vec::new(),
        })
    }

    /// `2 R beta^2 xi / Delta^2` for term `k`; equals its `gamma`.
    pub fn coefficient_identity(&self, k: usize) -> f64 {
        let b = self.betas[k];
        2.0 * self.r as f64 * b * b * b / (self.delta * self.delta)
    }
}

/// Direct 3-body gadget, marked experimental:
/// `H = (J/2) sum_j sum_i sum_c (3I - Z_q Z_c - Z_w Z_c - Z_y Z_c) + H_C`,
/// `V = h_else + sum_j sum_i [beta (A + B) X_q + xi F |1><1|_q + beta (A - B) X_w + kappa (F + s I) X_y]`
/// with `s = sgn(gamma_j)` (or `-1` for the literal variant).
pub fn build_direct_3body(
    target: &TargetHamiltonian,
    plan: &DirectPlan,
) -> Result<GadgetHamiltonian> {
    const OP: &str = "build_direct_3body";
    require_three_local(target, OP)?;
    let terms = nonzero_terms(target);
    if plan.betas.len() != terms.len() || plan.kappas.len() != terms.len() {
        return Err(GadgetError::malformed(
            OP,
            format!(
                "plan has {} couplings but the target has {} nonzero terms",
                plan.betas.len(),
                terms.len()
            ),
        ));
    }
    if (plan.delta - plan.j * plan.c as f64).abs() > 1e-12 * plan.delta.abs() {
        return Err(GadgetError::malformed(OP, "plan violates Delta = J C"));
    }
    if terms.is_empty() {
        return Ok(trivial_gadget(
            target,
            PlanRecord::Direct(plan.clone()),
            true,
        ));
    }
    let n = target.n_qubits();
    let (m, r, c) = (terms.len(), plan.r, plan.c);
    let n_total = n + 3 * m * r + c;
    if n_total > SPARSE_QUBIT_CEILING {
        return Err(GadgetError::resource(
            OP,
            format!("gadget needs {n_total} qubits, above the ceiling {SPARSE_QUBIT_CEILING}"),
        ));
    }
    let core: Vec<usize> = (n + 3 * m * r..n_total).collect();
    let mut roles = vec![QubitRole::Target; n];
    let mut h = PauliSum::new(n_total);
    let mut v = target.h_else().widened(n_total)?.canonicalize();
    let mut known_shift = 0.0;
    for (jt, t) in terms.iter().enumerate() {
        let (a, b, f) = (t.site_a(), t.site_b(), t.site_f().expect("3-local"));
        let (beta, kappa) = (plan.betas[jt], plan.kappas[jt]);
        let s = if plan.literal_field_sign {
            -1.0
        } else {
            t.sign()
        };
        let base = n + 3 * jt * r;
        for i in 0..r {
            let (q, w, y) = (base + i, base + r + i, base + 2 * r + i);
            for anc in [q, w, y] {
                add_core_links(&mut h, anc, &core, plan.j)?;
            }
            v.add(beta, &[a, (q, Pauli::X)])?;
            v.add(beta, &[b, (q, Pauli::X)])?;
            v.add(beta / 2.0, &[f])?;
            v.add(-beta / 2.0, &[f, (q, Pauli::Z)])?;
            v.add(beta, &[a, (w, Pauli::X)])?;
            v.add(-beta, &[b, (w, Pauli::X)])?;
            v.add(kappa, &[f, (y, Pauli::X)])?;
            v.add(kappa * s, &[(y, Pauli::X)])?;
        }
        roles.extend((0..r).map(|copy| QubitRole::SumAncilla { term: jt, copy }));
        roles.extend((0..r).map(|copy| QubitRole::DiffAncilla { term: jt, copy }));
        roles.extend((0..r).map(|copy| QubitRole::FieldAncilla { term: jt, copy }));
        let rf = r as f64;
        known_shift -= 4.0 * rf * beta * beta / plan.delta + 2.0 * rf * kappa * kappa / plan.delta;
    }
    roles.extend((0..c).map(|index| QubitRole::Core { index }));
    add_core(&mut h, &core, plan.j)?;
    let mut notes = plan.notes.clone();
    notes.push("experimental: couplings grow with R, so not every term stays weak".into());
    if plan.literal_field_sign {
        notes.push(
            "literal (F - I) field coupling: leaves a 2 |gamma| F residual for gamma > 0".into(),
        );
    }
    Ok(GadgetHamiltonian {
        n_total,
        n_target: n,
        roles,
        h: h.canonicalize(),
        v,
        plan: PlanRecord::Direct(plan.clone()),
        known_shift,
        psd_shift: target.psd_shift(),
        gap: plan.delta,
        experimental: true,
        provenance: None,
        notes,
    })
}

/// One point of the direct-construction sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectDemoPoint {
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub n_total: usize,
    pub beta_max: f64,
    /// `max_j |2 R beta_j^2 xi_j / Delta^2 - gamma_j|`.
    pub identity_defect: f64,
    /// `A B F` coefficient of `T_3(0)`, one per term.
    pub third_order_coefficients: Vec<f64>,
    /// `|T_1 + T_2 + T_3 - H_eff|` at `z = 0`.
    pub truncated_residual: f64,
    /// `|Sigma-(0) - H_eff|`.
    pub exact_residual: f64,
}

/// `beta` growth under `Delta = M^3 R^2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathologyReport {
    /// `(R, Delta, beta_max)` rows.
    pub rows: Vec<(usize, f64, f64)>,
    /// Fitted exponent of `beta_max` in `R`; 1 means linear growth.
    pub beta_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectDemoReport {
    pub points: Vec<DirectDemoPoint>,
    /// Exact residual strictly decreases along the sweep.
    pub residual_decreasing: bool,
    pub residual_slope: Option<f64>,
    pub pathology: PathologyReport,
    pub experimental: bool,
}

/// `beta_max` for `Delta = M^3 R^2` at each `R` (plan arithmetic only, nothing is built).
pub fn direct_pathology(target: &TargetHamiltonian, rs: &[usize]) -> Result<PathologyReport> {
    let m = nonzero_terms(target).len().max(1) as f64;
    let mut rows = Vec::with_capacity(rs.len());
    for &r in rs {
        let delta = m.powi(3) * (r as f64).powi(2);
        let plan = DirectPlan::desk(target, r, 1, delta)?;
        let b = plan.betas.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        rows.push((r, delta, b));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(r, _, b)| (r as f64, b)).collect();
    Ok(PathologyReport {
        beta_exponent: loglog_slope(&pts),
        rows,
    })
}

/// Builds the direct construction at each `Delta` (fixed `R`, `C`) and measures how well
/// the low-energy self-energy at `z = 0` reproduces `H_targ + known_shift`.
pub fn direct_demo_report(
    target: &TargetHamiltonian,
    deltas: &[f64],
    r: usize,
    c: usize,
    literal_field_sign: bool,
    pathology_rs: &[usize],
) -> Result<DirectDemoReport> {
    let terms = nonzero_terms(target);
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut plan = DirectPlan::desk(target, r, c, delta / c as f64)?;
        plan.literal_field_sign = literal_field_sign;
        let g = build_direct_3body(target, &plan)?;
        let mut heff_sum = target.realize();
        heff_sum.add(g.known_shift, &[])?;
        let heff = heff_sum.to_dense()?;
        let orders = SeriesEngine::new(&g)?.terms(0.0, 3)?;
        let truncated = &(&orders[0] + &orders[1]) + &orders[2];
        let third_order_coefficients = terms
            .iter()
            .map(|t| pauli_coefficient(&orders[2], g.n_target, t.sites()))
            .collect::<Result<_>>()?;
        let identity_defect = terms
            .iter()
            .enumerate()
            .map(|(k, t)| (plan.coefficient_identity(k) - t.gamma).abs())
            .fold(0.0, f64::max);
        let exact = self_energy_exact(&g, 0.0)?;
        points.push(DirectDemoPoint {
            delta,
            n_total: g.n_total,
            beta_max: plan.betas.iter().fold(0.0f64, |a, b| a.max(b.abs())),
            identity_defect,
            third_order_coefficients,
            truncated_residual: linalg::spectral_norm(&(&truncated - &heff))?,
            exact_residual: linalg::spectral_norm(&(&exact - &heff))?,
        });
    }
    let residual_decreasing = points
        .windows(2)
        .all(|w| w[1].exact_residual < w[0].exact_residual);
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.delta, p.exact_residual)).collect();
    Ok(DirectDemoReport {
        residual_slope: loglog_slope(&pts),
        residual_decreasing,
        points,
        pathology: direct_pathology(target, pathology_rs)?,
        experimental: true,
    })
}
