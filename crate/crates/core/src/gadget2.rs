//! Weak-interaction 2-body gadget: a shared ferromagnetic core, direct ancillas per
//! target term, and parallel composition over all terms.
//!
//! Qubit layout: targets `0..n`, then `R` direct ancillas for each coupled term in order,
//! then the `C` core qubits.

use serde::{Deserialize, Serialize};

use crate::error::{GadgetError, Result};
use crate::gadget3::{DirectPlan, SerialPlanRecord};
use crate::model::{operator_norm, pauli_degree, CoupledTerm, InteractionGraph, TargetHamiltonian};
use crate::pauli::{Pauli, PauliSum, PauliTerm, SPARSE_QUBIT_CEILING};

/// Ratio `Delta / (M gamma_max)` above which the high-energy subspace is guaranteed to stay high.
pub const SUBSPACE_RATIO: f64 = 160.0;

/// How the plan's parameters were chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    /// Derived from the convergence conditions; usually far beyond desk scale.
    Asymptotic,
    /// `R`, `C`, `J` supplied directly; derived fields filled in.
    Desk,
}

/// Parameters of a 2-body gadget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GadgetPlan {
    /// Direct ancillas per coupled term.
    #[serde(rename = "R")]
    pub r: usize,
    /// Core size.
    #[serde(rename = "C")]
    pub c: usize,
    /// Core coupling.
    #[serde(rename = "J")]
    pub j: f64,
    /// Spectral gap of the unperturbed part, `J * C`.
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub d: f64,
    pub epsilon: f64,
    /// Per-term coupling `sqrt(|gamma| Delta / (2R))`, one per nonzero coupled term.
    pub betas: Vec<f64>,
    pub mode: PlanMode,
    /// Safety factors `(c_R, c_C)`.
    pub safety: (f64, f64),
    /// Whether `Delta >= 160 M gamma_max`.
    pub subspace_hypothesis_ok: bool,
    pub notes: Vec<String>,
}

impl GadgetPlan {
    pub fn beta_max(&self) -> f64 {
        self.betas.iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// `sqrt(|gamma| Delta / (2R))`.
pub fn coupling_strength(gamma: f64, delta: f64, r: usize) -> f64 {
    (gamma.abs() * delta / (2.0 * r as f64)).sqrt()
}

fn nonzero_terms(target: &TargetHamiltonian) -> Vec<&CoupledTerm> {
    target
        .coupled_terms()
        .iter()
        .filter(|t| t.gamma != 0.0)
        .collect()
}

fn subspace_note(target: &TargetHamiltonian, delta: f64) -> (bool, Option<String>) {
    let m = nonzero_terms(target).len() as f64;
    let need = SUBSPACE_RATIO * m * target.gamma_max();
    let ok = delta >= need;
    (
        ok,
        (!ok).then(|| format!("Delta = {delta} is below 160 M gamma_max = {need}")),
    )
}

/// Desk-mode plan from user-supplied `R`, `C`, `J`.
pub fn desk_plan(
    target: &TargetHamiltonian,
    r: usize,
    c: usize,
    j: f64,
    epsilon: f64,
) -> Result<GadgetPlan> {
    const OP: &str = "desk_plan";
    if r == 0 || c == 0 {
        return Err(GadgetError::malformed(
            OP,
            format!("R = {r} and C = {c} must be at least 1"),
        ));
    }
    if !(j > 0.0 && j.is_finite()) {
        return Err(GadgetError::malformed(
            OP,
            format!("J = {j} must be positive and finite"),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(GadgetError::malformed(
            OP,
            format!("epsilon = {epsilon} must be positive"),
        ));
    }
    let delta = j * c as f64;
    let betas = nonzero_terms(target)
        .iter()
        .map(|t| coupling_strength(t.gamma, delta, r))
        .collect();
    let (ok, note) = subspace_note(target, delta);
    Ok(GadgetPlan {
        r,
        c,
        j,
        delta,
        d: 0.5,
        epsilon,
        betas,
        mode: PlanMode::Desk,
        safety: (1.0, 1.0),
        subspace_hypothesis_ok: ok,
        notes: note.into_iter().collect(),
    })
}

/// Asymptotic plan from the convergence conditions, without the desk-scale check.
///
/// `R = ceil(c_R max{eps^(-2/d), (|h_else|^2 / (2 M^4 gamma_max))^(1/d), (M^3 eps^-2)^(1/(1-d))})`,
/// `Delta = M^3 R^d`, `C = ceil(c_C M^3 R^d / eps)`, `J = Delta / C`.
pub fn plan_parameters_unchecked(
    target: &TargetHamiltonian,
    epsilon: f64,
    d: f64,
    safety: (f64, f64),
) -> Result<GadgetPlan> {
    const OP: &str = "plan_parameters";
    if !(d > 0.0 && d < 1.0) {
        return Err(GadgetError::malformed(
            OP,
            format!("d = {d} must lie in (0, 1)"),
        ));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(GadgetError::malformed(
            OP,
            format!("epsilon = {epsilon} must be positive"),
        ));
    }
    if safety.0 < 1.0 || safety.1 < 1.0 {
        return Err(GadgetError::malformed(
            OP,
            "safety factors must be at least 1",
        ));
    }
    let m = nonzero_terms(target).len();
    if m == 0 {
        return Err(GadgetError::malformed(
            OP,
            "target has no nonzero coupled terms",
        ));
    }
    let mf = m as f64;
    let gmax = target.gamma_max();
    let he = operator_norm(target.h_else())?;
    let r_min = [
        epsilon.powf(-2.0 / d),
        (he * he / (2.0 * mf.powi(4) * gmax)).powf(1.0 / d),
        (mf.powi(3) * epsilon.powi(-2)).powf(1.0 / (1.0 - d)),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let r_real = (safety.0 * r_min).ceil();
    if !(r_real.is_finite() && r_real < 1e18) {
        return Err(GadgetError::resource(
            OP,
            format!("R = {r_real} is not representable"),
        ));
    }
    let r = r_real as usize;
    let delta = mf.powi(3) * (r as f64).powf(d);
    let c_real = (safety.1 * mf.powi(3) * (r as f64).powf(d) / epsilon).ceil();
    if !(c_real.is_finite() && c_real < 1e18) {
        return Err(GadgetError::resource(
            OP,
            format!("C = {c_real} is not representable"),
        ));
    }
    let c = c_real as usize;
    let j = delta / c as f64;
    let betas = nonzero_terms(target)
        .iter()
        .map(|t| coupling_strength(t.gamma, delta, r))
        .collect();
    let (ok, note) = subspace_note(target, delta);
    let mut notes: Vec<String> = note.into_iter().collect();
    notes.push(format!(
        "asymptotic plan: n_total = n + M R + C = {} + {} + {}",
        target.n_qubits(),
        m * r,
        c
    ));
    Ok(GadgetPlan {
        r,
        c,
        j,
        delta,
        d,
        epsilon,
        betas,
        mode: PlanMode::Asymptotic,
        safety,
        subspace_hypothesis_ok: ok,
        notes,
    })
}

/// Asymptotic plan; fails with a resource error when the gadget would exceed the qubit ceiling.
pub fn plan_parameters(
    target: &TargetHamiltonian,
    epsilon: f64,
    d: f64,
    safety: (f64, f64),
) -> Result<GadgetPlan> {
    let plan = plan_parameters_unchecked(target, epsilon, d, safety)?;
    let m = nonzero_terms(target).len();
    let n_total = target.n_qubits() as f64 + (m as f64) * plan.r as f64 + plan.c as f64;
    if n_total > SPARSE_QUBIT_CEILING as f64 {
        return Err(GadgetError::resource(
            "plan_parameters",
            format!(
                "gadget needs n + M R + C = {} + {} x {} + {} = {n_total} qubits, above the ceiling {SPARSE_QUBIT_CEILING}; use a desk plan",
                target.n_qubits(),
                m,
                plan.r,
                plan.c
            ),
        ));
    }
    Ok(plan)
}

/// `H_C = (J/2) sum_c (I - Z_c) + (J/2) sum_{c<c'} (I - Z_c Z_c')` on qubits `0..C`.
pub fn build_core(c: usize, j: f64) -> Result<PauliSum> {
    let mut h = PauliSum::new(c);
    add_core(&mut h, &(0..c).collect::<Vec<_>>(), j)?;
    Ok(h.canonicalize())
}

pub(crate) fn add_core(h: &mut PauliSum, core: &[usize], j: f64) -> Result<()> {
    if core.is_empty() {
        return Err(GadgetError::malformed(
            "build_core",
            "core size C must be at least 1",
        ));
    }
    if !(j > 0.0 && j.is_finite()) {
        return Err(GadgetError::malformed(
            "build_core",
            format!("J = {j} must be positive"),
        ));
    }
    for &c in core {
        h.add(0.5 * j, &[])?;
        h.add(-0.5 * j, &[(c, Pauli::Z)])?;
    }
    for (k, &c) in core.iter().enumerate() {
        for &c2 in &core[k + 1..] {
            h.add(0.5 * j, &[])?;
            h.add(-0.5 * j, &[(c, Pauli::Z), (c2, Pauli::Z)])?;
        }
    }
    Ok(())
}

/// `(J/2) sum_c (I - Z_w Z_c)` for one ancilla.
pub(crate) fn add_core_links(
    h: &mut PauliSum,
    ancilla: usize,
    core: &[usize],
    j: f64,
) -> Result<()> {
    for &c in core {
        h.add(0.5 * j, &[])?;
        h.add(-0.5 * j, &[(ancilla, Pauli::Z), (c, Pauli::Z)])?;
    }
    Ok(())
}

/// Role of a qubit in a gadget register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum QubitRole {
    Target,
    /// Direct ancilla `copy` of coupled term `term`.
    Direct {
        term: usize,
        copy: usize,
    },
    Core {
        index: usize,
    },
    /// Strong mediator of a 3-local term in a serial gadget.
    Mediator {
        term: usize,
    },
    /// Core that replaces the mediators' penalty field.
    MediatorCore {
        index: usize,
    },
    /// Ancilla coupled through `(A + B)` and the `F` projector.
    SumAncilla {
        term: usize,
        copy: usize,
    },
    /// Ancilla coupled through `(A - B)`.
    DiffAncilla {
        term: usize,
        copy: usize,
    },
    /// Ancilla coupled through `(F + s I)`.
    FieldAncilla {
        term: usize,
        copy: usize,
    },
}

/// Builder-specific parameters carried by a gadget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanRecord {
    TwoBody(GadgetPlan),
    Serial(Box<SerialPlanRecord>),
    Direct(DirectPlan),
}

/// A built gadget: `H~ = H + V` on `n_total` qubits, targets first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GadgetHamiltonian {
    pub n_total: usize,
    /// Number of leading qubits that carry the simulated system.
    pub n_target: usize,
    pub roles: Vec<QubitRole>,
    /// Unperturbed part; diagonal and acting only on ancillas.
    #[serde(rename = "H")]
    pub h: PauliSum,
    /// Perturbation: `h_else` plus all target-ancilla couplings.
    #[serde(rename = "V")]
    pub v: PauliSum,
    pub plan: PlanRecord,
    /// Analytic constant by which low gadget levels sit relative to the target.
    pub known_shift: f64,
    /// Shift applied to the target's `h_else` before building (see the target's opt-in shift mode).
    pub psd_shift: f64,
    /// Gap of the unperturbed part.
    pub gap: f64,
    pub experimental: bool,
    pub provenance: Option<crate::gadget3::Provenance>,
    pub notes: Vec<String>,
}

impl GadgetHamiltonian {
    /// `H + V` as one canonical sum.
    pub fn total(&self) -> PauliSum {
        let mut s = self.h.clone();
        s.extend_from(&self.v);
        s.canonicalize()
    }

    /// Basis indices with every ancilla in `|0>`; these are `0..2^n_target`.
    pub fn low_indices(&self) -> Vec<usize> {
        (0..1usize << self.n_target).collect()
    }

    /// Ancilla qubit indices.
    pub fn ancillas(&self) -> std::ops::Range<usize> {
        self.n_target..self.n_total
    }

    /// The 2-body plan, if this gadget was built by [`build_gadget`].
    pub fn two_body_plan(&self) -> Option<&GadgetPlan> {
        match &self.plan {
            PlanRecord::TwoBody(p) => Some(p),
            _ => None,
        }
    }

    /// Coupling terms of `V` (terms touching an ancilla).
    pub fn coupling_terms(&self) -> impl Iterator<Item = &PauliTerm> {
        let n = self.n_target;
        self.v
            .terms()
            .iter()
            .filter(move |t| t.factors().iter().any(|&(q, _)| q >= n))
    }

    /// The `h_else` part of `V` (terms on targets only).
    pub fn h_else_part(&self) -> PauliSum {
        let n = self.n_target;
        PauliSum::from_terms(
            self.n_total,
            self.v
                .terms()
                .iter()
                .filter(|t| t.factors().iter().all(|&(q, _)| q < n))
                .cloned(),
        )
        .expect("terms come from a valid sum")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("gadget serializes")
    }
}

/// Builds `H = (J/2) sum_j sum_i sum_c (I - Z_w Z_c) + H_C` and
/// `V = h_else + sum_j beta_j sum_i (A - sgn(gamma_j) B) X_w`.
pub fn build_gadget(target: &TargetHamiltonian, plan: &GadgetPlan) -> Result<GadgetHamiltonian> {
    const OP: &str = "build_gadget";
    if let Some(t) = target.coupled_terms().iter().find(|t| t.locality() != 2) {
        return Err(GadgetError::wrong_builder(
            OP,
            format!(
                "{}-local coupled term present; use the serial 3-body builder",
                t.locality()
            ),
        ));
    }
    let terms = nonzero_terms(target);
    if plan.betas.len() != terms.len() {
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
    for (t, &b) in terms.iter().zip(&plan.betas) {
        let want = coupling_strength(t.gamma, plan.delta, plan.r);
        if (b - want).abs() > 1e-12 * want.max(1.0) {
            return Err(GadgetError::malformed(
                OP,
                format!("plan coupling {b} does not match sqrt(|gamma| Delta / 2R) = {want}"),
            ));
        }
    }
    let n = target.n_qubits();
    let (m, r, c) = (terms.len(), plan.r, plan.c);
    let n_total = n + m * r + c;
    if n_total > SPARSE_QUBIT_CEILING {
        return Err(GadgetError::resource(
            OP,
            format!("gadget needs {n_total} qubits, above the ceiling {SPARSE_QUBIT_CEILING}"),
        ));
    }
    let core: Vec<usize> = (n + m * r..n_total).collect();
    let mut roles = vec![QubitRole::Target; n];
    let mut h = PauliSum::new(n_total);
    let mut v = target.h_else().widened(n_total)?.canonicalize();
    for (jt, (t, &beta)) in terms.iter().zip(&plan.betas).enumerate() {
        let (a, b) = (t.site_a(), t.site_b());
        for i in 0..r {
            let w = n + jt * r + i;
            roles.push(QubitRole::Direct { term: jt, copy: i });
            add_core_links(&mut h, w, &core, plan.j)?;
            v.add(beta, &[a, (w, Pauli::X)])?;
            v.add(-t.sign() * beta, &[b, (w, Pauli::X)])?;
        }
    }
    roles.extend((0..c).map(|index| QubitRole::Core { index }));
    add_core(&mut h, &core, plan.j)?;
    Ok(GadgetHamiltonian {
        n_total,
        n_target: n,
        roles,
        h: h.canonicalize(),
        v,
        plan: PlanRecord::TwoBody(plan.clone()),
        known_shift: -target.gamma_abs_sum(),
        psd_shift: target.psd_shift(),
        gap: plan.delta,
        experimental: false,
        provenance: None,
        notes: plan.notes.clone(),
    })
}

/// The two lowest distinct eigenvalues `(E0, E1 - E0)` of the unperturbed part.
pub fn ground_gap_of_h(g: &GadgetHamiltonian) -> Result<(f64, f64)> {
    const OP: &str = "ground_gap_of_h";
    let anc: std::collections::BTreeMap<usize, usize> =
        g.ancillas().enumerate().map(|(k, q)| (q, k)).collect();
    if g.h
        .terms()
        .iter()
        .any(|t| t.factors().iter().any(|&(q, _)| q < g.n_target))
    {
        return Err(GadgetError::malformed(
            OP,
            "unperturbed part acts on target qubits",
        ));
    }
    let h = g.h.embed(&anc, anc.len())?;
    let diag = h.diagonal()?;
    let scale = h.one_norm().max(1.0);
    let mut levels = diag;
    levels.sort_by(f64::total_cmp);
    let e0 = levels[0];
    let e1 = levels
        .iter()
        .copied()
        .find(|&e| e - e0 > 1e-12 * scale)
        .ok_or_else(|| GadgetError::numeric(OP, "unperturbed part has a single level"))?;
    Ok((e0, e1 - e0))
}

/// Qubit and Pauli-degree accounting of a built gadget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub n_target: usize,
    pub ancillas: usize,
    /// `M R + C`.
    pub predicted_ancillas: usize,
    /// Pauli degree of the target.
    pub target_degree: usize,
    /// Measured Pauli degree of `H + V`.
    pub gadget_degree: usize,
    /// `max{D R, M R + C - 1, C + 2}`: target vertices, core vertices, direct ancillas.
    pub predicted_degree: usize,
    /// `max{D R, R C}`.
    pub coarse_degree: usize,
}

/// Counts ancillas and Pauli degrees of a 2-body gadget built from `target`.
pub fn resource_report(
    target: &TargetHamiltonian,
    g: &GadgetHamiltonian,
) -> Result<ResourceReport> {
    let plan = g.two_body_plan().ok_or_else(|| {
        GadgetError::wrong_builder("resource_report", "only 2-body gadgets are accounted")
    })?;
    let m = plan.betas.len();
    let d = pauli_degree(&target.interaction_graph()).max;
    let measured = pauli_degree(&InteractionGraph::from_pauli_sum(&g.total())).max;
    let (r, c) = (plan.r, plan.c);
    Ok(ResourceReport {
        n_target: g.n_target,
        ancillas: g.n_total - g.n_target,
        predicted_ancillas: m * r + c,
        target_degree: d,
        gadget_degree: measured,
        predicted_degree: if m == 0 {
            c.saturating_sub(1)
        } else {
            (d * r).max(m * r + c - 1).max(c + 2)
        },
        coarse_degree: (d * r).max(r * c),
    })
}
