//! Target Hamiltonians, hypothesis checks, and interaction-graph accounting.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{GadgetError, Result};
use crate::pauli::{parse_real, parse_sites, Pauli, PauliSum, PauliTerm, SPARSE_QUBIT_CEILING};
use crate::verify;

/// Default tolerance for the non-negativity check on `h_else`.
pub const PSD_TOL: f64 = 1e-10;

/// `gamma * A_a B_b` or `gamma * A_a B_b F_f`: single-Pauli factors on distinct qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledTerm {
    pub gamma: f64,
    sites: Vec<(usize, Pauli)>,
}

impl CoupledTerm {
    /// Sites are kept in the given order: the first is `A`, the second `B`, the third `F`.
    pub fn new(gamma: f64, sites: Vec<(usize, Pauli)>) -> Result<Self> {
        const OP: &str = "CoupledTerm::new";
        if !gamma.is_finite() {
            return Err(GadgetError::malformed(
                OP,
                format!("non-finite gamma {gamma}"),
            ));
        }
        if sites.len() > 3 {
            return Err(GadgetError::out_of_scope(
                OP,
                format!(
                    "{}-local coupled terms are not supported (only 2 and 3)",
                    sites.len()
                ),
            ));
        }
        if sites.len() < 2 {
            return Err(GadgetError::malformed(
                OP,
                "coupled terms act on 2 or 3 qubits; route 1-local terms into h_else",
            ));
        }
        for (i, a) in sites.iter().enumerate() {
            if sites[i + 1..].iter().any(|b| b.0 == a.0) {
                return Err(GadgetError::malformed(
                    OP,
                    format!("qubit {} appears twice", a.0),
                ));
            }
        }
        Ok(Self { gamma, sites })
    }

    pub fn two(gamma: f64, a: (usize, Pauli), b: (usize, Pauli)) -> Result<Self> {
        Self::new(gamma, vec![a, b])
    }

    pub fn three(
        gamma: f64,
        a: (usize, Pauli),
        b: (usize, Pauli),
        f: (usize, Pauli),
    ) -> Result<Self> {
        Self::new(gamma, vec![a, b, f])
    }

    pub fn sites(&self) -> &[(usize, Pauli)] {
        &self.sites
    }

    pub fn site_a(&self) -> (usize, Pauli) {
        self.sites[0]
    }

    pub fn site_b(&self) -> (usize, Pauli) {
        self.sites[1]
    }

    pub fn site_f(&self) -> Option<(usize, Pauli)> {
        self.sites.get(2).copied()
    }

    pub fn locality(&self) -> usize {
        self.sites.len()
    }

    /// Sign of gamma with `sgn(0) = +1`.
    pub fn sign(&self) -> f64 {
        if self.gamma < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn to_pauli_term(&self) -> PauliTerm {
        PauliTerm::new(self.gamma, self.sites.iter().copied())
            .expect("coupled term sites are validated at construction")
    }

    fn max_qubit(&self) -> usize {
        self.sites.iter().map(|s| s.0).max().unwrap_or(0)
    }

    fn with_sites_mapped(&self, map: &BTreeMap<usize, usize>) -> Self {
        Self {
            gamma: self.gamma,
            sites: self.sites.iter().map(|&(q, p)| (map[&q], p)).collect(),
        }
    }
}

/// `H_targ = h_else + sum_j gamma_j A B (F)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetHamiltonian {
    n_qubits: usize,
    coupled_terms: Vec<CoupledTerm>,
    h_else: PauliSum,
    psd_shift: f64,
}

impl TargetHamiltonian {
    pub fn new(n_qubits: usize, coupled_terms: Vec<CoupledTerm>, h_else: PauliSum) -> Result<Self> {
        const OP: &str = "TargetHamiltonian::new";
        for (j, t) in coupled_terms.iter().enumerate() {
            if t.max_qubit() >= n_qubits {
                return Err(GadgetError::malformed(
                    OP,
                    format!(
                        "coupled term {j} uses qubit {} but n = {n_qubits}",
                        t.max_qubit()
                    ),
                ));
            }
        }
        if h_else.n_qubits() > n_qubits {
            return Err(GadgetError::malformed(
                OP,
                format!(
                    "h_else acts on {} qubits but n = {n_qubits}",
                    h_else.n_qubits()
                ),
            ));
        }
        let h_else = h_else.widened(n_qubits)?;
        Ok(Self {
            n_qubits,
            coupled_terms,
            h_else,
            psd_shift: 0.0,
        })
    }

    /// Routes a plain Pauli sum: single-Pauli 2- and 3-local terms become coupled terms,
    /// identity and 1-local terms go to `h_else`, 4-local and higher are out of scope.
    pub fn from_pauli_sum(sum: &PauliSum) -> Result<Self> {
        let mut coupled = Vec::new();
        let mut h_else = PauliSum::new(sum.n_qubits());
        for t in sum.canonicalize().terms() {
            match t.locality() {
                0 | 1 => h_else.push(t.clone())?,
                2 | 3 => coupled.push(CoupledTerm::new(t.coeff(), t.factors().to_vec())?),
                k => {
                    return Err(GadgetError::out_of_scope(
                        "TargetHamiltonian::from_pauli_sum",
                        format!("{k}-local term {t} cannot be gadgetized here"),
                    ))
                }
            }
        }
        Self::new(sum.n_qubits(), coupled, h_else)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn coupled_terms(&self) -> &[CoupledTerm] {
        &self.coupled_terms
    }

    pub fn h_else(&self) -> &PauliSum {
        &self.h_else
    }

    /// Constant added to `h_else` to make it non-negative (0 unless a shift was requested).
    pub fn psd_shift(&self) -> f64 {
        self.psd_shift
    }

    /// Number of coupled terms.
    pub fn m(&self) -> usize {
        self.coupled_terms.len()
    }

    pub fn gamma_max(&self) -> f64 {
        self.coupled_terms
            .iter()
            .map(|t| t.gamma.abs())
            .fold(0.0, f64::max)
    }

    pub fn gamma_abs_sum(&self) -> f64 {
        self.coupled_terms.iter().map(|t| t.gamma.abs()).sum()
    }

    /// Largest coupled-term locality, 0 if there are none.
    pub fn max_locality(&self) -> usize {
        self.coupled_terms
            .iter()
            .map(CoupledTerm::locality)
            .max()
            .unwrap_or(0)
    }

    /// The Hamiltonian as one Pauli sum (including any recorded shift).
    pub fn realize(&self) -> PauliSum {
        let mut s = self.h_else.clone();
        for t in &self.coupled_terms {
            s.push(t.to_pauli_term())
                .expect("coupled terms are range-checked at construction");
        }
        s
    }

    /// Copy without `gamma = 0` terms.
    pub fn without_zero_terms(&self) -> Self {
        let mut out = self.clone();
        out.coupled_terms.retain(|t| t.gamma != 0.0);
        out
    }

    /// `theta * H`, including `h_else` and any recorded shift.
    pub fn scaled(&self, theta: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            coupled_terms: self
                .coupled_terms
                .iter()
                .map(|t| CoupledTerm {
                    gamma: t.gamma * theta,
                    sites: t.sites.clone(),
                })
                .collect(),
            h_else: self.h_else.scaled(theta),
            psd_shift: self.psd_shift * theta,
        }
    }

    /// Opt-in shift: if `lambda_min(h_else) < -tol`, adds `|lambda_min| I` to `h_else`
    /// and records the amount. Returns the new target and the shift applied now.
    pub fn with_psd_shift(&self, tol: f64) -> Result<(Self, f64)> {
        let lmin = min_eigenvalue(&self.h_else)?;
        let mut out = self.clone();
        if lmin < -tol {
            let shift = -lmin;
            out.h_else.push(PauliTerm::identity(shift))?;
            out.psd_shift += shift;
            Ok((out, shift))
        } else {
            Ok((out, 0.0))
        }
    }

    /// Relabels qubits; coupled terms and `h_else` move together.
    pub fn embed(&self, qubit_map: &BTreeMap<usize, usize>, new_n: usize) -> Result<Self> {
        let h_else = self.h_else.embed(qubit_map, new_n)?;
        for t in &self.coupled_terms {
            for &(q, _) in t.sites() {
                if !qubit_map.contains_key(&q) {
                    return Err(GadgetError::malformed(
                        "embed",
                        format!("qubit {q} has no image"),
                    ));
                }
            }
        }
        Ok(Self {
            n_qubits: new_n,
            coupled_terms: self
                .coupled_terms
                .iter()
                .map(|t| t.with_sites_mapped(qubit_map))
                .collect(),
            h_else,
            psd_shift: self.psd_shift,
        })
    }

    pub fn interaction_graph(&self) -> InteractionGraph {
        InteractionGraph::from_pauli_sum(&self.realize())
    }

    pub fn to_json_value(&self) -> Value {
        let terms: Vec<Value> = self
            .coupled_terms
            .iter()
            .map(|t| {
                let sites: Vec<Value> = t
                    .sites
                    .iter()
                    .map(|&(q, p)| json!([q, p.label()]))
                    .collect();
                json!({"gamma": t.gamma, "sites": sites})
            })
            .collect();
        json!({
            "n": self.n_qubits,
            "coupled_terms": terms,
            "h_else": self.h_else.to_json_value(),
            "psd_shift": self.psd_shift,
        })
    }

    /// Parses `{"n", "terms"?, "coupled_terms"?, "h_else"?, "psd_shift"?}`.
    /// A top-level `"terms"` list is routed as in [`TargetHamiltonian::from_pauli_sum`].
    pub fn from_json_value(v: &Value) -> Result<Self> {
        const OP: &str = "parse_target";
        let obj = v
            .as_object()
            .ok_or_else(|| GadgetError::parse(OP, "", "expected an object"))?;
        for key in obj.keys() {
            if !matches!(
                key.as_str(),
                "n" | "terms" | "coupled_terms" | "h_else" | "psd_shift"
            ) {
                return Err(GadgetError::parse(OP, key.as_str(), "unknown field"));
            }
        }
        let n = obj
            .get("n")
            .ok_or_else(|| GadgetError::parse(OP, "n", "missing field"))?
            .as_u64()
            .ok_or_else(|| GadgetError::parse(OP, "n", "expected a nonnegative integer"))?
            as usize;
        let base = PauliSum::from_json_value(
            &json!({"n": n, "terms": obj.get("terms").cloned().unwrap_or(json!([]))}),
            "",
        )?;
        let routed = Self::from_pauli_sum(&base).map_err(|e| match e {
            GadgetError::OutOfScope { .. } => e,
            other => GadgetError::parse(OP, "terms", other.to_string()),
        })?;
        let mut coupled = routed.coupled_terms;
        let mut h_else = routed.h_else;
        if let Some(ct) = obj.get("coupled_terms") {
            let arr = ct
                .as_array()
                .ok_or_else(|| GadgetError::parse(OP, "coupled_terms", "expected an array"))?;
            for (j, t) in arr.iter().enumerate() {
                let path = format!("coupled_terms[{j}]");
                let tobj = t
                    .as_object()
                    .ok_or_else(|| GadgetError::parse(OP, &path, "expected an object"))?;
                let gamma = parse_real(tobj.get("gamma"), &format!("{path}.gamma"), OP)?;
                let sites_path = format!("{path}.sites");
                let sites = parse_sites(
                    tobj.get("sites")
                        .ok_or_else(|| GadgetError::parse(OP, &sites_path, "missing field"))?,
                    &sites_path,
                    n,
                    OP,
                )?;
                let term = CoupledTerm::new(gamma, sites).map_err(|e| match e {
                    GadgetError::OutOfScope { .. } => e,
                    other => GadgetError::parse(OP, &sites_path, other.to_string()),
                })?;
                coupled.push(term);
            }
        }
        if let Some(he) = obj.get("h_else") {
            let parsed = PauliSum::from_json_value(he, "h_else")?;
            if parsed.n_qubits() > n {
                return Err(GadgetError::parse(
                    OP,
                    "h_else.n",
                    format!("h_else acts on {} qubits but n = {n}", parsed.n_qubits()),
                ));
            }
            h_else.extend_from(&parsed.widened(n)?);
        }
        let mut target = Self::new(n, coupled, h_else)?;
        if let Some(s) = obj.get("psd_shift") {
            target.psd_shift = parse_real(Some(s), "psd_shift", OP)?;
        }
        Ok(target)
    }
}

fn min_eigenvalue(sum: &PauliSum) -> Result<f64> {
    if sum.is_empty() {
        return Ok(0.0);
    }
    Ok(verify::lowest_eigs(sum, 1)?.values[0])
}

/// Operator norm of a Pauli sum: exact below the dense ceiling, Lanczos above.
pub fn operator_norm(sum: &PauliSum) -> Result<f64> {
    if sum.is_empty() {
        return Ok(0.0);
    }
    let lo = verify::lowest_eigs(sum, 1)?.values[0];
    let hi = -verify::lowest_eigs(&sum.scaled(-1.0), 1)?.values[0];
    Ok(lo.abs().max(hi.abs()))
}

/// Per-term locality check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermCheck {
    pub index: usize,
    pub locality: usize,
    pub ok: bool,
    pub message: Option<String>,
}

/// Hypothesis check of a target Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n_qubits: usize,
    pub m: usize,
    pub gamma_max: f64,
    pub h_else_norm: Option<f64>,
    pub h_else_min_eig: Option<f64>,
    pub psd_tol: f64,
    pub psd_ok: bool,
    pub term_checks: Vec<TermCheck>,
    pub notes: Vec<String>,
    pub ok: bool,
}

/// Checks locality of each term and non-negativity of `h_else`. Never fails; problems
/// are recorded in the report.
pub fn validate(target: &TargetHamiltonian, tol: f64) -> ValidationReport {
    let mut notes = Vec::new();
    let term_checks: Vec<TermCheck> = target
        .coupled_terms
        .iter()
        .enumerate()
        .map(|(index, t)| {
            let locality = t.locality();
            let ok = (2..=3).contains(&locality);
            TermCheck {
                index,
                locality,
                ok,
                message: (!ok).then(|| format!("locality {locality} is not 2 or 3")),
            }
        })
        .collect();
    let (h_else_norm, h_else_min_eig) = if target.n_qubits > SPARSE_QUBIT_CEILING {
        notes.push(format!(
            "h_else spectrum not computed: {} qubits exceeds the ceiling {SPARSE_QUBIT_CEILING}",
            target.n_qubits
        ));
        (None, None)
    } else {
        match (
            operator_norm(&target.h_else),
            min_eigenvalue(&target.h_else),
        ) {
            (Ok(n), Ok(l)) => (Some(n), Some(l)),
            (Err(e), _) | (_, Err(e)) => {
                notes.push(format!("h_else spectrum failed: {e}"));
                (None, None)
            }
        }
    };
    let psd_ok = h_else_min_eig.is_some_and(|l| l >= -tol);
    if !psd_ok && h_else_min_eig.is_some() {
        notes.push("h_else has negative spectrum; the opt-in shift mode can correct it".into());
    }
    let ok = psd_ok && term_checks.iter().all(|c| c.ok) && target.gamma_max().is_finite();
    ValidationReport {
        n_qubits: target.n_qubits,
        m: target.m(),
        gamma_max: target.gamma_max(),
        h_else_norm,
        h_else_min_eig,
        psd_tol: tol,
        psd_ok,
        term_checks,
        notes,
        ok,
    }
}

/// A 2-local Pauli coupling `strength * P_a Q_b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PauliEdge {
    pub a: usize,
    pub b: usize,
    pub pauli_a: Pauli,
    pub pauli_b: Pauli,
    pub strength: f64,
}

/// Interaction multigraph: one edge per distinct 2-local Pauli string.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionGraph {
    pub n_vertices: usize,
    pub pauli_edges: Vec<PauliEdge>,
    /// 1-local terms `(qubit, pauli, strength)`.
    pub self_loops: Vec<(usize, Pauli, f64)>,
    /// Terms on three or more qubits, kept for completeness.
    pub hyperedges: Vec<PauliTerm>,
}

impl InteractionGraph {
    /// Reads the graph off the canonical Pauli decomposition (zero terms dropped).
    pub fn from_pauli_sum(sum: &PauliSum) -> Self {
        let mut g = InteractionGraph {
            n_vertices: sum.n_qubits(),
            pauli_edges: Vec::new(),
            self_loops: Vec::new(),
            hyperedges: Vec::new(),
        };
        for t in sum.canonicalize().terms() {
            if t.coeff() == 0.0 {
                continue;
            }
            match t.factors() {
                [] => {}
                [(q, p)] => g.self_loops.push((*q, *p, t.coeff())),
                [(a, pa), (b, pb)] => g.pauli_edges.push(PauliEdge {
                    a: *a,
                    b: *b,
                    pauli_a: *pa,
                    pauli_b: *pb,
                    strength: t.coeff(),
                }),
                _ => g.hyperedges.push(t.clone()),
            }
        }
        g
    }
}

/// Pauli degree of every vertex and the maximum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeReport {
    pub per_vertex: Vec<usize>,
    pub max: usize,
}

pub fn pauli_degree(graph: &InteractionGraph) -> DegreeReport {
    let mut per_vertex = vec![0usize; graph.n_vertices];
    for e in &graph.pauli_edges {
        per_vertex[e.a] += 1;
        per_vertex[e.b] += 1;
    }
    let max = per_vertex.iter().copied().max().unwrap_or(0);
    DegreeReport { per_vertex, max }
}

/// Replaces every term with `|gamma| > cap` by `ceil(|gamma| / cap)` equal copies.
pub fn split_strong_terms(target: &TargetHamiltonian, cap: f64) -> Result<TargetHamiltonian> {
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(GadgetError::malformed(
            "split_strong_terms",
            format!("cap must be positive and finite, got {cap}"),
        ));
    }
    let mut terms = Vec::new();
    for t in &target.coupled_terms {
        let mag = t.gamma.abs();
        if mag <= cap {
            terms.push(t.clone());
            continue;
        }
        let mut copies = (mag / cap).ceil();
        while (t.gamma / copies).abs() > cap {
            copies += 1.0;
        }
        for _ in 0..copies as usize {
            terms.push(CoupledTerm {
                gamma: t.gamma / copies,
                sites: t.sites.clone(),
            });
        }
    }
    let mut out = target.clone();
    out.coupled_terms = terms;
    Ok(out)
}

/// Minimum of `H` in the computational basis for a diagonal Pauli sum, else via Lanczos.
pub fn lowest_energy(sum: &PauliSum) -> Result<f64> {
    if sum.is_diagonal() {
        return Ok(sum.diagonal()?.into_iter().fold(f64::INFINITY, f64::min));
    }
    min_eigenvalue(sum)
}
