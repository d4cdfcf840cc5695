//! Pauli strings with real coefficients and their realization as sparse matrices.
//!
//! Basis convention: bit `i` of a computational-basis index is the state of qubit `i`,
//! so `|b_{n-1} ... b_1 b_0>` has index `sum_i b_i 2^i`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{GadgetError, Result};
use crate::linalg::{DenseMatrix, SparseOperator, C64};

/// Largest qubit count for which dense matrices are formed.
pub const DENSE_QUBIT_CEILING: usize = 12;
/// Largest qubit count for which any explicit operator is formed.
pub const SPARSE_QUBIT_CEILING: usize = 24;
/// Largest qubit index representable in a term (bit masks are `u64`).
pub const MAX_QUBITS: usize = 64;

/// Single-qubit Pauli operator. The identity is implicit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn label(self) -> &'static str {
        match self {
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        }
    }

    pub fn from_label(s: &str) -> Option<Pauli> {
        match s {
            "X" => Some(Pauli::X),
            "Y" => Some(Pauli::Y),
            "Z" => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Pauli {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Pauli {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Pauli::from_label(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown Pauli label {s:?}")))
    }
}

/// A real coefficient times a tensor product of Paulis, factors sorted by qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTerm {
    coeff: f64,
    factors: Vec<(usize, Pauli)>,
}

impl PauliTerm {
    /// Builds a term, sorting factors by qubit. Rejects repeated qubits and non-finite coefficients.
    pub fn new(coeff: f64, factors: impl IntoIterator<Item = (usize, Pauli)>) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(GadgetError::malformed(
                "PauliTerm::new",
                format!("non-finite coefficient {coeff}"),
            ));
        }
        let mut factors: Vec<(usize, Pauli)> = factors.into_iter().collect();
        factors.sort_by_key(|&(q, _)| q);
        for w in factors.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(GadgetError::malformed(
                    "PauliTerm::new",
                    format!("qubit {} appears twice in one term", w[0].0),
                ));
            }
        }
        if let Some(&(q, _)) = factors.last() {
            if q >= MAX_QUBITS {
                return Err(GadgetError::malformed(
                    "PauliTerm::new",
                    format!(
                        "qubit index {q} exceeds the supported maximum {}",
                        MAX_QUBITS - 1
                    ),
                ));
            }
        }
        Ok(Self { coeff, factors })
    }

    /// Pure energy shift.
    pub fn identity(coeff: f64) -> Self {
        Self {
            coeff,
            factors: Vec::new(),
        }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub fn locality(&self) -> usize {
        self.factors.len()
    }

    pub fn is_identity(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_diagonal(&self) -> bool {
        self.factors.iter().all(|&(_, p)| p == Pauli::Z)
    }

    pub fn with_coeff(&self, coeff: f64) -> Self {
        Self {
            coeff,
            factors: self.factors.clone(),
        }
    }

    /// Largest qubit index used, if any.
    pub fn max_qubit(&self) -> Option<usize> {
        self.factors.last().map(|&(q, _)| q)
    }

    /// The Pauli acting on `qubit`, if any.
    pub fn pauli_at(&self, qubit: usize) -> Option<Pauli> {
        self.factors
            .binary_search_by_key(&qubit, |&(q, _)| q)
            .ok()
            .map(|i| self.factors[i].1)
    }

    /// Bit masks `(x, z, number of Y)`: the string equals `i^ny X^x Z^z` with Y = iXZ.
    pub fn masks(&self) -> (u64, u64, u32) {
        let (mut x, mut z, mut ny) = (0u64, 0u64, 0u32);
        for &(q, p) in &self.factors {
            let bit = 1u64 << q;
            match p {
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        if self.factors.is_empty() {
            return f.write_str("*I");
        }
        for &(q, p) in &self.factors {
            write!(f, "*{p}{q}")?;
        }
        Ok(())
    }
}

fn factor_order(a: &[(usize, Pauli)], b: &[(usize, Pauli)]) -> Ordering {
    a.cmp(b)
}

/// A sum of Pauli terms on a fixed number of qubits.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        let mut s = Self::new(n_qubits);
        for t in terms {
            s.push(t)?;
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Appends a term; its qubits must be below `n_qubits`.
    pub fn push(&mut self, term: PauliTerm) -> Result<()> {
        if let Some(q) = term.max_qubit() {
            if q >= self.n_qubits {
                return Err(GadgetError::malformed(
                    "PauliSum::push",
                    format!("qubit index {q} out of range for {} qubits", self.n_qubits),
                ));
            }
        }
        self.terms.push(term);
        Ok(())
    }

    /// Convenience for `push(PauliTerm::new(..))`.
    pub fn add(&mut self, coeff: f64, factors: &[(usize, Pauli)]) -> Result<()> {
        self.push(PauliTerm::new(coeff, factors.iter().copied())?)
    }

    /// Appends every term of `other`, widening to the larger qubit count.
    pub fn extend_from(&mut self, other: &PauliSum) {
        self.n_qubits = self.n_qubits.max(other.n_qubits);
        self.terms.extend(other.terms.iter().cloned());
    }

    /// Same terms on a register of `n` qubits (`n` must cover every used index).
    pub fn widened(&self, n: usize) -> Result<PauliSum> {
        PauliSum::from_terms(n, self.terms.iter().cloned())
    }

    pub fn scaled(&self, factor: f64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| t.with_coeff(t.coeff * factor))
                .collect(),
        }
    }

    /// Sum of coefficient magnitudes, an upper bound on the operator norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs()).sum()
    }

    /// Sum of identity coefficients.
    pub fn identity_part(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.is_identity())
            .map(|t| t.coeff)
            .sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(PauliTerm::is_diagonal)
    }

    /// Canonical form with no drop tolerance (zero-coefficient terms are kept).
    pub fn canonicalize(&self) -> PauliSum {
        self.canonicalize_with(0.0)
    }

    /// Merges terms with equal factor sets, removes terms with `|coeff| < drop_tol`,
    /// and orders the rest lexicographically by factor list.
    pub fn canonicalize_with(&self, drop_tol: f64) -> PauliSum {
        let mut merged: BTreeMap<Vec<(usize, Pauli)>, f64> = BTreeMap::new();
        for t in &self.terms {
            *merged.entry(t.factors.clone()).or_insert(0.0) += t.coeff;
        }
        let mut terms: Vec<PauliTerm> = merged
            .into_iter()
            .filter(|(_, c)| !(c.abs() < drop_tol))
            .map(|(factors, coeff)| PauliTerm { coeff, factors })
            .collect();
        terms.sort_by(|a, b| factor_order(&a.factors, &b.factors));
        PauliSum {
            n_qubits: self.n_qubits,
            terms,
        }
    }

    /// Relabels qubit `q` to `qubit_map[&q]` on a register of `new_n` qubits.
    pub fn embed(&self, qubit_map: &BTreeMap<usize, usize>, new_n: usize) -> Result<PauliSum> {
        const OP: &str = "embed";
        let mut seen = BTreeMap::new();
        for (&from, &to) in qubit_map {
            if to >= new_n {
                return Err(GadgetError::malformed(
                    OP,
                    format!("image {to} of qubit {from} is not below new_n = {new_n}"),
                ));
            }
            if let Some(prev) = seen.insert(to, from) {
                return Err(GadgetError::malformed(
                    OP,
                    format!("qubits {prev} and {from} both map to {to}"),
                ));
            }
        }
        let mut out = PauliSum::new(new_n);
        for t in &self.terms {
            let mut factors = Vec::with_capacity(t.factors.len());
            for &(q, p) in &t.factors {
                let to = *qubit_map
                    .get(&q)
                    .ok_or_else(|| GadgetError::malformed(OP, format!("qubit {q} has no image")))?;
                factors.push((to, p));
            }
            out.push(PauliTerm::new(t.coeff, factors)?)?;
        }
        Ok(out)
    }

    /// Embeds by the order-preserving map `q -> offset + q`.
    pub fn shifted_qubits(&self, offset: usize, new_n: usize) -> Result<PauliSum> {
        let map = (0..self.n_qubits).map(|q| (q, q + offset)).collect();
        self.embed(&map, new_n)
    }

    fn check_ceiling(&self, op: &'static str, ceiling: usize) -> Result<()> {
        if self.n_qubits > ceiling {
            return Err(GadgetError::resource(
                op,
                format!(
                    "{} qubits exceeds the ceiling of {ceiling} for this realization",
                    self.n_qubits
                ),
            ));
        }
        Ok(())
    }

    /// Diagonal of a Z-only sum, one entry per basis state.
    pub fn diagonal(&self) -> Result<Vec<f64>> {
        self.check_ceiling("PauliSum::diagonal", SPARSE_QUBIT_CEILING)?;
        if !self.is_diagonal() {
            return Err(GadgetError::malformed(
                "PauliSum::diagonal",
                "sum contains X or Y factors",
            ));
        }
        let dim = 1usize << self.n_qubits;
        let masks: Vec<(f64, u64)> = self.terms.iter().map(|t| (t.coeff, t.masks().1)).collect();
        Ok((0..dim as u64)
            .map(|s| {
                masks
                    .iter()
                    .map(|&(c, z)| if (s & z).count_ones() % 2 == 0 { c } else { -c })
                    .sum()
            })
            .collect())
    }

    /// Sparse realization in the computational basis. Exactly Hermitian.
    pub fn to_sparse_operator(&self) -> Result<SparseOperator> {
        self.check_ceiling("to_sparse_operator", SPARSE_QUBIT_CEILING)?;
        // Group by X mask: each group fills one off-diagonal (or the diagonal).
        let mut groups: BTreeMap<u64, Vec<(C64, u64)>> = BTreeMap::new();
        for t in &self.terms {
            let (x, z, ny) = t.masks();
            let phase = match ny % 4 {
                0 => C64::new(t.coeff, 0.0),
                1 => C64::new(0.0, t.coeff),
                2 => C64::new(-t.coeff, 0.0),
                _ => C64::new(0.0, -t.coeff),
            };
            groups.entry(x).or_default().push((phase, z));
        }
        let dim = 1usize << self.n_qubits;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut row_entries: Vec<(usize, C64)> = Vec::with_capacity(groups.len());
        for r in 0..dim as u64 {
            row_entries.clear();
            for (&x, group) in &groups {
                // P|c> = phase(c) |c ^ x>, so row r is reached from column c = r ^ x.
                let c = r ^ x;
                let mut re = 0.0;
                let mut im = 0.0;
                for &(ph, z) in group {
                    if (c & z).count_ones() % 2 == 0 {
                        re += ph.re;
                        im += ph.im;
                    } else {
                        re -= ph.re;
                        im -= ph.im;
                    }
                }
                if re != 0.0 || im != 0.0 {
                    row_entries.push((c as usize, C64::new(re, im)));
                }
            }
            row_entries.sort_by_key(|&(c, _)| c);
            for &(c, v) in &row_entries {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseOperator::from_csr(dim, row_ptr, cols, vals))
    }

    /// Dense realization, allowed up to the dense ceiling.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        self.check_ceiling("to_dense", DENSE_QUBIT_CEILING)?;
        Ok(self.to_sparse_operator()?.to_dense())
    }

    /// Serializes to `{"n": .., "terms": [{"coeff": .., "ops": [[q, "P"], ..]}]}`.
    pub fn to_json_value(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|t| serde_json::to_value(t).expect("terms serialize"))
            .collect();
        json!({"n": self.n_qubits, "terms": terms})
    }

    /// Parses the JSON form; `path` prefixes field locations in error messages.
    pub fn from_json_value(v: &Value, path: &str) -> Result<PauliSum> {
        const OP: &str = "parse_pauli_sum";
        let obj = v
            .as_object()
            .ok_or_else(|| GadgetError::parse(OP, path, "expected an object"))?;
        let n_path = join_path(path, "n");
        let n = obj
            .get("n")
            .ok_or_else(|| GadgetError::parse(OP, &n_path, "missing field"))?
            .as_u64()
            .ok_or_else(|| GadgetError::parse(OP, &n_path, "expected a nonnegative integer"))?
            as usize;
        if n > MAX_QUBITS {
            return Err(GadgetError::parse(
                OP,
                n_path,
                format!("{n} qubits exceeds the supported maximum {MAX_QUBITS}"),
            ));
        }
        let mut sum = PauliSum::new(n);
        let terms_path = join_path(path, "terms");
        let terms = match obj.get("terms") {
            None => return Ok(sum),
            Some(t) => t
                .as_array()
                .ok_or_else(|| GadgetError::parse(OP, &terms_path, "expected an array"))?,
        };
        for (i, t) in terms.iter().enumerate() {
            let tp = format!("{terms_path}[{i}]");
            sum.terms.push(parse_term(t, &tp, n)?);
        }
        Ok(sum)
    }
}

fn join_path(path: &str, field: &str) -> String {
    if path.is_empty() {
        field.to_string()
    } else {
        format!("{path}.{field}")
    }
}

/// Parses a JSON coefficient, rejecting complex forms and non-finite values.
pub(crate) fn parse_real(v: Option<&Value>, path: &str, op: &'static str) -> Result<f64> {
    let v = v.ok_or_else(|| GadgetError::parse(op, path, "missing field"))?;
    match v {
        Value::Number(num) => {
            let x = num
                .as_f64()
                .ok_or_else(|| GadgetError::parse(op, path, "number not representable"))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(GadgetError::parse(op, path, "non-finite coefficient"))
            }
        }
        Value::Object(_) | Value::Array(_) => Err(GadgetError::parse(
            op,
            path,
            "complex coefficients are not supported; coefficients must be real numbers",
        )),
        Value::String(s) => Err(GadgetError::parse(
            op,
            path,
            format!("expected a real number, found string {s:?}"),
        )),
        _ => Err(GadgetError::parse(op, path, "expected a real number")),
    }
}

/// Parses `[q, "P"]` pairs.
pub(crate) fn parse_sites(
    v: &Value,
    path: &str,
    n: usize,
    op: &'static str,
) -> Result<Vec<(usize, Pauli)>> {
    let arr = v
        .as_array()
        .ok_or_else(|| GadgetError::parse(op, path, "expected an array of [qubit, label] pairs"))?;
    let mut out = Vec::with_capacity(arr.len());
    for (j, pair) in arr.iter().enumerate() {
        let pp = format!("{path}[{j}]");
        let items = pair
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| GadgetError::parse(op, &pp, "expected [qubit, label]"))?;
        let q = items[0]
            .as_u64()
            .ok_or_else(|| GadgetError::parse(op, format!("{pp}[0]"), "expected a qubit index"))?
            as usize;
        if q >= n {
            return Err(GadgetError::parse(
                op,
                format!("{pp}[0]"),
                format!("qubit index {q} out of range for {n} qubits"),
            ));
        }
        let label = items[1]
            .as_str()
            .ok_or_else(|| GadgetError::parse(op, format!("{pp}[1]"), "expected a Pauli label"))?;
        let p = match Pauli::from_label(label) {
            Some(p) => p,
            None if label == "I" => {
                return Err(GadgetError::parse(
                    op,
                    format!("{pp}[1]"),
                    "explicit identity factor; omit it (empty ops encode a shift)",
                ))
            }
            None => {
                return Err(GadgetError::parse(
                    op,
                    format!("{pp}[1]"),
                    format!("unknown Pauli label {label:?}"),
                ))
            }
        };
        if out.iter().any(|&(q2, _)| q2 == q) {
            return Err(GadgetError::parse(
                op,
                &pp,
                format!("duplicate qubit {q} in one term"),
            ));
        }
        out.push((q, p));
    }
    Ok(out)
}

fn parse_term(v: &Value, path: &str, n: usize) -> Result<PauliTerm> {
    const OP: &str = "parse_pauli_sum";
    let obj = v
        .as_object()
        .ok_or_else(|| GadgetError::parse(OP, path, "expected an object"))?;
    let coeff = parse_real(obj.get("coeff"), &join_path(path, "coeff"), OP)?;
    let ops_path = join_path(path, "ops");
    let factors = match obj.get("ops") {
        None => Vec::new(),
        Some(ops) => parse_sites(ops, &ops_path, n, OP)?,
    };
    PauliTerm::new(coeff, factors).map_err(|e| GadgetError::parse(OP, path, e.to_string()))
}

impl Serialize for PauliTerm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let ops: Vec<Value> = self
            .factors
            .iter()
            .map(|&(q, p)| json!([q, p.label()]))
            .collect();
        json!({"coeff": self.coeff, "ops": ops}).serialize(s)
    }
}

impl Serialize for PauliSum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PauliSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        PauliSum::from_json_value(&v, "").map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}
