//! Spectral ground truth: lowest eigenvalues, gadget-versus-target comparison, and sweeps.

use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GadgetError, Result};
use crate::gadget2::{build_gadget, desk_plan, GadgetHamiltonian};
use crate::linalg::{self, lowest_eigenpairs, DenseMatrix, LanczosOptions, C64};
use crate::model::TargetHamiltonian;
use crate::pauli::PauliSum;

/// Registers up to this many qubits are diagonalized densely.
pub const DENSE_EIGEN_QUBITS: usize = 10;

/// Level spacing below which target levels are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Lowest eigenvalues, ascending, with eigenvectors when requested.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<Vec<C64>>>,
}

/// Options for [`lowest_eigs_with`].
#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    pub seed: u64,
    pub want_vectors: bool,
    pub tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            seed: linalg::LanczosOptions::default().seed,
            want_vectors: false,
            tol: 1e-10,
        }
    }
}

/// The `count` smallest eigenvalues of `sum`.
pub fn lowest_eigs(sum: &PauliSum, count: usize) -> Result<Spectrum> {
    lowest_eigs_with(sum, count, EigenOptions::default())
}

/// The `count` smallest eigenpairs of `sum`.
pub fn lowest_eigenpairs_of(sum: &PauliSum, count: usize) -> Result<Spectrum> {
    lowest_eigs_with(
        sum,
        count,
        EigenOptions {
            want_vectors: true,
            ..EigenOptions::default()
        },
    )
}

pub fn lowest_eigs_with(sum: &PauliSum, count: usize, opts: EigenOptions) -> Result<Spectrum> {
    const OP: &str = "lowest_eigs";
    let n = sum.n_qubits();
    if n > crate::pauli::SPARSE_QUBIT_CEILING {
        return Err(GadgetError::resource(
            OP,
            format!(
                "{n} qubits exceeds the ceiling {}",
                crate::pauli::SPARSE_QUBIT_CEILING
            ),
        ));
    }
    let dim = 1usize << n;
    if count > dim {
        return Err(GadgetError::malformed(
            OP,
            format!("requested {count} eigenvalues of a {dim}-dimensional operator"),
        ));
    }
    if sum.is_diagonal() {
        let diag = sum.diagonal()?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]).then(a.cmp(&b)));
        order.truncate(count);
        let values = order.iter().map(|&i| diag[i]).collect();
        let vectors = opts.want_vectors.then(|| {
            order
                .iter()
                .map(|&i| {
                    let mut v = vec![C64::new(0.0, 0.0); dim];
                    v[i] = C64::new(1.0, 0.0);
                    v
                })
                .collect()
        });
        return Ok(Spectrum { values, vectors });
    }
    if n <= DENSE_EIGEN_QUBITS {
        let m = sum.to_sparse_operator()?.to_dense();
        if !opts.want_vectors {
            let mut values = linalg::eigvalsh(&m)?;
            values.truncate(count);
            return Ok(Spectrum {
                values,
                vectors: None,
            });
        }
        let e = linalg::eigh(&m)?;
        let vectors = (0..count)
            .map(|j| (0..dim).map(|i| e.vectors[(i, j)]).collect())
            .collect();
        let mut values = e.values;
        values.truncate(count);
        return Ok(Spectrum {
            values,
            vectors: Some(vectors),
        });
    }
    let op = sum.to_sparse_operator()?;
    let lopts = LanczosOptions {
        tol: opts.tol,
        seed: opts.seed,
        scale: sum.one_norm(),
        ..LanczosOptions::default()
    };
    let (values, vectors) = lowest_eigenpairs(&op, count, &lopts)?;
    Ok(Spectrum {
        values,
        vectors: opts.want_vectors.then_some(vectors),
    })
}

/// How gadget eigenvalues are shifted before comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    /// Subtract the gadget's analytic energy shift.
    #[default]
    KnownShift,
    /// Shift so the two ground energies coincide.
    GroundEnergy,
}

/// Overlap of one target level (or degenerate cluster) with the gadget's low states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelOverlap {
    pub level: usize,
    /// `|<phi_j (x) 0..0 | psi_j>|`, or for a degenerate cluster the cosine of the
    /// largest principal angle between the two cluster subspaces.
    pub overlap: f64,
    /// Weight of the gadget eigenvector on the ancilla ground pattern.
    pub ancilla_ground_probability: f64,
    /// Set when this level belongs to a degenerate target cluster.
    pub degenerate_cluster: Option<(usize, usize)>,
}

/// Eigenvalue comparison between a target and a gadget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub levels: usize,
    pub align: AlignMode,
    pub shift_removed: f64,
    pub target_eigs: Vec<f64>,
    pub gadget_eigs_shifted: Vec<f64>,
    pub max_abs_error: f64,
    pub overlaps: Vec<LevelOverlap>,
    pub min_ancilla_ground_probability: f64,
    pub eps: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Columns of `vectors` restricted to the basis states in `low`.
fn compress(vectors: &[Vec<C64>], low: &[usize]) -> Vec<Vec<C64>> {
    vectors
        .iter()
        .map(|v| low.iter().map(|&i| v[i]).collect())
        .collect()
}

/// Groups ascending values into runs with adjacent spacing below `tol`.
fn clusters(values: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] >= tol {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Cosine of the largest principal angle between span(a) and span(b) (equal sizes, a orthonormal).
fn subspace_overlap(a: &[Vec<C64>], b: &[Vec<C64>]) -> Result<f64> {
    let k = a.len();
    let gram = DenseMatrix::from_fn(k, k, |i, j| linalg::dot(&a[i], &b[j]));
    let s = gram
        .singular_values()
        .map_err(|e| GadgetError::numeric("compare_spectra", format!("{e:?}")))?;
    Ok(s.last().copied().unwrap_or(0.0).min(1.0))
}

/// Compares the `levels` lowest eigenvalues of target and gadget, removing the gadget's
/// recorded shifts, and reports eigenvector overlaps on the ancilla ground pattern.
pub fn compare_spectra(
    target: &TargetHamiltonian,
    gadget: &GadgetHamiltonian,
    levels: usize,
    eps: f64,
    align: AlignMode,
) -> Result<SpectralReport> {
    const OP: &str = "compare_spectra";
    let n_t = target.n_qubits();
    if n_t != gadget.n_target {
        return Err(GadgetError::malformed(
            OP,
            format!(
                "target has {n_t} qubits but the gadget simulates {}",
                gadget.n_target
            ),
        ));
    }
    if levels > 1usize << n_t {
        return Err(GadgetError::malformed(
            OP,
            format!("levels = {levels} exceeds 2^{n_t}"),
        ));
    }
    let mut notes = Vec::new();
    let t_spec = lowest_eigenpairs_of(&target.realize(), levels)?;
    let g_spec = lowest_eigenpairs_of(&gadget.total(), levels)?;
    let target_eigs: Vec<f64> = t_spec
        .values
        .iter()
        .map(|v| v - target.psd_shift())
        .collect();
    let shift_removed = match align {
        AlignMode::KnownShift => gadget.known_shift + gadget.psd_shift,
        AlignMode::GroundEnergy => match (g_spec.values.first(), target_eigs.first()) {
            (Some(g), Some(t)) => g - t,
            _ => 0.0,
        },
    };
    let gadget_eigs_shifted: Vec<f64> = g_spec.values.iter().map(|v| v - shift_removed).collect();
    let max_abs_error = target_eigs
        .iter()
        .zip(&gadget_eigs_shifted)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let low = gadget.low_indices();
    let t_vecs = t_spec.vectors.expect("vectors requested");
    let g_vecs = g_spec.vectors.expect("vectors requested");
    let g_low = compress(&g_vecs, &low);
    let mut overlaps = Vec::with_capacity(levels);
    let mut any_cluster = false;
    for (lo, hi) in clusters(&t_spec.values, DEGENERACY_TOL) {
        let cluster = (hi - lo > 1).then_some((lo, hi));
        let ov = if cluster.is_some() {
            any_cluster = true;
            subspace_overlap(&t_vecs[lo..hi], &g_low[lo..hi])?
        } else {
            linalg::dot(&t_vecs[lo], &g_low[lo]).norm().min(1.0)
        };
        for j in lo..hi {
            overlaps.push(LevelOverlap {
                level: j,
                overlap: ov,
                ancilla_ground_probability: linalg::norm(&g_low[j]).powi(2).min(1.0),
                degenerate_cluster: cluster,
            });
        }
    }
    if any_cluster {
        notes
            .push("degenerate target levels compared as clusters via principal angles".to_string());
    }
    let min_p = overlaps
        .iter()
        .map(|o| o.ancilla_ground_probability)
        .fold(1.0, f64::min);
    Ok(SpectralReport {
        levels,
        align,
        shift_removed,
        target_eigs,
        gadget_eigs_shifted,
        max_abs_error,
        overlaps,
        min_ancilla_ground_probability: min_p,
        eps,
        pass: max_abs_error <= eps,
        notes,
    })
}

/// Plan field varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    /// Gap; J follows as Delta / C.
    Delta,
    /// Core coupling; Delta follows as J * C.
    J,
    /// Direct ancillas per term at fixed Delta.
    R,
    /// Core size at fixed Delta (J = Delta / C).
    C,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Delta => "Delta",
            SweepParam::J => "J",
            SweepParam::R => "R",
            SweepParam::C => "C",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Delta" | "delta" => Some(SweepParam::Delta),
            "J" | "j" => Some(SweepParam::J),
            "R" | "r" => Some(SweepParam::R),
            "C" | "c" => Some(SweepParam::C),
            _ => None,
        }
    }
}

/// Fixed plan fields of a sweep; the varied one is overridden per point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepBase {
    pub r: usize,
    pub c: usize,
    pub delta: f64,
    pub levels: usize,
    pub eps: f64,
}

/// One sweep point. `error` is set when the point failed; the sweep continues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub max_abs_error: f64,
    pub beta_max: f64,
    pub j: f64,
    pub n_total: usize,
    pub runtime_ms: u128,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of ln(error) against ln(value) over successful points.
    pub slope: Option<f64>,
    /// True when cancelled before all points finished.
    pub truncated: bool,
}

/// Least-squares slope of `ln y` versus `ln x` over points with both positive.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn sweep_point(
    target: &TargetHamiltonian,
    vary: SweepParam,
    value: f64,
    base: &SweepBase,
    timing: bool,
) -> SweepRow {
    let start = Instant::now();
    let (mut r, mut c, mut delta) = (base.r, base.c, base.delta);
    match vary {
        SweepParam::Delta => delta = value,
        SweepParam::J => delta = value * c as f64,
        SweepParam::R => r = value as usize,
        SweepParam::C => c = value as usize,
    }
    let j = delta / c as f64;
    let outcome = (|| {
        if matches!(vary, SweepParam::R | SweepParam::C) && (value.fract() != 0.0 || value < 1.0) {
            return Err(GadgetError::malformed(
                "sweep",
                format!("{} must be a positive integer, got {value}", vary.name()),
            ));
        }
        let plan = desk_plan(target, r, c, j, base.eps)?;
        let g = build_gadget(target, &plan)?;
        let rep = compare_spectra(target, &g, base.levels, base.eps, AlignMode::KnownShift)?;
        Ok((
            rep,
            plan.betas.iter().fold(0.0f64, |a, b| a.max(*b)),
            g.n_total,
        ))
    })();
    let runtime_ms = if timing {
        start.elapsed().as_millis()
    } else {
        0
    };
    match outcome {
        Ok((rep, beta_max, n_total)) => SweepRow {
            param: vary.name().to_string(),
            value,
            max_abs_error: rep.max_abs_error,
            beta_max,
            j,
            n_total,
            runtime_ms,
            pass: rep.pass,
            error: None,
        },
        Err(e) => SweepRow {
            param: vary.name().to_string(),
            value,
            max_abs_error: f64::NAN,
            beta_max: f64::NAN,
            j,
            n_total: 0,
            runtime_ms,
            pass: false,
            error: Some(e.to_string()),
        },
    }
}

/// Runs one desk-plan gadget per value (in parallel), compares spectra, and fits the
/// log-log slope of error against the varied parameter. `runtime_ms` is recorded only
/// when `timing` is set so that repeated runs are byte-identical. When `cancel` becomes
/// true, points not yet started are skipped and the table is marked truncated.
pub fn sweep(
    target: &TargetHamiltonian,
    vary: SweepParam,
    values: &[f64],
    base: &SweepBase,
    timing: bool,
    cancel: Option<&AtomicBool>,
) -> SweepTable {
    let results: Vec<Option<SweepRow>> = values
        .par_iter()
        .map(|&v| {
            if cancel.is_some_and(|c| c.load(Ordering::SeqCst)) {
                None
            } else {
                Some(sweep_point(target, vary, v, base, timing))
            }
        })
        .collect();
    let truncated = results.iter().any(Option::is_none);
    let rows: Vec<SweepRow> = results.into_iter().flatten().collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| (r.value, r.max_abs_error))
        .collect();
    SweepTable {
        slope: loglog_slope(&pts),
        rows,
        truncated,
    }
}

/// Marker written as the final CSV row of a cancelled sweep.
pub const TRUNCATION_MARKER: &str = "#truncated";

/// Writes `param,value,max_abs_error,beta_max,J,n_total,runtime_ms,pass`.
pub fn write_csv<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    let io = |e: csv::Error| GadgetError::resource("write_csv", e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "param",
        "value",
        "max_abs_error",
        "beta_max",
        "J",
        "n_total",
        "runtime_ms",
        "pass",
    ])
    .map_err(io)?;
    for r in &table.rows {
        w.write_record([
            r.param.clone(),
            r.value.to_string(),
            r.max_abs_error.to_string(),
            r.beta_max.to_string(),
            r.j.to_string(),
            r.n_total.to_string(),
            r.runtime_ms.to_string(),
            r.pass.to_string(),
        ])
        .map_err(io)?;
    }
    if table.truncated {
        w.write_record([TRUNCATION_MARKER, "", "", "", "", "", "", ""])
            .map_err(io)?;
    }
    w.flush()
        .map_err(|e| GadgetError::resource("write_csv", e.to_string()))?;
    Ok(())
}
