//! Perturbation-theory engine: low/high subspaces, exact and order-by-order self-energy,
//! analytic series bounds, path counting, and the subspace condition.

mod bounds;
mod paths;
mod selfenergy;
mod subspace;

pub use bounds::{
    low_order_bound, series_bound_at, series_bounds, tail_bound, BoundInputs, BoundKind,
    SeriesBound,
};
pub use paths::{
    catalan, catalan_coarse_bound, motzkin, motzkin_coarse_bound, MAX_CATALAN_INDEX,
    MAX_MOTZKIN_ORDER,
};
pub use selfenergy::{
    effective_target, self_energy_exact, self_energy_report, self_energy_term, self_energy_terms,
    z_grid, z_max_for, SelfEnergyReport, SelfEnergySolver, SeriesEngine, SeriesTerm, ZPointReport,
};
pub use subspace::{
    bounding_chain_energy, check_decoupling_monotonicity, check_subspace_condition,
    classical_doubler, classical_doubler_report, simplified_hamiltonian, BoundingChain,
    DecouplingReport, DecouplingTrial, DoublerReport, SubspaceReport, MONOTONICITY_TOL,
};

use crate::gadget2::GadgetHamiltonian;
use crate::linalg::{DenseMatrix, HermitianOp, SparseOperator, C64};

/// Split of the gadget register into the ancilla ground pattern (`L-`) and its complement.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspacePartition {
    pub n_total: usize,
    pub n_target: usize,
    /// Basis indices of `L-`: all ancillas in `|0>`.
    pub low: Vec<usize>,
    /// Cutoff `lambda_* = Delta / 2`.
    pub lambda_star: f64,
}

impl SubspacePartition {
    pub fn of(g: &GadgetHamiltonian) -> Self {
        Self {
            n_total: g.n_total,
            n_target: g.n_target,
            low: g.low_indices(),
            lambda_star: g.gap / 2.0,
        }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_total
    }

    pub fn dim_low(&self) -> usize {
        self.low.len()
    }

    pub fn is_low(&self, index: usize) -> bool {
        index >> self.n_target == 0
    }
}

/// `Pi+ A Pi+` on `L+` for an operator whose first `low_dim` basis states span `L-`.
pub(crate) struct HighBlock<'a> {
    pub op: &'a SparseOperator,
    pub low_dim: usize,
}

impl HermitianOp for HighBlock<'_> {
    fn dim(&self) -> usize {
        self.op.dim() - self.low_dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let low = self.low_dim;
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self
                .op
                .row(r + low)
                .filter(|&(c, _)| c >= low)
                .map(|(c, v)| v * x[c - low])
                .sum();
        }
    }
}

impl HighBlock<'_> {
    pub fn diagonal(&self) -> Vec<f64> {
        self.op.diagonal()[self.low_dim..].to_vec()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut m = DenseMatrix::zeros(n, n);
        for r in 0..n {
            for (c, v) in self.op.row(r + self.low_dim) {
                if c >= self.low_dim {
                    m[(r, c - self.low_dim)] = v;
                }
            }
        }
        m
    }
}
