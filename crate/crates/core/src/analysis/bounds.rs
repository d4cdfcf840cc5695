use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gadget2::GadgetPlan;
use crate::model::{operator_norm, TargetHamiltonian};

/// Quantities the analytic series bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub delta: f64,
    /// Number of (nonzero) coupled terms.
    pub m: usize,
    pub gamma_max: f64,
    pub h_else_norm: f64,
}

impl BoundInputs {
    pub fn from_plan(plan: &GadgetPlan, target: &TargetHamiltonian) -> Result<Self> {
        Ok(Self {
            delta: plan.delta,
            m: plan.betas.len(),
            gamma_max: target.gamma_max(),
            h_else_norm: operator_norm(target.h_else())?,
        })
    }

    fn m_gamma(&self) -> f64 {
        self.m as f64 * self.gamma_max
    }

    /// `|h_else|^2 <= 2 M Delta gamma_max`, needed by the general bounds.
    pub fn h_else_hypothesis(&self) -> bool {
        self.h_else_norm.powi(2) <= 2.0 * self.m_gamma() * self.delta
    }
}

/// Which analytic bound produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// First order equals `h_else` exactly.
    Exact,
    /// `Delta (8 M gamma_max / Delta)^k` at order `2k`, zero at odd orders.
    NoHElse,
    /// `Delta (18 M gamma_max / Delta)^k` at order `2k`,
    /// `3 sqrt(2) Delta (18 M gamma_max / Delta)^(k + 1/2)` at order `2k + 1`.
    General,
}

/// Bound on `|T_k|`; `value` is `None` when the bound's hypotheses fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesBound {
    pub order: usize,
    pub value: Option<f64>,
    pub kind: BoundKind,
    pub note: Option<String>,
}

/// Bound on `|T_order|` for `z <= 0`, where every resolvent factor is at most `1 / Delta`.
pub fn series_bounds(inputs: &BoundInputs, order: usize) -> SeriesBound {
    let d = inputs.delta;
    let mg = inputs.m_gamma();
    if order == 1 {
        return SeriesBound {
            order,
            value: Some(inputs.h_else_norm),
            kind: BoundKind::Exact,
            note: None,
        };
    }
    if order == 0 || !(d > 0.0) {
        return SeriesBound {
            order,
            value: None,
            kind: BoundKind::General,
            note: Some("order must be at least 1 and Delta positive".into()),
        };
    }
    let k = (order / 2) as i32;
    if inputs.h_else_norm == 0.0 {
        let value = if order % 2 == 1 {
            0.0
        } else {
            d * (8.0 * mg / d).powi(k)
        };
        return SeriesBound {
            order,
            value: Some(value),
            kind: BoundKind::NoHElse,
            note: None,
        };
    }
    if !inputs.h_else_hypothesis() {
        return SeriesBound {
            order,
            value: None,
            kind: BoundKind::General,
            note: Some(format!(
                "|h_else|^2 = {} exceeds 2 M Delta gamma_max = {}",
                inputs.h_else_norm.powi(2),
                2.0 * mg * d
            )),
        };
    }
    let ratio = 18.0 * mg / d;
    let value = if order % 2 == 0 {
        d * ratio.powi(k)
    } else {
        3.0 * 2f64.sqrt() * d * ratio.powf(k as f64 + 0.5)
    };
    SeriesBound {
        order,
        value: Some(value),
        kind: BoundKind::General,
        note: None,
    }
}

/// [`series_bounds`] extended to `z > 0`: each of the `order - 1` resolvent factors is
/// rescaled by `Delta / (Delta - z)`.
pub fn series_bound_at(inputs: &BoundInputs, order: usize, z: f64) -> SeriesBound {
    let mut b = series_bounds(inputs, order);
    if z <= 0.0 || order <= 1 {
        return b;
    }
    if z >= inputs.delta {
        b.value = None;
        b.note = Some(format!("z = {z} is not below Delta = {}", inputs.delta));
        return b;
    }
    let rho = inputs.delta / (inputs.delta - z);
    b.value = b.value.map(|v| v * rho.powi(order as i32 - 1));
    b
}

/// Explicit low-order bounds: `2 M g`, `2 M g (2 M g / Delta)`, `3 M g (2 M g / Delta)^2`
/// for orders 2, 4, 6 (`g = gamma_max`, no `h_else`, `z <= 0`).
pub fn low_order_bound(inputs: &BoundInputs, order: usize) -> Option<f64> {
    let mg = inputs.m_gamma();
    let x = 2.0 * mg / inputs.delta;
    match order {
        2 => Some(2.0 * mg),
        4 => Some(2.0 * mg * x),
        6 => Some(3.0 * mg * x * x),
        _ => None,
    }
}

/// `sum_{m > after} |T_m|` bound at `z`, or `None` if a hypothesis fails or the
/// series does not converge.
pub fn tail_bound(inputs: &BoundInputs, after: usize, z: f64) -> Option<f64> {
    let d = inputs.delta;
    if z >= d {
        return None;
    }
    let rho = if z > 0.0 { d / (d - z) } else { 1.0 };
    let mg = inputs.m_gamma();
    if inputs.h_else_norm == 0.0 {
        // Even orders 2k only: Delta p^k rho^(2k - 1), ratio p rho^2 per k.
        let p = 8.0 * mg / d;
        let ratio = p * rho * rho;
        if ratio >= 1.0 {
            return None;
        }
        let k0 = (after / 2 + 1) as i32;
        return Some(d / rho * ratio.powi(k0) / (1.0 - ratio));
    }
    if !inputs.h_else_hypothesis() {
        return None;
    }
    let mut total = 0.0;
    let mut m = after + 1;
    while m < 3 {
        total += series_bound_at(inputs, m, z).value?;
        m += 1;
    }
    // |T_m| <= 3 sqrt(2) Delta q^m rho^(m - 1) for m >= 3.
    let q = (18.0 * mg / d).sqrt();
    let ratio = q * rho;
    if ratio >= 1.0 {
        return None;
    }
    total += 3.0 * 2f64.sqrt() * d / rho * ratio.powi(m as i32) / (1.0 - ratio);
    Some(total)
}
