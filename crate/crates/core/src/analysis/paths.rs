use crate::error::{GadgetError, Result};

/// Largest Catalan index accepted.
pub const MAX_CATALAN_INDEX: u32 = 30;
/// Largest Motzkin order accepted (covers orders `2k` and `2k + 1` for `k <= 30`).
pub const MAX_MOTZKIN_ORDER: u32 = 61;

/// `C_k = binom(2k, k) / (k + 1)`, exact.
pub fn catalan(k: u32) -> Result<u128> {
    if k > MAX_CATALAN_INDEX {
        return Err(GadgetError::range(
            "catalan",
            format!("k = {k} exceeds {MAX_CATALAN_INDEX}"),
        ));
    }
    // C_{i+1} = C_i * 2(2i + 1) / (i + 2), exact at every step.
    let mut c: u128 = 1;
    for i in 0..k as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    Ok(c)
}

/// Motzkin number of order `n`: paths of `n` unit steps (up, down, flat) from height 0
/// to height 0 that never go below 0.
pub fn motzkin(n: u32) -> Result<u128> {
    if n > MAX_MOTZKIN_ORDER {
        return Err(GadgetError::range(
            "motzkin",
            format!("order {n} exceeds {MAX_MOTZKIN_ORDER}"),
        ));
    }
    // (i + 2) M_i = (2i + 1) M_{i-1} + (3i - 3) M_{i-2}
    let (mut prev, mut cur): (u128, u128) = (1, 1);
    if n == 0 {
        return Ok(1);
    }
    for i in 2..=n as u128 {
        let next = ((2 * i + 1) * cur + (3 * i - 3) * prev) / (i + 2);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `4^k`.
pub fn catalan_coarse_bound(k: u32) -> f64 {
    4f64.powi(k as i32)
}

/// `3^n` for even orders, `3 * 3^(n-1)` for odd ones (both equal `3^n`).
pub fn motzkin_coarse_bound(n: u32) -> f64 {
    3f64.powi(n as i32)
}
