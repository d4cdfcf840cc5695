mod common;

use common::*;
use proptest::prelude::*;
use wgadget::analysis::{
    effective_target, self_energy_exact, self_energy_report, self_energy_terms, tail_bound, z_grid,
    z_max_for, BoundInputs, SelfEnergySolver, SeriesEngine,
};
use wgadget::gadget2::{build_gadget, desk_plan};
use wgadget::linalg::{DenseMatrix, C64};
use wgadget::GadgetError;

/// Inverse by Gauss-Jordan elimination with partial pivoting.
fn invert(m: &DenseMatrix) -> DenseMatrix {
    let n = m.nrows();
    let mut a: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            (0..2 * n)
                .map(|j| {
                    if j < n {
                        m[(i, j)]
                    } else if j - n == i {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .unwrap();
        a.swap(col, piv);
        let p = a[col][col];
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != C64::new(0.0, 0.0) {
                    for c in 0..2 * n {
                        let sub = f * a[col][c];
                        a[r][c] -= sub;
                    }
                }
            }
        }
    }
    DenseMatrix::from_fn(n, n, |i, j| a[i][j + n])
}

/// `z - (Pi- (z - H~)^-1 Pi-)^-1` formed literally.
fn literal_self_energy(total: &DenseMatrix, low: usize, z: f64) -> DenseMatrix {
    let dim = total.nrows();
    let shifted = DenseMatrix::from_fn(dim, dim, |i, j| {
        let d = if i == j {
            C64::new(z, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
        d - total[(i, j)]
    });
    let g = invert(&shifted);
    let block = DenseMatrix::from_fn(low, low, |i, j| g[(i, j)]);
    let inv = invert(&block);
    DenseMatrix::from_fn(low, low, |i, j| {
        let d = if i == j {
            C64::new(z, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
        d - inv[(i, j)]
    })
}

fn diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    frobenius(&DenseMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        a[(i, j)] - b[(i, j)]
    }))
}

#[test]
fn single_term_self_energy_approaches_the_shifted_target() {
    let t = zz_target(1.0);
    let mut errs = Vec::new();
    for delta in [100.0, 200.0, 400.0] {
        let g = build_gadget(&t, &desk_plan(&t, 1, 2, delta / 2.0, 0.1).unwrap()).unwrap();
        let want = dense_sum(
            2,
            &[
                (1.0, vec![(0, wgadget::Pauli::Z), (1, wgadget::Pauli::Z)]),
                (-1.0, vec![]),
            ],
        );
        errs.push(diff(&self_energy_exact(&g, 1.0).unwrap(), &want));
    }
    assert!(errs[0] < 0.1);
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.6..2.4).contains(&ratio), "errors {errs:?}");
    }
}

#[test]
fn effective_target_is_target_plus_shift() {
    let t = two_term_target();
    let g = build_gadget(&t, &desk_plan(&t, 1, 1, 40.0, 0.1).unwrap()).unwrap();
    let got = effective_target(&t, &g).unwrap();
    let mut want = dense_of(&t.realize());
    for i in 0..want.nrows() {
        want[(i, i)] += C64::new(g.known_shift, 0.0);
    }
    assert!(diff(&got, &want) < 1e-12);
}

#[test]
fn z_grid_spans_the_window() {
    let g = z_grid(2.0, 5);
    assert_eq!(g, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    assert!((z_max_for(&two_term_target(), 0.1).unwrap() - 2.1).abs() < 1e-12);
}

#[test]
fn pole_of_the_resolvent_is_a_numeric_error() {
    let t = zz_target(1.0);
    let g = build_gadget(&t, &desk_plan(&t, 1, 1, 40.0, 0.1).unwrap()).unwrap();
    let e = self_energy_terms(&g, 2, 40.0).unwrap_err();
    assert!(matches!(e, GadgetError::Numeric { .. }));
    assert!(e.to_string().contains("40"));
}

#[test]
fn report_has_no_bound_violations() {
    let t = two_term_target();
    let g = build_gadget(&t, &desk_plan(&t, 2, 2, 200.0, 0.1).unwrap()).unwrap();
    let rep = self_energy_report(&t, &g, 0.1, 5, 6).unwrap();
    assert_eq!(rep.points.len(), 5);
    assert_eq!(rep.bound_violations, 0);
    assert!(rep.subspace.ok);
}

#[test]
fn series_engine_rejects_non_diagonal_h() {
    let t = zz_target(1.0);
    let mut g = build_gadget(&t, &desk_plan(&t, 1, 1, 40.0, 0.1).unwrap()).unwrap();
    g.h.add(1.0, &[(2, wgadget::Pauli::X)]).unwrap();
    assert!(SeriesEngine::new(&g).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn schur_form_matches_the_literal_resolvent(seed in any::<u64>(), z in prop_oneof![Just(-10.0), Just(0.37)]) {
        let (_, g) = random_gadget(&mut rng(seed), SMALL);
        prop_assume!(g.n_total <= 8);
        let total = dense_of(&g.total());
        let want = literal_self_energy(&total, 1 << g.n_target, z);
        let got = SelfEnergySolver::new(&g).unwrap().at(z).unwrap();
        let scale = frobenius(&want).max(1.0);
        prop_assert!(diff(&got, &want) <= 1e-8 * scale, "deviation {}", diff(&got, &want));
    }

    #[test]
    fn series_remainder_is_within_the_tail_bound(seed in any::<u64>()) {
        let (t, g) = random_gadget(&mut rng(seed), SMALL);
        let plan = g.two_body_plan().unwrap();
        let inputs = BoundInputs::from_plan(plan, &t).unwrap();
        let max_order = 6;
        for z in z_grid(z_max_for(&t, 0.1).unwrap(), 5) {
            let exact = self_energy_exact(&g, z).unwrap();
            let terms = self_energy_terms(&g, max_order, z).unwrap();
            let mut partial = DenseMatrix::zeros(exact.nrows(), exact.ncols());
            for term in &terms {
                for i in 0..partial.nrows() {
                    for j in 0..partial.ncols() {
                        partial[(i, j)] += term.operator[(i, j)];
                    }
                }
            }
            if let Some(tail) = tail_bound(&inputs, max_order, z) {
                let gap = wgadget::linalg::spectral_norm(&DenseMatrix::from_fn(
                    exact.nrows(),
                    exact.ncols(),
                    |i, j| exact[(i, j)] - partial[(i, j)],
                ))
                .unwrap();
                prop_assert!(gap <= tail + 1e-9, "z = {z}: remainder {gap} over tail bound {tail}");
            }
        }
    }
}
