mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use wgadget::linalg::{eigvalsh, hermitian_defect, max_abs_diff};
use wgadget::{GadgetError, Pauli, PauliSum, PauliTerm};

fn pauli() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn term(n: usize) -> impl Strategy<Value = PauliTerm> {
    (
        -2.0f64..2.0,
        proptest::collection::btree_map(0..n, pauli(), 0..=n.min(3)),
    )
        .prop_map(|(c, f)| PauliTerm::new(c, f).unwrap())
}

fn pauli_sum() -> impl Strategy<Value = PauliSum> {
    (1usize..=4).prop_flat_map(|n| {
        proptest::collection::vec(term(n), 0..6)
            .prop_map(move |ts| PauliSum::from_terms(n, ts).unwrap())
    })
}

proptest! {
    #[test]
    fn dense_matches_kronecker_oracle(sum in pauli_sum()) {
        let got = sum.to_dense().unwrap();
        prop_assert!(max_abs_diff(&got, &dense_of(&sum)) < 1e-12);
    }

    #[test]
    fn realization_is_hermitian(sum in pauli_sum()) {
        prop_assert!(hermitian_defect(&sum.to_dense().unwrap()) < 1e-12);
        prop_assert!(sum.to_sparse_operator().unwrap().hermitian_defect() < 1e-12);
    }

    #[test]
    fn canonical_form_is_the_same_operator(sum in pauli_sum()) {
        let canon = sum.canonicalize();
        prop_assert!(canon.len() <= sum.len());
        prop_assert!(max_abs_diff(&canon.to_dense().unwrap(), &sum.to_dense().unwrap()) < 1e-12);
    }

    #[test]
    fn json_round_trip(sum in pauli_sum()) {
        let back = PauliSum::from_json_value(&sum.to_json_value(), "").unwrap();
        prop_assert_eq!(back, sum);
    }

    #[test]
    fn diagonal_agrees_with_dense(sum in pauli_sum()) {
        let dense = sum.to_dense().unwrap();
        if sum.is_diagonal() {
            let d = sum.diagonal().unwrap();
            for (i, v) in d.iter().enumerate() {
                prop_assert!((dense[(i, i)].re - v).abs() < 1e-12);
            }
        } else {
            prop_assert!(sum.diagonal().is_err());
        }
    }

    #[test]
    fn embedding_keeps_the_spectrum(sum in pauli_sum(), extra in 0usize..2, seed in any::<u64>()) {
        let n = sum.n_qubits();
        let new_n = n + extra;
        let mut slots: Vec<usize> = (0..new_n).collect();
        let mut r = rng(seed);
        use rand::seq::SliceRandom;
        slots.shuffle(&mut r);
        let map: BTreeMap<usize, usize> = (0..n).map(|q| (q, slots[q])).collect();
        let embedded = sum.embed(&map, new_n).unwrap();
        let before = eigvalsh(&sum.to_dense().unwrap()).unwrap();
        let after = eigvalsh(&embedded.to_dense().unwrap()).unwrap();
        let copies = 1usize << extra;
        for (i, v) in before.iter().enumerate() {
            for k in 0..copies {
                prop_assert!((after[i * copies + k] - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scaling_is_linear(sum in pauli_sum(), s in -3.0f64..3.0) {
        let a = sum.scaled(s).to_dense().unwrap();
        let b = sum.to_dense().unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                worst = worst.max((a[(i, j)] - b[(i, j)] * s).norm());
            }
        }
        prop_assert!(worst < 1e-12);
    }
}

#[test]
fn jacobi_oracle_agrees_with_eigvalsh() {
    let mut s = PauliSum::new(3);
    s.add(0.7, &[(0, Pauli::X), (1, Pauli::Y)]).unwrap();
    s.add(-0.3, &[(2, Pauli::Z)]).unwrap();
    s.add(0.5, &[(1, Pauli::Y), (2, Pauli::X)]).unwrap();
    let m = s.to_dense().unwrap();
    let lib = eigvalsh(&m).unwrap();
    let oracle = jacobi_eigenvalues(&m);
    for (i, v) in lib.iter().enumerate() {
        assert!((oracle[i] - v).abs() < 1e-10);
    }
}

#[test]
fn repeated_qubit_is_malformed() {
    let e = PauliTerm::new(1.0, [(0, Pauli::X), (0, Pauli::Z)]).unwrap_err();
    assert!(matches!(e, GadgetError::Malformed { .. }));
}

#[test]
fn complex_coefficient_is_a_parse_error() {
    let v =
        serde_json::json!({"n": 1, "terms": [{"coeff": {"re": 1, "im": 1}, "ops": [[0, "X"]]}]});
    match PauliSum::from_json_value(&v, "h").unwrap_err() {
        GadgetError::Parse { path, msg, .. } => {
            assert_eq!(path, "h.terms[0].coeff");
            assert!(msg.contains("complex"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn out_of_range_qubit_is_a_parse_error() {
    let v = serde_json::json!({"n": 2, "terms": [{"coeff": 1.0, "ops": [[2, "X"]]}]});
    assert!(matches!(
        PauliSum::from_json_value(&v, "").unwrap_err(),
        GadgetError::Parse { .. }
    ));
}
