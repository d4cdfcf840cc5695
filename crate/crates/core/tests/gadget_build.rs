mod common;

use common::*;
use proptest::prelude::*;
use serde_json::json;
use wgadget::gadget2::{
    build_core, build_gadget, coupling_strength, desk_plan, plan_parameters, GadgetHamiltonian,
    QubitRole,
};
use wgadget::gadget3::{amplify, build_serial_3body, SerialPlan};
use wgadget::model::{split_strong_terms, CoupledTerm, TargetHamiltonian};
use wgadget::{GadgetError, Pauli, PauliSum};

#[test]
fn terms_list_routes_by_locality() {
    let v = json!({"n": 3, "terms": [
        {"coeff": 0.5, "ops": [[0, "Z"], [1, "Z"]]},
        {"coeff": 0.2, "ops": [[2, "X"]]},
        {"coeff": -1.0, "ops": []},
        {"coeff": 0.3, "ops": [[0, "X"], [1, "Y"], [2, "Z"]]}
    ]});
    let t = TargetHamiltonian::from_json_value(&v).unwrap();
    assert_eq!(t.m(), 2);
    assert_eq!(t.h_else().len(), 2);
    assert_eq!(t.max_locality(), 3);
}

#[test]
fn four_local_is_out_of_scope() {
    let v =
        json!({"n": 4, "terms": [{"coeff": 1.0, "ops": [[0, "Z"], [1, "Z"], [2, "Z"], [3, "Z"]]}]});
    assert!(matches!(
        TargetHamiltonian::from_json_value(&v).unwrap_err(),
        GadgetError::OutOfScope { .. }
    ));
}

#[test]
fn unknown_field_names_its_path() {
    let v = json!({"n": 2, "extra": 1});
    match TargetHamiltonian::from_json_value(&v).unwrap_err() {
        GadgetError::Parse { path, .. } => assert_eq!(path, "extra"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn target_json_round_trip() {
    let t = random_target(&mut rng(3), SMALL);
    let back = TargetHamiltonian::from_json_value(&t.to_json_value()).unwrap();
    assert_eq!(back, t);
}

#[test]
fn splitting_respects_the_cap() {
    let t = zz_target(2.5);
    let s = split_strong_terms(&t, 1.0).unwrap();
    assert_eq!(s.m(), 3);
    assert!(s.coupled_terms().iter().all(|c| c.gamma.abs() <= 1.0));
    let sum: f64 = s.coupled_terms().iter().map(|c| c.gamma).sum();
    assert!((sum - 2.5).abs() < 1e-12);
}

#[test]
fn gadget_layout_and_counts() {
    let t = two_term_target();
    let plan = desk_plan(&t, 2, 3, 50.0, 0.1).unwrap();
    let g = build_gadget(&t, &plan).unwrap();
    assert_eq!(g.n_total, 3 + 2 * 2 + 3);
    assert_eq!(g.n_target, 3);
    assert!(g.roles[..3].iter().all(|r| *r == QubitRole::Target));
    assert_eq!(g.roles[3], QubitRole::Direct { term: 0, copy: 0 });
    assert_eq!(g.roles[9], QubitRole::Core { index: 2 });
    assert!(g.h.is_diagonal());
    assert!((g.gap - 150.0).abs() < 1e-12);
    assert!((g.known_shift + 2.0).abs() < 1e-12);
    assert_eq!(g.coupling_terms().count(), 2 * 2 * 2);
    for b in &plan.betas {
        assert!((b - coupling_strength(1.0, 150.0, 2)).abs() < 1e-12);
    }
}

#[test]
fn gadget_json_round_trip() {
    let (_, g) = random_gadget(&mut rng(11), SMALL);
    let back: GadgetHamiltonian = serde_json::from_str(&g.to_json_string()).unwrap();
    assert_eq!(back, g);
}

#[test]
fn empty_target_builds_a_core_only_gadget() {
    let t = TargetHamiltonian::new(2, vec![], PauliSum::new(2)).unwrap();
    let g = build_gadget(&t, &desk_plan(&t, 1, 2, 10.0, 0.1).unwrap()).unwrap();
    assert_eq!(g.n_total, 4);
    assert_eq!(g.known_shift, 0.0);
}

#[test]
fn zero_gamma_terms_get_no_ancillas() {
    let t = TargetHamiltonian::new(
        2,
        vec![
            CoupledTerm::two(0.0, (0, Pauli::X), (1, Pauli::X)).unwrap(),
            CoupledTerm::two(1.0, (0, Pauli::Z), (1, Pauli::Z)).unwrap(),
        ],
        PauliSum::new(2),
    )
    .unwrap();
    let g = build_gadget(&t, &desk_plan(&t, 2, 1, 50.0, 0.1).unwrap()).unwrap();
    assert_eq!(g.n_total, 2 + 2 + 1);
}

#[test]
fn core_rejects_bad_parameters() {
    assert!(build_core(0, 1.0).is_err());
    assert!(build_core(2, -1.0).is_err());
}

#[test]
fn oversized_asymptotic_plan_is_a_resource_error() {
    let e = plan_parameters(&two_term_target(), 0.01, 0.5, (10.0, 10.0)).unwrap_err();
    assert!(matches!(e, GadgetError::Resource { .. }));
}

#[test]
fn amplify_by_one_is_the_plain_gadget() {
    let t = two_term_target();
    let plan = desk_plan(&t, 2, 2, 40.0, 0.1).unwrap();
    let a = amplify(&t, 1.0, &plan).unwrap();
    let b = build_gadget(&t, &plan).unwrap();
    assert_eq!(a.h, b.h);
    assert_eq!(a.v, b.v);
    assert_eq!(a.known_shift, b.known_shift);
}

#[test]
fn amplify_by_two_doubles_the_term_count() {
    let t = two_term_target();
    let plan = desk_plan(&t, 1, 2, 40.0, 0.1).unwrap();
    let g = amplify(&t, 2.0, &plan).unwrap();
    assert_eq!(g.two_body_plan().unwrap().betas.len(), 4);
    assert!((g.known_shift + 4.0).abs() < 1e-12);
}

#[test]
fn amplify_rejects_shrinking_and_three_local() {
    let plan = desk_plan(&zz_target(1.0), 1, 1, 40.0, 0.1).unwrap();
    assert!(matches!(
        amplify(&zz_target(1.0), 0.5, &plan).unwrap_err(),
        GadgetError::Malformed { .. }
    ));
    assert!(matches!(
        amplify(&zzz_target(1.0), 2.0, &plan).unwrap_err(),
        GadgetError::WrongBuilder { .. }
    ));
}

#[test]
fn serial_builder_rejects_two_local() {
    let plan = SerialPlan::desk(64.0, 1, 1, 1, 1e4, 0.1).unwrap();
    assert!(matches!(
        build_serial_3body(&zz_target(1.0), &plan).unwrap_err(),
        GadgetError::WrongBuilder { .. }
    ));
}

#[test]
fn serial_gadget_records_provenance() {
    let g = build_serial_3body(
        &zzz_target(0.5),
        &SerialPlan::desk(64.0, 1, 1, 1, 1e4, 0.1).unwrap(),
    )
    .unwrap();
    let prov = g.provenance.as_ref().unwrap();
    assert!(!prov.stage1_terms.is_empty());
    assert!(g.h.is_diagonal());
    assert!(g.gap > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unperturbed_part_vanishes_exactly_on_the_low_block(seed in any::<u64>()) {
        let (_, g) = random_gadget(&mut rng(seed), SMALL);
        let d = g.h.diagonal().unwrap();
        let low = 1usize << g.n_target;
        prop_assert!(d[..low].iter().all(|&e| e.abs() < 1e-12));
        prop_assert!(d[low..].iter().all(|&e| e >= g.gap - 1e-9));
    }

    #[test]
    fn couplings_stay_below_the_gap_scale(seed in any::<u64>()) {
        let (t, g) = random_gadget(&mut rng(seed), SMALL);
        let plan = g.two_body_plan().unwrap();
        for (c, b) in t.coupled_terms().iter().zip(&plan.betas) {
            let want = (c.gamma.abs() * plan.delta / (2.0 * plan.r as f64)).sqrt();
            prop_assert!((b - want).abs() <= 1e-12 * want);
        }
        prop_assert!(g.coupling_terms().all(|t| t.coeff().abs() <= plan.beta_max() + 1e-12));
    }
}
