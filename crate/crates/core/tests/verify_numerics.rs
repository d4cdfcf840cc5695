mod common;

use std::sync::atomic::AtomicBool;

use common::*;
use proptest::prelude::*;
use wgadget::analysis::{bounding_chain_energy, check_subspace_condition, simplified_hamiltonian};
use wgadget::gadget2::{build_gadget, desk_plan};
use wgadget::linalg::eigvalsh;
use wgadget::verify::{
    compare_spectra, loglog_slope, lowest_eigs, sweep, write_csv, AlignMode, SweepBase, SweepParam,
    TRUNCATION_MARKER,
};
use wgadget::{Pauli, PauliSum};

const BASE: SweepBase = SweepBase {
    r: 1,
    c: 2,
    delta: 40.0,
    levels: 4,
    eps: 0.1,
};

fn random_sum(seed: u64, n: usize) -> PauliSum {
    use rand::Rng;
    let mut r = rng(seed);
    let mut s = PauliSum::new(n);
    for _ in 0..3 * n {
        let a = r.random_range(0..n);
        let b = (a + r.random_range(1..n)) % n;
        s.add(
            r.random_range(-1.0..1.0),
            &[
                (a, PAULIS[r.random_range(0..3)]),
                (b, PAULIS[r.random_range(0..3)]),
            ],
        )
        .unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lowest_eigs_agree_with_dense(seed in any::<u64>(), n in 2usize..=7) {
        let s = random_sum(seed, n);
        let dense = eigvalsh(&dense_of(&s)).unwrap();
        let k = 6.min(1 << n);
        let got = lowest_eigs(&s, k).unwrap().values;
        for (a, b) in got.iter().zip(&dense) {
            prop_assert!((a - b).abs() < 1e-8, "{got:?} vs {dense:?}");
        }
    }

    #[test]
    fn admissible_gadgets_meet_the_subspace_condition(seed in any::<u64>()) {
        let (_, g) = random_gadget(&mut rng(seed), SMALL);
        let r = check_subspace_condition(&g).unwrap();
        let s = simplified_hamiltonian(&g).unwrap();
        prop_assert_eq!(s.n_qubits(), g.n_total - g.n_target);
        prop_assert!(r.ok && r.e_plus > g.gap / 2.0);
        prop_assert!(r.bounding_floor.unwrap() >= 79.0 * g.gap / 80.0 - 1e-9);
    }
}

#[test]
fn large_register_uses_the_iterative_path() {
    let s = random_sum(5, 13);
    let got = lowest_eigs(&s, 3).unwrap().values;
    assert_eq!(got.len(), 3);
    assert!(got.windows(2).all(|w| w[0] <= w[1] + 1e-12));
}

#[test]
fn spectra_comparison_aligns_both_ways() {
    let t = zz_target(1.0);
    let g = build_gadget(&t, &desk_plan(&t, 2, 2, 160.0, 0.1).unwrap()).unwrap();
    let a = compare_spectra(&t, &g, 4, 0.1, AlignMode::KnownShift).unwrap();
    let b = compare_spectra(&t, &g, 4, 0.1, AlignMode::GroundEnergy).unwrap();
    assert!(a.pass && b.pass);
    assert!(b.max_abs_error <= a.max_abs_error + 1e-12);
    assert_eq!(a.target_eigs, vec![-1.0, -1.0, 1.0, 1.0]);
}

#[test]
fn empty_sweep_is_an_empty_table() {
    let t = zz_target(1.0);
    let table = sweep(&t, SweepParam::Delta, &[], &BASE, false, None);
    assert!(table.rows.is_empty());
    assert!(table.slope.is_none());
    assert!(!table.truncated);
}

#[test]
fn cancelled_sweep_writes_the_marker() {
    let t = zz_target(1.0);
    let cancel = AtomicBool::new(true);
    let table = sweep(
        &t,
        SweepParam::Delta,
        &[40.0, 80.0],
        &BASE,
        false,
        Some(&cancel),
    );
    assert!(table.truncated);
    let mut out = Vec::new();
    write_csv(&table, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("param,value,max_abs_error,beta_max,J,n_total,runtime_ms,pass"));
    assert!(text
        .trim_end()
        .lines()
        .last()
        .unwrap()
        .starts_with(TRUNCATION_MARKER));
}

#[test]
fn sweep_rows_are_reproducible() {
    let t = zz_target(1.0);
    let a = sweep(&t, SweepParam::C, &[1.0, 2.0, 3.0], &BASE, false, None);
    let b = sweep(&t, SweepParam::C, &[1.0, 2.0, 3.0], &BASE, false, None);
    assert_eq!(a, b);
    assert!(a.rows.iter().all(|r| r.runtime_ms == 0));
}

#[test]
fn slope_of_a_power_law() {
    let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
        .iter()
        .map(|&x: &f64| (x, 3.0 * x.powf(-1.5)))
        .collect();
    assert!((loglog_slope(&pts).unwrap() + 1.5).abs() < 1e-12);
    assert!(loglog_slope(&pts[..1]).is_none());
}

#[test]
fn bounding_chain_stays_above_its_floor() {
    for n in 1..=6 {
        let c = bounding_chain_energy(n, 100.0, 3.0).unwrap();
        assert!(c.holds, "{c:?}");
    }
}

#[test]
fn mismatched_register_is_rejected() {
    let t = zz_target(1.0);
    let g = build_gadget(&t, &desk_plan(&t, 1, 1, 40.0, 0.1).unwrap()).unwrap();
    let mut other = PauliSum::new(3);
    other.add(1.0, &[(0, Pauli::Z), (2, Pauli::Z)]).unwrap();
    let t3 = wgadget::model::TargetHamiltonian::from_pauli_sum(&other).unwrap();
    assert!(compare_spectra(&t3, &g, 2, 0.1, AlignMode::KnownShift).is_err());
}
