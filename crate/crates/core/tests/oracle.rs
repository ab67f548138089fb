mod common;

use std::f64::consts::TAU;

use approx::assert_abs_diff_eq;
use common::*;
use dtc_core::evolution::{apply_period, compile_step};
use dtc_core::model::{
    heisenberg_hamiltonian, ising_phase_table, wrapped_ising_phase_table, DisorderDistribution,
    DisorderRealization, FloquetDriveSpec, ModelKind,
};
use dtc_core::state::{basis_label, StateVector};
use proptest::prelude::*;

fn spec(n: usize, model: ModelKind, pulses: u32, epsilon: f64, t2: f64) -> FloquetDriveSpec {
    FloquetDriveSpec {
        n_qubits: n,
        epsilon,
        t1: 1.0,
        t2,
        model,
        h2i_pulses: pulses,
        distribution: DisorderDistribution::clean(),
    }
}

fn fast_z_history(spec: &FloquetDriveSpec, r: &DisorderRealization, bits: &str, periods: usize) -> Vec<Vec<f64>> {
    let plan = compile_step(spec, r).unwrap();
    let mut psi = StateVector::basis_state(bits).unwrap();
    (0..periods)
        .map(|_| {
            apply_period(&mut psi, &plan).unwrap();
            psi.sigma_z_all()
        })
        .collect()
}

fn max_history_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn ising_table_is_the_diagonal_of_the_kronecker_hamiltonian() {
    let r = DisorderRealization::new(vec![0.7, -1.3], vec![0.4, 2.5, -0.9]).unwrap();
    let h = ising_h(r.bond_couplings(), r.onsite_fields());
    let table = ising_phase_table(&r, 1.0);
    for s in 0..8 {
        assert_abs_diff_eq!(table[s], h[(s, s)].re, epsilon = 1e-12);
        for t in 0..8 {
            if s != t {
                assert_eq!(h[(s, t)].norm(), 0.0);
            }
        }
    }
}

#[test]
fn heisenberg_matrix_matches_kronecker_construction() {
    let r = DisorderRealization::new(vec![1.1, 0.3, 2.0], vec![0.5, -0.2, 1.7, 0.9]).unwrap();
    let fast = heisenberg_hamiltonian(&r).unwrap();
    let dense = heisenberg_h(r.bond_couplings(), r.onsite_fields());
    for s in 0..16 {
        for t in 0..16 {
            assert_abs_diff_eq!(fast[(s, t)], dense[(s, t)].re, epsilon = 1e-12);
            assert_abs_diff_eq!(dense[(s, t)].im, 0.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn wrapped_table_matches_affine_table_as_a_unitary() {
    let r = DisorderRealization::new(vec![4.2, 7.9], vec![20_013.0, 19_987.5, 20_040.25]).unwrap();
    let plain = ising_phase_table(&r, 1.0);
    let wrapped = wrapped_ising_phase_table(&r, 1.0);
    for (a, b) in plain.iter().zip(&wrapped) {
        let d = (a - b).rem_euclid(TAU);
        assert!(d.min(TAU - d) < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn coupling_shift_by_two_pi_over_t2_leaves_the_ising_period_unchanged() {
    let t2 = 1.3;
    let r = DisorderRealization::new(vec![0.8, 2.4, 1.9], vec![3.0, -1.0, 0.5, 2.2]).unwrap();
    let shifted = r.shifted(TAU / t2, 0.0);
    let s = spec(4, ModelKind::Ising, 0, 0.07, t2);
    let a = fast_z_history(&s, &r, "0110", 40);
    let b = fast_z_history(&s, &shifted, "0110", 40);
    assert!(max_history_diff(&a, &b) < 1e-10);
}

#[test]
fn field_shift_by_two_pi_over_t2_leaves_the_ising_period_unchanged() {
    let t2 = 0.75;
    let r = DisorderRealization::new(vec![5.1, 3.3], vec![2.0, 1.0, -0.5]).unwrap();
    let shifted = r.shifted(0.0, 3.0 * TAU / t2);
    let s = spec(3, ModelKind::Ising, 0, 0.12, t2);
    let a = fast_z_history(&s, &r, "101", 40);
    let b = fast_z_history(&s, &shifted, "101", 40);
    assert!(max_history_diff(&a, &b) < 1e-10);
}

#[test]
fn ising_period_matches_dense_evolution() {
    let r = DisorderRealization::new(vec![4.0, 6.5, 2.2], vec![1.5, -3.0, 0.25, 7.0]).unwrap();
    let s = spec(4, ModelKind::Ising, 0, 0.08, 1.0);
    let u = floquet_unitary(&s, &r);
    for bits in ["0000", "1011", "0110"] {
        let d = max_history_diff(&fast_z_history(&s, &r, bits, 25), &dense_z_history(&u, bits, 25));
        assert!(d < 1e-9, "{bits}: {d}");
    }
}

#[test]
fn heisenberg_period_matches_dense_evolution() {
    let r = DisorderRealization::new(vec![1.0, 2.5, 0.4], vec![2.0, -1.0, 0.5, 3.5]).unwrap();
    let s = spec(4, ModelKind::Heisenberg, 0, 0.05, 0.9);
    let u = floquet_unitary(&s, &r);
    let d = max_history_diff(&fast_z_history(&s, &r, "1001", 25), &dense_z_history(&u, "1001", 25));
    assert!(d < 1e-9, "{d}");
}

#[test]
fn h2i_period_matches_naive_pulse_sequence() {
    let r = DisorderRealization::new(vec![3.0, 4.5], vec![1.0, 6.0, -2.0]).unwrap();
    for pulses in [2, 6, 16] {
        let s = spec(3, ModelKind::Heisenberg, pulses, 0.1, 1.0);
        let u = floquet_unitary(&s, &r);
        let d = max_history_diff(&fast_z_history(&s, &r, "100", 20), &dense_z_history(&u, "100", 20));
        assert!(d < 1e-9, "n = {pulses}: {d}");
    }
}

#[test]
fn clean_perfect_pulse_flips_every_qubit_each_period() {
    let s = spec(3, ModelKind::Ising, 0, 0.0, 1.0);
    let r = DisorderRealization::zeros(3);
    let u = floquet_unitary(&s, &r);
    let hist = dense_z_history(&u, "010", 4);
    assert_abs_diff_eq!(hist[0][0], -1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(hist[0][1], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(hist[1][1], -1.0, epsilon = 1e-12);
}

fn drive_case() -> impl Strategy<Value = (FloquetDriveSpec, DisorderRealization, usize)> {
    (2usize..=4, 0usize..3, -0.3f64..0.3, 0.1f64..2.0, 0u64..u64::MAX).prop_map(
        |(n, kind, epsilon, t2, bits)| {
            let (model, pulses) = match kind {
                0 => (ModelKind::Ising, 0),
                1 => (ModelKind::Heisenberg, 0),
                _ => (ModelKind::Heisenberg, 2 * (1 + (bits % 5) as u32)),
            };
            let mut x = bits;
            let mut next = || {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (x >> 11) as f64 / (1u64 << 53) as f64
            };
            let bonds = (1..n).map(|_| 6.0 * next()).collect();
            let fields = (0..n).map(|_| 10.0 * next() - 5.0).collect();
            let r = DisorderRealization::new(bonds, fields).unwrap();
            let state = (bits as usize) % (1 << n);
            (spec(n, model, pulses, epsilon, t2), r, state)
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_evolution_agrees_with_dense_reference((s, r, state) in drive_case()) {
        let bits = basis_label(state, s.n_qubits);
        let u = floquet_unitary(&s, &r);
        let d = max_history_diff(&fast_z_history(&s, &r, &bits, 12), &dense_z_history(&u, &bits, 12));
        prop_assert!(d < 1e-9, "{:?} {}: {}", s, bits, d);
    }

    #[test]
    fn evolution_preserves_the_norm((s, r, state) in drive_case()) {
        let plan = compile_step(&s, &r).unwrap();
        let mut psi = StateVector::basis_state(&basis_label(state, s.n_qubits)).unwrap();
        for _ in 0..30 {
            apply_period(&mut psi, &plan).unwrap();
        }
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }
}
