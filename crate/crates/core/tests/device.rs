mod common;

use common::oracles;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use pulsesim_core::calibration::analyze_model;
use pulsesim_core::device::{
    circuit_hamiltonian, ej_of_flux, transmon_charge_hamiltonian, transmon_levels, DeviceParams, Qubit,
    TruncationConfig,
};
use pulsesim_core::linalg::eigh;

fn charge_matrix(ec: f64, ej: f64, n_g: f64, n_q: usize) -> oracles::Dense {
    let ncut = (n_q / 2) as f64;
    let mut m = oracles::zeros(n_q, n_q);
    for i in 0..n_q {
        m[i][i] = C64::new(4.0 * ec * (i as f64 - ncut - n_g).powi(2), 0.0);
        if i + 1 < n_q {
            m[i][i + 1] = C64::new(-0.5 * ej, 0.0);
            m[i + 1][i] = C64::new(-0.5 * ej, 0.0);
        }
    }
    m
}

#[test]
fn qubit_frequencies_follow_transmon_asymptotics() {
    let p = DeviceParams::default();
    for (j, expected) in [(Qubit::Q1, 8.18), (Qubit::Q0, 9.73)] {
        let (ec, ej) = (*p.ec.get(j), *p.ej_max.get(j));
        let asymptotic = (8.0 * ec * ej).sqrt() - ec;
        assert!((asymptotic - expected).abs() < 0.01);
        let t = transmon_levels(&p, j, 0.0, 23, 3).unwrap();
        let f01 = t.energies[1] - t.energies[0];
        assert!(((f01 - asymptotic) / asymptotic).abs() < 0.02, "{j}: {f01} vs {asymptotic}");
        // Anharmonicity close to -E_C in the transmon regime.
        let alpha = t.energies[2] - 2.0 * t.energies[1];
        assert!((alpha + ec).abs() < 0.15 * ec, "{j}: alpha {alpha}");
    }
}

#[test]
fn charge_spectrum_matches_jacobi_oracle() {
    for (ec, ej, n_g) in [(0.317, 28.48, 0.0), (0.297, 42.34, 0.3), (0.5, 5.0, 0.5)] {
        let n_q = 15;
        let got = eigh(&transmon_charge_hamiltonian(ec, ej, n_g, n_q).unwrap().hamiltonian).unwrap().eigenvalues;
        let want = oracles::jacobi_eigenvalues(&charge_matrix(ec, ej, n_g, n_q));
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn production_charge_cutoff_matches_large_reference() {
    let p = DeviceParams::default();
    for j in Qubit::BOTH {
        for phi in [0.0, 0.233, 0.4] {
            let small = transmon_levels(&p, j, phi, 23, 4).unwrap();
            let large = transmon_levels(&p, j, phi, 41, 4).unwrap();
            for (a, b) in small.energies.iter().zip(&large.energies) {
                assert!((a - b).abs() < 1e-7, "{j} at {phi}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn computational_energies_converge_with_charge_cutoff() {
    let p = DeviceParams::default();
    let base = TruncationConfig { n_eq: 4, n_ec: 3, ..TruncationConfig::default() };
    let reference = analyze_model(&circuit_hamiltonian(&p, &TruncationConfig { n_q: 31, ..base }, 0.1).unwrap())
        .unwrap()
        .extraction
        .energies;
    let mut previous = f64::INFINITY;
    for n_q in [7, 9, 11, 13, 15, 17, 19, 21, 23] {
        let e = analyze_model(&circuit_hamiltonian(&p, &TruncationConfig { n_q, ..base }, 0.1).unwrap())
            .unwrap()
            .extraction
            .energies;
        let err = e.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= previous + 1e-9, "n_q {n_q}: {err} after {previous}");
        previous = err;
    }
    assert!(previous < 1e-8);
}

#[test]
fn decoupled_circuit_factorizes() {
    let p = DeviceParams::default().decoupled();
    let trunc = TruncationConfig { n_eq: 4, n_ec: 3, ..TruncationConfig::default() };
    for phi in [0.0, 0.17, 0.3] {
        let x = analyze_model(&circuit_hamiltonian(&p, &trunc, phi).unwrap()).unwrap().extraction;
        let f1 = transmon_levels(&p, Qubit::Q1, phi, trunc.n_q, trunc.n_eq).unwrap();
        let f0 = transmon_levels(&p, Qubit::Q0, 0.0, trunc.n_q, trunc.n_eq).unwrap();
        let (w1, w0) = (f1.energies[1] - f1.energies[0], f0.energies[1] - f0.energies[0]);
        let want = [0.0, w0, w1, w1 + w0];
        for (a, b) in x.energies.iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(x.j_coupling.abs() < 1e-12 && x.zeta.abs() < 1e-10);
    }
}

#[test]
fn only_the_tunable_qubit_sees_flux() {
    let p = DeviceParams::default();
    assert_eq!(ej_of_flux(&p, Qubit::Q1, 0.0), 28.48);
    let trunc = TruncationConfig { n_eq: 3, n_ec: 3, ..TruncationConfig::default() };
    let a = analyze_model(&circuit_hamiltonian(&p, &trunc, 0.0).unwrap()).unwrap().extraction;
    let b = analyze_model(&circuit_hamiltonian(&p, &trunc, 0.3).unwrap()).unwrap().extraction;
    assert!(b.omega_tilde.q1 < a.omega_tilde.q1 - 1.0);
    assert!((b.omega_tilde.q0 - a.omega_tilde.q0).abs() < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectrum_is_even_and_periodic_in_flux(phi in 0.0f64..0.45) {
        let p = DeviceParams::default();
        let trunc = TruncationConfig { n_q: 15, n_eq: 3, n_ec: 3, ..TruncationConfig::default() };
        let e = |f: f64| eigh(&circuit_hamiltonian(&p, &trunc, f).unwrap().drift).unwrap().eigenvalues;
        let (a, b, c) = (e(phi), e(-phi), e(phi + 1.0));
        for i in 0..a.len() {
            prop_assert!((a[i] - b[i]).abs() < 1e-9);
            prop_assert!((a[i] - c[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn josephson_energy_bounded_by_maximum(phi in -2.0f64..2.0, d in 0.0f64..0.9) {
        let p = DeviceParams { d: pulsesim_core::device::PerQubit::new(d, d), ..DeviceParams::default() };
        let ej = ej_of_flux(&p, Qubit::Q1, phi);
        prop_assert!(ej <= 28.48 + 1e-12);
        prop_assert!(ej >= d * 28.48 - 1e-12);
    }
}
