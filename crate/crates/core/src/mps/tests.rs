use super::*;
use crate::channels::{make_dephasing, DephasingForm};
use crate::gates::{cz, fsim, hadamard, pauli_w, sqrt_involution};
use crate::linalg::{haar_unitary, pauli_x, pauli_z};
use crate::oracles::dense::DenseVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() < tol
}

fn dense_of(psi: &MatrixProductState) -> DenseVector {
    DenseVector::from_amplitudes(psi.to_dense()).unwrap()
}

fn assert_matches_dense(psi: &MatrixProductState, v: &DenseVector, tol: f64) {
    let a = psi.to_dense();
    for (x, y) in a.iter().zip(v.amplitudes()) {
        assert!(close(*x, *y, tol), "{x} vs {y}");
    }
}

fn plus_state(n: usize) -> MatrixProductState {
    let r = real(std::f64::consts::FRAC_1_SQRT_2);
    MatrixProductState::from_product(2, &vec![vec![r, r]; n]).unwrap()
}

fn ghz(n: usize) -> MatrixProductState {
    let mut psi = MatrixProductState::new_product_state(&vec![0; n]).unwrap();
    psi.apply_1q(0, &hadamard()).unwrap();
    for i in 0..n - 1 {
        psi.apply_2q(i, i + 1, &cnot(), &TruncationPolicy::exact()).unwrap();
    }
    psi
}

#[test]
fn product_state_basics() {
    let psi = MatrixProductState::new_product_state(&[0, 0, 0]).unwrap();
    assert!(close(psi.amplitude(&[0, 0, 0]), ONE, 1e-15));
    assert!(close(psi.amplitude(&[0, 1, 0]), ZERO, 1e-15));
    assert_eq!(psi.bond_dims(), vec![1, 1]);
    let mut one = MatrixProductState::new_product_state(&[1]).unwrap();
    let rho = one.reduced_density(0).unwrap();
    assert!(linalg::max_abs_diff(&rho, &linalg::projector(1)) < 1e-15);
    let mut p = MatrixProductState::new_product_state(&[1, 0, 1, 1]).unwrap();
    for cut in 0..=4 {
        for n in [0.5, 1.0, 2.0] {
            assert_eq!(p.renyi_entropy(cut, n), 0.0);
        }
    }
    assert!(matches!(MatrixProductState::new_product_state(&[]), Err(MpsError::Empty)));
}

#[test]
fn single_qubit_gates() {
    let mut psi = MatrixProductState::new_product_state(&[0]).unwrap();
    psi.apply_1q(0, &pauli_x()).unwrap();
    assert!(close(psi.amplitude(&[1]), ONE, 1e-15));

    let h = sqrt_involution(&pauli_w(), false);
    let mut a = plus_state(2);
    let mut b = a.clone();
    a.apply_1q(1, &h).unwrap();
    a.apply_1q(1, &h).unwrap();
    b.apply_1q(1, &pauli_w()).unwrap();
    assert_matches_dense(&a, &dense_of(&b), 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = haar_unitary(2, &mut rng);
    let before = a.to_dense();
    a.apply_1q(0, &g).unwrap();
    a.apply_1q(0, &g.adjoint()).unwrap();
    for (x, y) in a.to_dense().iter().zip(before) {
        assert!(close(*x, y, 1e-12));
    }
    assert!(matches!(a.apply_1q(0, &(linalg::identity(2) * real(2.0))), Err(MpsError::NotUnitary(_))));
}

#[test]
fn fsim_on_basis_states() {
    let f = fsim(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_6);
    let pol = TruncationPolicy::default();
    let mut psi = MatrixProductState::new_product_state(&[0, 1]).unwrap();
    psi.apply_2q(0, 1, &f, &pol).unwrap();
    assert!(close(psi.amplitude(&[1, 0]), -linalg::I, 1e-14));
    let mut psi = MatrixProductState::new_product_state(&[1, 1]).unwrap();
    psi.apply_2q(0, 1, &f, &pol).unwrap();
    assert!(close(psi.amplitude(&[1, 1]), C64::from_polar(1.0, -std::f64::consts::FRAC_PI_6), 1e-14));
    let mut psi = MatrixProductState::new_product_state(&[0, 0]).unwrap();
    assert!(matches!(psi.apply_2q(0, 0, &f, &pol), Err(MpsError::SameSite(0))));
    assert!(matches!(psi.apply_2q(0, 1, &(f * real(1.1)), &pol), Err(MpsError::NotUnitary(_))));
}

#[test]
fn cz_entropy_matches_dense_schmidt() {
    let mut psi = plus_state(2);
    psi.apply_2q(0, 1, &cz(), &TruncationPolicy::exact()).unwrap();
    let dense = dense_of(&psi);
    let expect = dense.entropy(&[0], 1.0);
    assert!((psi.renyi_entropy(1, 1.0) - expect).abs() < 1e-12);
    assert!((expect - 2f64.ln()).abs() < 1e-12);
}

#[test]
fn reversed_and_long_range_gates_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut psi = plus_state(6);
    let mut v = dense_of(&psi);
    for (i, j) in [(0, 3), (5, 1), (2, 3), (4, 0), (3, 5)] {
        let g = haar_unitary(4, &mut rng);
        psi.apply_2q(i, j, &g, &TruncationPolicy::exact()).unwrap();
        v.apply_2q(i, j, &g);
    }
    assert_matches_dense(&psi, &v, 1e-12);
    assert_eq!(psi.trunc_log(), 0.0);
}

#[test]
fn kraus_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let id = KrausSet::new(vec![linalg::identity(2)], "").unwrap();
    let mut psi = plus_state(1);
    assert_eq!(psi.apply_kraus(0, &id, &mut rng).unwrap(), 0);

    let proj = make_dephasing(0.1, DephasingForm::Projective).unwrap();
    let mut counts = [0usize; 3];
    for _ in 0..20_000 {
        let mut psi = MatrixProductState::new_product_state(&[0]).unwrap();
        counts[psi.apply_kraus(0, &proj, &mut rng).unwrap()] += 1;
    }
    assert_eq!(counts[2], 0);
    let f = counts[1] as f64 / 20_000.0;
    assert!((f - 0.2).abs() < 4.0 * (0.2f64 * 0.8 / 20_000.0).sqrt());
}

#[test]
fn weak_measurement_tilts_bloch_vector() {
    let eps: f64 = 0.1;
    let weak = make_dephasing(eps, DephasingForm::WeakOptimal).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let mut psi = plus_state(1);
        let out = psi.apply_kraus(0, &weak, &mut rng).unwrap();
        let rho = psi.reduced_density(0).unwrap();
        let z = (rho[(0, 0)] - rho[(1, 1)]).re;
        let expect = 2.0 * (eps * (1.0 - eps)).sqrt() * if out == 0 { 1.0 } else { -1.0 };
        assert!((z - expect).abs() < 1e-12);
    }
    // Born weights on |+⟩ are exactly 1/2 each.
    let mut psi = plus_state(1);
    let rho = psi.reduced_density(0).unwrap();
    for m in weak.ops() {
        assert!((linalg::trace(&(m * &rho * m.adjoint())).re - 0.5).abs() < 1e-12);
    }
}

#[test]
fn measure_reset_behaviour() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut psi = MatrixProductState::new_product_state(&[1]).unwrap();
    assert_eq!(psi.measure_reset(0, &mut rng).unwrap(), 1);
    assert!(close(psi.amplitude(&[0]), ONE, 1e-14));

    let trials = 10_000;
    let ones: usize = (0..trials)
        .map(|_| plus_state(1).measure_reset(0, &mut rng).unwrap() as usize)
        .sum();
    let expected = trials as f64 / 2.0;
    let chi2 = 2.0 * (ones as f64 - expected).powi(2) / expected;
    assert!(chi2 < 10.83, "chi2 = {chi2}");

    for _ in 0..20 {
        let mut bell = ghz(2);
        let b = bell.measure_reset(0, &mut rng).unwrap();
        let rho = bell.reduced_density(1).unwrap();
        assert!(linalg::max_abs_diff(&rho, &linalg::projector(b)) < 1e-12);
    }
}

#[test]
fn projection_probabilities() {
    let mut psi = MatrixProductState::new_product_state(&[0]).unwrap();
    assert!((psi.project_onto(0, 0).unwrap() - 1.0).abs() < 1e-15);
    let mut psi = plus_state(1);
    assert!((psi.project_onto(0, 1).unwrap() - 0.5).abs() < 1e-15);
    assert!(close(psi.amplitude(&[0]), ONE, 1e-14));
    let mut bell = ghz(2);
    let p = bell.project_onto(0, 0).unwrap() * bell.project_onto(1, 0).unwrap();
    assert!((p - 0.5).abs() < 1e-14);
    let mut zero = MatrixProductState::new_product_state(&[0]).unwrap();
    assert!(matches!(zero.project_onto(0, 1), Err(MpsError::Degenerate(_))));
}

#[test]
fn entropies_against_dense() {
    let mut bell = ghz(2);
    for n in [0.5, 1.0, 2.0, 3.0] {
        assert!((bell.renyi_entropy(1, n) - 2f64.ln()).abs() < 1e-12);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut psi = MatrixProductState::new_product_state(&[0; 8]).unwrap();
    for layer in 0..6 {
        for i in (layer % 2..7).step_by(2) {
            psi.apply_2q(i, i + 1, &haar_unitary(4, &mut rng), &TruncationPolicy::exact()).unwrap();
        }
    }
    let dense = dense_of(&psi);
    for n in [1.0, 2.0] {
        let expect = dense.entropy(&[0, 1, 2, 3], n);
        assert!((psi.renyi_entropy(4, n) - expect).abs() < 1e-8);
    }
    for cut in 1..8 {
        let bound = (*psi.bond_dims().iter().nth(cut - 1).unwrap() as f64).ln();
        assert!(psi.renyi_entropy(cut, 1.0) <= bound + 1e-12);
    }
    // Two-block subsystems.
    for sub in [vec![1, 2, 5, 6], vec![0, 7], vec![3], vec![0, 1, 2, 6, 7]] {
        let expect = dense.entropy(&sub, 1.0);
        assert!((psi.subsystem_renyi(&sub, 1.0).unwrap() - expect).abs() < 1e-6, "{sub:?}");
        let comp: Vec<usize> = (0..8).filter(|q| !sub.contains(q)).collect();
        if comp.windows(2).filter(|w| w[1] != w[0] + 1).count() < 2 {
            let s = psi.subsystem_renyi(&comp, 1.0).unwrap();
            assert!((s - expect).abs() < 1e-8);
        }
    }
    assert!(psi.subsystem_renyi(&(0..8).collect::<Vec<_>>(), 1.0).unwrap().abs() < 1e-12);
    assert!(matches!(psi.subsystem_renyi(&[0, 2, 4], 1.0), Err(MpsError::TooManyBlocks(3))));
}

#[test]
fn ghz_two_block_entropy() {
    let psi = ghz(8);
    assert!((psi.subsystem_renyi(&[1, 2, 5, 6], 1.0).unwrap() - 2f64.ln()).abs() < 1e-10);
}

#[test]
fn reference_qubit_lifecycle() {
    let pol = TruncationPolicy::exact();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for partner in [0, 2, 4] {
        let mut psi = MatrixProductState::new_product_state(&[0; 5]).unwrap();
        let h = psi.attach_reference(partner, &pol).unwrap();
        assert_eq!(psi.n_sites(), 5);
        assert_eq!(psi.chain_len(), 6);
        assert!((psi.reference_entropy(h) - 2f64.ln()).abs() < 1e-12);
        assert!(matches!(psi.attach_reference(1, &pol), Err(MpsError::ReferenceAttached)));

        let other = (partner + 1) % 5;
        psi.apply_2q(other, (other + 2) % 5, &haar_unitary(4, &mut rng), &pol).ok();
        psi.apply_1q(partner, &haar_unitary(2, &mut rng)).unwrap();
        assert!((psi.reference_entropy(h) - 2f64.ln()).abs() < 1e-10);

        psi.measure_reset(partner, &mut rng).unwrap();
        assert!(psi.reference_entropy(h) < 1e-10);
    }
}

#[test]
fn subsystem_entropy_with_reference_present() {
    let pol = TruncationPolicy::exact();
    let mut psi = MatrixProductState::new_product_state(&[0; 4]).unwrap();
    psi.attach_reference(0, &pol).unwrap();
    psi.apply_2q(0, 3, &cnot(), &pol).unwrap();
    // Reference, site 0 and site 3 form a GHZ triple; site 3 alone has ln 2.
    assert!((psi.subsystem_renyi(&[3], 1.0).unwrap() - 2f64.ln()).abs() < 1e-10);
    assert!(psi.subsystem_renyi(&[1, 2], 1.0).unwrap().abs() < 1e-10);
}

#[test]
fn truncation_accounting() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut psi = MatrixProductState::new_product_state(&[0; 10]).unwrap();
    let tight = TruncationPolicy { chi_max: 4, svd_cutoff: 1e-10, hard_fail_chi: None };
    let mut last = 0.0;
    for layer in 0..8 {
        for i in (layer % 2..9).step_by(2) {
            psi.apply_2q(i, i + 1, &haar_unitary(4, &mut rng), &tight).unwrap();
            assert!(psi.trunc_log() >= last);
            last = psi.trunc_log();
            assert!(psi.max_bond() <= 4);
        }
    }
    assert!(last > 0.0);
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);

    let mut psi = MatrixProductState::new_product_state(&[0; 8]).unwrap();
    let strict = TruncationPolicy { chi_max: 512, svd_cutoff: 1e-10, hard_fail_chi: Some(2) };
    let mut err = None;
    for layer in 0..6 {
        for i in (layer % 2..7).step_by(2) {
            if let Err(e) = psi.apply_2q(i, i + 1, &haar_unitary(4, &mut rng), &strict) {
                err = Some(e);
            }
        }
    }
    assert!(matches!(err, Some(MpsError::BondOverflow { .. })));
}

#[test]
fn norm_is_conserved_over_many_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut psi = MatrixProductState::new_product_state(&[0; 8]).unwrap();
    let pol = TruncationPolicy::exact();
    for _ in 0..1000 {
        let i = rand::Rng::random_range(&mut rng, 0..8);
        let mut j = rand::Rng::random_range(&mut rng, 0..8);
        if j == i {
            j = (i + 1) % 8;
        }
        psi.apply_2q(i, j, &haar_unitary(4, &mut rng), &pol).unwrap();
    }
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-9);
    assert_eq!(psi.trunc_log(), 0.0);
}

#[test]
fn checkpoint_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut psi = plus_state(5);
    psi.apply_2q(0, 2, &haar_unitary(4, &mut rng), &TruncationPolicy::exact()).unwrap();
    let mut buf = Vec::new();
    psi.write_checkpoint(&mut buf).unwrap();
    let back = MatrixProductState::read_checkpoint(buf.as_slice()).unwrap();
    assert_eq!(back.to_dense(), psi.to_dense());
    assert_eq!(back.center(), psi.center());
    assert!(MatrixProductState::read_checkpoint(&buf[..10]).is_err());
}

/// One randomly generated operation for the oracle-equivalence test.
#[derive(Clone, Debug)]
enum Op {
    Gate(usize, usize, u64),
    Single(usize, u64),
    Kraus(usize, f64),
    Measure(usize),
}

fn arb_op(n: usize) -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..n, 0..n, any::<u64>()).prop_map(move |(i, j, s)| Op::Gate(i, if i == j { (j + 1) % n } else { j }, s)),
        (0..n, any::<u64>()).prop_map(|(i, s)| Op::Single(i, s)),
        (0..n, 0.0..0.5f64).prop_map(|(i, e)| Op::Kraus(i, e)),
        (0..n).prop_map(Op::Measure),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mps_matches_dense_oracle(ops in proptest::collection::vec(arb_op(7), 1..40), seed in any::<u64>()) {
        let n = 7;
        let pol = TruncationPolicy { chi_max: 4096, svd_cutoff: 0.0, hard_fail_chi: None };
        let mut psi = MatrixProductState::new_product_state(&vec![0; n]).unwrap();
        let mut v = DenseVector::zero_state(n).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(seed);
        let mut r2 = ChaCha8Rng::seed_from_u64(seed);
        for op in &ops {
            match *op {
                Op::Gate(i, j, s) => {
                    let g = haar_unitary(4, &mut ChaCha8Rng::seed_from_u64(s));
                    psi.apply_2q(i, j, &g, &pol).unwrap();
                    v.apply_2q(i, j, &g);
                }
                Op::Single(i, s) => {
                    let g = haar_unitary(2, &mut ChaCha8Rng::seed_from_u64(s));
                    psi.apply_1q(i, &g).unwrap();
                    v.apply_1q(i, &g);
                }
                Op::Kraus(i, e) => {
                    let k = make_dephasing(e, DephasingForm::WeakOptimal).unwrap();
                    let a = psi.apply_kraus(i, &k, &mut r1).unwrap();
                    let b = v.apply_kraus(i, &k, &mut r2).unwrap();
                    prop_assert_eq!(a, b);
                }
                Op::Measure(i) => {
                    let a = psi.measure_reset(i, &mut r1).unwrap();
                    let b = v.measure_reset(i, &mut r2);
                    prop_assert_eq!(a, b);
                }
            }
        }
        // Global phases agree because every update is linear.
        for (x, y) in psi.to_dense().iter().zip(v.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn born_probabilities_normalize(s in any::<u64>(), eps in 0.0..0.5f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let mut psi = MatrixProductState::new_product_state(&[0; 4]).unwrap();
        psi.apply_2q(0, 3, &haar_unitary(4, &mut rng), &TruncationPolicy::exact()).unwrap();
        psi.apply_2q(1, 3, &haar_unitary(4, &mut rng), &TruncationPolicy::exact()).unwrap();
        let rho = psi.reduced_density(3).unwrap();
        let k = make_dephasing(eps, DephasingForm::Projective).unwrap();
        let total: f64 = k.ops().iter().map(|m| linalg::trace(&(m * &rho * m.adjoint())).re).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        psi.apply_kraus(3, &k, &mut rng).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn born_frequencies_within_four_sigma() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut base = MatrixProductState::new_product_state(&[0, 0]).unwrap();
    base.apply_2q(0, 1, &haar_unitary(4, &mut rng), &TruncationPolicy::exact()).unwrap();
    let k = make_dephasing(0.3, DephasingForm::Projective).unwrap();
    let rho = base.clone().reduced_density(1).unwrap();
    let probs: Vec<f64> = k.ops().iter().map(|m| linalg::trace(&(m * &rho * m.adjoint())).re).collect();
    let draws = 100_000;
    let mut counts = vec![0usize; 3];
    for _ in 0..draws {
        let mut psi = base.clone();
        counts[psi.apply_kraus(1, &k, &mut rng).unwrap()] += 1;
    }
    for (c, p) in counts.iter().zip(&probs) {
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        assert!((*c as f64 / draws as f64 - p).abs() < 4.0 * sigma + 1e-12);
    }
    let _ = pauli_z();
}

