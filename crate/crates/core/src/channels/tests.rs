use super::*;
use crate::linalg::{haar_unitary, pauli_z};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mat(rows: &[[f64; 2]; 2]) -> CMat {
    CMat::from_row_slice(2, 2, &[real(rows[0][0]), real(rows[0][1]), real(rows[1][0]), real(rows[1][1])])
}

fn identity_channel() -> KrausSet {
    KrausSet::new(vec![linalg::identity(2)], "id").unwrap()
}

#[test]
fn rejects_incomplete_and_misshaped_sets() {
    let half = linalg::identity(2) * real(0.5);
    assert!(matches!(KrausSet::new(vec![half], ""), Err(ChannelError::Incomplete(_))));
    assert!(matches!(KrausSet::new(vec![], ""), Err(ChannelError::Empty)));
    let mixed = vec![linalg::identity(2), CMat::zeros(3, 3)];
    assert!(matches!(KrausSet::new(mixed, ""), Err(ChannelError::BadShape)));
}

#[test]
fn noiseless_limit_of_every_form_is_identity_channel() {
    let id = choi_matrix(&identity_channel());
    for form in [DephasingForm::UnitaryMix, DephasingForm::Projective, DephasingForm::WeakOptimal] {
        assert!(linalg::max_abs_diff(&choi_matrix(&make_dephasing(0.0, form).unwrap()), &id) < 1e-12);
    }
    for form in [
        DepolarizingForm::PauliMix,
        DepolarizingForm::WeakTetrahedron,
        DepolarizingForm::WeakOctahedron,
        DepolarizingForm::Erasure,
    ] {
        assert!(linalg::max_abs_diff(&choi_matrix(&make_depolarizing(0.0, form).unwrap()), &id) < 1e-12);
    }
    for form in [DampingForm::Canonical, DampingForm::Optimized] {
        assert!(linalg::max_abs_diff(&choi_matrix(&make_amplitude_damping(0.0, form).unwrap()), &id) < 1e-12);
    }
}

#[test]
fn weak_dephasing_matches_closed_form() {
    let k = make_dephasing(0.1, DephasingForm::WeakOptimal).unwrap();
    let z = pauli_z();
    let a = linalg::identity(2) * real(0.45f64.sqrt());
    let b = z * real(0.05f64.sqrt());
    assert!(linalg::max_abs_diff(&k.ops()[0], &(&a + &b)) < 1e-15);
    assert!(linalg::max_abs_diff(&k.ops()[1], &(&a - &b)) < 1e-15);
}

#[test]
fn projective_dephasing_matches_closed_form() {
    let k = make_dephasing(0.1, DephasingForm::Projective).unwrap();
    assert!(linalg::max_abs_diff(&k.ops()[0], &(linalg::identity(2) * real(0.8f64.sqrt()))) < 1e-15);
    assert!(linalg::max_abs_diff(&k.ops()[1], &(linalg::projector(0) * real(0.2f64.sqrt()))) < 1e-15);
    assert!(linalg::max_abs_diff(&k.ops()[2], &(linalg::projector(1) * real(0.2f64.sqrt()))) < 1e-15);
}

#[test]
fn dephasing_forms_share_a_choi_matrix() {
    for eps in [0.02, 0.1, 0.37, 0.5] {
        let a = make_dephasing(eps, DephasingForm::UnitaryMix).unwrap();
        let b = make_dephasing(eps, DephasingForm::Projective).unwrap();
        let c = make_dephasing(eps, DephasingForm::WeakOptimal).unwrap();
        assert!(choi_distance(&a, &b) < 1e-12);
        assert!(choi_distance(&b, &c) < 1e-12);
    }
}

#[test]
fn tetrahedron_coefficients_at_eps_006() {
    let k = make_depolarizing(0.06, DepolarizingForm::WeakTetrahedron).unwrap();
    assert_eq!(k.len(), 4);
    let [_, x, y, z] = linalg::paulis();
    let a = 0.235f64.sqrt();
    let b = 0.005f64.sqrt();
    let signs = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    for (m, s) in k.ops().iter().zip(signs) {
        let expect = linalg::identity(2) * real(a)
            + &x * real(b * s[0])
            + &y * real(b * s[1])
            + &z * real(b * s[2]);
        assert!(linalg::max_abs_diff(m, &expect) < 1e-15);
    }
}

#[test]
fn pauli_mix_at_eps_03() {
    let k = make_depolarizing(0.3, DepolarizingForm::PauliMix).unwrap();
    let expect = [0.7f64.sqrt(), 0.1f64.sqrt(), 0.1f64.sqrt(), 0.1f64.sqrt()];
    for ((m, s), w) in k.ops().iter().zip(linalg::paulis()).zip(expect) {
        assert!(linalg::max_abs_diff(m, &(s * real(w))) < 1e-15);
    }
    let t = make_depolarizing(0.3, DepolarizingForm::WeakTetrahedron).unwrap();
    assert!(choi_distance(&k, &t) < 1e-12);
}

#[test]
fn erasure_unraveling_matches_depolarizing() {
    for eps in [0.02, 0.3, 0.75] {
        let a = make_depolarizing(eps, DepolarizingForm::PauliMix).unwrap();
        let b = make_depolarizing(eps, DepolarizingForm::Erasure).unwrap();
        assert!(choi_distance(&a, &b) < 1e-12);
    }
}

#[test]
fn amplitude_damping_forms() {
    let can = make_amplitude_damping(0.2, DampingForm::Canonical).unwrap();
    assert!(linalg::max_abs_diff(&can.ops()[0], &mat(&[[1.0, 0.0], [0.0, 0.8f64.sqrt()]])) < 1e-15);
    assert!(linalg::max_abs_diff(&can.ops()[1], &mat(&[[0.0, 0.2f64.sqrt()], [0.0, 0.0]])) < 1e-15);

    let opt = make_amplitude_damping(0.2, DampingForm::Optimized).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let s = 0.2f64.sqrt();
    let t = 0.8f64.sqrt();
    assert!(linalg::max_abs_diff(&opt.ops()[0], &mat(&[[r, r * s], [0.0, r * t]])) < 1e-15);
    assert!(linalg::max_abs_diff(&opt.ops()[1], &mat(&[[-r, r * s], [0.0, -r * t]])) < 1e-15);
    assert!(choi_distance(&can, &opt) < 1e-12);

    // The optimized pair is the canonical pair rotated by π/4.
    let rotated = gauge_transform(&can, &rotation_gauge(-std::f64::consts::FRAC_PI_4)).unwrap();
    for (a, b) in rotated.ops().iter().zip(opt.ops()) {
        assert!(linalg::max_abs_diff(a, b) < 1e-15);
    }
}

#[test]
fn strength_out_of_range_is_rejected() {
    assert!(make_dephasing(0.51, DephasingForm::Projective).is_err());
    assert!(make_dephasing(-0.1, DephasingForm::UnitaryMix).is_err());
    assert!(make_depolarizing(0.8, DepolarizingForm::PauliMix).is_err());
    assert!(make_amplitude_damping(1.1, DampingForm::Canonical).is_err());
    assert!(UnitalParams::new(0.5, 0.5, 0.1, 0.0).is_err());
    assert!(make_unital(UnitalParams::depolarizing(0.1), 5).is_err());
}

#[test]
fn gauge_rotation_of_unitary_mix_gives_weak_pair() {
    let eps: f64 = 0.1;
    let mix = make_dephasing(eps, DephasingForm::UnitaryMix).unwrap();
    let weak = make_dephasing(eps, DephasingForm::WeakOptimal).unwrap();
    // M'_0 = cos θ √(1−ε) I − sin θ √ε Z must equal √((1−ε)/2) I + √(ε/2) Z: θ = −π/4.
    let out = gauge_transform(&mix, &rotation_gauge(-std::f64::consts::FRAC_PI_4)).unwrap();
    assert!(linalg::max_abs_diff(&out.ops()[0], &weak.ops()[0]) < 1e-15);
    assert!(linalg::max_abs_diff(&(-&out.ops()[1]), &weak.ops()[1]) < 1e-15);
    let same = gauge_transform(&mix, &linalg::identity(2)).unwrap();
    assert_eq!(same.ops(), mix.ops());
}

#[test]
fn gauge_rejects_non_isometries() {
    let k = make_dephasing(0.1, DephasingForm::UnitaryMix).unwrap();
    let bad = linalg::identity(2) * real(1.1);
    assert!(matches!(gauge_transform(&k, &bad), Err(ChannelError::NotSemiUnitary(_))));
    let wrong = linalg::identity(3);
    assert!(matches!(gauge_transform(&k, &wrong), Err(ChannelError::GaugeShape { .. })));
}

#[test]
fn choi_of_identity_channel() {
    let ch = choi_matrix(&identity_channel());
    assert!(linalg::max_abs_diff(&ch, &linalg::identity(4)) < 1e-15);
    // Full dephasing kills the coherences: diag(1, 0, 0, 1) plus the
    // population block.
    let k = make_dephasing(0.5, DephasingForm::UnitaryMix).unwrap();
    let mut expect = CMat::zeros(4, 4);
    expect[(0, 0)] = real(1.0);
    expect[(3, 3)] = real(1.0);
    assert!(linalg::max_abs_diff(&choi_matrix(&k), &expect) < 1e-15);
}

#[test]
fn cost_closed_forms() {
    let u = KrausSet::new(vec![linalg::pauli_x()], "").unwrap();
    assert!((unraveling_cost_x(&u) - 0.5).abs() < 1e-15);
    let proj = KrausSet::new(vec![linalg::projector(0), linalg::projector(1)], "").unwrap();
    assert!((unraveling_cost_x(&proj) - 1.0).abs() < 1e-15);
    for eps in [0.02, 0.05, 0.1, 0.3] {
        let p = make_dephasing(eps, DephasingForm::Projective).unwrap();
        let w = make_dephasing(eps, DephasingForm::WeakOptimal).unwrap();
        assert!((unraveling_cost_x(&p) - (0.5 + eps)).abs() < 1e-12);
        assert!((unraveling_cost_x(&w) - (0.5 + 2.0 * eps * (1.0 - eps))).abs() < 1e-12);
        let bound = UnitalParams::dephasing(eps).optimal_cost();
        assert!((unraveling_cost_x(&w) - bound).abs() < 1e-12);
    }
}

#[test]
fn damping_cost_follows_rotation_formula() {
    let eps: f64 = 0.3;
    let can = make_amplitude_damping(eps, DampingForm::Canonical).unwrap();
    for i in 0..=16 {
        let theta = i as f64 * std::f64::consts::PI / 16.0;
        let k = gauge_transform(&can, &rotation_gauge(theta)).unwrap();
        // Cost along the real rotation family of the canonical pair.
        let expect = 1.0
            / (2.0 - 2.0 * eps
                + 4.0 * eps * eps / (1.0 + 3.0 * eps - (1.0 - eps) * (4.0 * theta).cos()));
        assert!((unraveling_cost_x(&k) - expect).abs() < 1e-12, "theta {theta}");
    }
}

#[test]
fn reparametrize_examples() {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let k = KrausSet::new(vec![linalg::identity(2) * real(r), pauli_z() * real(r)], "").unwrap();
    let rw = reparametrize(&k);
    assert!((rw.probs[0] - 0.5).abs() < 1e-15 && (rw.probs[1] - 0.5).abs() < 1e-15);
    assert!(linalg::max_abs_diff(&rw.normed_ops[0], &linalg::identity(2)) < 1e-15);
    assert!(linalg::max_abs_diff(&rw.normed_ops[1], &pauli_z()) < 1e-15);

    let w = reparametrize(&make_dephasing(0.1, DephasingForm::WeakOptimal).unwrap());
    assert!(w.probs.iter().all(|p| (p - 0.5).abs() < 1e-15));

    let split = KrausSet::new(vec![pauli_z() * real(r), pauli_z() * real(r)], "").unwrap();
    let whole = KrausSet::new(vec![pauli_z()], "").unwrap();
    assert!((reparametrize(&split).cost_x() - 0.5).abs() < 1e-15);
    assert!((reparametrize(&whole).cost_x() - 0.5).abs() < 1e-15);
}

#[test]
fn reparametrize_drops_zero_operators() {
    let k = make_amplitude_damping(0.0, DampingForm::Canonical).unwrap();
    let rw = reparametrize(&k);
    assert_eq!(rw.probs.len(), 1);
    assert!((unraveling_cost_x(&k) - 0.5).abs() < 1e-15);
}

#[test]
fn unital_constructions_saturate_bound_and_satisfy_design_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..50 {
        let p0 = if trial == 0 { 1.0 } else { rng.random_range(0.5..1.0) };
        let w: [f64; 3] = [rng.random(), rng.random(), rng.random()];
        let s: f64 = w.iter().sum();
        let rest = 1.0 - p0;
        let p = UnitalParams::new(p0, rest * w[0] / s, rest * w[1] / s, rest * w[2] / (s)).unwrap();
        let canon = make_pauli_mixture(p).unwrap();
        for n in [4, 6] {
            let k = make_unital(p, n).unwrap();
            assert!(choi_distance(&k, &canon) < 1e-12);
            assert!((unraveling_cost_x(&k) - p.optimal_cost()).abs() < 1e-10);
            let dirs = if n == 4 { tetrahedron_directions(&p) } else { octahedron_directions(&p) };
            let q = [p.px, p.py, p.pz];
            for a in 0..3 {
                let sum: f64 = dirs.iter().map(|u| u[a]).sum();
                assert!(sum.abs() < 1e-10);
                for b in 0..3 {
                    let m: f64 = dirs.iter().map(|u| u[a] * u[b]).sum();
                    let expect = if a == b && rest > 0.0 { n as f64 * q[a] / rest } else { 0.0 };
                    if rest > 0.0 {
                        assert!((m - expect).abs() < 1e-10, "n={n} a={a} b={b} m={m} e={expect}");
                    }
                }
            }
            for u in &dirs {
                assert!((u.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn isotropic_octahedron_is_axis_aligned() {
    let dirs = octahedron_directions(&UnitalParams::depolarizing(0.3));
    for u in dirs {
        let big = u.iter().filter(|v| (v.abs() - 1.0).abs() < 1e-12).count();
        let zero = u.iter().filter(|v| v.abs() < 1e-12).count();
        assert_eq!((big, zero), (1, 2));
    }
}

#[test]
fn sampled_gauges_never_beat_the_analytic_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let p0 = rng.random_range(0.55..0.99);
        let a: f64 = rng.random();
        let b: f64 = rng.random::<f64>() * (1.0 - a);
        let rest = 1.0 - p0;
        let p = UnitalParams::new(p0, rest * a, rest * b, rest * (1.0 - a - b)).unwrap();
        let k = make_unital(p, 4).unwrap();
        let x0 = unraveling_cost_x(&k);
        for m in [4, 6] {
            for _ in 0..20 {
                let u = haar_unitary(m, &mut rng).columns(0, 4).into_owned();
                let x = unraveling_cost_x(&gauge_transform(&k, &u).unwrap());
                assert!(x <= x0 + 1e-9);
            }
        }
    }
}

#[test]
fn optimizer_reaches_unital_bound() {
    let k = make_depolarizing(0.1, DepolarizingForm::PauliMix).unwrap();
    let out = optimize_unraveling(&k, 4, 2000, 1).unwrap();
    assert!((out.x - 0.68).abs() < 1e-6, "x = {}", out.x);
    assert!(choi_distance(&out.kraus, &k) < 1e-12);
}

#[test]
fn optimizer_recovers_damping_angle() {
    let eps = 0.1;
    let k = make_amplitude_damping(eps, DampingForm::Canonical).unwrap();
    let out = optimize_unraveling(&k, 2, 2000, 3).unwrap();
    let target = (1.0 + eps) / 2.0;
    assert!((out.x - target).abs() < 1e-6, "x = {}", out.x);
    let theta = out.gauge[(0, 0)].norm().acos();
    assert!((theta - std::f64::consts::FRAC_PI_4).abs() < 1e-6, "theta = {theta}");
}

#[test]
fn optimizer_fixed_point_and_determinism() {
    let k = make_depolarizing(0.2, DepolarizingForm::WeakTetrahedron).unwrap();
    let x0 = unraveling_cost_x(&k);
    let a = optimize_unraveling(&k, 4, 500, 9).unwrap();
    let b = optimize_unraveling(&k, 4, 500, 9).unwrap();
    assert!((a.x - x0).abs() < 1e-9);
    assert_eq!(a.kraus.ops(), b.kraus.ops());
    assert!(optimize_unraveling(&k, 3, 10, 0).is_err());
}

#[test]
fn record_round_trip() {
    let k = make_amplitude_damping(0.2, DampingForm::Optimized).unwrap();
    let json = serde_json::to_string(&k.to_record()).unwrap();
    let back: KrausRecord = serde_json::from_str(&json).unwrap();
    let k2 = KrausSet::from_record(&back).unwrap();
    assert_eq!(k, k2);
}

#[test]
fn noise_model_dispatch() {
    let m = NoiseModel::dephasing(0.1);
    assert_eq!(m.kraus(Unraveling::Projective).unwrap().len(), 3);
    assert!(m.kraus(Unraveling::Erasure).is_err());
    assert!(NoiseModel::amplitude_damping(0.1).kraus(Unraveling::Projective).is_err());
    let u = NoiseModel::unital(UnitalParams::new(0.8, 0.1, 0.05, 0.05).unwrap());
    assert_eq!(u.kraus(Unraveling::WeakOctahedron).unwrap().len(), 6);
}

fn arb_unitary(n: usize) -> impl Strategy<Value = CMat> {
    any::<u64>().prop_map(move |s| haar_unitary(n, &mut ChaCha8Rng::seed_from_u64(s)))
}

proptest! {
    #[test]
    fn choi_is_gauge_invariant(eps in 0.0..0.75f64, u in arb_unitary(6)) {
        let k = make_depolarizing(eps, DepolarizingForm::PauliMix).unwrap();
        let iso = u.columns(0, 4).into_owned();
        let out = gauge_transform(&k, &iso).unwrap();
        prop_assert!(choi_distance(&out, &k) < 1e-10);
        prop_assert!(out.completeness_error() < 1e-12);
        let ch = choi_matrix(&out);
        prop_assert!(linalg::max_abs_diff(&ch, &ch.adjoint()) < 1e-12);
    }

    #[test]
    fn weak_dephasing_beats_projective(eps in 1e-6..0.5f64) {
        let p = unraveling_cost_x(&make_dephasing(eps, DephasingForm::Projective).unwrap());
        let w = unraveling_cost_x(&make_dephasing(eps, DephasingForm::WeakOptimal).unwrap());
        prop_assert!(w > p);
    }

    #[test]
    fn duplicating_an_operator_keeps_cost(eps in 0.0..0.75f64, which in 0usize..4) {
        let k = make_depolarizing(eps, DepolarizingForm::WeakTetrahedron).unwrap();
        let mut ops = k.ops().to_vec();
        let r = real(std::f64::consts::FRAC_1_SQRT_2);
        let m = ops[which].clone() * r;
        ops[which] = m.clone();
        ops.push(m);
        let split = KrausSet::new(ops, "").unwrap();
        prop_assert!((unraveling_cost_x(&split) - unraveling_cost_x(&k)).abs() < 1e-12);
    }

    #[test]
    fn cost_stays_in_qubit_range(u in arb_unitary(4), eps in 0.0..0.5f64) {
        let k = make_dephasing(eps, DephasingForm::Projective).unwrap();
        let x = unraveling_cost_x(&gauge_transform(&k, &u.columns(0, 3).into_owned()).unwrap());
        prop_assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&x));
    }
}
