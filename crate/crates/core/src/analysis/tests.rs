use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mipt::{CliffordSquare, CliffordStrip, HaarChain};
use super::*;
use crate::channels::Unraveling;
use crate::linalg::{C64, ZERO};
use crate::oracles::dense::DenseVector;

const LN2: f64 = std::f64::consts::LN_2;

#[test]
fn exact_exponential_gives_exact_tau() {
    let s: Vec<f64> = (0..40).map(|t| (-(t as f64) / 5.0).exp()).collect();
    let fit = fit_tau(&s, (0, 39)).unwrap();
    assert!((fit.tau - 5.0).abs() < 1e-6);
    assert!(fit.residual < 1e-12);
}

#[test]
fn noisy_planted_tau_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let s: Vec<f64> =
        (0..30).map(|t| 0.9 * (-(t as f64) / 3.0).exp() + 1e-4 * (rng.random::<f64>() - 0.5) * 12f64.sqrt()).collect();
    // Points lost in the noise floor would bias the fit; fit where the signal dominates.
    let fit = fit_tau(&s, (0, 12)).unwrap();
    assert!((fit.tau - 3.0).abs() < 0.06, "{fit:?}");
}

#[test]
fn degenerate_series_are_reported() {
    assert!(matches!(fit_tau(&[0.3; 20], (0, 19)), Err(AnalysisError::Unbounded(_))));
    assert!(matches!(fit_tau(&[0.0; 20], (0, 19)), Err(AnalysisError::EmptyWindow { .. })));
    assert!(matches!(fit_tau(&[1.0, 0.5], (5, 9)), Err(AnalysisError::EmptyWindow { .. })));
    assert_eq!(default_window(8), (8, 16));
}

#[test]
fn tau_scales_with_the_time_axis() {
    let s: Vec<f64> = (0..60).map(|t| (-(t as f64) / 4.0).exp()).collect();
    let stretched: Vec<f64> = (0..120).map(|t| (-(t as f64) / 8.0).exp()).collect();
    let a = fit_tau(&s, (10, 50)).unwrap();
    let b = fit_tau(&stretched, (20, 100)).unwrap();
    assert!((b.tau - 2.0 * a.tau).abs() < 1e-9);
}

fn ghz(n: usize) -> DenseVector {
    let mut amps = vec![ZERO; 1 << n];
    amps[0] = C64::new(0.5f64.sqrt(), 0.0);
    amps[(1 << n) - 1] = amps[0];
    DenseVector::from_amplitudes(amps).unwrap()
}

#[test]
fn tripartite_information_of_textbook_states() {
    let product = DenseVector::zero_state(8).unwrap();
    let [a, b, c, _] = quarters(8);
    for order in [0.8, 1.0, 2.0] {
        assert!(tripartite_mi(|s| product.entropy(s, order), &a, &b, &c).unwrap().abs() < 1e-12);
    }
    let g = ghz(8);
    let i3 = tripartite_mi(|s| g.entropy(s, 1.0), &a, &b, &c).unwrap();
    assert!((i3 - LN2).abs() < 1e-12);
    assert_eq!(tripartite_mi(|_| 0.0, &[0, 1], &[1, 2], &[3]), Err(AnalysisError::Overlap(1)));
}

#[test]
fn tripartite_information_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let amps: Vec<C64> = (0..256).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let psi = DenseVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap();
    let [a, b, c, _] = quarters(8);
    let e = |s: &[usize]| psi.entropy(s, 1.0);
    let base = tripartite_mi(e, &a, &b, &c).unwrap();
    for (x, y, z) in [(&b, &a, &c), (&c, &b, &a), (&a, &c, &b), (&b, &c, &a), (&c, &a, &b)] {
        assert!((tripartite_mi(e, x, y, z).unwrap() - base).abs() < 1e-12);
    }
}

fn planted(eps_c: f64, nu: f64) -> Vec<ScalingPoint> {
    let mut pts = Vec::new();
    for l in [8.0, 12.0, 16.0, 24.0] {
        for k in 0..=20 {
            let eps = 0.01 + 0.004 * k as f64;
            pts.push(ScalingPoint { eps, l, y: ((eps - eps_c) * f64::powf(l, 1.0 / nu)).tanh() });
        }
    }
    pts
}

fn coarse(points: &[ScalingPoint]) -> CollapseGrid {
    CollapseGrid { eps_step: 2e-3, nu_step: 2e-2, ..CollapseGrid::for_points(points) }
}

#[test]
fn collapse_recovers_planted_parameters() {
    let pts = planted(0.05, 1.3);
    let fit = data_collapse(&pts, &coarse(&pts)).unwrap();
    assert!(fit.identifiable);
    assert!((fit.eps_c - 0.05).abs() < 0.05 * 0.05, "{fit:?}");
    assert!((fit.nu - 1.3).abs() < 0.13, "{fit:?}");
    assert!(fit.eps_box.0 <= fit.eps_c && fit.eps_c <= fit.eps_box.1);
    assert!(fit.nu_box.0 <= fit.nu && fit.nu <= fit.nu_box.1);
}

#[test]
fn collapse_argmin_is_invariant_under_reordering_and_scaling() {
    let pts = planted(0.04, 1.2);
    let grid = coarse(&pts);
    let base = data_collapse(&pts, &grid).unwrap();
    let mut shuffled = pts.clone();
    shuffled.reverse();
    shuffled.rotate_left(17);
    let scaled: Vec<ScalingPoint> = pts.iter().map(|p| ScalingPoint { y: 3.0 * p.y, ..*p }).collect();
    for other in [data_collapse(&shuffled, &grid).unwrap(), data_collapse(&scaled, &grid).unwrap()] {
        assert!((other.eps_c - base.eps_c).abs() < 1e-6, "{} vs {}", other.eps_c, base.eps_c);
        assert!((other.nu - base.nu).abs() < 1e-6, "{} vs {}", other.nu, base.nu);
    }
}

#[test]
fn flat_data_is_not_identifiable() {
    let pts: Vec<ScalingPoint> = planted(0.05, 1.3).into_iter().map(|p| ScalingPoint { y: 0.7, ..p }).collect();
    let fit = data_collapse(&pts, &coarse(&pts)).unwrap();
    assert!(!fit.identifiable);
    assert!(fit.r_min < 1e-20);
}

#[test]
fn degenerate_collapse_inputs_are_rejected() {
    let one_size: Vec<ScalingPoint> = (0..5).map(|k| ScalingPoint { eps: k as f64 * 0.01, l: 8.0, y: k as f64 }).collect();
    assert_eq!(data_collapse(&one_size, &CollapseGrid::for_points(&one_size)), Err(AnalysisError::DegenerateCollapse));
    let pts = planted(0.05, 1.3);
    let bad = CollapseGrid { nu_step: 0.0, ..coarse(&pts) };
    assert!(matches!(data_collapse(&pts, &bad), Err(AnalysisError::Grid(_))));
}

#[test]
fn crossings_of_planted_curves() {
    let curves: Vec<SizeCurve> = [8.0, 16.0, 32.0]
        .iter()
        .map(|&l| SizeCurve {
            l,
            points: (0..=10).map(|k| {
                let e = 0.1 + 0.012 * k as f64;
                (e, ((e - 0.16) * f64::powf(l, 0.8)).tanh())
            }).collect(),
        })
        .collect();
    let est = find_crossings(&curves);
    assert_eq!(est.pairs.len(), 2);
    assert!((est.eps.unwrap() - 0.16).abs() < 1e-3);
    assert_eq!(find_crossings(&curves[..1]).eps, None);
}

#[test]
fn fidelity_conversions() {
    assert_eq!(epsilon_to_fidelity(0.0), 1.0);
    assert!((fidelity_to_epsilon(0.96).unwrap().linear - 0.025).abs() < 1e-15);
    let f = epsilon_to_fidelity(0.025);
    assert!((f - (0.975f64.powi(2) + 0.025 * 1.975 / 5.0)).abs() < 1e-15);
    assert!((f - 0.9605).abs() < 1e-15);
    assert!((fidelity_to_epsilon(f).unwrap().exact - 0.025).abs() < 1e-12);
    assert_eq!(fidelity_to_epsilon(1.2), Err(AnalysisError::FidelityRange(1.2)));
    assert_eq!(fidelity_to_epsilon(0.1), Err(AnalysisError::FidelityRange(0.1)));
}

proptest! {
    #[test]
    fn fidelity_round_trip(eps in 0.0f64..=0.2) {
        let back = fidelity_to_epsilon(epsilon_to_fidelity(eps)).unwrap().exact;
        prop_assert!((back - eps).abs() < 1e-12);
    }

    #[test]
    fn collapse_objective_ignores_point_order(seed in 0u64..1000, eps_c in 0.02f64..0.08, nu in 0.8f64..1.8) {
        let mut pts = planted(0.05, 1.3);
        let base = collapse_objective(&pts, eps_c, nu);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..pts.len()).rev() {
            pts.swap(i, rng.random_range(0..=i));
        }
        prop_assert!((collapse_objective(&pts, eps_c, nu) - base).abs() <= 1e-12 * base.max(1e-300));
    }
}

#[test]
fn haar_chain_driver_runs() {
    let clean = HaarChain::late_time(8, 0.0, Unraveling::Weak).i3(4, 0).unwrap();
    let noisy = HaarChain { layers: 16, ..HaarChain::late_time(8, 0.3, Unraveling::Projective) }.i3(4, 0).unwrap();
    assert_eq!(clean.realizations, 4);
    // Volume-law states carry negative I_3; strongly monitored ones are near zero.
    assert!(clean.mean < noisy.mean);
}

#[test]
fn clifford_drivers_run() {
    let strip = CliffordStrip::new(8, 4, 0.05).i3(3, 1).unwrap();
    assert!(strip.mean.is_finite());
    let square = CliffordSquare::new(8, 0.4).i3(2, 2).unwrap();
    assert!(square.mean.is_finite() && square.realizations == 2);
}
