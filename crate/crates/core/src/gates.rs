//! Gate matrices used by the random-circuit families.

use rand::Rng;

use crate::linalg::{self, c, real, CMat, C64, I, ONE, ZERO};

/// `fSim(θ, φ)` on `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn fsim(theta: f64, phi: f64) -> CMat {
    let (s, co) = theta.sin_cos();
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = real(co);
    m[(2, 2)] = real(co);
    m[(1, 2)] = -I * s;
    m[(2, 1)] = -I * s;
    m[(3, 3)] = C64::from_polar(1.0, -phi);
    m
}

/// iSWAP with `+i` on the exchanged amplitudes.
pub fn iswap() -> CMat {
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(3, 3)] = ONE;
    m[(1, 2)] = I;
    m[(2, 1)] = I;
    m
}

pub fn swap() -> CMat {
    crate::mps::swap_gate(2)
}

pub fn cz() -> CMat {
    CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![ONE, ONE, ONE, -ONE]))
}

pub fn hadamard() -> CMat {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_row_slice(2, 2, &[real(r), real(r), real(r), real(-r)])
}

pub fn phase_s() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I])
}

/// `W = (X + Y)/√2`.
pub fn pauli_w() -> CMat {
    (linalg::pauli_x() + linalg::pauli_y()) * real(std::f64::consts::FRAC_1_SQRT_2)
}

/// `V = (X − Y)/√2`.
pub fn pauli_v() -> CMat {
    (linalg::pauli_x() - linalg::pauli_y()) * real(std::f64::consts::FRAC_1_SQRT_2)
}

/// `P^{1/2} = e^{iπ/4}(I − iP)/√2` for a Hermitian involution `P`, or its
/// inverse `e^{−iπ/4}(I + iP)/√2`. Both square to `P`.
pub fn sqrt_involution(p: &CMat, inverse: bool) -> CMat {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if inverse { -1.0 } else { 1.0 };
    let global = C64::from_polar(1.0, sign * std::f64::consts::FRAC_PI_4);
    (linalg::identity(2) - p * c(0.0, sign)) * (global * r)
}

/// The eight rotations `{X^{±1/2}, Y^{±1/2}, W^{±1/2}, V^{±1/2}}`.
pub fn sqrt_rotation_set() -> Vec<CMat> {
    let axes = [linalg::pauli_x(), linalg::pauli_y(), pauli_w(), pauli_v()];
    axes.iter()
        .flat_map(|p| [sqrt_involution(p, false), sqrt_involution(p, true)])
        .collect()
}

/// The 24 single-qubit Cliffords modulo phase, generated from `H` and `S`.
pub fn single_qubit_cliffords() -> Vec<CMat> {
    let gens = [hadamard(), phase_s()];
    let mut group = vec![linalg::identity(2)];
    let mut frontier = vec![linalg::identity(2)];
    while let Some(g) = frontier.pop() {
        for h in &gens {
            let cand = h * &g;
            if !group.iter().any(|x| equal_up_to_phase(x, &cand)) {
                group.push(cand.clone());
                frontier.push(cand);
            }
        }
    }
    group
}

pub fn equal_up_to_phase(a: &CMat, b: &CMat) -> bool {
    let ip: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    (ip.norm() - na).abs() < 1e-9 * na.max(1.0)
}

pub fn random_choice<'a, R: Rng + ?Sized>(set: &'a [CMat], rng: &mut R) -> &'a CMat {
    &set[rng.random_range(0..set.len())]
}
