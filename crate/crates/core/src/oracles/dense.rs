//! Dense state-vector and density-matrix simulators for small systems.
//!
//! Qubit 0 is the most significant bit of a basis index. Two-qubit matrices
//! act on `|b_i b_j⟩` with index `2 b_i + b_j`.

use rand::Rng;

use super::{OracleError, OracleResult};
use crate::channels::KrausSet;
use crate::linalg::{self, CMat, C64, ONE, ZERO};

pub const MAX_VECTOR_QUBITS: usize = 20;
pub const MAX_DENSITY_QUBITS: usize = 8;

#[inline]
fn bit_of(idx: usize, q: usize, n: usize) -> usize {
    (idx >> (n - 1 - q)) & 1
}

#[inline]
fn mask(q: usize, n: usize) -> usize {
    1 << (n - 1 - q)
}

/// Applies a one-qubit matrix to every column of a `2^n × m` buffer stored
/// column by column.
fn apply_1q_columns(data: &mut [C64], n: usize, q: usize, g: &CMat) {
    let dim = 1usize << n;
    let m = mask(q, n);
    for col in data.chunks_mut(dim) {
        for idx in 0..dim {
            if idx & m != 0 {
                continue;
            }
            let (a, b) = (col[idx], col[idx | m]);
            col[idx] = g[(0, 0)] * a + g[(0, 1)] * b;
            col[idx | m] = g[(1, 0)] * a + g[(1, 1)] * b;
        }
    }
}

fn apply_2q_columns(data: &mut [C64], n: usize, qi: usize, qj: usize, g: &CMat) {
    let dim = 1usize << n;
    let (mi, mj) = (mask(qi, n), mask(qj, n));
    for col in data.chunks_mut(dim) {
        for idx in 0..dim {
            if idx & (mi | mj) != 0 {
                continue;
            }
            let ids = [idx, idx | mj, idx | mi, idx | mi | mj];
            let v = ids.map(|k| col[k]);
            for (r, &k) in ids.iter().enumerate() {
                col[k] = (0..4).map(|c| g[(r, c)] * v[c]).sum();
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseVector {
    n: usize,
    amps: Vec<C64>,
}

impl DenseVector {
    pub fn zero_state(n: usize) -> OracleResult<Self> {
        if n == 0 || n > MAX_VECTOR_QUBITS {
            return Err(OracleError::TooLarge { n, max: MAX_VECTOR_QUBITS });
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> OracleResult<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n || n == 0 || n > MAX_VECTOR_QUBITS {
            return Err(OracleError::TooLarge { n, max: MAX_VECTOR_QUBITS });
        }
        Ok(Self { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn apply_1q(&mut self, q: usize, g: &CMat) {
        apply_1q_columns(&mut self.amps, self.n, q, g);
    }

    pub fn apply_2q(&mut self, qi: usize, qj: usize, g: &CMat) {
        apply_2q_columns(&mut self.amps, self.n, qi, qj, g);
    }

    fn scale(&mut self, f: f64) {
        self.amps.iter_mut().for_each(|z| *z *= f);
    }

    /// Born-samples a Kraus outcome on qubit `q` and applies it.
    pub fn apply_kraus<R: Rng + ?Sized>(&mut self, q: usize, k: &KrausSet, rng: &mut R) -> OracleResult<usize> {
        let mut branches = Vec::with_capacity(k.len());
        let mut probs = Vec::with_capacity(k.len());
        for m in k.ops() {
            let mut b = self.clone();
            b.apply_1q(q, m);
            probs.push(b.norm_sqr());
            branches.push(b);
        }
        let total: f64 = probs.iter().sum();
        if total < 1e-14 {
            return Err(OracleError::Degenerate);
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc && *p > 0.0 {
                pick = i;
                break;
            }
        }
        *self = branches.swap_remove(pick);
        self.scale(1.0 / probs[pick].sqrt());
        Ok(pick)
    }

    pub fn prob_one(&self, q: usize) -> f64 {
        let m = mask(q, self.n);
        self.amps.iter().enumerate().filter(|(i, _)| i & m != 0).map(|(_, z)| z.norm_sqr()).sum()
    }

    /// Projects qubit `q` on `bit`, resets it to `|0⟩`, renormalizes, and
    /// returns the outcome probability.
    pub fn project_reset(&mut self, q: usize, bit: u8) -> f64 {
        let m = mask(q, self.n);
        let p1 = self.prob_one(q);
        let p = if bit == 1 { p1 } else { self.norm_sqr() - p1 };
        for idx in 0..self.amps.len() {
            if idx & m != 0 {
                let v = self.amps[idx];
                self.amps[idx] = ZERO;
                if bit == 1 {
                    self.amps[idx & !m] = v;
                }
            } else if bit == 1 {
                self.amps[idx] = ZERO;
            }
        }
        if p > 0.0 {
            self.scale(1.0 / p.sqrt());
        }
        p
    }

    pub fn measure_reset<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> u8 {
        let p1 = self.prob_one(q) / self.norm_sqr();
        let bit = u8::from(rng.random::<f64>() >= 1.0 - p1);
        self.project_reset(q, bit);
        bit
    }

    /// Reduced density matrix of the listed qubits (in the listed order).
    pub fn reduced_density(&self, keep: &[usize]) -> CMat {
        let n = self.n;
        let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let (ka, kb) = (1usize << keep.len(), 1usize << rest.len());
        let mut psi = CMat::zeros(ka, kb);
        for (idx, z) in self.amps.iter().enumerate() {
            let a = keep.iter().fold(0, |acc, &q| (acc << 1) | bit_of(idx, q, n));
            let b = rest.iter().fold(0, |acc, &q| (acc << 1) | bit_of(idx, q, n));
            psi[(a, b)] = *z;
        }
        &psi * psi.adjoint()
    }

    /// Rényi entropy (natural log) of the listed qubits.
    pub fn entropy(&self, subsystem: &[usize], order: f64) -> f64 {
        if subsystem.is_empty() || subsystem.len() == self.n {
            return 0.0;
        }
        // A pure state has the same spectrum on both sides of a cut.
        let rho = if 2 * subsystem.len() > self.n {
            let rest: Vec<usize> = (0..self.n).filter(|q| !subsystem.contains(q)).collect();
            self.reduced_density(&rest)
        } else {
            self.reduced_density(subsystem)
        };
        let tr = linalg::trace(&rho).re;
        let ev: Vec<f64> = linalg::hermitian_eigenvalues(&rho).into_iter().map(|x| (x / tr).max(0.0)).collect();
        linalg::renyi_of_spectrum(&ev, order)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    rho: CMat,
}

impl DensityMatrix {
    pub fn zero_state(n: usize) -> OracleResult<Self> {
        if n == 0 || n > MAX_DENSITY_QUBITS {
            return Err(OracleError::TooLarge { n, max: MAX_DENSITY_QUBITS });
        }
        let dim = 1 << n;
        let mut rho = CMat::zeros(dim, dim);
        rho[(0, 0)] = ONE;
        Ok(Self { n, rho })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }

    fn conjugate_by(&mut self, apply: impl Fn(&mut [C64])) {
        // ρ → G ρ G†, as G(Gρ)†)† on column buffers.
        apply(self.rho.as_mut_slice());
        let mut t = self.rho.adjoint();
        apply(t.as_mut_slice());
        self.rho = t.adjoint();
    }

    pub fn apply_1q(&mut self, q: usize, g: &CMat) {
        let n = self.n;
        self.conjugate_by(|buf| apply_1q_columns(buf, n, q, g));
    }

    pub fn apply_2q(&mut self, qi: usize, qj: usize, g: &CMat) {
        let n = self.n;
        self.conjugate_by(|buf| apply_2q_columns(buf, n, qi, qj, g));
    }

    pub fn apply_channel(&mut self, q: usize, k: &KrausSet) {
        let dim = 1 << self.n;
        let mut acc = CMat::zeros(dim, dim);
        for m in k.ops() {
            let mut branch = self.clone();
            branch.apply_1q(q, m);
            acc += branch.rho;
        }
        self.rho = acc;
    }

    /// `ρ → |0⟩⟨b|ρ|b⟩⟨0|` on qubit `q` without renormalizing.
    pub fn project_reset(&mut self, q: usize, bit: u8) {
        let mut k = CMat::zeros(2, 2);
        k[(0, bit as usize)] = ONE;
        self.apply_1q(q, &k);
    }

    /// `⟨z|ρ|z⟩` with `z[q]` the bit of qubit `q`.
    pub fn probability(&self, z: &[u8]) -> f64 {
        let idx = z.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        self.rho[(idx, idx)].re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|i| self.rho[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.rho).re
    }

    /// Marginal probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let m = mask(q, self.n);
        (0..self.rho.nrows()).filter(|i| i & m != 0).map(|i| self.rho[(i, i)].re).sum()
    }

    /// Trace distance to the maximally mixed state.
    pub fn distance_to_maximally_mixed(&self) -> f64 {
        let dim = self.rho.nrows();
        let diff = &self.rho - linalg::identity(dim) * C64::new(1.0 / dim as f64, 0.0);
        0.5 * linalg::hermitian_eigenvalues(&diff).iter().map(|x| x.abs()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{make_depolarizing, DepolarizingForm};
    use crate::linalg::{haar_unitary, pauli_x};
    use crate::mps::cnot;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bell_pair_entropy_and_ordering() {
        let mut v = DenseVector::zero_state(2).unwrap();
        v.apply_1q(0, &pauli_x());
        // |10⟩ has index 2.
        assert!((v.amplitudes()[2].re - 1.0).abs() < 1e-15);
        let mut v = DenseVector::zero_state(3).unwrap();
        let h = CMat::from_row_slice(2, 2, &[ONE, ONE, ONE, -ONE]) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        v.apply_1q(0, &h);
        v.apply_2q(0, 2, &cnot());
        assert!((v.entropy(&[0], 1.0) - 2f64.ln()).abs() < 1e-12);
        assert!(v.entropy(&[1], 1.0).abs() < 1e-12);
        assert!((v.probabilities()[0b101] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn density_matrix_tracks_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut v = DenseVector::zero_state(3).unwrap();
        let mut r = DensityMatrix::zero_state(3).unwrap();
        for (a, b) in [(0, 1), (2, 1), (0, 2)] {
            let u = haar_unitary(4, &mut rng);
            v.apply_2q(a, b, &u);
            r.apply_2q(a, b, &u);
        }
        let p = v.probabilities();
        for (i, d) in r.diagonal().iter().enumerate() {
            assert!((p[i] - d).abs() < 1e-12);
        }
    }

    #[test]
    fn full_depolarizing_reaches_maximally_mixed() {
        let k = make_depolarizing(0.75, DepolarizingForm::PauliMix).unwrap();
        let mut r = DensityMatrix::zero_state(3).unwrap();
        for q in 0..3 {
            r.apply_channel(q, &k);
        }
        assert!(r.distance_to_maximally_mixed() < 1e-12);
        assert!((r.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn caps_are_enforced() {
        assert!(DensityMatrix::zero_state(9).is_err());
        assert!(DenseVector::zero_state(21).is_err());
    }
}
