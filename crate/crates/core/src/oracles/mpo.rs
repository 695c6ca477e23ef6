//! Density operators as matrix product operators.
//!
//! `ρ` is stored as a chain of local dimension 4 with site index
//! `s = 2·ket + bra`; gates act as `U ⊗ U*` and channels as `Σ M ⊗ M*` on
//! that index. Truncation never renormalizes, so the trace is tracked
//! faithfully.

use super::circuit::channel_of;
use super::{OracleError, OracleResult};
use crate::channels::KrausSet;
use crate::lightcone::{Circuit2D, EffectiveCircuit1D, Event};
use crate::linalg::{self, CMat, C64, ONE, ZERO};
use crate::mps::{MatrixProductState, TruncationPolicy};

/// Probabilities below this are an error rather than round-off.
pub const NEGATIVE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct MpoDensity {
    chain: MatrixProductState,
    /// Chain position of every qubit.
    position: Vec<usize>,
}

fn local(ket: usize, bra: usize) -> Vec<C64> {
    let mut v = vec![ZERO; 4];
    v[2 * ket + bra] = ONE;
    v
}

/// `ρ ↦ g ρ g†` on the vectorized index, for one or two qubits.
pub fn unitary_superop(g: &CMat) -> CMat {
    match g.nrows() {
        2 => linalg::kron(g, &linalg::conj(g)),
        _ => {
            // Rows and columns indexed (k_i, b_i, k_j, b_j).
            CMat::from_fn(16, 16, |r, c| {
                let (ki, bi, kj, bj) = (r >> 3 & 1, r >> 2 & 1, r >> 1 & 1, r & 1);
                let (ki0, bi0, kj0, bj0) = (c >> 3 & 1, c >> 2 & 1, c >> 1 & 1, c & 1);
                g[(2 * ki + kj, 2 * ki0 + kj0)] * g[(2 * bi + bj, 2 * bi0 + bj0)].conj()
            })
        }
    }
}

/// Projects onto `|bit⟩⟨bit|` and resets to `|0⟩⟨0|`.
fn project_reset_superop(bit: u8) -> CMat {
    let mut m = CMat::zeros(4, 4);
    m[(0, 3 * bit as usize)] = ONE;
    m
}

impl MpoDensity {
    /// `|0…0⟩⟨0…0|` with qubit `q` at chain position `position[q]`.
    pub fn zero_state(position: Vec<usize>) -> OracleResult<Self> {
        let locals = vec![local(0, 0); position.len()];
        let chain = MatrixProductState::from_product(4, &locals)?;
        Ok(Self { chain, position })
    }

    /// `I/2^n` in natural order.
    pub fn maximally_mixed(n: usize) -> OracleResult<Self> {
        let half = C64::new(0.5, 0.0);
        let v = vec![half, ZERO, ZERO, half];
        let chain = MatrixProductState::from_product(4, &vec![v; n])?;
        Ok(Self { chain, position: (0..n).collect() })
    }

    pub fn n_qubits(&self) -> usize {
        self.position.len()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.chain.bond_dims()
    }

    pub fn max_bond(&self) -> usize {
        self.chain.max_bond()
    }

    /// Accumulated relative discarded weight of all truncations.
    pub fn trunc_log(&self) -> f64 {
        self.chain.trunc_log()
    }

    pub fn apply_1q(&mut self, q: usize, g: &CMat) {
        self.chain.apply_local_phys(self.position[q], &unitary_superop(g));
    }

    pub fn apply_2q(&mut self, a: usize, b: usize, g: &CMat, policy: &TruncationPolicy) -> OracleResult<()> {
        let sup = unitary_superop(g);
        Ok(self.chain.apply_two_phys(self.position[a], self.position[b], &sup, policy, false)?)
    }

    pub fn apply_channel(&mut self, q: usize, k: &KrausSet) {
        self.chain.apply_local_phys(self.position[q], &k.superoperator());
    }

    fn project_reset(&mut self, q: usize, bit: u8) {
        self.chain.apply_local_phys(self.position[q], &project_reset_superop(bit));
    }

    fn contract_diagonal(&self, weight: impl Fn(usize) -> Vec<C64>) -> C64 {
        let mut by_pos = vec![Vec::new(); self.n_qubits()];
        for (q, &p) in self.position.iter().enumerate() {
            by_pos[p] = weight(q);
        }
        self.chain.contract_product(&by_pos)
    }

    pub fn trace(&self) -> f64 {
        self.contract_diagonal(|_| vec![ONE, ZERO, ZERO, ONE]).re
    }

    /// `⟨z|ρ|z⟩`, erroring if it is negative beyond round-off.
    pub fn probability(&self, z: &[u8]) -> OracleResult<f64> {
        let p = self.contract_diagonal(|q| local(z[q] as usize, z[q] as usize)).re;
        if p < -NEGATIVE_TOL {
            return Err(OracleError::NegativeProbability(p));
        }
        Ok(p.max(0.0))
    }

    /// Dense `ρ` with qubit 0 most significant; small systems only.
    pub fn to_dense(&self) -> OracleResult<CMat> {
        let n = self.n_qubits();
        if n > super::dense::MAX_DENSITY_QUBITS {
            return Err(OracleError::TooLarge { n, max: super::dense::MAX_DENSITY_QUBITS });
        }
        let dim = 1usize << n;
        Ok(CMat::from_fn(dim, dim, |r, c| {
            self.contract_diagonal(|q| local(r >> (n - 1 - q) & 1, c >> (n - 1 - q) & 1))
        }))
    }
}

/// Full output density operator of `c`, qubits chained row by row.
pub fn mpo_evolve(c: &Circuit2D, policy: &TruncationPolicy) -> OracleResult<MpoDensity> {
    let sites = &c.lattice.sites;
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by_key(|&q| (sites[q].1, sites[q].0));
    let mut position = vec![0; sites.len()];
    for (p, &q) in order.iter().enumerate() {
        position[q] = p;
    }
    let mut rho = MpoDensity::zero_state(position)?;
    let channel = channel_of(&c.noise)?;
    for layer in &c.layers {
        for s in &layer.singles {
            rho.apply_1q(s.site, &s.matrix);
        }
        for g in &layer.gates {
            rho.apply_2q(g.a, g.b, &g.matrix, policy)?;
        }
        if let Some(k) = &channel {
            for q in 0..rho.n_qubits() {
                rho.apply_channel(q, k);
            }
        }
    }
    Ok(rho)
}

pub fn mpo_probability(rho: &MpoDensity, z: &[u8]) -> OracleResult<f64> {
    rho.probability(z)
}

/// `P(z)` with the largest bond dimension and the truncation log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpoEstimate {
    pub probability: f64,
    pub max_bond: usize,
    pub trunc_log: f64,
}

/// `P(z)` by running the compiled stream on an MPO over the 1D slots,
/// projecting each readout onto its target bit. The final trace is `P(z)`.
pub fn mpo_sebd_probability(ec: &EffectiveCircuit1D, z: &[u8], policy: &TruncationPolicy) -> OracleResult<MpoEstimate> {
    let mut rho = MpoDensity::zero_state((0..ec.n_sites).collect())?;
    let channel = channel_of(&ec.noise)?;
    let mut max_bond = 1;
    for e in ec.events() {
        match e {
            Event::Gate { i, j, matrix } => {
                rho.apply_2q(*i, *j, matrix, policy)?;
                max_bond = max_bond.max(rho.max_bond());
            }
            Event::Single { i, matrix } => rho.apply_1q(*i, matrix),
            Event::Noise { i } => {
                if let Some(k) = &channel {
                    rho.apply_channel(*i, k);
                }
            }
            Event::MeasureReset { i, site, .. } => rho.project_reset(*i, z[*site]),
        }
    }
    let p = rho.trace();
    if p < -NEGATIVE_TOL {
        return Err(OracleError::NegativeProbability(p));
    }
    Ok(MpoEstimate { probability: p.max(0.0), max_bond, trunc_log: rho.trunc_log() })
}

#[cfg(test)]
mod tests;
