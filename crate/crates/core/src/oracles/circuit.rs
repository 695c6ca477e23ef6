//! Exact references for whole circuits, in both the 2D and the compiled form.

use super::dense::{DenseVector, DensityMatrix};
use super::OracleResult;
use crate::channels::{KrausSet, NoiseModel, Unraveling};
use crate::lightcone::{Circuit2D, EffectiveCircuit1D, Event};

/// Bits of `index` over `n` qubits, qubit 0 most significant.
pub fn bits_of(index: usize, n: usize) -> Vec<u8> {
    (0..n).map(|q| ((index >> (n - 1 - q)) & 1) as u8).collect()
}

pub fn index_of(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

pub(crate) fn channel_of(noise: &NoiseModel) -> OracleResult<Option<KrausSet>> {
    if noise.is_trivial() {
        return Ok(None);
    }
    Ok(Some(noise.kraus(Unraveling::Canonical)?))
}

/// The noisy output state: each layer's gates followed by the channel on
/// every qubit.
pub fn dense_evolve(c: &Circuit2D) -> OracleResult<DensityMatrix> {
    let n = c.n_qubits();
    let mut rho = DensityMatrix::zero_state(n)?;
    let channel = channel_of(&c.noise)?;
    for layer in &c.layers {
        for s in &layer.singles {
            rho.apply_1q(s.site, &s.matrix);
        }
        for g in &layer.gates {
            rho.apply_2q(g.a, g.b, &g.matrix);
        }
        if let Some(k) = &channel {
            for q in 0..n {
                rho.apply_channel(q, k);
            }
        }
    }
    Ok(rho)
}

/// Noiseless output state vector (noise is ignored).
pub fn dense_unitary(c: &Circuit2D) -> OracleResult<DenseVector> {
    let mut v = DenseVector::zero_state(c.n_qubits())?;
    for layer in &c.layers {
        for s in &layer.singles {
            v.apply_1q(s.site, &s.matrix);
        }
        for g in &layer.gates {
            v.apply_2q(g.a, g.b, &g.matrix);
        }
    }
    Ok(v)
}

/// `P(z)` by replaying the compiled event stream on a density matrix over the
/// 1D slots, projecting every readout onto its target bit.
pub fn replay_probability(ec: &EffectiveCircuit1D, z: &[u8]) -> OracleResult<f64> {
    let mut rho = DensityMatrix::zero_state(ec.n_sites)?;
    let channel = channel_of(&ec.noise)?;
    for e in ec.events() {
        match e {
            Event::Gate { i, j, matrix } => rho.apply_2q(*i, *j, matrix),
            Event::Single { i, matrix } => rho.apply_1q(*i, matrix),
            Event::Noise { i } => {
                if let Some(k) = &channel {
                    rho.apply_channel(*i, k);
                }
            }
            Event::MeasureReset { i, site, .. } => rho.project_reset(*i, z[*site]),
        }
    }
    Ok(rho.trace())
}

/// Noiseless `P(z)` by replaying the compiled stream on a state vector.
pub fn replay_probability_pure(ec: &EffectiveCircuit1D, z: &[u8]) -> OracleResult<f64> {
    let mut v = DenseVector::zero_state(ec.n_sites)?;
    let mut p = 1.0;
    for e in ec.events() {
        match e {
            Event::Gate { i, j, matrix } => v.apply_2q(*i, *j, matrix),
            Event::Single { i, matrix } => v.apply_1q(*i, matrix),
            Event::Noise { .. } => {}
            Event::MeasureReset { i, site, .. } => {
                p *= v.project_reset(*i, z[*site]);
                if p == 0.0 {
                    return Ok(0.0);
                }
            }
        }
    }
    Ok(p)
}
