//! Monitored-circuit drivers for locating entanglement transitions with `I_3`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quarters, tripartite_from};
use crate::channels::{NoiseModel, Unraveling};
use crate::lightcone::{build_lattice, compile_sebd, random_instance, GateFamily, LatticeKind, Schedule};
use crate::linalg;
use crate::oracles::dense::DenseVector;
use crate::oracles::tableau::{CliffordProgram, TableauNoise};
use crate::oracles::OracleResult;

/// Trajectory mean of `I_3` with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct I3Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub realizations: usize,
}

fn summarize(values: &[f64]) -> I3Estimate {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    I3Estimate { mean, stderr: (var / n).sqrt(), realizations: values.len() }
}

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

fn average(realizations: usize, seed: u64, f: impl Fn(&mut ChaCha8Rng) -> OracleResult<f64> + Sync) -> OracleResult<I3Estimate> {
    let values: OracleResult<Vec<f64>> =
        (0..realizations as u64).into_par_iter().map(|k| f(&mut stream(seed, k))).collect();
    Ok(summarize(&values?))
}

/// Periodic 1D brickwork of Haar two-qubit gates on `l` qubits with
/// dephasing after every layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarChain {
    pub l: usize,
    /// Number of brickwork layers; `4 l` is late time.
    pub layers: usize,
    pub eps: f64,
    pub unraveling: Unraveling,
    /// Rényi index used in `I_3`.
    pub order: f64,
}

impl HaarChain {
    pub fn late_time(l: usize, eps: f64, unraveling: Unraveling) -> Self {
        Self { l, layers: 4 * l, eps, unraveling, order: 1.0 }
    }

    pub fn i3_trajectory<R: Rng + ?Sized>(&self, rng: &mut R) -> OracleResult<f64> {
        let l = self.l;
        let kraus = NoiseModel::dephasing(self.eps).kraus(self.unraveling)?;
        let mut psi = DenseVector::zero_state(l)?;
        for t in 0..self.layers {
            for k in 0..l / 2 {
                let a = (2 * k + t % 2) % l;
                let u = linalg::haar_unitary(4, rng);
                psi.apply_2q(a, (a + 1) % l, &u);
            }
            if self.eps > 0.0 {
                for q in 0..l {
                    psi.apply_kraus(q, &kraus, rng)?;
                }
            }
        }
        let [a, b, c, _] = quarters(l);
        Ok(tripartite_from(|s| psi.entropy(s, self.order), &a, &b, &c))
    }

    pub fn i3(&self, realizations: usize, seed: u64) -> OracleResult<I3Estimate> {
        average(realizations, seed, |rng| self.i3_trajectory(rng))
    }
}

/// The noisy-SEBD effective dynamics of a depth-`T` Clifford circuit on an
/// `L_x`-wide strip, with projective `Z` noise at rate `2ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffordStrip {
    pub lx: usize,
    pub schedule: Schedule,
    pub eps: f64,
    /// Rows swept before `I_3` is evaluated.
    pub rows: usize,
}

impl CliffordStrip {
    /// ABCD repeated to depth `t`, swept for `L_x` rows.
    pub fn new(lx: usize, t: usize, eps: f64) -> Self {
        let s: String = "ABCD".chars().cycle().take(t).collect();
        Self { lx, schedule: s.parse().expect("ABCD prefix parses"), eps, rows: lx }
    }

    pub fn i3_trajectory<R: Rng + ?Sized>(&self, rng: &mut R) -> OracleResult<f64> {
        // Extra rows above the evaluation point keep its lightcone bulk-like.
        let ly = self.rows + self.schedule.depth() + 2;
        let lat = build_lattice(LatticeKind::Square, self.lx, ly)?;
        let seed = rng.random::<u64>();
        let noise = NoiseModel::dephasing(self.eps);
        let circ = random_instance(&lat, &self.schedule, GateFamily::CliffordIswapSwap, noise, seed)?;
        let ec = compile_sebd(&circ)?;
        let prog = CliffordProgram::from_effective(&ec, TableauNoise::ProjectiveZ)?.truncated(self.rows);
        let (t, _) = prog.run(rng);
        let [a, b, c, _] = quarters(t.n_qubits());
        Ok(t.i3(&a, &b, &c))
    }

    pub fn i3(&self, realizations: usize, seed: u64) -> OracleResult<I3Estimate> {
        average(realizations, seed, |rng| self.i3_trajectory(rng))
    }
}

/// Conventional MIPT on an `L × L` square: Clifford layers to depth `t`,
/// projective `Z` at rate `2ε` after each layer, `I_3` over `L/4 × L`
/// column blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffordSquare {
    pub l: usize,
    pub depth: usize,
    pub eps: f64,
}

impl CliffordSquare {
    /// Depth `2L`.
    pub fn new(l: usize, eps: f64) -> Self {
        Self { l, depth: 2 * l, eps }
    }

    pub fn i3_trajectory<R: Rng + ?Sized>(&self, rng: &mut R) -> OracleResult<f64> {
        let lat = build_lattice(LatticeKind::Square, self.l, self.l)?;
        let s: String = "ABCD".chars().cycle().take(self.depth).collect();
        let sched: Schedule = s.parse().expect("ABCD prefix parses");
        let seed = rng.random::<u64>();
        let noise = NoiseModel::dephasing(self.eps);
        let circ = random_instance(&lat, &sched, GateFamily::CliffordIswapSwap, noise, seed)?;
        let (t, _) = CliffordProgram::from_circuit(&circ, TableauNoise::ProjectiveZ)?.run(rng);
        let block = |k: usize| -> Vec<usize> {
            (0..lat.n_sites()).filter(|&q| lat.sites[q].0 * 4 / self.l == k).collect()
        };
        Ok(t.i3(&block(0), &block(1), &block(2)))
    }

    pub fn i3(&self, realizations: usize, seed: u64) -> OracleResult<I3Estimate> {
        average(realizations, seed, |rng| self.i3_trajectory(rng))
    }
}
