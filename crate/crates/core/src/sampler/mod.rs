//! Monte Carlo trajectories of a compiled circuit.
//!
//! Every noise event is unraveled by Born-sampling one Kraus outcome, and every
//! readout is either sampled ([`run_trajectory`]) or projected onto a target
//! bit ([`estimate_probability`]). Trajectory `k` draws from the ChaCha8
//! stream `k` of the master seed, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{ChannelError, KrausSet, Unraveling};
use crate::lightcone::{EffectiveCircuit1D, Event};
use crate::mps::{MatrixProductState, MpsError, TruncationPolicy};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("trajectory count must be at least 1")]
    NoTrajectories,
    #[error("target bitstring has {got} bits, circuit has {expected} qubits")]
    TargetLength { expected: usize, got: usize },
    #[error("all {0} trajectories failed")]
    AllFailed(usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Mps(#[from] MpsError),
}

pub type SamplerResult<T> = Result<T, SamplerError>;

/// What to record besides the output bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Telemetry {
    /// Half-chain von Neumann entropy after every row.
    pub entropies: bool,
    /// Keep the per-event noise outcome record `m`.
    pub noise_record: bool,
}

impl Default for Telemetry {
    fn default() -> Self {
        Self { entropies: true, noise_record: true }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub circuit: EffectiveCircuit1D,
    pub unraveling: Unraveling,
    pub policy: TruncationPolicy,
    pub trajectories: usize,
    pub master_seed: u64,
    pub telemetry: Telemetry,
    kraus: Option<KrausSet>,
}

impl RunConfig {
    pub fn new(
        circuit: EffectiveCircuit1D,
        unraveling: Unraveling,
        policy: TruncationPolicy,
        trajectories: usize,
        master_seed: u64,
    ) -> SamplerResult<Self> {
        if trajectories == 0 {
            return Err(SamplerError::NoTrajectories);
        }
        let kraus = if circuit.noise.is_trivial() { None } else { Some(circuit.noise.kraus(unraveling)?) };
        Ok(Self { circuit, unraveling, policy, trajectories, master_seed, telemetry: Telemetry::default(), kraus })
    }

    pub fn with_telemetry(mut self, telemetry: Telemetry) -> Self {
        self.telemetry = telemetry;
        self
    }

    pub fn with_trajectories(mut self, k: usize) -> SamplerResult<Self> {
        if k == 0 {
            return Err(SamplerError::NoTrajectories);
        }
        self.trajectories = k;
        Ok(self)
    }

    /// The Kraus set every noise event is unraveled with.
    pub fn kraus(&self) -> Option<&KrausSet> {
        self.kraus.as_ref()
    }

    /// Random stream of trajectory `index`.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: u64,
    /// Output bit of every 2D qubit, by site index.
    pub z: Vec<u8>,
    /// Kraus outcome of every noise event in stream order.
    pub m: Vec<u8>,
    /// Half-chain entropy after each row.
    pub entropies: Vec<f64>,
    pub chi_max_seen: usize,
    pub trunc_total: f64,
    /// Set when the trajectory hit a degenerate state or a bond overflow.
    pub failure: Option<String>,
}

impl TrajectoryRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// `z` as ASCII 0/1 with rows separated by `sep`.
    pub fn z_text(&self, coords: &[(usize, usize)], sep: char) -> String {
        let mut order: Vec<usize> = (0..self.z.len()).collect();
        order.sort_by_key(|&q| (coords[q].1, coords[q].0));
        let mut s = String::with_capacity(self.z.len() + 16);
        let mut row = None;
        for q in order {
            if row.is_some_and(|r| r != coords[q].1) {
                s.push(sep);
            }
            row = Some(coords[q].1);
            s.push(if self.z[q] == 1 { '1' } else { '0' });
        }
        s
    }
}

fn apply_event<R: rand::Rng + ?Sized>(
    psi: &mut MatrixProductState,
    e: &Event,
    cfg: &RunConfig,
    rng: &mut R,
) -> Result<Option<u8>, MpsError> {
    match e {
        Event::Gate { i, j, matrix } => psi.apply_2q(*i, *j, matrix, &cfg.policy).map(|_| None),
        Event::Single { i, matrix } => psi.apply_1q(*i, matrix).map(|_| None),
        Event::Noise { i } => match &cfg.kraus {
            Some(k) => psi.apply_kraus(*i, k, rng).map(|o| Some(o as u8)),
            None => Ok(None),
        },
        Event::MeasureReset { .. } => unreachable!("readout is handled by the caller"),
    }
}

/// Runs trajectory `index` to completion, sampling `(z, m)`.
pub fn run_trajectory(cfg: &RunConfig, index: u64) -> TrajectoryRecord {
    let ec = &cfg.circuit;
    let mut rng = cfg.rng(index);
    let mut rec = TrajectoryRecord {
        index,
        z: vec![0; ec.n_qubits],
        m: Vec::new(),
        entropies: Vec::new(),
        chi_max_seen: 1,
        trunc_total: 0.0,
        failure: None,
    };
    let mut psi = match MatrixProductState::new_product_state(&vec![0; ec.n_sites]) {
        Ok(p) => p,
        Err(e) => {
            rec.failure = Some(e.to_string());
            return rec;
        }
    };
    let outcome = (|| -> Result<(), MpsError> {
        for row in &ec.rows {
            for e in row {
                if let Event::MeasureReset { i, site, .. } = e {
                    rec.z[*site] = psi.measure_reset(*i, &mut rng)?;
                    continue;
                }
                let out = apply_event(&mut psi, e, cfg, &mut rng)?;
                if let (Some(o), true) = (out, cfg.telemetry.noise_record) {
                    rec.m.push(o);
                }
                if matches!(e, Event::Gate { .. }) {
                    rec.chi_max_seen = rec.chi_max_seen.max(psi.max_bond());
                }
            }
            if cfg.telemetry.entropies {
                rec.entropies.push(psi.renyi_entropy(ec.n_sites / 2, 1.0));
            }
        }
        Ok(())
    })();
    rec.trunc_total = psi.trunc_log();
    if let Err(e) = outcome {
        rec.failure = Some(e.to_string());
    }
    rec
}

/// `K` trajectories in index order with the failure count.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub records: Vec<TrajectoryRecord>,
    pub failures: usize,
}

impl SampleSet {
    pub fn successful(&self) -> impl Iterator<Item = &TrajectoryRecord> {
        self.records.iter().filter(|r| !r.failed())
    }

    /// Frequency of `1` on every qubit over successful trajectories.
    pub fn marginals(&self) -> Vec<f64> {
        let n = self.records.first().map_or(0, |r| r.z.len());
        let mut acc = vec![0.0; n];
        let mut count = 0.0_f64;
        for r in self.successful() {
            count += 1.0;
            for (a, &b) in acc.iter_mut().zip(&r.z) {
                *a += b as f64;
            }
        }
        acc.iter().map(|a| a / count.max(1.0)).collect()
    }

    /// Mean of the per-row entropy series.
    pub fn mean_entropies(&self) -> Vec<f64> {
        mean_series(self.successful().map(|r| r.entropies.as_slice()))
    }
}

/// Pointwise mean; index `i` averages over the series long enough to have it.
pub(crate) fn mean_series<'a>(series: impl Iterator<Item = &'a [f64]>) -> Vec<f64> {
    let mut acc: Vec<(f64, f64)> = Vec::new();
    for s in series {
        if acc.len() < s.len() {
            acc.resize(s.len(), (0.0, 0.0));
        }
        for (a, x) in acc.iter_mut().zip(s) {
            a.0 += x;
            a.1 += 1.0;
        }
    }
    acc.iter().map(|(sum, n)| sum / n).collect()
}

/// Runs all trajectories on the current rayon pool.
pub fn sample(cfg: &RunConfig) -> SampleSet {
    let records: Vec<TrajectoryRecord> =
        (0..cfg.trajectories as u64).into_par_iter().map(|k| run_trajectory(cfg, k)).collect();
    let failures = records.iter().filter(|r| r.failed()).count();
    if failures > 0 {
        log::warn!("{failures} of {} trajectories failed", records.len());
    }
    SampleSet { records, failures }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trajectories: usize,
    pub failures: usize,
}

/// One trajectory of the estimator: the product of readout probabilities of
/// `target` along a Born-sampled noise record. `None` on failure.
pub fn probability_trajectory(cfg: &RunConfig, target: &[u8], index: u64) -> Option<f64> {
    let ec = &cfg.circuit;
    let mut rng = cfg.rng(index);
    let mut psi = MatrixProductState::new_product_state(&vec![0; ec.n_sites]).ok()?;
    let mut weight = 1.0;
    for e in ec.events() {
        match e {
            Event::MeasureReset { i, site, .. } => match psi.project_onto(*i, target[*site]) {
                Ok(p) => weight *= p,
                Err(MpsError::Degenerate(_)) => return Some(0.0),
                Err(_) => return None,
            },
            other => {
                apply_event(&mut psi, other, cfg, &mut rng).ok()?;
            }
        }
    }
    Some(weight)
}

/// Unbiased estimate of `P(target)` with its standard error.
pub fn estimate_probability(cfg: &RunConfig, target: &[u8]) -> SamplerResult<ProbabilityEstimate> {
    let n = cfg.circuit.n_qubits;
    if target.len() != n {
        return Err(SamplerError::TargetLength { expected: n, got: target.len() });
    }
    let values: Vec<Option<f64>> =
        (0..cfg.trajectories as u64).into_par_iter().map(|k| probability_trajectory(cfg, target, k)).collect();
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    let failures = values.len() - ok.len();
    if ok.is_empty() {
        return Err(SamplerError::AllFailed(values.len()));
    }
    let k = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / k;
    let var = if ok.len() > 1 { ok.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
    Ok(ProbabilityEstimate { mean, stderr: (var / k).sqrt(), trajectories: ok.len(), failures })
}

/// Reference-qubit entropy after every row, averaged over trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurificationSeries {
    pub s_r: Vec<f64>,
    pub trajectories: usize,
    pub failures: usize,
}

/// Reference entropy after each of the first `max_rows` rows of one trajectory.
pub fn purification_trajectory(cfg: &RunConfig, probe: usize, max_rows: usize, index: u64) -> Result<Vec<f64>, MpsError> {
    let ec = &cfg.circuit;
    let mut rng = cfg.rng(index);
    let mut psi = MatrixProductState::new_product_state(&vec![0; ec.n_sites])?;
    let handle = psi.attach_reference(probe, &cfg.policy)?;
    let mut out = Vec::with_capacity(max_rows.min(ec.rows.len()));
    for row in ec.rows.iter().take(max_rows) {
        for e in row {
            if let Event::MeasureReset { i, .. } = e {
                psi.measure_reset(*i, &mut rng)?;
            } else {
                apply_event(&mut psi, e, cfg, &mut rng)?;
            }
        }
        out.push(psi.reference_entropy(handle));
    }
    Ok(out)
}

/// Attaches a reference Bell pair to slot `probe` before the first row and
/// averages its entropy over `K` trajectories.
pub fn purification_run(cfg: &RunConfig, probe: usize, max_rows: usize) -> PurificationSeries {
    let runs: Vec<Result<Vec<f64>, MpsError>> = (0..cfg.trajectories as u64)
        .into_par_iter()
        .map(|k| purification_trajectory(cfg, probe, max_rows, k))
        .collect();
    let ok: Vec<&Vec<f64>> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = runs.len() - ok.len();
    PurificationSeries { s_r: mean_series(ok.iter().map(|v| v.as_slice())), trajectories: ok.len(), failures }
}
