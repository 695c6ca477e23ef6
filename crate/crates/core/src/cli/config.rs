//! The experiment file read by every subcommand.
//!
//! A single TOML document; unknown keys anywhere are rejected. Sweeps run
//! over the cartesian product `eps × lx × seeds`, where `seeds` are circuit
//! instance seeds and `master_seed` drives the trajectory streams.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CliError, CliResult};
use crate::analysis::{CollapseGrid, ScalingPoint};
use crate::channels::{NoiseKind, NoiseModel, UnitalParams, Unraveling};
use crate::lightcone::{build_lattice, random_instance, Circuit2D, GateFamily, LatticeKind, Schedule};
use crate::mps::TruncationPolicy;
use crate::sampler::Telemetry;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSpec,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    pub sweep: SweepAxes,
    #[serde(default)]
    pub telemetry: Telemetry,
    /// Output directory, created on demand.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub phase: PhaseOptions,
    #[serde(default)]
    pub benchmark: BenchmarkOptions,
    #[serde(default)]
    pub collapse: CollapseOptions,
    #[serde(default)]
    pub unravel: UnravelOptions,
}

fn default_output() -> PathBuf {
    PathBuf::from("nsebd-out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    #[serde(default = "default_kind")]
    pub kind: LatticeKind,
    pub lx: usize,
    pub ly: usize,
    pub schedule: Schedule,
    #[serde(default = "default_gates")]
    pub gates: GateFamily,
}

fn default_kind() -> LatticeKind {
    LatticeKind::Square
}

fn default_gates() -> GateFamily {
    GateFamily::Fsim
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    #[serde(default = "default_unraveling")]
    pub unraveling: Unraveling,
    /// Relative `[X, Y, Z]` weights for `unital-general`; the total error
    /// rate is the swept `eps`.
    #[serde(default)]
    pub weights: Option<[f64; 3]>,
}

fn default_unraveling() -> Unraveling {
    Unraveling::Weak
}

impl NoiseSpec {
    pub fn model(&self, eps: f64) -> CliResult<NoiseModel> {
        let m = match self.kind {
            NoiseKind::Dephasing => NoiseModel::dephasing(eps),
            NoiseKind::Depolarizing => NoiseModel::depolarizing(eps),
            NoiseKind::AmplitudeDamping => NoiseModel::amplitude_damping(eps),
            NoiseKind::UnitalGeneral => {
                let w = self.weights.ok_or_else(|| CliError::Config("unital-general noise needs `weights`".into()))?;
                let total: f64 = w.iter().sum();
                if !(total > 0.0) || w.iter().any(|&v| v < 0.0) {
                    return Err(CliError::Config(format!("bad unital weights {w:?}")));
                }
                let [px, py, pz] = w.map(|v| eps * v / total);
                NoiseModel::unital(UnitalParams::new(1.0 - eps, px, py, pz)?)
            }
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub eps: Vec<f64>,
    /// Widths to sweep; defaults to `lattice.lx` alone.
    #[serde(default)]
    pub lx: Option<Vec<usize>>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub trajectories: usize,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// Purification runs use an `lx × aspect·lx` lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseOptions {
    pub aspect: usize,
    /// Inclusive fit window in units of `lx`; `[1, 2]` means rows `lx..=2 lx`.
    pub window: (usize, usize),
    pub collapse: bool,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        Self { aspect: 3, window: (1, 2), collapse: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Dense state vector or density matrix, whichever fits.
    Dense,
    Mpo,
    /// Stabilizer trajectories; Clifford gate family only.
    Tableau,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkOptions {
    pub oracles: Vec<OracleKind>,
    /// Target bitstrings per instance, taken from a sampler run.
    pub targets: usize,
    /// Trajectories for stochastic oracles; defaults to `sweep.trajectories`.
    pub oracle_trajectories: Option<usize>,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self { oracles: vec![OracleKind::Dense, OracleKind::Mpo], targets: 4, oracle_trajectories: None }
    }
}

/// Overrides of the collapse grid; unset fields come from the data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollapseOptions {
    pub eps_lo: Option<f64>,
    pub eps_hi: Option<f64>,
    pub eps_step: Option<f64>,
    pub nu_lo: Option<f64>,
    pub nu_hi: Option<f64>,
    pub nu_step: Option<f64>,
}

impl CollapseOptions {
    pub fn grid(&self, points: &[ScalingPoint]) -> CollapseGrid {
        let g = CollapseGrid::for_points(points);
        CollapseGrid {
            eps_lo: self.eps_lo.unwrap_or(g.eps_lo),
            eps_hi: self.eps_hi.unwrap_or(g.eps_hi),
            eps_step: self.eps_step.unwrap_or(g.eps_step),
            nu_lo: self.nu_lo.unwrap_or(g.nu_lo),
            nu_hi: self.nu_hi.unwrap_or(g.nu_hi),
            nu_step: self.nu_step.unwrap_or(g.nu_step),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UnravelOptions {
    /// Number of output operators for the numeric search.
    pub n_out: Option<usize>,
    pub budget: usize,
    pub seed: u64,
}

impl Default for UnravelOptions {
    fn default() -> Self {
        Self { n_out: None, budget: 400, seed: 0 }
    }
}

/// One point of the sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Instance {
    pub eps: f64,
    pub lx: usize,
    pub seed: u64,
}

impl Instance {
    /// File-name tag, e.g. `eps0.02_lx4_seed0`.
    pub fn tag(&self) -> String {
        format!("eps{}_lx{}_seed{}", self.eps, self.lx, self.seed)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn widths(&self) -> Vec<usize> {
        self.sweep.lx.clone().unwrap_or_else(|| vec![self.lattice.lx])
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.sweep.eps.is_empty() {
            return bad("sweep.eps is empty".into());
        }
        if self.widths().is_empty() {
            return bad("sweep.lx is empty".into());
        }
        if self.sweep.seeds.is_empty() {
            return bad("sweep.seeds is empty".into());
        }
        if self.sweep.trajectories == 0 {
            return bad("sweep.trajectories must be positive".into());
        }
        if self.phase.aspect == 0 || self.phase.window.0 > self.phase.window.1 {
            return bad(format!("bad phase options {:?}", self.phase));
        }
        for &eps in &self.sweep.eps {
            let model = self.noise.model(eps)?;
            if !model.is_trivial() {
                model.kraus(self.noise.unraveling)?;
            }
        }
        Ok(())
    }

    /// The sweep in `eps`-major, then `lx`, then seed order.
    pub fn instances(&self) -> Vec<Instance> {
        let mut out = Vec::new();
        for &eps in &self.sweep.eps {
            for lx in self.widths() {
                for &seed in &self.sweep.seeds {
                    out.push(Instance { eps, lx, seed });
                }
            }
        }
        out
    }

    /// The random circuit of one sweep point on an `lx × ly` lattice.
    pub fn circuit(&self, inst: &Instance, ly: usize) -> CliResult<Circuit2D> {
        let lat = build_lattice(self.lattice.kind, inst.lx, ly)?;
        let noise = self.noise.model(inst.eps)?;
        Ok(random_instance(&lat, &self.lattice.schedule, self.lattice.gates, noise, inst.seed)?)
    }
}
