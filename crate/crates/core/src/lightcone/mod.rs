//! 2D lattices, random shallow circuits, and their compilation into the
//! effective 1D monitored circuit swept along `y`.
//!
//! Coordinates are zero-based `(x, y)`. Bond layers follow fixed coordinate
//! rules:
//!
//! * square: `A` vertical bonds from even `y`, `B` horizontal bonds from even
//!   `x`, `C` vertical bonds from odd `y`, `D` horizontal bonds from odd `x`;
//! * heavy-hex: `A` / `B` row bonds from even / odd `x`, `C` bridge bonds to
//!   the row above the bridge, `D` bridge bonds to the row below.

mod compile;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{ChannelError, NoiseModel};
use crate::gates;
use crate::linalg::{self, CMat};

pub use compile::{compile_sebd, EffectiveCircuit1D, Event};
pub use crate::gates::{fsim, iswap};

#[derive(Debug, Error)]
pub enum LightconeError {
    #[error("lattice needs L_x, L_y >= 2 (got {lx} x {ly})")]
    TooSmall { lx: usize, ly: usize },
    #[error("heavy-hex linear size must be 3 mod 4 (got {0})")]
    HeavyHexSize(usize),
    #[error("unknown layer label {0:?}")]
    BadLabel(char),
    #[error("schedule is empty")]
    EmptySchedule,
    #[error("layer {0} has no bonds on this lattice")]
    EmptyLayer(Layer),
    #[error("qubit {1} appears twice in layer {0}")]
    NotMatching(Layer, usize),
    #[error("schedule has {schedule} layers but the circuit has {layers}")]
    DepthMismatch { schedule: usize, layers: usize },
    #[error("gate on bond ({0}, {1}) is not unitary")]
    NotUnitary(usize, usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

pub type LightconeResult<T> = Result<T, LightconeError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    Square,
    HeavyHex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl Layer {
    pub fn from_char(c: char) -> LightconeResult<Self> {
        match c.to_ascii_uppercase() {
            'A' => Ok(Layer::A),
            'B' => Ok(Layer::B),
            'C' => Ok(Layer::C),
            'D' => Ok(Layer::D),
            other => Err(LightconeError::BadLabel(other)),
        }
    }
}

/// A layer-label string such as `"ABCD"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Schedule(pub Vec<Layer>);

impl Schedule {
    pub fn depth(&self) -> usize {
        self.0.len()
    }
}

impl FromStr for Schedule {
    type Err = LightconeError;

    fn from_str(s: &str) -> LightconeResult<Self> {
        let layers = s.trim().chars().map(Layer::from_char).collect::<LightconeResult<Vec<_>>>()?;
        if layers.is_empty() {
            return Err(LightconeError::EmptySchedule);
        }
        Ok(Schedule(layers))
    }
}

impl TryFrom<String> for Schedule {
    type Error = LightconeError;
    fn try_from(s: String) -> LightconeResult<Self> {
        s.parse()
    }
}

impl From<Schedule> for String {
    fn from(s: Schedule) -> String {
        s.to_string()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|l| write!(f, "{l}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub layer: Layer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lattice2D {
    pub kind: LatticeKind,
    pub lx: usize,
    pub ly: usize,
    /// `(x, y)` of every qubit; the position in this list is the site index.
    pub sites: Vec<(usize, usize)>,
    pub bonds: Vec<Bond>,
}

impl Lattice2D {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Extent of the coordinate box `(width, height)`.
    pub fn extent(&self) -> (usize, usize) {
        let w = self.sites.iter().map(|s| s.0).max().map_or(0, |m| m + 1);
        let h = self.sites.iter().map(|s| s.1).max().map_or(0, |m| m + 1);
        (w, h)
    }

    pub fn site_lookup(&self) -> HashMap<(usize, usize), usize> {
        self.sites.iter().enumerate().map(|(i, &c)| (c, i)).collect()
    }

    pub fn layer_bonds(&self, layer: Layer) -> impl Iterator<Item = &Bond> {
        self.bonds.iter().filter(move |b| b.layer == layer)
    }

    /// Site indices with `y == row`, sorted by `x`.
    pub fn row_sites(&self, row: usize) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.sites.len()).filter(|&i| self.sites[i].1 == row).collect();
        v.sort_by_key(|&i| self.sites[i].0);
        v
    }
}

pub fn build_lattice(kind: LatticeKind, lx: usize, ly: usize) -> LightconeResult<Lattice2D> {
    if lx < 2 || ly < 2 {
        return Err(LightconeError::TooSmall { lx, ly });
    }
    match kind {
        LatticeKind::Square => Ok(square(lx, ly)),
        LatticeKind::HeavyHex => heavy_hex(lx, ly),
    }
}

/// Heavy-hex processor layout of linear size `lx` with the standard row count
/// `(lx − 1)/2` (e.g. `lx = 11` gives 65 qubits, `lx = 43` gives 1121).
pub fn heavy_hex_processor(lx: usize) -> LightconeResult<Lattice2D> {
    build_lattice(LatticeKind::HeavyHex, lx, (lx.saturating_sub(1) / 2).max(2))
}

fn square(lx: usize, ly: usize) -> Lattice2D {
    let sites: Vec<(usize, usize)> = (0..ly).flat_map(|y| (0..lx).map(move |x| (x, y))).collect();
    let idx = |x: usize, y: usize| y * lx + x;
    let mut bonds = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            if y + 1 < ly {
                let layer = if y % 2 == 0 { Layer::A } else { Layer::C };
                bonds.push(Bond { a: idx(x, y), b: idx(x, y + 1), layer });
            }
            if x + 1 < lx {
                let layer = if x % 2 == 0 { Layer::B } else { Layer::D };
                bonds.push(Bond { a: idx(x, y), b: idx(x + 1, y), layer });
            }
        }
    }
    Lattice2D { kind: LatticeKind::Square, lx, ly, sites, bonds }
}

/// `rows` heavy rows of `lx` qubits at even `y` (the first lacks its last
/// column, the last lacks its first), joined by bridge qubits at odd `y`
/// every fourth column, offset by two on alternate gaps.
fn heavy_hex(lx: usize, rows: usize) -> LightconeResult<Lattice2D> {
    if lx % 4 != 3 {
        return Err(LightconeError::HeavyHexSize(lx));
    }
    let mut sites = Vec::new();
    for r in 0..rows {
        let y = 2 * r;
        for x in 0..lx {
            let missing = (r == 0 && x == lx - 1) || (r == rows - 1 && x == 0);
            if !missing {
                sites.push((x, y));
            }
        }
        if r + 1 < rows {
            let offset = if r % 2 == 0 { 0 } else { 2 };
            sites.extend((offset..lx).step_by(4).map(|x| (x, y + 1)));
        }
    }
    let mut lat = Lattice2D { kind: LatticeKind::HeavyHex, lx, ly: rows, sites, bonds: Vec::new() };
    let look = lat.site_lookup();
    let mut bonds = Vec::new();
    for (i, &(x, y)) in lat.sites.iter().enumerate() {
        if y % 2 == 0 {
            if let Some(&j) = look.get(&(x + 1, y)) {
                bonds.push(Bond { a: i, b: j, layer: if x % 2 == 0 { Layer::A } else { Layer::B } });
            }
        } else {
            bonds.push(Bond { a: look[&(x, y - 1)], b: i, layer: Layer::C });
            bonds.push(Bond { a: i, b: look[&(x, y + 1)], layer: Layer::D });
        }
    }
    lat.bonds = bonds;
    Ok(lat)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateFamily {
    /// `fSim(π/2, π/6)` between random rotations from the eight square roots.
    Fsim,
    /// iSWAP between random rotations from the eight square roots.
    Iswap,
    /// iSWAP (90%) or SWAP (10%) between random single-qubit Cliffords.
    CliffordIswapSwap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub a: usize,
    pub b: usize,
    /// Ordered `(a, b)` with index `s_a·2 + s_b`.
    #[serde(with = "linalg::cmat_serde")]
    pub matrix: CMat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleOp {
    pub site: usize,
    #[serde(with = "linalg::cmat_serde")]
    pub matrix: CMat,
}

/// One circuit layer: single-qubit gates, then two-qubit gates, then noise on
/// every qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitLayer {
    pub label: Layer,
    #[serde(default)]
    pub singles: Vec<SingleOp>,
    pub gates: Vec<GateOp>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit2D {
    pub lattice: Lattice2D,
    pub schedule: Schedule,
    pub layers: Vec<CircuitLayer>,
    pub noise: NoiseModel,
}

impl Circuit2D {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.lattice.n_sites()
    }

    /// Every scheduled bond carries exactly one unitary gate.
    pub fn validate(&self) -> LightconeResult<()> {
        self.noise.validate()?;
        if self.layers.len() != self.schedule.depth() {
            return Err(LightconeError::DepthMismatch { schedule: self.schedule.depth(), layers: self.layers.len() });
        }
        for layer in &self.layers {
            if layer.gates.is_empty() {
                return Err(LightconeError::EmptyLayer(layer.label));
            }
            for g in &layer.gates {
                if !linalg::is_unitary(&g.matrix, 1e-12) {
                    return Err(LightconeError::NotUnitary(g.a, g.b));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    /// The same circuit with a different noise model.
    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }
}

/// Draws a random circuit; identical seeds give identical circuits.
pub fn random_instance(
    lattice: &Lattice2D,
    schedule: &Schedule,
    family: GateFamily,
    noise: NoiseModel,
    seed: u64,
) -> LightconeResult<Circuit2D> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotations = match family {
        GateFamily::Fsim | GateFamily::Iswap => gates::sqrt_rotation_set(),
        GateFamily::CliffordIswapSwap => gates::single_qubit_cliffords(),
    };
    let fs = gates::fsim(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_6);
    let mut layers = Vec::with_capacity(schedule.depth());
    for &label in &schedule.0 {
        let mut ops = Vec::new();
        for bond in lattice.layer_bonds(label) {
            let core = match family {
                GateFamily::Fsim => fs.clone(),
                GateFamily::Iswap => gates::iswap(),
                GateFamily::CliffordIswapSwap => {
                    if rng.random::<f64>() < 0.9 {
                        gates::iswap()
                    } else {
                        gates::swap()
                    }
                }
            };
            let mut pick = || gates::random_choice(&rotations, &mut rng).clone();
            let pre = linalg::kron(&pick(), &pick());
            let post = linalg::kron(&pick(), &pick());
            ops.push(GateOp { a: bond.a, b: bond.b, matrix: post * core * pre });
        }
        if ops.is_empty() {
            return Err(LightconeError::EmptyLayer(label));
        }
        layers.push(CircuitLayer { label, singles: Vec::new(), gates: ops });
    }
    Ok(Circuit2D { lattice: lattice.clone(), schedule: schedule.clone(), layers, noise })
}
