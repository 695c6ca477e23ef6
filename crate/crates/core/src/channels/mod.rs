//! Single-qubit noise channels and their Kraus unravelings.
//!
//! A channel is fixed by its Choi matrix; any Kraus set with that Choi matrix
//! is a valid *unraveling* into fictitious measurements. The functions here
//! build the standard unravelings (unitary mixtures, stochastic projective
//! measurements, weak measurements), evaluate the purification cost `x` that
//! ranks them, and search the gauge freedom numerically when no closed form is
//! known.

mod optimize;

pub use optimize::{optimize_unraveling, optimize_unraveling_with, OptimizeOptions, OptimizedUnraveling};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, c, real, CMat};

/// Entrywise tolerance for completeness and gauge-unitarity checks.
pub const MATRIX_TOL: f64 = 1e-12;
/// Operators with `tr(M†M)` below this are ignored by cost sums.
pub const NEGLIGIBLE_WEIGHT: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("noise strength {eps} outside [{lo}, {hi}]")]
    StrengthOutOfRange { eps: f64, lo: f64, hi: f64 },

    #[error("Kraus set is empty")]
    Empty,

    #[error("Kraus operators must be square with a common dimension d >= 2")]
    BadShape,

    #[error("completeness violated: max |sum M†M - I| = {0:e}")]
    Incomplete(f64),

    #[error("invalid unital probabilities {0:?}")]
    InvalidProbabilities([f64; 4]),

    #[error("unsupported unraveling size n = {0} (expected 4 or 6)")]
    UnsupportedCount(usize),

    #[error("gauge matrix is not semi-unitary (error {0:e})")]
    NotSemiUnitary(f64),

    #[error("gauge matrix has {cols} columns but the Kraus set has {ops} operators")]
    GaugeShape { cols: usize, ops: usize },

    #[error("requested {requested} output operators but the input already has {have}")]
    TooFewOutputs { requested: usize, have: usize },

    #[error("unraveling {unraveling:?} is not defined for {kind:?} noise")]
    UnsupportedUnraveling { kind: NoiseKind, unraveling: Unraveling },

    #[error("malformed Kraus record: {0}")]
    Record(String),
}

pub type ChannelResult<T> = Result<T, ChannelError>;

/// An ordered list of `d × d` Kraus operators: one unraveling of a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    ops: Vec<CMat>,
    label: String,
}

impl KrausSet {
    /// Validates shapes and completeness `Σ M†M = I`.
    pub fn new(ops: Vec<CMat>, label: impl Into<String>) -> ChannelResult<Self> {
        let set = Self::new_unchecked(ops, label)?;
        let err = set.completeness_error();
        if err > MATRIX_TOL {
            return Err(ChannelError::Incomplete(err));
        }
        Ok(set)
    }

    fn new_unchecked(ops: Vec<CMat>, label: impl Into<String>) -> ChannelResult<Self> {
        let first = ops.first().ok_or(ChannelError::Empty)?;
        let d = first.nrows();
        if d < 2 || ops.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(ChannelError::BadShape);
        }
        Ok(Self { ops, label: label.into() })
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Local Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn completeness_error(&self) -> f64 {
        let d = self.dim();
        let sum = self.ops.iter().fold(CMat::zeros(d, d), |acc, m| acc + m.adjoint() * m);
        linalg::max_abs_diff(&sum, &linalg::identity(d))
    }

    /// `M†M` for every operator, in order.
    pub fn effects(&self) -> Vec<CMat> {
        self.ops.iter().map(|m| m.adjoint() * m).collect()
    }

    /// Applies the channel to a `d × d` density matrix.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let d = self.dim();
        self.ops
            .iter()
            .fold(CMat::zeros(d, d), |acc, m| acc + m * rho * m.adjoint())
    }

    /// The superoperator `Σ M ⊗ M*` acting on row-major `vec(ρ)`.
    pub fn superoperator(&self) -> CMat {
        choi_matrix(self)
    }

    pub fn to_record(&self) -> KrausRecord {
        KrausRecord {
            d: self.dim(),
            label: self.label.clone(),
            ops: self
                .ops
                .iter()
                .map(|m| {
                    let d = m.nrows();
                    (0..d * d).map(|k| (m[(k / d, k % d)].re, m[(k / d, k % d)].im)).collect()
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &KrausRecord) -> ChannelResult<Self> {
        let d = rec.d;
        let mut ops = Vec::with_capacity(rec.ops.len());
        for (k, entries) in rec.ops.iter().enumerate() {
            if entries.len() != d * d {
                return Err(ChannelError::Record(format!(
                    "operator {k} has {} entries, expected {}",
                    entries.len(),
                    d * d
                )));
            }
            ops.push(CMat::from_row_iterator(d, d, entries.iter().map(|&(re, im)| c(re, im))));
        }
        Self::new(ops, rec.label.clone())
    }
}

/// Structured text form of a [`KrausSet`]: dimension, label and every operator
/// as a row-major list of `(re, im)` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausRecord {
    pub d: usize,
    pub label: String,
    pub ops: Vec<Vec<(f64, f64)>>,
}

/// Pauli weights of a unital qubit channel `p0 ρ + px XρX + py YρY + pz ZρZ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitalParams {
    pub p0: f64,
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

impl UnitalParams {
    pub fn new(p0: f64, px: f64, py: f64, pz: f64) -> ChannelResult<Self> {
        let p = Self { p0, px, py, pz };
        p.validate()?;
        Ok(p)
    }

    pub fn depolarizing(eps: f64) -> Self {
        Self { p0: 1.0 - eps, px: eps / 3.0, py: eps / 3.0, pz: eps / 3.0 }
    }

    pub fn dephasing(eps: f64) -> Self {
        Self { p0: 1.0 - eps, px: 0.0, py: 0.0, pz: eps }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p0, self.px, self.py, self.pz]
    }

    pub fn validate(&self) -> ChannelResult<()> {
        let a = self.as_array();
        let sum: f64 = a.iter().sum();
        if a.iter().any(|&p| !(p >= 0.0) || p > 1.0 + 1e-12) || (sum - 1.0).abs() > 1e-12 {
            return Err(ChannelError::InvalidProbabilities(a));
        }
        Ok(())
    }

    /// Optimal purification cost for `p0 ≥ 1/2`: `1 − (2p0 − 1)²/2`.
    pub fn optimal_cost(&self) -> f64 {
        if self.p0 <= 0.5 {
            1.0
        } else {
            1.0 - (2.0 * self.p0 - 1.0).powi(2) / 2.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    Dephasing,
    Depolarizing,
    UnitalGeneral,
    AmplitudeDamping,
}

/// How a channel is unraveled into trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unraveling {
    /// Unitary mixture (dephasing, depolarizing, unital) or the textbook
    /// Kraus pair (amplitude damping).
    Canonical,
    /// Stochastic projective Z measurement (dephasing only).
    Projective,
    /// The entanglement-optimal weak measurement: the symmetric pair for
    /// dephasing, the tetrahedron for depolarizing / unital noise, the θ = π/4
    /// rotated pair for amplitude damping.
    Weak,
    /// Six weak measurements along ±X, ±Y, ±Z (deformed for unital noise).
    WeakOctahedron,
    /// Identity or full erasure followed by a random computational state
    /// (depolarizing only).
    Erasure,
}

/// A single-qubit noise channel applied uniformly after every circuit layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub strength: f64,
    /// Only read for [`NoiseKind::UnitalGeneral`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unital: Option<UnitalParams>,
}

impl NoiseModel {
    pub fn dephasing(eps: f64) -> Self {
        Self { kind: NoiseKind::Dephasing, strength: eps, unital: None }
    }

    pub fn depolarizing(eps: f64) -> Self {
        Self { kind: NoiseKind::Depolarizing, strength: eps, unital: None }
    }

    pub fn amplitude_damping(eps: f64) -> Self {
        Self { kind: NoiseKind::AmplitudeDamping, strength: eps, unital: None }
    }

    pub fn unital(params: UnitalParams) -> Self {
        Self { kind: NoiseKind::UnitalGeneral, strength: 1.0 - params.p0, unital: Some(params) }
    }

    pub fn noiseless() -> Self {
        Self::depolarizing(0.0)
    }

    pub fn is_trivial(&self) -> bool {
        match self.kind {
            NoiseKind::UnitalGeneral => self.unital.map_or(true, |p| p.p0 >= 1.0),
            _ => self.strength == 0.0,
        }
    }

    pub fn validate(&self) -> ChannelResult<()> {
        let eps = self.strength;
        let check = |hi: f64| {
            if (0.0..=hi).contains(&eps) {
                Ok(())
            } else {
                Err(ChannelError::StrengthOutOfRange { eps, lo: 0.0, hi })
            }
        };
        match self.kind {
            NoiseKind::Dephasing => check(0.5),
            NoiseKind::Depolarizing => check(0.75),
            NoiseKind::AmplitudeDamping => check(1.0),
            NoiseKind::UnitalGeneral => self
                .unital
                .ok_or(ChannelError::InvalidProbabilities([f64::NAN; 4]))?
                .validate(),
        }
    }

    /// The Kraus set for the requested unraveling.
    pub fn kraus(&self, unraveling: Unraveling) -> ChannelResult<KrausSet> {
        let eps = self.strength;
        let unsupported = || ChannelError::UnsupportedUnraveling { kind: self.kind, unraveling };
        match (self.kind, unraveling) {
            (NoiseKind::Dephasing, Unraveling::Canonical) => make_dephasing(eps, DephasingForm::UnitaryMix),
            (NoiseKind::Dephasing, Unraveling::Projective) => make_dephasing(eps, DephasingForm::Projective),
            (NoiseKind::Dephasing, Unraveling::Weak) => make_dephasing(eps, DephasingForm::WeakOptimal),
            (NoiseKind::Dephasing, Unraveling::WeakOctahedron) => {
                make_unital(UnitalParams::dephasing(eps), 6)
            }
            (NoiseKind::Depolarizing, Unraveling::Canonical) => {
                make_depolarizing(eps, DepolarizingForm::PauliMix)
            }
            (NoiseKind::Depolarizing, Unraveling::Weak) => {
                make_depolarizing(eps, DepolarizingForm::WeakTetrahedron)
            }
            (NoiseKind::Depolarizing, Unraveling::WeakOctahedron) => {
                make_depolarizing(eps, DepolarizingForm::WeakOctahedron)
            }
            (NoiseKind::Depolarizing, Unraveling::Erasure) => {
                make_depolarizing(eps, DepolarizingForm::Erasure)
            }
            (NoiseKind::UnitalGeneral, u) => {
                let p = self.unital.ok_or_else(unsupported)?;
                match u {
                    Unraveling::Canonical => make_pauli_mixture(p),
                    Unraveling::Weak => make_unital(p, 4),
                    Unraveling::WeakOctahedron => make_unital(p, 6),
                    _ => Err(unsupported()),
                }
            }
            (NoiseKind::AmplitudeDamping, Unraveling::Canonical) => {
                make_amplitude_damping(eps, DampingForm::Canonical)
            }
            (NoiseKind::AmplitudeDamping, Unraveling::Weak) => {
                make_amplitude_damping(eps, DampingForm::Optimized)
            }
            _ => Err(unsupported()),
        }
    }
}

/// Kraus weights rescaled to probabilities `μ_i = tr(M†M)/d` and operators
/// `M̃_i = M_i/√μ_i` with `tr(M̃†M̃) = d`.
#[derive(Clone, Debug)]
pub struct ReweightedKraus {
    pub probs: Vec<f64>,
    pub normed_ops: Vec<CMat>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DephasingForm {
    UnitaryMix,
    Projective,
    WeakOptimal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepolarizingForm {
    PauliMix,
    WeakTetrahedron,
    WeakOctahedron,
    Erasure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DampingForm {
    Canonical,
    Optimized,
}

fn check_strength(eps: f64, hi: f64) -> ChannelResult<()> {
    if (0.0..=hi).contains(&eps) {
        Ok(())
    } else {
        Err(ChannelError::StrengthOutOfRange { eps, lo: 0.0, hi })
    }
}

fn scaled(m: CMat, s: f64) -> CMat {
    m * real(s)
}

/// `(1−ε)ρ + ε ZρZ`, for `0 ≤ ε ≤ 1/2`.
pub fn make_dephasing(eps: f64, form: DephasingForm) -> ChannelResult<KrausSet> {
    check_strength(eps, 0.5)?;
    let id = linalg::identity(2);
    let z = linalg::pauli_z();
    let (ops, label) = match form {
        DephasingForm::UnitaryMix => (
            vec![scaled(id, (1.0 - eps).sqrt()), scaled(z, eps.sqrt())],
            "dephasing/unitary-mix",
        ),
        DephasingForm::Projective => (
            vec![
                scaled(id, (1.0 - 2.0 * eps).max(0.0).sqrt()),
                scaled(linalg::projector(0), (2.0 * eps).sqrt()),
                scaled(linalg::projector(1), (2.0 * eps).sqrt()),
            ],
            "dephasing/projective",
        ),
        DephasingForm::WeakOptimal => {
            let a = ((1.0 - eps) / 2.0).sqrt();
            let b = (eps / 2.0).sqrt();
            (
                vec![scaled(id.clone(), a) + scaled(z.clone(), b), scaled(id, a) - scaled(z, b)],
                "dephasing/weak",
            )
        }
    };
    KrausSet::new(ops, format!("{label}(eps={eps})"))
}

/// `(1−ε)ρ + (ε/3)(XρX + YρY + ZρZ)`, for `0 ≤ ε ≤ 3/4`.
pub fn make_depolarizing(eps: f64, form: DepolarizingForm) -> ChannelResult<KrausSet> {
    check_strength(eps, 0.75)?;
    let p = UnitalParams::depolarizing(eps);
    let set = match form {
        DepolarizingForm::PauliMix => make_pauli_mixture(p)?,
        DepolarizingForm::WeakTetrahedron => make_unital(p, 4)?,
        DepolarizingForm::WeakOctahedron => make_unital(p, 6)?,
        DepolarizingForm::Erasure => {
            let keep = (1.0 - 4.0 * eps / 3.0).max(0.0).sqrt();
            let w = (4.0 * eps / 3.0 / 2.0).sqrt();
            let mut ops = vec![scaled(linalg::identity(2), keep)];
            for (row, col) in [(0, 0), (1, 1), (1, 0), (0, 1)] {
                let mut m = CMat::zeros(2, 2);
                m[(row, col)] = real(w);
                ops.push(m);
            }
            KrausSet::new(ops, "")?
        }
    };
    let name = match form {
        DepolarizingForm::PauliMix => "pauli-mix",
        DepolarizingForm::WeakTetrahedron => "weak-tetrahedron",
        DepolarizingForm::WeakOctahedron => "weak-octahedron",
        DepolarizingForm::Erasure => "erasure",
    };
    Ok(set.with_label(format!("depolarizing/{name}(eps={eps})")))
}

/// `{√p0 I, √px X, √py Y, √pz Z}`.
pub fn make_pauli_mixture(p: UnitalParams) -> ChannelResult<KrausSet> {
    p.validate()?;
    let ops = linalg::paulis()
        .into_iter()
        .zip(p.as_array())
        .map(|(s, w)| scaled(s, w.max(0.0).sqrt()))
        .collect();
    KrausSet::new(ops, "unital/pauli-mix")
}

/// Optimal weak-measurement unraveling of a unital channel with `n = 4`
/// (deformed tetrahedron) or `n = 6` (deformed octahedron) operators
/// `M_i = √(p0/n) I + √((1−p0)/n) u_i·σ`.
pub fn make_unital(p: UnitalParams, n: usize) -> ChannelResult<KrausSet> {
    p.validate()?;
    let dirs = match n {
        4 => tetrahedron_directions(&p),
        6 => octahedron_directions(&p),
        _ => return Err(ChannelError::UnsupportedCount(n)),
    };
    let a = (p.p0 / n as f64).sqrt();
    let b = ((1.0 - p.p0).max(0.0) / n as f64).sqrt();
    let [_, x, y, z] = linalg::paulis();
    let ops = dirs
        .iter()
        .map(|u| {
            scaled(linalg::identity(2), a)
                + scaled(x.clone(), b * u[0])
                + scaled(y.clone(), b * u[1])
                + scaled(z.clone(), b * u[2])
        })
        .collect();
    let shape = if n == 4 { "tetrahedron" } else { "octahedron" };
    KrausSet::new(ops, format!("unital/{shape}"))
}

/// Normalized axis weights `p_α/(1−p0)`, uniform when the channel is trivial.
fn axis_weights(p: &UnitalParams) -> [f64; 3] {
    let rest = p.px + p.py + p.pz;
    if rest <= 1e-300 {
        [1.0 / 3.0; 3]
    } else {
        [p.px / rest, p.py / rest, p.pz / rest]
    }
}

/// Unit vectors with `Σu = 0` and `Σ u_α u_β = 4 q_α δ_αβ`.
pub fn tetrahedron_directions(p: &UnitalParams) -> Vec<[f64; 3]> {
    let q = axis_weights(p).map(f64::sqrt);
    [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
        .iter()
        .map(|s| [s[0] * q[0], s[1] * q[1], s[2] * q[2]])
        .collect()
}

/// Three antipodal pairs `±v_k` of unit vectors with `Σ v_k v_kᵀ = 3 diag(q)`.
///
/// The `v_k` are the columns of `diag(3q)^{1/2} W` for an orthogonal `W` that
/// makes every diagonal entry of `Wᵀ diag(3q) W` equal to one; `W` is built
/// from two plane rotations. For isotropic noise this is the regular
/// octahedron.
pub fn octahedron_directions(p: &UnitalParams) -> Vec<[f64; 3]> {
    let q = axis_weights(p);
    let d = q.map(|v| 3.0 * v);
    // Work matrix S = Wᵀ D W, updated by rotations acting on rows/columns.
    let mut s = [[0.0f64; 3]; 3];
    for i in 0..3 {
        s[i][i] = d[i];
    }
    let mut w = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..2 {
        let hi = (0..3).filter(|&i| s[i][i] > 1.0 + 1e-15).max_by(|&a, &b| s[a][a].total_cmp(&s[b][b]));
        let lo = (0..3).filter(|&i| s[i][i] < 1.0 - 1e-15).min_by(|&a, &b| s[a][a].total_cmp(&s[b][b]));
        let (Some(i), Some(j)) = (hi, lo) else { break };
        // Rotation in the (i, j) plane; for the still-diagonal 2x2 block the
        // new (i, i) entry is cos² s_ii + sin² s_jj.
        let (sii, sjj) = (s[i][i], s[j][j]);
        let cos2 = ((1.0 - sjj) / (sii - sjj)).clamp(0.0, 1.0);
        let (cs, sn) = (cos2.sqrt(), (1.0 - cos2).sqrt());
        let mut g = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        g[i][i] = cs;
        g[j][j] = cs;
        g[i][j] = -sn;
        g[j][i] = sn;
        s = mat3_mul(&mat3_transpose(&g), &mat3_mul(&s, &g));
        w = mat3_mul(&w, &g);
    }
    let mut out = Vec::with_capacity(6);
    for k in 0..3 {
        let v = [d[0].sqrt() * w[0][k], d[1].sqrt() * w[1][k], d[2].sqrt() * w[2][k]];
        out.push(v);
        out.push([-v[0], -v[1], -v[2]]);
    }
    out
}

fn mat3_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat3_transpose(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

/// Amplitude damping `|1⟩ → |0⟩` with probability `ε`.
pub fn make_amplitude_damping(eps: f64, form: DampingForm) -> ChannelResult<KrausSet> {
    check_strength(eps, 1.0)?;
    let se = eps.sqrt();
    let sd = (1.0 - eps).sqrt();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (ops, label) = match form {
        DampingForm::Canonical => (
            vec![
                CMat::from_row_slice(2, 2, &[real(1.0), real(0.0), real(0.0), real(sd)]),
                CMat::from_row_slice(2, 2, &[real(0.0), real(se), real(0.0), real(0.0)]),
            ],
            "amplitude-damping/canonical",
        ),
        DampingForm::Optimized => (
            vec![
                CMat::from_row_slice(2, 2, &[real(r), real(r * se), real(0.0), real(r * sd)]),
                CMat::from_row_slice(2, 2, &[real(-r), real(r * se), real(0.0), real(-r * sd)]),
            ],
            "amplitude-damping/optimized",
        ),
    };
    KrausSet::new(ops, format!("{label}(eps={eps})"))
}

/// Real rotation by `θ` mixing the two operators of a Kraus pair; the gauge
/// of the amplitude-damping and dephasing weak families.
pub fn rotation_gauge(theta: f64) -> CMat {
    let (s, co) = theta.sin_cos();
    CMat::from_row_slice(2, 2, &[real(co), real(-s), real(s), real(co)])
}

/// `M′_j = Σ_i u_ji M_i` for a semi-unitary `u` (`u†u = I`, `m ≥ n`).
pub fn gauge_transform(k: &KrausSet, u: &CMat) -> ChannelResult<KrausSet> {
    if u.ncols() != k.len() {
        return Err(ChannelError::GaugeShape { cols: u.ncols(), ops: k.len() });
    }
    let err = linalg::isometry_error(u);
    if u.nrows() < u.ncols() || err > MATRIX_TOL {
        return Err(ChannelError::NotSemiUnitary(err));
    }
    Ok(KrausSet { ops: apply_gauge(k.ops(), u), label: format!("{}/gauge", k.label) })
}

pub(crate) fn apply_gauge(ops: &[CMat], u: &CMat) -> Vec<CMat> {
    let d = ops[0].nrows();
    (0..u.nrows())
        .map(|j| {
            ops.iter()
                .enumerate()
                .fold(CMat::zeros(d, d), |acc, (i, m)| acc + m * u[(j, i)])
        })
        .collect()
}

/// `Σ_i M_i ⊗ M_i*` (a `d² × d²` matrix).
pub fn choi_matrix(k: &KrausSet) -> CMat {
    let d = k.dim();
    k.ops
        .iter()
        .fold(CMat::zeros(d * d, d * d), |acc, m| acc + linalg::kron(m, &linalg::conj(m)))
}

/// Purification cost `x = (1/d) Σ_i tr((M_i†M_i)²) / tr(M_i†M_i)`.
///
/// For qubits `x ∈ [1/2, 1]`: `1/2` for any unitary mixture and `1` for a
/// complete rank-one measurement.
pub fn unraveling_cost_x(k: &KrausSet) -> f64 {
    cost_of_ops(k.ops())
}

pub(crate) fn cost_of_ops(ops: &[CMat]) -> f64 {
    let d = ops[0].nrows() as f64;
    ops.iter()
        .map(|m| {
            let e = m.adjoint() * m;
            let tr = linalg::trace(&e).re;
            if tr < NEGLIGIBLE_WEIGHT {
                0.0
            } else {
                // tr(E²) = ‖E‖_F² for Hermitian E.
                e.iter().map(|z| z.norm_sqr()).sum::<f64>() / tr
            }
        })
        .sum::<f64>()
        / d
}

/// Rewrites the set as probabilities `μ_i` and trace-normalized operators.
/// Operators with negligible weight are dropped.
pub fn reparametrize(k: &KrausSet) -> ReweightedKraus {
    let d = k.dim() as f64;
    let mut probs = Vec::with_capacity(k.len());
    let mut normed_ops = Vec::with_capacity(k.len());
    for (i, m) in k.ops.iter().enumerate() {
        let tr = linalg::trace(&(m.adjoint() * m)).re;
        if tr < NEGLIGIBLE_WEIGHT {
            log::warn!("dropping Kraus operator {i} of '{}' with weight {tr:e}", k.label);
            continue;
        }
        let mu = tr / d;
        probs.push(mu);
        normed_ops.push(m * real(1.0 / mu.sqrt()));
    }
    ReweightedKraus { probs, normed_ops }
}

impl ReweightedKraus {
    /// `Σ μ_i tr((M̃†M̃)²)/d²`, identical to [`unraveling_cost_x`] of the source.
    pub fn cost_x(&self) -> f64 {
        let d = self.normed_ops.first().map_or(2, |m| m.nrows()) as f64;
        self.probs
            .iter()
            .zip(&self.normed_ops)
            .map(|(mu, m)| {
                let e = m.adjoint() * m;
                mu * e.iter().map(|z| z.norm_sqr()).sum::<f64>()
            })
            .sum::<f64>()
            / (d * d)
    }
}

/// Convenience for tests and diagnostics: Choi distance between two sets.
pub fn choi_distance(a: &KrausSet, b: &KrausSet) -> f64 {
    linalg::max_abs_diff(&choi_matrix(a), &choi_matrix(b))
}

#[cfg(test)]
mod tests;
