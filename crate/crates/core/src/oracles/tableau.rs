//! Stabilizer states in the Aaronson–Gottesman tableau form.
//!
//! Rows `0..n` are destabilizers, `n..2n` stabilizers and row `2n` is scratch
//! space. Each row stores bit-packed `x` and `z` vectors and a sign, with
//! `x = z = 1` meaning `Y`.

use rand::Rng;

use super::{OracleError, OracleResult};
use crate::channels::NoiseKind;
use crate::lightcone::{Circuit2D, EffectiveCircuit1D, Event};
use crate::linalg::{self, CMat, C64, ONE, ZERO};

/// A Pauli string `i^phase · X^x Z^z` on at most two qubits; bit `q` of `x`
/// and `z` belongs to qubit `q` of the gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalPauli {
    pub phase: u8,
    pub x: u8,
    pub z: u8,
}

impl LocalPauli {
    fn mul(self, o: Self) -> Self {
        let swap = (self.z & o.x).count_ones() as u8;
        Self { phase: (self.phase + o.phase + 2 * swap) % 4, x: self.x ^ o.x, z: self.z ^ o.z }
    }

    fn matrix(self, k: usize) -> CMat {
        let mut m = CMat::from_element(1, 1, ONE);
        for q in 0..k {
            let mut p = linalg::identity(2);
            if self.x >> q & 1 == 1 {
                p = linalg::pauli_x();
            }
            if self.z >> q & 1 == 1 {
                p = p * linalg::pauli_z();
            }
            m = linalg::kron(&m, &p);
        }
        m * C64::new(0.0, 1.0).powu(self.phase as u32)
    }
}

/// Conjugation images `U X_q U†`, `U Z_q U†` of a one- or two-qubit Clifford,
/// in the order `X_0, Z_0, X_1, Z_1`. Qubit 0 is the most significant factor
/// of the matrix and bit 0 of a [`LocalPauli`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordMap {
    pub arity: usize,
    pub images: Vec<LocalPauli>,
}

impl CliffordMap {
    /// Reads the images off a unitary; `None` if it is not Clifford.
    pub fn from_matrix(u: &CMat) -> Option<Self> {
        let arity = match u.nrows() {
            2 => 1,
            4 => 2,
            _ => return None,
        };
        let dim = u.nrows() as f64;
        let candidates: Vec<(LocalPauli, CMat)> = (0..1u8 << arity)
            .flat_map(|x| (0..1u8 << arity).map(move |z| (x, z)))
            .map(|(x, z)| {
                let p = LocalPauli { phase: 0, x, z };
                (p, linalg::dagger(&p.matrix(arity)))
            })
            .collect();
        let ud = linalg::dagger(u);
        let mut images = Vec::with_capacity(2 * arity);
        for q in 0..arity {
            for g in [LocalPauli { phase: 0, x: 1 << q, z: 0 }, LocalPauli { phase: 0, x: 0, z: 1 << q }] {
                let img = u * g.matrix(arity) * &ud;
                let found = candidates.iter().find_map(|(p, pd)| {
                    let c = (pd * &img).trace() / dim;
                    let phase = [ONE, C64::new(0.0, 1.0), -ONE, C64::new(0.0, -1.0)]
                        .iter()
                        .position(|w| (c - w).norm() < 1e-8)?;
                    Some(LocalPauli { phase: phase as u8, ..*p })
                })?;
                images.push(found);
            }
        }
        Some(Self { arity, images })
    }

    fn image(&self, x: u8, z: u8) -> LocalPauli {
        let mut acc = LocalPauli { phase: 0, x: 0, z: 0 };
        for q in 0..self.arity {
            if x >> q & 1 == 1 {
                acc = acc.mul(self.images[2 * q]);
            }
            if z >> q & 1 == 1 {
                acc = acc.mul(self.images[2 * q + 1]);
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
}

impl Tableau {
    /// `|0…0⟩`.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        let rows = 2 * n + 1;
        let mut t = Self { n, words, x: vec![0; rows * words], z: vec![0; rows * words], r: vec![false; rows] };
        for q in 0..n {
            t.x[q * words + q / 64] |= 1 << (q % 64);
            t.z[(n + q) * words + q / 64] |= 1 << (q % 64);
        }
        t
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    fn get(v: &[u64], words: usize, row: usize, q: usize) -> bool {
        v[row * words + q / 64] >> (q % 64) & 1 == 1
    }

    #[inline]
    fn xb(&self, row: usize, q: usize) -> bool {
        Self::get(&self.x, self.words, row, q)
    }

    #[inline]
    fn zb(&self, row: usize, q: usize) -> bool {
        Self::get(&self.z, self.words, row, q)
    }

    #[inline]
    fn put(v: &mut [u64], words: usize, row: usize, q: usize, b: bool) {
        let w = &mut v[row * words + q / 64];
        let m = 1u64 << (q % 64);
        if b {
            *w |= m;
        } else {
            *w &= !m;
        }
    }

    pub fn h(&mut self, a: usize) {
        for i in 0..2 * self.n {
            let (xa, za) = (self.xb(i, a), self.zb(i, a));
            self.r[i] ^= xa && za;
            Self::put(&mut self.x, self.words, i, a, za);
            Self::put(&mut self.z, self.words, i, a, xa);
        }
    }

    pub fn s(&mut self, a: usize) {
        for i in 0..2 * self.n {
            let (xa, za) = (self.xb(i, a), self.zb(i, a));
            self.r[i] ^= xa && za;
            Self::put(&mut self.z, self.words, i, a, za ^ xa);
        }
    }

    pub fn cnot(&mut self, a: usize, b: usize) {
        for i in 0..2 * self.n {
            let (xa, za, xb, zb) = (self.xb(i, a), self.zb(i, a), self.xb(i, b), self.zb(i, b));
            self.r[i] ^= xa && zb && (xb ^ za ^ true);
            Self::put(&mut self.x, self.words, i, b, xb ^ xa);
            Self::put(&mut self.z, self.words, i, a, za ^ zb);
        }
    }

    pub fn pauli_x(&mut self, a: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.zb(i, a);
        }
    }

    /// Applies a Clifford given by its conjugation images on `qubits`.
    pub fn apply(&mut self, map: &CliffordMap, qubits: &[usize]) {
        debug_assert_eq!(map.arity, qubits.len());
        for i in 0..2 * self.n {
            let (mut x, mut z, mut ny) = (0u8, 0u8, 0u8);
            for (k, &q) in qubits.iter().enumerate() {
                let (xq, zq) = (self.xb(i, q), self.zb(i, q));
                x |= (xq as u8) << k;
                z |= (zq as u8) << k;
                ny += (xq && zq) as u8;
            }
            if x == 0 && z == 0 {
                continue;
            }
            let img = map.image(x, z);
            let ny_out = (img.x & img.z).count_ones() as u8;
            let e = (2 * self.r[i] as u8 + ny + img.phase + 4 - ny_out % 4) % 4;
            debug_assert!(e % 2 == 0, "Hermitian rows stay Hermitian");
            self.r[i] = e == 2;
            for (k, &q) in qubits.iter().enumerate() {
                Self::put(&mut self.x, self.words, i, q, img.x >> k & 1 == 1);
                Self::put(&mut self.z, self.words, i, q, img.z >> k & 1 == 1);
            }
        }
    }

    /// Row `h` ← row `i` · row `h`, with the sign bookkeeping of Aaronson and
    /// Gottesman done word-parallel.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.words;
        let mut plus = 0u32;
        let mut minus = 0u32;
        for k in 0..w {
            let (x1, z1) = (self.x[i * w + k], self.z[i * w + k]);
            let (x2, z2) = (self.x[h * w + k], self.z[h * w + k]);
            let y1 = x1 & z1;
            let xo = x1 & !z1;
            let zo = z1 & !x1;
            plus += ((y1 & z2 & !x2) | (xo & z2 & x2) | (zo & x2 & !z2)).count_ones();
            minus += ((y1 & x2 & !z2) | (xo & z2 & !x2) | (zo & x2 & z2)).count_ones();
            self.x[h * w + k] = x1 ^ x2;
            self.z[h * w + k] = z1 ^ z2;
        }
        let total = 2 * (self.r[h] as i64 + self.r[i] as i64) + plus as i64 - minus as i64;
        self.r[h] = total.rem_euclid(4) == 2;
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        let w = self.words;
        self.x.copy_within(src * w..(src + 1) * w, dst * w);
        self.z.copy_within(src * w..(src + 1) * w, dst * w);
        self.r[dst] = self.r[src];
    }

    fn clear_row(&mut self, row: usize) {
        let w = self.words;
        self.x[row * w..(row + 1) * w].fill(0);
        self.z[row * w..(row + 1) * w].fill(0);
        self.r[row] = false;
    }

    /// The stabilizer row anticommuting with `Z_a`, if the outcome is random.
    fn random_pivot(&self, a: usize) -> Option<usize> {
        (self.n..2 * self.n).find(|&p| self.xb(p, a))
    }

    fn collapse(&mut self, a: usize, p: usize, bit: u8) {
        for i in 0..2 * self.n {
            if i != p && self.xb(i, a) {
                self.rowsum(i, p);
            }
        }
        self.copy_row(p - self.n, p);
        self.clear_row(p);
        Self::put(&mut self.z, self.words, p, a, true);
        self.r[p] = bit == 1;
    }

    fn deterministic_outcome(&mut self, a: usize) -> u8 {
        let scratch = 2 * self.n;
        self.clear_row(scratch);
        for i in 0..self.n {
            if self.xb(i, a) {
                self.rowsum(scratch, i + self.n);
            }
        }
        self.r[scratch] as u8
    }

    /// Measures `Z_a`, collapsing the state.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, a: usize, rng: &mut R) -> u8 {
        match self.random_pivot(a) {
            Some(p) => {
                let bit = rng.random::<bool>() as u8;
                self.collapse(a, p, bit);
                bit
            }
            None => self.deterministic_outcome(a),
        }
    }

    /// Probability of `Z_a = bit` (0, 1/2 or 1); collapses onto it when
    /// nonzero.
    pub fn project_z(&mut self, a: usize, bit: u8) -> f64 {
        match self.random_pivot(a) {
            Some(p) => {
                self.collapse(a, p, bit);
                0.5
            }
            None => {
                if self.deterministic_outcome(a) == bit {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Measure and reset to `|0⟩`; returns the outcome.
    pub fn measure_reset<R: Rng + ?Sized>(&mut self, a: usize, rng: &mut R) -> u8 {
        let b = self.measure_z(a, rng);
        if b == 1 {
            self.pauli_x(a);
        }
        b
    }

    /// Trajectory-level trace channel: measure, discard, flip with probability 1/2.
    pub fn erase<R: Rng + ?Sized>(&mut self, a: usize, rng: &mut R) {
        self.measure_z(a, rng);
        if rng.random::<bool>() {
            self.pauli_x(a);
        }
    }

    /// `P(z)` over all qubits.
    pub fn probability(&self, z: &[u8]) -> f64 {
        let mut t = self.clone();
        let mut p = 1.0;
        for (a, &b) in z.iter().enumerate() {
            p *= t.project_z(a, b);
            if p == 0.0 {
                break;
            }
        }
        p
    }

    /// Entanglement entropy of `subsystem` (all Rényi orders agree).
    pub fn entropy(&self, subsystem: &[usize]) -> f64 {
        let k = subsystem.len();
        if k == 0 {
            return 0.0;
        }
        let cols = 2 * k;
        let cw = cols.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = (self.n..2 * self.n)
            .map(|i| {
                let mut v = vec![0u64; cw];
                for (c, &q) in subsystem.iter().enumerate() {
                    if self.xb(i, q) {
                        v[c / 64] |= 1 << (c % 64);
                    }
                    let c2 = k + c;
                    if self.zb(i, q) {
                        v[c2 / 64] |= 1 << (c2 % 64);
                    }
                }
                v
            })
            .collect();
        let rank = gf2_rank(&mut rows, cols);
        (rank as f64 - k as f64).max(0.0) * std::f64::consts::LN_2
    }

    /// `I_3(A:B:C)` from the seven entropies.
    pub fn i3(&self, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
        crate::analysis::tripartite_from(|s| self.entropy(s), a, b, c)
    }

    /// Checks that every stabilizer commutes with every other one and
    /// destabilizer `i` anticommutes only with stabilizer `i`.
    pub fn is_symplectic(&self) -> bool {
        let n = self.n;
        let w = self.words;
        let sym = |i: usize, j: usize| {
            (0..w)
                .map(|k| {
                    ((self.x[i * w + k] & self.z[j * w + k]) ^ (self.z[i * w + k] & self.x[j * w + k])).count_ones()
                })
                .sum::<u32>()
                % 2
        };
        (0..2 * n).all(|i| {
            (i..2 * n).all(|j| {
                let expect = u32::from(j == i + n && i < n);
                sym(i, j) == expect
            })
        })
    }

    /// Dense amplitudes of the stabilizer state, qubit 0 most significant;
    /// small systems only.
    pub fn to_dense(&self) -> OracleResult<Vec<C64>> {
        let n = self.n;
        if n > super::dense::MAX_VECTOR_QUBITS {
            return Err(OracleError::TooLarge { n, max: super::dense::MAX_VECTOR_QUBITS });
        }
        // A basis state in the support, projected onto the stabilizer group:
        // ψ ∝ Π (1 + g_i)/2 |b⟩.
        let mut probe = self.clone();
        let seed = (0..n).fold(0usize, |acc, a| {
            let bit = if probe.project_z(a, 0) > 0.0 { 0 } else { 1 };
            if bit == 1 {
                probe.project_z(a, 1);
            }
            acc | bit << (n - 1 - a)
        });
        let mut v = vec![ZERO; 1 << n];
        v[seed] = ONE;
        for i in n..2 * n {
            let gv = self.apply_row_dense(i, &v);
            v.iter_mut().zip(&gv).for_each(|(a, b)| *a = (*a + b) * 0.5);
        }
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-6 {
            return Err(OracleError::Degenerate);
        }
        Ok(v.into_iter().map(|a| a / norm).collect())
    }

    fn apply_row_dense(&self, row: usize, v: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut out = vec![ZERO; v.len()];
        let mut xmask = 0usize;
        for q in 0..n {
            if self.xb(row, q) {
                xmask |= 1 << (n - 1 - q);
            }
        }
        for (idx, &amp) in v.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            // Y-convention: each Y factor is i·X·Z.
            let mut phase = if self.r[row] { -ONE } else { ONE };
            for q in 0..n {
                let bit = idx >> (n - 1 - q) & 1;
                let (xq, zq) = (self.xb(row, q), self.zb(row, q));
                if zq && bit == 1 {
                    phase = -phase;
                }
                if xq && zq {
                    phase *= C64::new(0.0, 1.0);
                }
            }
            out[idx ^ xmask] += phase * amp;
        }
        out
    }
}

fn gf2_rank(rows: &mut [Vec<u64>], cols: usize) -> usize {
    let mut rank = 0;
    for c in 0..cols {
        let (w, m) = (c / 64, 1u64 << (c % 64));
        let Some(p) = (rank..rows.len()).find(|&i| rows[i][w] & m != 0) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != rank && row[w] & m != 0 {
                row.iter_mut().zip(&pivot).for_each(|(a, b)| *a ^= b);
            }
        }
        rank += 1;
    }
    rank
}

/// How noise events act on a stabilizer trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableauNoise {
    /// Depolarizing strength `ε`: erase with probability `4ε/3`.
    Erasure,
    /// Dephasing strength `ε`: measure `Z` with probability `2ε`.
    ProjectiveZ,
}

impl TableauNoise {
    fn rate(self, kind: NoiseKind, eps: f64) -> OracleResult<f64> {
        match (self, kind) {
            (_, _) if eps == 0.0 => Ok(0.0),
            (TableauNoise::Erasure, NoiseKind::Depolarizing) => Ok(4.0 * eps / 3.0),
            (TableauNoise::ProjectiveZ, NoiseKind::Dephasing) => Ok(2.0 * eps),
            _ => Err(OracleError::UnsupportedNoise(format!("{self:?} with {kind:?}"))),
        }
    }

    fn act<R: Rng + ?Sized>(self, t: &mut Tableau, a: usize, rate: f64, rng: &mut R) {
        if rate > 0.0 && rng.random::<f64>() < rate {
            match self {
                TableauNoise::Erasure => t.erase(a, rng),
                TableauNoise::ProjectiveZ => {
                    t.measure_z(a, rng);
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Map(CliffordMap, Vec<usize>),
    Noise(usize),
    MeasureReset { slot: usize, site: usize },
    RowEnd,
}

/// A circuit whose gates have been converted to Clifford maps.
#[derive(Clone, Debug)]
pub struct CliffordProgram {
    n: usize,
    n_qubits: usize,
    ops: Vec<Op>,
    rate: f64,
    noise: TableauNoise,
}

fn map_of(m: &CMat, qubits: Vec<usize>) -> OracleResult<Op> {
    let map = CliffordMap::from_matrix(m).ok_or_else(|| OracleError::NotClifford(qubits.clone()))?;
    Ok(Op::Map(map, qubits))
}

impl CliffordProgram {
    /// The 2D circuit on all its qubits, noise after every layer.
    pub fn from_circuit(c: &Circuit2D, noise: TableauNoise) -> OracleResult<Self> {
        let n = c.n_qubits();
        let rate = if c.noise.is_trivial() { 0.0 } else { noise.rate(c.noise.kind, c.noise.strength)? };
        let mut ops = Vec::new();
        for layer in &c.layers {
            for s in &layer.singles {
                ops.push(map_of(&s.matrix, vec![s.site])?);
            }
            for g in &layer.gates {
                ops.push(map_of(&g.matrix, vec![g.a, g.b])?);
            }
            if rate > 0.0 {
                ops.extend((0..n).map(Op::Noise));
            }
        }
        Ok(Self { n, n_qubits: n, ops, rate, noise })
    }

    /// The compiled 1D stream over slots, with readout and reset.
    pub fn from_effective(ec: &EffectiveCircuit1D, noise: TableauNoise) -> OracleResult<Self> {
        let rate = if ec.noise.is_trivial() { 0.0 } else { noise.rate(ec.noise.kind, ec.noise.strength)? };
        let mut ops = Vec::new();
        for row in &ec.rows {
            for e in row {
                ops.push(match e {
                    Event::Gate { i, j, matrix } => map_of(matrix, vec![*i, *j])?,
                    Event::Single { i, matrix } => map_of(matrix, vec![*i])?,
                    Event::Noise { i } => Op::Noise(*i),
                    Event::MeasureReset { i, site, .. } => Op::MeasureReset { slot: *i, site: *site },
                });
            }
            ops.push(Op::RowEnd);
        }
        Ok(Self { n: ec.n_sites, n_qubits: ec.n_qubits, ops, rate, noise })
    }

    /// Keeps only the first `rows` rows of a compiled stream.
    pub fn truncated(mut self, rows: usize) -> Self {
        let mut seen = 0;
        let cut = self
            .ops
            .iter()
            .position(|o| {
                if matches!(o, Op::RowEnd) {
                    seen += 1;
                }
                seen == rows && matches!(o, Op::RowEnd)
            })
            .map_or(self.ops.len(), |p| p + 1);
        self.ops.truncate(if rows == 0 { 0 } else { cut });
        self
    }

    /// Width of the simulated register.
    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_rows(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, Op::RowEnd)).count()
    }

    fn step<R: Rng + ?Sized>(&self, t: &mut Tableau, op: &Op, z: &mut [u8], rng: &mut R) {
        match op {
            Op::Map(map, qs) => t.apply(map, qs),
            Op::Noise(a) => self.noise.act(t, *a, self.rate, rng),
            Op::MeasureReset { slot, site } => z[*site] = t.measure_reset(*slot, rng),
            Op::RowEnd => {}
        }
    }

    /// Runs one trajectory; returns the final tableau and the readout record
    /// (empty for 2D programs, which are read out with [`Tableau::measure_z`]).
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> (Tableau, Vec<u8>) {
        let mut t = Tableau::new(self.n);
        let mut z = vec![0; self.n_qubits];
        for op in &self.ops {
            self.step(&mut t, op, &mut z, rng);
        }
        (t, z)
    }

    /// Runs one trajectory and calls `observe(row, tableau)` after each row
    /// of a compiled stream.
    pub fn run_observed<R: Rng + ?Sized>(&self, rng: &mut R, mut observe: impl FnMut(usize, &Tableau)) -> Vec<u8> {
        let mut t = Tableau::new(self.n);
        let mut z = vec![0; self.n_qubits];
        let mut row = 0;
        for op in &self.ops {
            self.step(&mut t, op, &mut z, rng);
            if matches!(op, Op::RowEnd) {
                observe(row, &t);
                row += 1;
            }
        }
        z
    }

    /// One trajectory of the estimator for `P(z)`: noise is sampled, readouts
    /// are projected onto `target`.
    pub fn probability_trajectory<R: Rng + ?Sized>(&self, target: &[u8], rng: &mut R) -> f64 {
        let mut t = Tableau::new(self.n);
        let mut p = 1.0;
        let mut read_out = false;
        for op in &self.ops {
            match op {
                Op::MeasureReset { slot, site } => {
                    read_out = true;
                    p *= t.project_z(*slot, target[*site]);
                    if p == 0.0 {
                        return 0.0;
                    }
                    if target[*site] == 1 {
                        t.pauli_x(*slot);
                    }
                }
                other => self.step(&mut t, other, &mut [], rng),
            }
        }
        if read_out { p } else { t.probability(target) }
    }
}

/// Full-register trajectory of a 2D Clifford circuit followed by a `Z`
/// readout of every qubit.
pub fn tableau_sample<R: Rng + ?Sized>(prog: &CliffordProgram, rng: &mut R) -> Vec<u8> {
    let (mut t, z) = prog.run(rng);
    if prog.ops.iter().any(|o| matches!(o, Op::MeasureReset { .. })) {
        return z;
    }
    (0..prog.n).map(|a| t.measure_z(a, rng)).collect()
}

/// Builds the program for `c` and runs one trajectory, returning the final
/// state for entropy queries.
pub fn tableau_evolve<R: Rng + ?Sized>(c: &Circuit2D, noise: TableauNoise, rng: &mut R) -> OracleResult<Tableau> {
    Ok(CliffordProgram::from_circuit(c, noise)?.run(rng).0)
}
