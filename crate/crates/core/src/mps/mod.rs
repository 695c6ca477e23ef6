//! Matrix-product-state trajectory backend.
//!
//! Tensors are stored as `(left, phys, right)` with the left index fastest, so
//! the same buffer reads as a `(left·phys) × right` or a `left × (phys·right)`
//! column-major matrix without copying. The chain keeps a single orthogonality
//! center; every local non-unitary update (Kraus, measurement, projection)
//! happens there so that probabilities come from a one-site reduced density
//! matrix.
//!
//! Basis convention for dense comparisons: site 0 is the most significant
//! digit. Two-site gate matrices act on `|s_i s_j⟩` with index `s_i·d + s_j`.

use std::io::{self, Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::KrausSet;
use crate::linalg::{self, real, CMat, C64, ONE, ZERO};

/// Probabilities below this are treated as numerically zero.
pub const DEGENERATE_PROB: f64 = 1e-14;
/// Unitarity tolerance for gates.
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("a chain needs at least one site")]
    Empty,
    #[error("expected {expected} bits, got {got}")]
    BitCount { expected: usize, got: usize },
    #[error("site {site} out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("two-site gate needs distinct sites, got {0} twice")]
    SameSite(usize),
    #[error("gate is not unitary (error {0:e})")]
    NotUnitary(f64),
    #[error("operator dimension {got} does not match local dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate state: total outcome probability {0:e}")]
    Degenerate(f64),
    #[error("bond dimension {chi} exceeds hard limit {limit}")]
    BondOverflow { chi: usize, limit: usize },
    #[error("subsystem has {0} contiguous blocks; at most 2 are supported")]
    TooManyBlocks(usize),
    #[error("a reference qubit is already attached")]
    ReferenceAttached,
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type MpsResult<T> = Result<T, MpsError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationPolicy {
    pub chi_max: usize,
    /// Singular values with `λ/λ_max` below this are discarded.
    pub svd_cutoff: f64,
    #[serde(default)]
    pub hard_fail_chi: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { chi_max: 512, svd_cutoff: 1e-10, hard_fail_chi: None }
    }
}

impl TruncationPolicy {
    /// No truncation beyond dropping exact zeros.
    pub fn exact() -> Self {
        Self { chi_max: usize::MAX, svd_cutoff: 0.0, hard_fail_chi: None }
    }

    pub fn with_chi(chi_max: usize) -> Self {
        Self { chi_max, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Tensor3 {
    l: usize,
    d: usize,
    r: usize,
    data: Vec<C64>,
}

impl Tensor3 {
    fn from_left_grouped(m: &CMat, l: usize, d: usize) -> Self {
        debug_assert_eq!(m.nrows(), l * d);
        Self { l, d, r: m.ncols(), data: m.as_slice().to_vec() }
    }

    fn from_right_grouped(m: &CMat, d: usize, r: usize) -> Self {
        debug_assert_eq!(m.ncols(), d * r);
        Self { l: m.nrows(), d, r, data: m.as_slice().to_vec() }
    }

    fn left_grouped(&self) -> CMat {
        CMat::from_column_slice(self.l * self.d, self.r, &self.data)
    }

    fn right_grouped(&self) -> CMat {
        CMat::from_column_slice(self.l, self.d * self.r, &self.data)
    }

    #[inline]
    fn at(&self, a: usize, s: usize, b: usize) -> C64 {
        self.data[a + self.l * (s + self.d * b)]
    }

    /// `T[a, s', b] ← Σ_s op[s', s] T[a, s, b]`.
    fn apply_local(&mut self, op: &CMat) {
        let (l, d) = (self.l, self.d);
        let mut buf = vec![ZERO; d];
        for b in 0..self.r {
            for a in 0..l {
                for (s, slot) in buf.iter_mut().enumerate() {
                    *slot = self.data[a + l * (s + d * b)];
                }
                for sp in 0..d {
                    let mut acc = ZERO;
                    for (s, v) in buf.iter().enumerate() {
                        acc += op[(sp, s)] * v;
                    }
                    self.data[a + l * (sp + d * b)] = acc;
                }
            }
        }
    }

    /// `ρ[s, s'] = Σ_{a,b} T[a,s,b] T*[a,s',b]`.
    fn local_density(&self) -> CMat {
        let mut rho = CMat::zeros(self.d, self.d);
        for s in 0..self.d {
            for sp in 0..self.d {
                let mut acc = ZERO;
                for b in 0..self.r {
                    for a in 0..self.l {
                        acc += self.at(a, s, b) * self.at(a, sp, b).conj();
                    }
                }
                rho[(s, sp)] = acc;
            }
        }
        rho
    }

    fn scale(&mut self, f: f64) {
        for z in &mut self.data {
            *z *= f;
        }
    }
}

/// Which neighbour receives the singular values after a two-site update.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Absorb {
    Left,
    Right,
}

/// Handle returned by [`MatrixProductState::attach_reference`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReferenceHandle {
    partner: usize,
}

impl ReferenceHandle {
    pub fn partner(&self) -> usize {
        self.partner
    }
}

#[derive(Clone, Debug)]
pub struct MatrixProductState {
    tensors: Vec<Tensor3>,
    center: usize,
    trunc_log: f64,
    /// Physical index of the reference qubit, if attached.
    reference: Option<usize>,
}

impl MatrixProductState {
    pub fn new_product_state(bits: &[u8]) -> MpsResult<Self> {
        if bits.is_empty() {
            return Err(MpsError::Empty);
        }
        let locals: Vec<Vec<C64>> = bits
            .iter()
            .map(|&b| if b == 0 { vec![ONE, ZERO] } else { vec![ZERO, ONE] })
            .collect();
        Self::from_product(2, &locals)
    }

    /// Product state of normalized-or-not local vectors of dimension `d`.
    pub fn from_product(d: usize, locals: &[Vec<C64>]) -> MpsResult<Self> {
        if locals.is_empty() {
            return Err(MpsError::Empty);
        }
        let mut tensors = Vec::with_capacity(locals.len());
        for v in locals {
            if v.len() != d {
                return Err(MpsError::DimensionMismatch { expected: d, got: v.len() });
            }
            tensors.push(Tensor3 { l: 1, d, r: 1, data: v.clone() });
        }
        let mut out = Self { tensors, center: 0, trunc_log: 0.0, reference: None };
        out.canonicalize();
        Ok(out)
    }

    /// Number of system sites (the reference qubit is not counted).
    pub fn n_sites(&self) -> usize {
        self.tensors.len() - usize::from(self.reference.is_some())
    }

    pub fn chain_len(&self) -> usize {
        self.tensors.len()
    }

    pub fn local_dim(&self) -> usize {
        self.tensors[0].d
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn trunc_log(&self) -> f64 {
        self.trunc_log
    }

    /// Bond dimensions between consecutive chain sites (length `chain_len − 1`).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.r).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn offset(&self) -> usize {
        usize::from(self.reference == Some(0))
    }

    fn phys(&self, site: usize) -> MpsResult<usize> {
        let n = self.n_sites();
        if site >= n {
            return Err(MpsError::SiteOutOfRange { site, n });
        }
        Ok(site + self.offset())
    }

    fn move_center_right(&mut self, i: usize) {
        let t = &self.tensors[i];
        let (l, d) = (t.l, t.d);
        let qr = t.left_grouped().qr();
        let (q, r) = (qr.q(), qr.r());
        self.tensors[i] = Tensor3::from_left_grouped(&q, l, d);
        let next = &self.tensors[i + 1];
        let (nd, nr) = (next.d, next.r);
        let merged = r * next.right_grouped();
        self.tensors[i + 1] = Tensor3::from_right_grouped(&merged, nd, nr);
    }

    fn move_center_left(&mut self, i: usize) {
        let t = &self.tensors[i];
        let (d, r) = (t.d, t.r);
        let qr = t.right_grouped().adjoint().qr();
        let (q, rr) = (qr.q(), qr.r());
        self.tensors[i] = Tensor3::from_right_grouped(&q.adjoint(), d, r);
        let prev = &self.tensors[i - 1];
        let (pl, pd) = (prev.l, prev.d);
        let merged = prev.left_grouped() * rr.adjoint();
        self.tensors[i - 1] = Tensor3::from_left_grouped(&merged, pl, pd);
    }

    /// Moves the orthogonality center to physical index `to` by QR sweeps.
    pub(crate) fn move_center(&mut self, to: usize) {
        while self.center < to {
            self.move_center_right(self.center);
            self.center += 1;
        }
        while self.center > to {
            self.move_center_left(self.center);
            self.center -= 1;
        }
    }

    /// Full sweep making every tensor except the last a left isometry, then
    /// back, leaving the center at 0.
    pub fn canonicalize(&mut self) {
        self.center = 0;
        self.move_center(self.tensors.len() - 1);
        self.move_center(0);
    }

    /// Squared norm `⟨ψ|ψ⟩` by full contraction.
    pub fn norm_sqr(&self) -> f64 {
        let mut env = CMat::from_element(1, 1, ONE);
        for t in &self.tensors {
            // env'[b, b'] = Σ_{a,a',s} env[a, a'] T[a,s,b] T*[a',s,b']
            let mut next = CMat::zeros(t.r, t.r);
            for s in 0..t.d {
                let slice = CMat::from_fn(t.l, t.r, |a, b| t.at(a, s, b));
                next += slice.transpose() * &env * slice.map(|z| z.conj());
            }
            env = next;
        }
        env[(0, 0)].re
    }

    /// Normalizes the center tensor (exact when the chain is in canonical form).
    pub fn normalize(&mut self) {
        let n2 = self.norm_sqr();
        if n2 > 0.0 {
            self.tensors[self.center].scale(1.0 / n2.sqrt());
        }
    }

    /// Applies any `d × d` operator at physical index `i` without moving the
    /// center.
    pub(crate) fn apply_local_phys(&mut self, i: usize, op: &CMat) {
        self.tensors[i].apply_local(op);
    }

    pub fn apply_1q(&mut self, site: usize, g: &CMat) -> MpsResult<()> {
        let d = self.local_dim();
        if g.nrows() != d || g.ncols() != d {
            return Err(MpsError::DimensionMismatch { expected: d, got: g.nrows() });
        }
        let err = linalg::isometry_error(g);
        if err > UNITARY_TOL {
            return Err(MpsError::NotUnitary(err));
        }
        let i = self.phys(site)?;
        self.apply_local_phys(i, g);
        Ok(())
    }

    pub fn apply_2q(&mut self, i: usize, j: usize, g: &CMat, policy: &TruncationPolicy) -> MpsResult<()> {
        let d = self.local_dim();
        if g.nrows() != d * d || g.ncols() != d * d {
            return Err(MpsError::DimensionMismatch { expected: d * d, got: g.nrows() });
        }
        let err = linalg::isometry_error(g);
        if err > UNITARY_TOL {
            return Err(MpsError::NotUnitary(err));
        }
        if i == j {
            return Err(MpsError::SameSite(i));
        }
        let (pi, pj) = (self.phys(i)?, self.phys(j)?);
        self.apply_two_phys(pi, pj, g, policy, true)
    }

    /// Two-site operator on physical indices, swap-routed when not adjacent.
    /// `g` is ordered `(pi, pj)`.
    pub(crate) fn apply_two_phys(
        &mut self,
        pi: usize,
        pj: usize,
        g: &CMat,
        policy: &TruncationPolicy,
        renormalize: bool,
    ) -> MpsResult<()> {
        let d = self.local_dim();
        let (a, b, gate) = if pi < pj { (pi, pj, g.clone()) } else { (pj, pi, swap_conjugate(g, d)) };
        let swap = swap_gate(d);
        for k in a..b - 1 {
            self.apply_adjacent(k, &swap, policy, Absorb::Right, renormalize)?;
        }
        self.apply_adjacent(b - 1, &gate, policy, Absorb::Left, renormalize)?;
        for k in (a..b - 1).rev() {
            self.apply_adjacent(k, &swap, policy, Absorb::Left, renormalize)?;
        }
        Ok(())
    }

    /// Contract sites `k, k+1`, apply `g`, split by truncated SVD.
    pub(crate) fn apply_adjacent(
        &mut self,
        k: usize,
        g: &CMat,
        policy: &TruncationPolicy,
        absorb: Absorb,
        renormalize: bool,
    ) -> MpsResult<()> {
        if self.center < k {
            self.move_center(k);
        } else if self.center > k + 1 {
            self.move_center(k + 1);
        }
        let (ta, tb) = (&self.tensors[k], &self.tensors[k + 1]);
        let (l, d, r) = (ta.l, ta.d, tb.r);
        let theta = ta.left_grouped() * tb.right_grouped();
        // theta rows: a + l·s1, cols: s2 + d·b.
        let mut out = CMat::zeros(l * d, d * r);
        let dd = d * d;
        let mut v = vec![ZERO; dd];
        for b in 0..r {
            for a in 0..l {
                for s1 in 0..d {
                    for s2 in 0..d {
                        v[s1 * d + s2] = theta[(a + l * s1, s2 + d * b)];
                    }
                }
                for s1 in 0..d {
                    for s2 in 0..d {
                        let row = s1 * d + s2;
                        let mut acc = ZERO;
                        for (c, x) in v.iter().enumerate() {
                            acc += g[(row, c)] * x;
                        }
                        out[(a + l * s1, s2 + d * b)] = acc;
                    }
                }
            }
        }
        let (u, s, vt) = linalg::svd_sorted(out);
        let keep = self.truncate(&s, policy, renormalize)?;
        let svals: Vec<f64> = keep.1;
        let chi = svals.len();
        let u = u.columns(0, chi).into_owned();
        let vt = vt.rows(0, chi).into_owned();
        let (left, right) = match absorb {
            Absorb::Right => {
                let mut sv = vt;
                for (row, sv_i) in svals.iter().enumerate() {
                    sv.row_mut(row).scale_mut(*sv_i);
                }
                self.center = k + 1;
                (u, sv)
            }
            Absorb::Left => {
                let mut us = u;
                for (col, sv_i) in svals.iter().enumerate() {
                    us.column_mut(col).scale_mut(*sv_i);
                }
                self.center = k;
                (us, vt)
            }
        };
        self.tensors[k] = Tensor3::from_left_grouped(&left, l, d);
        self.tensors[k + 1] = Tensor3::from_right_grouped(&right, d, r);
        Ok(())
    }

    /// Returns `(chi, kept singular values)` and logs the discarded weight.
    fn truncate(&mut self, s: &[f64], policy: &TruncationPolicy, renormalize: bool) -> MpsResult<(usize, Vec<f64>)> {
        let smax = s.first().copied().unwrap_or(0.0);
        let total: f64 = s.iter().map(|x| x * x).sum();
        let mut needed = s.iter().take_while(|&&x| x > 1e-13 * smax && x >= policy.svd_cutoff * smax).count().max(1);
        if let Some(limit) = policy.hard_fail_chi {
            if needed > limit {
                return Err(MpsError::BondOverflow { chi: needed, limit });
            }
        }
        needed = needed.min(policy.chi_max.max(1));
        let kept: f64 = s[..needed].iter().map(|x| x * x).sum();
        if total > 0.0 {
            self.trunc_log += ((total - kept) / total).max(0.0);
        }
        let mut out = s[..needed].to_vec();
        if renormalize && kept > 0.0 {
            let f = (total / kept).sqrt();
            out.iter_mut().for_each(|x| *x *= f);
        }
        Ok((needed, out))
    }

    /// One-site reduced density matrix at physical index `i` (moves the center).
    pub(crate) fn local_density_phys(&mut self, i: usize) -> CMat {
        self.move_center(i);
        self.tensors[i].local_density()
    }

    pub fn reduced_density(&mut self, site: usize) -> MpsResult<CMat> {
        let i = self.phys(site)?;
        Ok(self.local_density_phys(i))
    }

    /// Samples a Kraus outcome with Born probabilities and applies the
    /// normalized post-measurement update.
    pub fn apply_kraus<R: Rng + ?Sized>(&mut self, site: usize, k: &KrausSet, rng: &mut R) -> MpsResult<usize> {
        let d = self.local_dim();
        if k.dim() != d {
            return Err(MpsError::DimensionMismatch { expected: d, got: k.dim() });
        }
        let i = self.phys(site)?;
        let rho = self.local_density_phys(i);
        let probs: Vec<f64> = k
            .ops()
            .iter()
            .map(|m| linalg::trace(&(m * &rho * m.adjoint())).re.max(0.0))
            .collect();
        let total: f64 = probs.iter().sum();
        if probs.iter().all(|&p| p < DEGENERATE_PROB) {
            return Err(MpsError::Degenerate(total));
        }
        let outcome = sample_index(&probs, total, rng);
        let op = &k.ops()[outcome] * real(1.0 / (probs[outcome] / total).sqrt());
        self.tensors[i].apply_local(&op);
        self.tensors[i].scale(1.0 / total.sqrt());
        Ok(outcome)
    }

    /// Born-samples a computational-basis bit and resets the site to `|0⟩`.
    pub fn measure_reset<R: Rng + ?Sized>(&mut self, site: usize, rng: &mut R) -> MpsResult<u8> {
        let i = self.phys(site)?;
        let rho = self.local_density_phys(i);
        let (p0, p1) = (rho[(0, 0)].re.max(0.0), rho[(1, 1)].re.max(0.0));
        let total = p0 + p1;
        if total < DEGENERATE_PROB {
            return Err(MpsError::Degenerate(total));
        }
        let bit = u8::from(rng.random::<f64>() * total >= p0);
        let p = if bit == 0 { p0 } else { p1 };
        self.tensors[i].apply_local(&reset_from(bit));
        self.tensors[i].scale(1.0 / p.sqrt());
        Ok(bit)
    }

    /// Projects onto `bit`, resets the site to `|0⟩` and returns the
    /// probability of that outcome.
    pub fn project_onto(&mut self, site: usize, bit: u8) -> MpsResult<f64> {
        let i = self.phys(site)?;
        let rho = self.local_density_phys(i);
        let total = (rho[(0, 0)].re + rho[(1, 1)].re).max(0.0);
        let p = rho[(bit as usize, bit as usize)].re.max(0.0) / total.max(f64::MIN_POSITIVE);
        if p < DEGENERATE_PROB {
            return Err(MpsError::Degenerate(p));
        }
        self.tensors[i].apply_local(&reset_from(bit));
        self.tensors[i].scale(1.0 / (p * total).sqrt());
        Ok(p)
    }

    /// Schmidt values across the bond between physical sites `bond − 1` and
    /// `bond`.
    fn schmidt_values_phys(&mut self, bond: usize) -> Vec<f64> {
        if bond == 0 || bond >= self.tensors.len() {
            return vec![1.0];
        }
        self.move_center(bond - 1);
        let m = self.tensors[bond - 1].left_grouped();
        m.singular_values().iter().copied().collect()
    }

    /// Rényi entropy (natural log) across system bond `cut`: the left part
    /// holds system sites `< cut` plus the reference if it sits on the left.
    pub fn renyi_entropy(&mut self, cut: usize, order: f64) -> f64 {
        let bond = (cut + self.offset()).min(self.tensors.len());
        let s = self.schmidt_values_phys(bond);
        let probs: Vec<f64> = s.iter().map(|x| x * x).collect();
        linalg::renyi_of_spectrum(&probs, order)
    }

    /// Entanglement of the union of at most two contiguous blocks of system
    /// sites, by swapping a copy so the subsystem becomes a prefix.
    pub fn subsystem_renyi(&self, sites: &[usize], order: f64) -> MpsResult<f64> {
        let mut sorted: Vec<usize> = sites.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let blocks = count_blocks(&sorted);
        if blocks > 2 {
            return Err(MpsError::TooManyBlocks(blocks));
        }
        let n = self.n_sites();
        if let Some(&bad) = sorted.iter().find(|&&s| s >= n) {
            return Err(MpsError::SiteOutOfRange { site: bad, n });
        }
        if sorted.is_empty() || sorted.len() == n {
            return Ok(0.0);
        }
        let mut work = self.clone();
        let policy = TruncationPolicy { chi_max: usize::MAX, svd_cutoff: 1e-14, hard_fail_chi: None };
        let swap = swap_gate(self.local_dim());
        let off = self.offset();
        let len = work.tensors.len();
        let bond = if off == 1 {
            // Reference on the left: gather the subsystem at the right end.
            let mut suffix = len;
            for &s in sorted.iter().rev() {
                let mut pos = s + off;
                while pos + 1 < suffix {
                    work.apply_adjacent(pos, &swap, &policy, Absorb::Right, true)?;
                    pos += 1;
                }
                suffix -= 1;
            }
            suffix
        } else {
            let mut prefix = 0;
            for &s in &sorted {
                let mut pos = s;
                while pos > prefix {
                    work.apply_adjacent(pos - 1, &swap, &policy, Absorb::Left, true)?;
                    pos -= 1;
                }
                prefix += 1;
            }
            prefix
        };
        let probs: Vec<f64> = work.schmidt_values_phys(bond).iter().map(|x| x * x).collect();
        Ok(linalg::renyi_of_spectrum(&probs, order))
    }

    /// Inserts a reference qubit at the chain edge nearest `site` and makes it
    /// a Bell pair with that site (exact when the site is in a computational
    /// basis state, as for the initial `|0…0⟩`).
    pub fn attach_reference(&mut self, site: usize, policy: &TruncationPolicy) -> MpsResult<ReferenceHandle> {
        if self.reference.is_some() {
            return Err(MpsError::ReferenceAttached);
        }
        let n = self.n_sites();
        if site >= n {
            return Err(MpsError::SiteOutOfRange { site, n });
        }
        let d = self.local_dim();
        if d != 2 {
            return Err(MpsError::DimensionMismatch { expected: 2, got: d });
        }
        let plus = vec![real(std::f64::consts::FRAC_1_SQRT_2); 2];
        let at_left = site < n.div_ceil(2);
        if at_left {
            self.tensors.insert(0, Tensor3 { l: 1, d: 2, r: 1, data: plus });
            self.center += 1;
            self.reference = Some(0);
        } else {
            self.tensors.push(Tensor3 { l: 1, d: 2, r: 1, data: plus });
            self.reference = Some(self.tensors.len() - 1);
        }
        let r = self.reference.unwrap_or(0);
        let p = self.phys(site)?;
        self.apply_two_phys(r, p, &cnot(), policy, true)?;
        Ok(ReferenceHandle { partner: site })
    }

    /// Von Neumann entropy of the reference qubit alone.
    pub fn reference_entropy(&mut self, _handle: ReferenceHandle) -> f64 {
        let Some(r) = self.reference else { return 0.0 };
        let rho = self.local_density_phys(r);
        let tr = linalg::trace(&rho).re;
        let ev: Vec<f64> = linalg::hermitian_eigenvalues(&rho).iter().map(|x| x / tr).collect();
        linalg::renyi_of_spectrum(&ev, 1.0)
    }

    /// Amplitude `⟨bits|ψ⟩` over system sites (reference must be absent).
    pub fn amplitude(&self, bits: &[usize]) -> C64 {
        let mut v = CMat::from_element(1, 1, ONE);
        for (t, &s) in self.tensors.iter().zip(bits) {
            let slice = CMat::from_fn(t.l, t.r, |a, b| t.at(a, s, b));
            v = v * slice;
        }
        v[(0, 0)]
    }

    /// `Σ_s Π_i w_i[s_i] ψ[s]` for per-site weight vectors over the whole chain.
    pub(crate) fn contract_product(&self, weights: &[Vec<C64>]) -> C64 {
        let mut v = CMat::from_element(1, 1, ONE);
        for (t, w) in self.tensors.iter().zip(weights) {
            let slice = CMat::from_fn(t.l, t.r, |a, b| (0..t.d).map(|s| w[s] * t.at(a, s, b)).sum());
            v = v * slice;
        }
        v[(0, 0)]
    }

    /// Dense vector over the whole chain; intended for small test systems.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut v = CMat::from_element(1, 1, ONE);
        for t in &self.tensors {
            let rows = v.nrows();
            let mut next = CMat::zeros(rows * t.d, t.r);
            for idx in 0..rows {
                for s in 0..t.d {
                    for b in 0..t.r {
                        let mut acc = ZERO;
                        for a in 0..t.l {
                            acc += v[(idx, a)] * t.at(a, s, b);
                        }
                        next[(idx * t.d + s, b)] = acc;
                    }
                }
            }
            v = next;
        }
        v.column(0).iter().copied().collect()
    }

    /// Binary checkpoint: magic, header, per-site shapes, then row-major
    /// `(re, im)` little-endian `f64` data indexed `[left][phys][right]`.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> MpsResult<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        for v in [self.tensors.len() as u64, self.center as u64, self.reference.map_or(u64::MAX, |r| r as u64)] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.trunc_log.to_le_bytes())?;
        for t in &self.tensors {
            for v in [t.l, t.d, t.r] {
                w.write_all(&(v as u64).to_le_bytes())?;
            }
        }
        for t in &self.tensors {
            for a in 0..t.l {
                for s in 0..t.d {
                    for b in 0..t.r {
                        let z = t.at(a, s, b);
                        w.write_all(&z.re.to_le_bytes())?;
                        w.write_all(&z.im.to_le_bytes())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> MpsResult<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(MpsError::Checkpoint("wrong magic".into()));
        }
        let read_u64 = |r: &mut R| -> MpsResult<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let n = read_u64(&mut r)? as usize;
        let center = read_u64(&mut r)? as usize;
        let reference = match read_u64(&mut r)? {
            u64::MAX => None,
            v => Some(v as usize),
        };
        let trunc_log = f64::from_bits(read_u64(&mut r)?);
        if n == 0 || center >= n || reference.is_some_and(|x| x >= n) {
            return Err(MpsError::Checkpoint("inconsistent header".into()));
        }
        let mut shapes = Vec::with_capacity(n);
        for _ in 0..n {
            shapes.push((read_u64(&mut r)? as usize, read_u64(&mut r)? as usize, read_u64(&mut r)? as usize));
        }
        for (k, w) in shapes.windows(2).enumerate() {
            if w[0].2 != w[1].0 {
                return Err(MpsError::Checkpoint(format!("bond mismatch after site {k}")));
            }
        }
        let mut tensors = Vec::with_capacity(n);
        for (l, d, rr) in shapes {
            let mut t = Tensor3 { l, d, r: rr, data: vec![ZERO; l * d * rr] };
            for a in 0..l {
                for s in 0..d {
                    for b in 0..rr {
                        let re = f64::from_bits(read_u64(&mut r)?);
                        let im = f64::from_bits(read_u64(&mut r)?);
                        t.data[a + l * (s + d * b)] = C64::new(re, im);
                    }
                }
            }
            tensors.push(t);
        }
        Ok(Self { tensors, center, trunc_log, reference })
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"NSEBDMPS";

fn sample_index<R: Rng + ?Sized>(probs: &[f64], total: f64, rng: &mut R) -> usize {
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

fn reset_from(bit: u8) -> CMat {
    let mut m = CMat::zeros(2, 2);
    m[(0, bit as usize)] = ONE;
    m
}

fn count_blocks(sorted: &[usize]) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    1 + sorted.windows(2).filter(|w| w[1] != w[0] + 1).count()
}

/// SWAP on two `d`-level sites.
pub fn swap_gate(d: usize) -> CMat {
    let mut m = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            m[(b * d + a, a * d + b)] = ONE;
        }
    }
    m
}

/// `SWAP · g · SWAP`: the same operator with its two sites listed in the
/// opposite order.
pub fn swap_conjugate(g: &CMat, d: usize) -> CMat {
    let s = swap_gate(d);
    &s * g * &s
}

/// CNOT with the first site as control.
pub fn cnot() -> CMat {
    let mut m = CMat::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, c)] = ONE;
    }
    m
}

#[cfg(test)]
mod tests;
