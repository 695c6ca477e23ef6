//! Small dense complex linear-algebra helpers shared by every module.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// `[I, X, Y, Z]`.
pub fn paulis() -> [CMat; 4] {
    [identity(2), pauli_x(), pauli_y(), pauli_z()]
}

/// `|b⟩⟨b|` on one qubit.
pub fn projector(bit: u8) -> CMat {
    let mut p = CMat::zeros(2, 2);
    p[(bit as usize, bit as usize)] = ONE;
    p
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn conj(m: &CMat) -> CMat {
    m.map(|z| z.conj())
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Largest entrywise deviation of `m† m` from the identity.
pub fn isometry_error(m: &CMat) -> f64 {
    let g = m.adjoint() * m;
    max_abs_diff(&g, &identity(m.ncols()))
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    m.is_square() && isometry_error(m) <= tol
}

/// Haar-random `d × d` unitary (QR of a Ginibre matrix with the phase fix).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / std::f64::consts::SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 { diag / diag.norm() } else { ONE };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Singular value decomposition with singular values sorted in descending
/// order. Returns `(u, s, v_dagger)` with `u` of shape `rows × k` and
/// `v_dagger` of shape `k × cols`, `k = min(rows, cols)`.
///
/// The LAPACK-free bidiagonal SVD occasionally returns a wrong factorization
/// for rank-deficient input, so the result is checked and recomputed on the
/// adjoint, then by one-sided Jacobi, if needed.
pub fn svd_sorted(m: CMat) -> (CMat, Vec<f64>, CMat) {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        let (rows, cols) = m.shape();
        let k = rows.min(cols);
        return (CMat::identity(rows, k), vec![0.0; k], CMat::identity(k, cols));
    }
    let tol = 1e-11 * scale * (m.nrows().max(m.ncols()) as f64).sqrt();
    let direct = bidiagonal_svd(&m);
    if reconstruction_error(&m, &direct) < tol {
        return sort_svd(direct);
    }
    let (ua, sa, vta) = bidiagonal_svd(&m.adjoint());
    let flipped = (vta.adjoint(), sa, ua.adjoint());
    if reconstruction_error(&m, &flipped) < tol {
        return sort_svd(flipped);
    }
    log::debug!("falling back to Jacobi SVD for a {:?} matrix", m.shape());
    sort_svd(jacobi_svd(&m))
}

type Svd = (CMat, Vec<f64>, CMat);

fn bidiagonal_svd(m: &CMat) -> Svd {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    (u, svd.singular_values.iter().copied().collect(), vt)
}

fn reconstruction_error(m: &CMat, (u, s, vt): &Svd) -> f64 {
    let mut us = u.clone();
    for (col, sv) in s.iter().enumerate() {
        us.column_mut(col).scale_mut(*sv);
    }
    // Only columns that survive truncation need to be orthonormal.
    let smax = s.iter().copied().fold(0.0, f64::max);
    let live: Vec<usize> = (0..s.len()).filter(|&j| s[j] > 1e-13 * smax).collect();
    let isometry = isometry_error(&u.select_columns(&live));
    max_abs_diff(&(us * vt), m).max(isometry * smax)
}

fn sort_svd((u, s, vt): Svd) -> Svd {
    let (rows, cols) = (u.nrows(), vt.ncols());
    let k = s.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    if order.iter().enumerate().all(|(i, &j)| i == j) {
        return (u, s, vt);
    }
    let u2 = CMat::from_fn(rows, k, |i, j| u[(i, order[j])]);
    let vt2 = CMat::from_fn(k, cols, |i, j| vt[(order[i], j)]);
    let s2 = order.iter().map(|&j| s[j]).collect();
    (u2, s2, vt2)
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn jacobi_svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    if m.nrows() < m.ncols() {
        let (u, s, vt) = jacobi_svd(&m.adjoint());
        return (vt.adjoint(), s, u.adjoint());
    }
    let (rows, n) = m.shape();
    let mut a = m.clone();
    let mut v = identity(n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = a.column(p).iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = a.column(q).iter().map(|z| z.norm_sqr()).sum();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = xp * cs - xq * sn;
                        mat[(i, q)] = (xp * sn + xq * cs) * phase;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let smax = s.iter().copied().fold(0.0, f64::max);
    let mut u = CMat::zeros(rows, n);
    let mut filled = Vec::new();
    for j in 0..n {
        if s[j] > 1e-13 * smax {
            u.set_column(j, &(a.column(j) / real(s[j])));
            filled.push(j);
        }
    }
    // Complete the columns belonging to vanishing singular values.
    let mut e = 0;
    for j in 0..n {
        if filled.contains(&j) {
            continue;
        }
        loop {
            let mut cand = nalgebra::DVector::<C64>::zeros(rows);
            cand[e % rows] = ONE;
            e += 1;
            for &f in &filled {
                let proj = u.column(f).dotc(&cand);
                cand -= u.column(f) * proj;
            }
            let nrm = cand.norm();
            if nrm > 1e-6 {
                u.set_column(j, &(cand / real(nrm)));
                filled.push(j);
                break;
            }
        }
    }
    (u, s, v.adjoint())
}

/// Eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()) * real(0.5);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// Rényi entropy (natural log) of a probability spectrum; order 1 is the
/// Shannon / von Neumann limit.
pub fn renyi_of_spectrum(probs: &[f64], order: f64) -> f64 {
    let p: Vec<f64> = probs.iter().copied().filter(|&x| x > 1e-300).collect();
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let s = if (order - 1.0).abs() < 1e-12 {
        -p.iter().map(|&x| (x / total) * (x / total).ln()).sum::<f64>()
    } else {
        let m: f64 = p.iter().map(|&x| (x / total).powf(order)).sum();
        m.ln() / (1.0 - order)
    };
    s.max(0.0)
}

/// Serde adapter storing a complex matrix as `{rows, cols, re, im}` with
/// row-major entries.
pub mod cmat_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{CMat, C64};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Repr {
        rows: usize,
        cols: usize,
        re: Vec<f64>,
        im: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        let (rows, cols) = m.shape();
        let entries: Vec<C64> = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|ij| m[ij]).collect();
        Repr { rows, cols, re: entries.iter().map(|z| z.re).collect(), im: entries.iter().map(|z| z.im).collect() }
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.re.len() != r.rows * r.cols || r.im.len() != r.re.len() {
            return Err(serde::de::Error::custom("matrix entry count does not match its shape"));
        }
        Ok(CMat::from_fn(r.rows, r.cols, |i, j| C64::new(r.re[i * r.cols + j], r.im[i * r.cols + j])))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2, 4, 8] {
            assert!(is_unitary(&haar_unitary(d, &mut rng), 1e-12));
        }
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = haar_unitary(6, &mut rng).columns(0, 4).into_owned() * real(2.0);
        let (u, s, vt) = svd_sorted(m.clone());
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let sm = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
            s.len(),
            s.iter().map(|&x| real(x)),
        ));
        assert!(max_abs_diff(&(u * sm * vt), &m) < 1e-12);
    }

    fn recompose(u: &CMat, s: &[f64], vt: &CMat) -> CMat {
        let sm = CMat::from_diagonal(&nalgebra::DVector::from_iterator(s.len(), s.iter().map(|&x| real(x))));
        u * sm * vt
    }

    #[test]
    fn jacobi_svd_handles_rank_deficient_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (rows, cols, rank) in [(10, 4, 2), (4, 10, 2), (6, 6, 3), (5, 3, 0)] {
            let a = haar_unitary(rows, &mut rng).columns(0, rank.max(1)).into_owned();
            let b = haar_unitary(cols, &mut rng).rows(0, rank.max(1)).into_owned();
            let m = if rank == 0 { CMat::zeros(rows, cols) } else { a * b };
            for (u, s, vt) in [jacobi_svd(&m), svd_sorted(m.clone())] {
                let k = rows.min(cols);
                assert_eq!((u.shape(), vt.shape()), ((rows, k), (k, cols)));
                assert!(max_abs_diff(&recompose(&u, &s, &vt), &m) < 1e-12);
                assert!(isometry_error(&u) < 1e-12);
                assert_eq!(s.iter().filter(|&&x| x > 1e-10).count(), rank);
            }
        }
    }

    #[test]
    fn renyi_limits() {
        let p = [0.5, 0.5];
        for n in [0.5, 1.0, 2.0] {
            assert!((renyi_of_spectrum(&p, n) - 2f64.ln()).abs() < 1e-14);
        }
        assert_eq!(renyi_of_spectrum(&[1.0, 0.0], 1.0), 0.0);
    }
}
