//! Numerical search over the Kraus gauge freedom for the unraveling with the
//! largest purification cost `x`.
//!
//! The gauge `U(n)` is parameterized as an ordered product of complex Givens
//! rotations, one per index pair, each with an angle and a phase. A left
//! diagonal phase matrix is omitted because it only rephases the output
//! operators. The search is Nelder–Mead from the identity and from seeded
//! random starts, followed by a coordinate golden-section polish.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{apply_gauge, cost_of_ops, ChannelError, ChannelResult, KrausSet};
use crate::linalg::{self, CMat, C64};

#[derive(Clone, Debug)]
pub struct OptimizeOptions {
    /// Random restarts in addition to the identity start.
    pub restarts: usize,
    /// Simplex size below which Nelder–Mead stops early.
    pub simplex_tol: f64,
    /// Sweeps of one-dimensional golden-section polishing.
    pub polish_sweeps: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { restarts: 6, simplex_tol: 1e-11, polish_sweeps: 4 }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizedUnraveling {
    pub kraus: KrausSet,
    pub x: f64,
    /// The `n_out × n_out` unitary applied to the zero-padded input set.
    pub gauge: CMat,
}

/// Maximizes [`super::unraveling_cost_x`] over gauge transforms of `k`,
/// zero-padded to `n_out` operators. `budget` bounds the Nelder–Mead
/// iterations of each start. Deterministic for a fixed `seed`; the result is
/// never worse than `k` itself.
pub fn optimize_unraveling(
    k: &KrausSet,
    n_out: usize,
    budget: usize,
    seed: u64,
) -> ChannelResult<OptimizedUnraveling> {
    optimize_unraveling_with(k, n_out, budget, seed, &OptimizeOptions::default())
}

pub fn optimize_unraveling_with(
    k: &KrausSet,
    n_out: usize,
    budget: usize,
    seed: u64,
    opts: &OptimizeOptions,
) -> ChannelResult<OptimizedUnraveling> {
    if n_out < k.len() {
        return Err(ChannelError::TooFewOutputs { requested: n_out, have: k.len() });
    }
    let d = k.dim();
    let mut padded = k.ops().to_vec();
    padded.resize(n_out, CMat::zeros(d, d));

    let pairs: Vec<(usize, usize)> =
        (0..n_out).flat_map(|i| (i + 1..n_out).map(move |j| (i, j))).collect();
    let dim = 2 * pairs.len();
    let objective = |p: &[f64]| -cost_of_ops(&apply_gauge(&padded, &givens_product(n_out, &pairs, p)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_p = vec![0.0; dim];
    let mut best_f = objective(&best_p);

    if dim > 0 {
        for start in 0..=opts.restarts {
            let p0: Vec<f64> = if start == 0 {
                vec![0.0; dim]
            } else {
                (0..dim)
                    .map(|a| {
                        if a % 2 == 0 {
                            rng.random_range(0.0..std::f64::consts::FRAC_PI_2)
                        } else {
                            rng.random_range(0.0..std::f64::consts::TAU)
                        }
                    })
                    .collect()
            };
            let (p, f) = nelder_mead(&objective, p0, 0.4, budget, opts.simplex_tol);
            let (p, f) = polish(&objective, p, f, opts.polish_sweeps);
            if f < best_f {
                best_f = f;
                best_p = p;
            }
        }
    }

    let gauge = givens_product(n_out, &pairs, &best_p);
    let ops = apply_gauge(&padded, &gauge);
    let x = cost_of_ops(&ops);
    let kraus = KrausSet::new(ops, format!("{}/optimized", k.label()))?;
    Ok(OptimizedUnraveling { kraus, x, gauge })
}

/// `Π_(i<j) G_ij(θ, φ)` with `G` acting on rows `i, j` as
/// `[[cos θ, −e^{−iφ} sin θ], [e^{iφ} sin θ, cos θ]]`.
fn givens_product(n: usize, pairs: &[(usize, usize)], params: &[f64]) -> CMat {
    let mut u = linalg::identity(n);
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let (s, c) = params[2 * k].sin_cos();
        let ph = C64::from_polar(1.0, params[2 * k + 1]);
        for col in 0..n {
            let a = u[(i, col)];
            let b = u[(j, col)];
            u[(i, col)] = a * c - ph.conj() * b * s;
            u[(j, col)] = ph * a * s + b * c;
        }
    }
    u
}

/// Adaptive-coefficient Nelder–Mead minimization.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: Vec<f64>,
    step: f64,
    max_iter: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = f(&x0);
    simplex.push((x0.clone(), fx0));
    for i in 0..n {
        let mut x = x0.clone();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.abs() < tol && size < tol.sqrt() {
            break;
        }

        let centroid: Vec<f64> =
            (0..n).map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(alpha);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(alpha * rho);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best) {
                *xi = bi + sigma * (*xi - bi);
            }
            *fx = f(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Golden-section line searches along each coordinate in turn.
fn polish<F: Fn(&[f64]) -> f64>(f: &F, mut x: Vec<f64>, mut fx: f64, sweeps: usize) -> (Vec<f64>, f64) {
    let mut width = 0.05;
    for _ in 0..sweeps {
        for k in 0..x.len() {
            let center = x[k];
            let g = |t: f64, x: &mut Vec<f64>| {
                x[k] = t;
                f(x)
            };
            let (mut a, mut b) = (center - width, center + width);
            let r = 0.5 * (5f64.sqrt() - 1.0);
            let mut c = b - r * (b - a);
            let mut d = a + r * (b - a);
            let mut fc = g(c, &mut x);
            let mut fd = g(d, &mut x);
            for _ in 0..60 {
                if fc < fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - r * (b - a);
                    fc = g(c, &mut x);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + r * (b - a);
                    fd = g(d, &mut x);
                }
            }
            let t = 0.5 * (a + b);
            let ft = g(t, &mut x);
            if ft < fx {
                fx = ft;
            } else {
                x[k] = center;
            }
        }
        width *= 0.2;
    }
    (x, fx)
}
