//! Purification-time fits, tripartite mutual information, finite-size
//! scaling collapse and fidelity conversions.

pub mod mipt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("fit window [{lo}, {hi}] holds fewer than two positive points")]
    EmptyWindow { lo: usize, hi: usize },
    #[error("entropy does not decay on the fit window (slope {0:e})")]
    Unbounded(f64),
    #[error("subsystems overlap on site {0}")]
    Overlap(usize),
    #[error("collapse needs at least 3 points and 2 distinct sizes")]
    DegenerateCollapse,
    #[error("fidelity {0} outside [0.2, 1]")]
    FidelityRange(f64),
    #[error("invalid grid: {0}")]
    Grid(String),
}

pub type AnalysisResult<T> = Result<T, AnalysisError>;

/// Entropies below this are dropped before taking logs.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurificationFit {
    pub tau: f64,
    /// `log S_R` at row 0 of the fitted line.
    pub intercept: f64,
    pub row_lo: usize,
    pub row_hi: usize,
    /// Root-mean-square residual of `log S_R`.
    pub residual: f64,
}

/// Rows `[L_x, 2 L_x]`.
pub fn default_window(lx: usize) -> (usize, usize) {
    (lx, 2 * lx)
}

/// Least-squares line through `log S_R(row)` on the inclusive row window.
pub fn fit_tau(series: &[f64], window: (usize, usize)) -> AnalysisResult<PurificationFit> {
    let (lo, hi) = window;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .enumerate()
        .filter(|&(t, &s)| t >= lo && t <= hi && s > POSITIVITY_FLOOR)
        .map(|(t, &s)| (t as f64, s.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(AnalysisError::EmptyWindow { lo, hi });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    if slope >= -1e-14 {
        return Err(AnalysisError::Unbounded(slope));
    }
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(PurificationFit { tau: -1.0 / slope, intercept, row_lo: lo, row_hi: hi, residual })
}

/// Four contiguous quarters of `0..n` (the last absorbs the remainder).
pub fn quarters(n: usize) -> [Vec<usize>; 4] {
    let q = n / 4;
    [(0..q).collect(), (q..2 * q).collect(), (2 * q..3 * q).collect(), (3 * q..n).collect()]
}

/// `I_3` from any entropy function, without overlap checks.
pub fn tripartite_from(entropy: impl Fn(&[usize]) -> f64, a: &[usize], b: &[usize], c: &[usize]) -> f64 {
    let join = |parts: &[&[usize]]| -> Vec<usize> {
        let mut v: Vec<usize> = parts.iter().flat_map(|p| p.iter().copied()).collect();
        v.sort_unstable();
        v
    };
    entropy(a) + entropy(b) + entropy(c) - entropy(&join(&[a, b])) - entropy(&join(&[a, c]))
        - entropy(&join(&[b, c]))
        + entropy(&join(&[a, b, c]))
}

/// `I_3(A:B:C) = S_A + S_B + S_C − S_AB − S_AC − S_BC + S_ABC`.
pub fn tripartite_mi(entropy: impl Fn(&[usize]) -> f64, a: &[usize], b: &[usize], c: &[usize]) -> AnalysisResult<f64> {
    let mut seen = std::collections::HashSet::new();
    for &s in a.iter().chain(b).chain(c) {
        if !seen.insert(s) {
            return Err(AnalysisError::Overlap(s));
        }
    }
    Ok(tripartite_from(entropy, a, b, c))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub eps: f64,
    pub l: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseGrid {
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub eps_step: f64,
    pub nu_lo: f64,
    pub nu_hi: f64,
    pub nu_step: f64,
}

impl CollapseGrid {
    /// `ε_c` over the swept range in steps of 1e-3, `ν ∈ [0.7, 2.0]` in steps
    /// of 1e-2.
    pub fn for_points(points: &[ScalingPoint]) -> Self {
        let lo = points.iter().map(|p| p.eps).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p.eps).fold(f64::NEG_INFINITY, f64::max);
        Self { eps_lo: lo, eps_hi: hi, eps_step: 1e-3, nu_lo: 0.7, nu_hi: 2.0, nu_step: 1e-2 }
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| lo + k as f64 * step).collect()
    }

    pub fn eps_axis(&self) -> Vec<f64> {
        Self::axis(self.eps_lo, self.eps_hi, self.eps_step)
    }

    pub fn nu_axis(&self) -> Vec<f64> {
        Self::axis(self.nu_lo, self.nu_hi, self.nu_step)
    }

    fn validate(&self) -> AnalysisResult<()> {
        let ok = self.eps_step > 0.0
            && self.nu_step > 0.0
            && self.eps_hi >= self.eps_lo
            && self.nu_hi >= self.nu_lo
            && self.nu_lo > 0.0
            && [self.eps_lo, self.eps_hi, self.nu_lo, self.nu_hi].iter().all(|v| v.is_finite());
        if ok { Ok(()) } else { Err(AnalysisError::Grid(format!("{self:?}"))) }
    }
}

/// Mean squared deviation of each interior point from the line through its
/// neighbours, after sorting by `x = (ε − ε_c) L^{1/ν}`.
pub fn collapse_objective(points: &[ScalingPoint], eps_c: f64, nu: f64) -> f64 {
    let mut xy: Vec<(f64, f64)> = points.iter().map(|p| ((p.eps - eps_c) * p.l.powf(1.0 / nu), p.y)).collect();
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = xy.len();
    let mut sum = 0.0;
    for i in 1..n - 1 {
        let (x0, y0) = xy[i - 1];
        let (x1, y1) = xy[i];
        let (x2, y2) = xy[i + 1];
        let span = x2 - x0;
        let ybar = if span.abs() < 1e-300 { 0.5 * (y0 + y2) } else { ((x2 - x1) * y0 - (x0 - x1) * y2) / span };
        sum += (y1 - ybar).powi(2);
    }
    sum / (n - 2) as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseFit {
    pub eps_c: f64,
    pub nu: f64,
    pub r_min: f64,
    /// Bounding box of the region `R ≤ 1.3 R_min`.
    pub eps_box: (f64, f64),
    pub nu_box: (f64, f64),
    /// False when `R` is flat over the grid, so no minimum is meaningful.
    pub identifiable: bool,
    /// `(ε_c, ν, R)` for every grid cell, row-major in `ε_c`.
    #[serde(skip)]
    pub surface: Vec<(f64, f64, f64)>,
}

pub const ERROR_CONTOUR: f64 = 1.3;

/// Grid search, local coordinate-descent refinement and the `1.3 R_min`
/// error box.
pub fn data_collapse(points: &[ScalingPoint], grid: &CollapseGrid) -> AnalysisResult<CollapseFit> {
    grid.validate()?;
    let mut sizes: Vec<f64> = points.iter().map(|p| p.l).collect();
    sizes.sort_by(f64::total_cmp);
    sizes.dedup();
    if points.len() < 3 || sizes.len() < 2 {
        return Err(AnalysisError::DegenerateCollapse);
    }
    let eps_axis = grid.eps_axis();
    let nu_axis = grid.nu_axis();
    let cells: Vec<(f64, f64)> = eps_axis.iter().flat_map(|&e| nu_axis.iter().map(move |&v| (e, v))).collect();
    let surface: Vec<(f64, f64, f64)> =
        cells.par_iter().map(|&(e, v)| (e, v, collapse_objective(points, e, v))).collect();
    let (mut best_e, mut best_v, grid_min) = surface
        .iter()
        .copied()
        .fold((f64::NAN, f64::NAN, f64::INFINITY), |acc, c| if c.2 < acc.2 { c } else { acc });
    let grid_max = surface.iter().map(|c| c.2).fold(0.0, f64::max);
    let scale = points.iter().map(|p| p.y * p.y).sum::<f64>() / points.len() as f64;
    let identifiable = grid_max - grid_min > 1e-10 * scale;

    // Coordinate descent with halving steps, kept inside the grid.
    let mut r_min = grid_min;
    let (mut de, mut dv) = (grid.eps_step, grid.nu_step);
    if identifiable {
        for _ in 0..40 {
            let mut improved = false;
            for (ce, cv) in [(best_e + de, best_v), (best_e - de, best_v), (best_e, best_v + dv), (best_e, best_v - dv)] {
                if ce < grid.eps_lo || ce > grid.eps_hi || cv < grid.nu_lo || cv > grid.nu_hi {
                    continue;
                }
                let r = collapse_objective(points, ce, cv);
                if r < r_min {
                    (best_e, best_v, r_min) = (ce, cv, r);
                    improved = true;
                }
            }
            if !improved {
                de *= 0.5;
                dv *= 0.5;
            }
        }
    }

    let inside: Vec<&(f64, f64, f64)> = surface.iter().filter(|c| c.2 <= ERROR_CONTOUR * r_min).collect();
    let bound = |f: fn(&(f64, f64, f64)) -> f64, centre: f64| {
        inside.iter().map(|c| f(c)).fold((centre, centre), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    Ok(CollapseFit {
        eps_c: best_e,
        nu: best_v,
        r_min,
        eps_box: bound(|c| c.0, best_e),
        nu_box: bound(|c| c.1, best_v),
        identifiable,
        surface,
    })
}

/// One curve `y(ε)` for system size `l`, sorted by `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeCurve {
    pub l: f64,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    /// `(l_small, l_large, ε)` for each pair of consecutive sizes that cross.
    pub pairs: Vec<(f64, f64, f64)>,
    /// Mean of the pairwise crossings, `None` if no pair crosses.
    pub eps: Option<f64>,
}

/// First sign change of `y_a − y_b` on the common `ε` grid, linearly
/// interpolated.
pub fn crossing(a: &SizeCurve, b: &SizeCurve) -> Option<f64> {
    let common: Vec<(f64, f64)> = a
        .points
        .iter()
        .filter_map(|&(e, ya)| b.points.iter().find(|p| (p.0 - e).abs() < 1e-12).map(|p| (e, ya - p.1)))
        .collect();
    common.windows(2).find_map(|w| {
        let ((e0, d0), (e1, d1)) = (w[0], w[1]);
        if d0 == 0.0 {
            Some(e0)
        } else if d0 * d1 < 0.0 {
            Some(e0 + (e1 - e0) * d0 / (d0 - d1))
        } else {
            None
        }
    })
}

/// Crossings of consecutive sizes.
pub fn find_crossings(curves: &[SizeCurve]) -> CrossingEstimate {
    let mut sorted: Vec<&SizeCurve> = curves.iter().collect();
    sorted.sort_by(|x, y| x.l.total_cmp(&y.l));
    let pairs: Vec<(f64, f64, f64)> =
        sorted.windows(2).filter_map(|w| crossing(w[0], w[1]).map(|e| (w[0].l, w[1].l, e))).collect();
    let eps = (!pairs.is_empty()).then(|| pairs.iter().map(|p| p.2).sum::<f64>() / pairs.len() as f64);
    CrossingEstimate { pairs, eps }
}

/// Per-gate fidelity of a two-qubit gate followed by depolarizing noise of
/// strength `ε` on both qubits: `f = (1−ε)² + ε(2−ε)/5`.
pub fn epsilon_to_fidelity(eps: f64) -> f64 {
    (1.0 - eps).powi(2) + eps * (2.0 - eps) / 5.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityInversion {
    /// Smaller root of the exact quadratic.
    pub exact: f64,
    /// `(5/8)(1 − f)`.
    pub linear: f64,
}

pub fn fidelity_to_epsilon(f: f64) -> AnalysisResult<FidelityInversion> {
    if !(0.2..=1.0).contains(&f) {
        return Err(AnalysisError::FidelityRange(f));
    }
    let u = 1.25 * (1.0 - f);
    Ok(FidelityInversion { exact: u / (1.0 + (1.0 - u).sqrt()), linear: 0.625 * (1.0 - f) })
}

#[cfg(test)]
mod tests;
