//! Two-replica Ising reduction of trajectory-averaged purity.
//!
//! Averaging two copies of a trajectory over random Haar gates maps the
//! monitored circuit onto an Ising magnet on a triangular lattice. Its
//! couplings depend on the unraveling only through the cost `x`, and the
//! magnet orders (volume-law trajectories) below a critical `x_c`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{unraveling_cost_x, KrausSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatmechError {
    #[error("log((q²x² − 1)/(q² − x²)) undefined for x = {x}, q = {q}")]
    DiagonalLog { x: f64, q: usize },
    #[error("log(x²(q² − 1)²/((q²x² − 1)(q² − x²))) undefined for x = {x}, q = {q}")]
    HorizontalLog { x: f64, q: usize },
    #[error("local dimension q = {0} must be at least 2")]
    Dimension(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsingCouplings {
    /// Diagonal-link coupling, `≤ 0`.
    pub j_d: f64,
    /// Horizontal-link coupling, `≥ 0`.
    pub j_h: f64,
    pub q: usize,
}

impl IsingCouplings {
    /// Recovers the cost `x` from the diagonal coupling.
    pub fn source_x(&self) -> f64 {
        let q2 = (self.q * self.q) as f64;
        let e = (4.0 * self.j_d).exp();
        ((1.0 + q2 * e) / (q2 + e)).sqrt()
    }

    /// `2e^{2J_h} − (e^{−2J_d} − e^{2J_d})`, zero on the self-dual line.
    pub fn duality_residual(&self) -> f64 {
        2.0 * (2.0 * self.j_h).exp() - ((-2.0 * self.j_d).exp() - (2.0 * self.j_d).exp())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// `x < x_c`: ordered magnet, volume-law trajectories.
    Ordered,
    /// `x > x_c`: disordered magnet, area-law trajectories.
    Disordered,
    Critical,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Ordered => "ordered",
            Phase::Disordered => "disordered",
            Phase::Critical => "critical",
        })
    }
}

/// `(u, v)` link weights: `u = q²`, `v = q Σ tr((M†M)²)/tr(M†M)`.
pub fn two_replica_weights(k: &KrausSet) -> (f64, f64) {
    let q = k.dim() as f64;
    (q * q, q * q * unraveling_cost_x(k))
}

pub fn couplings(x: f64, q: usize) -> Result<IsingCouplings, StatmechError> {
    if q < 2 {
        return Err(StatmechError::Dimension(q));
    }
    let q2 = (q * q) as f64;
    let a = q2 * x * x - 1.0;
    let b = q2 - x * x;
    if !(a > 0.0 && b > 0.0) || x > 1.0 {
        return Err(StatmechError::DiagonalLog { x, q });
    }
    let h = x * x * (q2 - 1.0).powi(2) / (a * b);
    if !(h > 0.0) || !h.is_finite() {
        return Err(StatmechError::HorizontalLog { x, q });
    }
    Ok(IsingCouplings { j_d: 0.25 * (a / b).ln(), j_h: 0.25 * h.ln(), q })
}

/// Self-dual point `1/x_c = (q² − 1)/(q² + 1) + √(2q⁴ + 2)/(q² + 1)`.
pub fn critical_x(q: usize) -> f64 {
    let q2 = (q * q) as f64;
    let inv = (q2 - 1.0) / (q2 + 1.0) + (2.0 * q2 * q2 + 2.0).sqrt() / (q2 + 1.0);
    1.0 / inv
}

pub fn phase_of_cost(x: f64, q: usize) -> Phase {
    let xc = critical_x(q);
    if (x - xc).abs() < 1e-12 {
        Phase::Critical
    } else if x < xc {
        Phase::Ordered
    } else {
        Phase::Disordered
    }
}

pub fn predicted_phase(k: &KrausSet) -> Phase {
    phase_of_cost(unraveling_cost_x(k), k.dim())
}
