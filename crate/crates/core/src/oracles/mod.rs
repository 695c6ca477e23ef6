//! Independent reference simulators.

pub mod circuit;
pub mod dense;
pub mod mpo;
pub mod tableau;

use thiserror::Error;

use crate::channels::ChannelError;
use crate::lightcone::LightconeError;
use crate::mps::MpsError;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{n} qubits exceeds the oracle cap of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("degenerate state")]
    Degenerate,
    #[error("negative probability {0:e}")]
    NegativeProbability(f64),
    #[error("gate on qubits {0:?} is not Clifford")]
    NotClifford(Vec<usize>),
    #[error("unsupported stabilizer noise: {0}")]
    UnsupportedNoise(String),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Lightcone(#[from] LightconeError),
}

pub type OracleResult<T> = Result<T, OracleError>;
