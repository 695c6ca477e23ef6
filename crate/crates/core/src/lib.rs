//! Sampling noisy shallow 2D random circuits with matrix-product-state
//! trajectories.
//!
//! A depth-`T` circuit on an `L_x × L_y` array is compiled into a 1D monitored
//! circuit swept along `y` ([`lightcone`]). Each noise channel is unraveled into
//! fictitious measurements ([`channels`]) chosen to keep trajectory
//! entanglement low, and trajectories are simulated on an MPS ([`mps`],
//! [`sampler`]). Dense, MPO and stabilizer reference simulators live in
//! [`oracles`]; fits and finite-size scaling in [`analysis`].

pub mod channels;
pub mod linalg;
pub mod statmech;
pub mod gates;
pub mod mps;
pub mod oracles;
pub mod lightcone;
pub mod sampler;
pub mod analysis;
pub mod cli;
