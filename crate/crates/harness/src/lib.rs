//! Experiment harness for the randomized-time HMC library: lemma checks,
//! single-chain runs, scaling sweeps and slope fits.

pub mod checks;
pub mod config;
pub mod error;
pub mod fit;
pub mod plan;
pub mod records;
pub mod run;
pub mod seeds;
pub mod sweep;
