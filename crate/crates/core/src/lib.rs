//! Compound secrecy capacity of Gaussian MIMO wiretap channels.
//!
//! The crate computes the secrecy capacity, optimal transmit covariance and
//! worst-case channels when the eavesdropper (and optionally the legitimate)
//! channel is only known up to a spectral-norm bound, and ships independent
//! checks for every closed form: grid-search oracles, Monte-Carlo saddle-point
//! verification and finite-alphabet (DMC) evaluators.
//!
//! All rates are in nats.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dmc;
pub mod error;
pub mod matops;
pub mod secrecy;
pub mod serde_float;
pub mod uncertainty;
pub mod verify;

pub use error::{Error, Result};
pub use matops::{ComplexMatrix, EigDecomposition, HermitianPSD, SvdResult};
pub use secrecy::{CapacityReport, LegitimateSpectrum, PowerAllocation};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Portable, reproducible random stream used throughout the crate.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `worker` derived from `seed`.
pub fn worker_rng(seed: u64, worker: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(worker);
    rng
}
