//! Exact-diagonalization dynamics of a periodic spin-1/2 chain whose
//! interaction term has an exponentially large zero-energy manifold.
//!
//! The chain is `H = -h Σ σˣ_j + (V0/4) Σ (1 + σᶻ_j)(1 + σᶻ_{j+1})`; at `h = 0`
//! every configuration without two neighbouring up spins is a zero mode. The
//! crate covers:
//!
//! - [`hilbert`]: basis encoding, Pauli operators, the blockaded subspace.
//! - [`models`]: the degenerate chain, the PXP chain in a longitudinal field,
//!   and the square-pulse drive segments.
//! - [`spectra`]: dense Hermitian diagonalization and degeneracy counting.
//! - [`evolve`]: propagators (exact exponential, eigenbasis ODE, RK4 oracle).
//! - [`ramp`]: linear and cosine ramps, fidelity and residual energy, τ sweeps.
//! - [`floquet`]: exact square-pulse Floquet operator and stroboscopic
//!   correlator dynamics.
//! - [`fpt`]: Floquet perturbation theory to third order with executable
//!   identity checks.
//! - [`analysis`]: power-law fits, crossover segmentation, oscillation metrics.
//! - [`cli`]: config files, sweep orchestration with checkpoints, CSV/JSON output.
//!
//! ħ = 1 throughout. Basis index bit `j` holds site `j`; a set bit is spin up
//! (σᶻ = +1), so the Rydberg density `n_j = (1 + σᶻ_j)/2` equals the bit value.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod floquet;
pub mod fpt;
pub mod hilbert;
pub mod linalg;
pub mod models;
pub mod ramp;
pub mod spectra;

pub use error::{Error, Result};

/// Complex scalar used for all amplitudes and matrix entries.
pub type C64 = nalgebra::Complex<f64>;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
