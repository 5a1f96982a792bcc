//! Simulation of a driven-dissipative Ising chain whose coherent Hamiltonian
//! interpolates between the full nearest-neighbor quantum interaction and its
//! mean-field decoupling.
//!
//! The chain of `N` two-level sites evolves under a Lindblad master equation
//! with local decay. The interaction term is a convex mixture, weighted by an
//! interpolation parameter `lambda` in `[0, 1]`, of the exact bond operator
//! `V n_i n_{i+1}` and its mean-field counterpart built from the instantaneous
//! populations `<n_i>`. At `lambda = 1` the generator is the usual linear
//! Liouvillian; at `lambda = 0` the dynamics factorize into per-site nonlinear
//! Bloch equations.
//!
//! Modules follow the pipeline: [`operators`] builds the many-body operator
//! cache, [`model`] assembles the interpolated generator, [`integrator`]
//! time-evolves density matrices, [`observables`] and [`spectral`] extract
//! diagnostics (populations, variance, correlations, negativity, FFT spectra,
//! phase labels), [`classical`] is the independent `lambda = 0` Bloch-equation
//! oracle, and [`sweep`] orchestrates parallel parameter-grid scans.

extern crate blas_src;

pub mod classical;
pub mod config;
pub mod error;
pub mod integrator;
pub mod model;
pub mod observables;
pub mod operators;
pub mod params;
pub mod spectral;
pub mod state;
pub mod sweep;

pub use error::Error;
pub use params::ChainParams;

/// Version string embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
