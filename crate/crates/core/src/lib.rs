//! Exact and semiclassical dynamics of a particle on the line with a δ′ point
//! interaction at the origin.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`] and [`grid`]: physical parameters, Gaussian coherent states,
//!   their free evolution, uniform grids and the L² metric.
//! - [`specfun`]: the Faddeeva function and closed-form half-line Gaussian
//!   integrals.
//! - [`quadrature`]: Gauss–Legendre panels and uniform k-rules with the
//!   window and node-count planning used by every oscillatory integral.
//! - [`quantum`]: spectral data of H_β, the exact propagator (both through the
//!   reflected-packet decomposition and directly through the generalized
//!   Fourier transform), wave operators and the scattering operator.
//! - [`classical`]: the singular phase-space flow, classical wave and
//!   scattering operators, and the closed-form semiclassical approximants.
//! - [`experiments`]: error functionals, the error bounds, ħ-sweeps and
//!   log-log slope fits.
//! - [`cli`]: the config-driven batch front end behind the `deltaprime` binary.
//!
//! ```
//! use deltaprime::{CoherentState, GridSpec, ModelParams, PhasePoint};
//! use deltaprime::quantum::evolve_exact;
//!
//! let params = ModelParams::new(0.05, 1.0, 1.0, 1.0).unwrap();
//! let xi = PhasePoint::new(-4.0, 2.0);
//! let psi = CoherentState::initial(&params, xi);
//! let grid = GridSpec::for_evolution(&params, xi, 4.0, 2048);
//! let out = evolve_exact(&params, &psi, 4.0, &grid).unwrap();
//! assert!((out.norm() - 1.0).abs() < 1e-6);
//! ```

pub mod classical;
pub mod cli;
mod error;
pub mod experiments;
pub mod grid;
pub mod model;
pub mod quadrature;
pub mod quantum;
pub mod specfun;

pub use error::{Error, Result};
pub use grid::{GridSpec, WaveSample};
pub use model::{sgn, theta, CoherentState, ModelParams, PhasePoint, Sign};
pub use num_complex::Complex64;
