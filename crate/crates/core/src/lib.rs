//! Spectral analysis of lattice Schrödinger operators `h = h0 + mu*v` on Z^d, d = 1, 2.
//!
//! The free part `h0` is a translation-invariant hopping operator with a finite
//! Hermitian coefficient table; `v` is a finitely supported real on-site potential.
//! The crate computes the dispersion symbol and its band `[e_min, e_max]`, lattice
//! Green functions of `(z - h0)^{-1}` by torus quadrature, the finite
//! Birman–Schwinger matrix over the potential support, direct finite-box spectra
//! as an independent oracle, and the small-coupling absorption laws of the discrete
//! eigenvalues at both band edges.

pub use num_complex;

pub mod acceptance;
pub mod asymptotics;
pub mod birman;
pub mod cli;
pub mod dispersion;
pub mod error;
pub mod green;
pub mod numerics;
pub mod potential;
pub mod spectrum_oracle;

pub use error::{Error, Result};
