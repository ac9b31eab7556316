//! Numerical laboratory for quantum transport in smooth periodic potentials.
//!
//! The pipeline: Bloch band spectra of the fibered operators
//! `½(D + ħk)² + V`, invariant-torus construction for the classical flow
//! (exact action-angle quadrature in d = 1, Fourier–Newton iteration in
//! d = 2), high-order WKB quasimodes built on those tori, and the comparison
//! of quantum group-velocity distributions against the classical
//! energy-velocity measure under ballistic scaling.

pub mod bloch;
pub mod classical;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod lattice;
pub mod measure;
pub mod potential;

pub use error::{Error, Result};
