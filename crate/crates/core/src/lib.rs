//! Covariant Dirac-type operators on the quantum disk.
//!
//! The crate is organized bottom-up:
//!
//! - [`sequences`]: scalar sequences, normalized weights, tail bounds.
//! - [`toeplitz`]: canonical-form algebra generated by the unilateral shift.
//! - [`gns`]: weighted GNS spaces, the left representation and rotations.
//! - [`dirac`]: the operator `D`, its Fourier modes, kernels and parametrices,
//!   and the graded assembly.
//! - [`analysis`]: hypothesis checks, kernel counts, spectra and the
//!   spectral-triple battery.

pub mod analysis;
pub mod dirac;
pub mod error;
pub mod gns;
pub mod sequences;
pub mod toeplitz;

pub use error::{Error, Result};
pub use sequences::C64;
