//! Coherent light transmission through atomic ensembles confined in a
//! one-dimensional waveguide.
//!
//! Everything here is a pure function of its inputs and runs without `std`
//! (an allocator is required). Internal units follow the usual convention
//! of the field: `k = 1`, `gamma_t = 1`, so lengths read as `k·x` and rates
//! as fractions of the total linewidth.
//!
//! * [`params`]: physical constants and single-atom response.
//! * [`dipole`]: exact steady state of the coupled point-dipole system.
//! * [`transfer`]: 2×2 transfer matrices, two-atom averages, Poisson MFT.
//! * [`ensembles`]: configuration samplers and the Monte Carlo driver.
//! * [`meanfield`]: effective-medium slab, cooperative Lamb shift, widths.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dipole;
pub mod ensembles;
mod error;
pub mod hypergeometric;
pub mod linalg;
pub mod meanfield;
pub mod params;
pub mod quadrature;
pub mod transfer;

pub use dipole::{Configuration, DipoleAmplitudes};
pub use ensembles::{AtomNumber, Backend, EnsembleKind, EnsembleSpec, SpectrumPoint};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use params::{Detuning, ScatterResult, WaveguideParams};
pub use transfer::TransferMatrix;
