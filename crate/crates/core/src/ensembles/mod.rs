//! Stochastic atom configurations and Monte Carlo ensemble averages.
//!
//! Every realization draws its configuration from its own generator, seeded
//! by [`realization_seed`], and realizations are accumulated in index order.
//! Results therefore depend on the master seed only, never on how the work
//! was scheduled.

mod driver;
mod sampling;

pub use driver::{
    average_transmission, mft_product, realization_seed, run_realization, solve_configuration, Backend,
    RealizationRecord, SpectrumAccumulator, SpectrumPoint, T_FLOOR,
};
pub use sampling::{
    sample_configuration, sample_fermionic, sample_uniform, FermionChain, BURN_IN_SWEEPS, THINNING_SWEEPS,
};

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// How atom positions are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleKind {
    /// Independent positions, uniform on `[0, L]`.
    ClassicalUniform,
    /// Zero-temperature free fermions (equivalently a Tonks gas) on a ring
    /// of circumference `L`.
    Fermionic,
    /// The same fixed positions in every realization.
    Custom(Vec<f64>),
}

/// Number of atoms per realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomNumber {
    Fixed(usize),
    Poisson { mean: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub atoms: AtomNumber,
    pub box_length: f64,
    /// Standard deviation of the per-atom Gaussian detuning offsets.
    pub doppler_width: f64,
    /// Added to every atom's detuning before any spectral shift.
    pub base_detuning: f64,
    pub n_realizations: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn classical(n_atoms: usize, box_length: f64) -> Self {
        Self {
            kind: EnsembleKind::ClassicalUniform,
            atoms: AtomNumber::Fixed(n_atoms),
            box_length,
            doppler_width: 0.0,
            base_detuning: 0.0,
            n_realizations: 1,
            seed: 0,
        }
    }

    pub fn fermionic(n_atoms: usize, box_length: f64) -> Self {
        Self {
            kind: EnsembleKind::Fermionic,
            ..Self::classical(n_atoms, box_length)
        }
    }

    pub fn custom(positions: Vec<f64>) -> Self {
        let n = positions.len();
        let extent = match (positions.iter().copied().reduce(f64::min), positions.iter().copied().reduce(f64::max)) {
            (Some(lo), Some(hi)) if hi > lo => hi - lo,
            _ => 1.0,
        };
        Self {
            kind: EnsembleKind::Custom(positions),
            ..Self::classical(n, extent)
        }
    }

    pub fn with_realizations(mut self, n: usize) -> Self {
        self.n_realizations = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_doppler_width(mut self, width: f64) -> Self {
        self.doppler_width = width;
        self
    }

    pub fn with_base_detuning(mut self, delta: f64) -> Self {
        self.base_detuning = delta;
        self
    }

    pub fn with_poisson_atoms(mut self, mean: f64) -> Self {
        self.atoms = AtomNumber::Poisson { mean };
        self
    }

    /// Line density `N/L` (mean atom number for Poisson ensembles).
    pub fn density(&self) -> f64 {
        let n = match self.atoms {
            AtomNumber::Fixed(n) => n as f64,
            AtomNumber::Poisson { mean } => mean,
        };
        n / self.box_length
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return Err(Error::InvalidParameter {
                name: "box_length",
                reason: "must be finite and positive",
            });
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidParameter {
                name: "n_realizations",
                reason: "at least one realization is required",
            });
        }
        if !(self.doppler_width.is_finite() && self.doppler_width >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "doppler_width",
                reason: "must be finite and non-negative",
            });
        }
        if !self.base_detuning.is_finite() {
            return Err(Error::InvalidParameter {
                name: "base_detuning",
                reason: "must be finite",
            });
        }
        match (&self.kind, self.atoms) {
            (_, AtomNumber::Poisson { mean }) if !(mean.is_finite() && mean >= 0.0) => Err(Error::InvalidParameter {
                name: "nbar",
                reason: "Poisson mean must be finite and non-negative",
            }),
            (EnsembleKind::Fermionic, AtomNumber::Poisson { .. }) => Err(Error::InvalidParameter {
                name: "atoms",
                reason: "a fermionic ensemble needs a fixed atom number",
            }),
            (EnsembleKind::Custom(_), AtomNumber::Poisson { .. }) => Err(Error::InvalidParameter {
                name: "atoms",
                reason: "custom positions fix the atom number",
            }),
            (EnsembleKind::Custom(x), AtomNumber::Fixed(n)) if x.len() != n => Err(Error::InvalidParameter {
                name: "atoms",
                reason: "atom number must match the custom positions",
            }),
            (EnsembleKind::Custom(x), _) if x.iter().any(|v| !v.is_finite()) => Err(Error::InvalidParameter {
                name: "positions",
                reason: "custom positions must be finite",
            }),
            _ => Ok(()),
        }
    }
}
