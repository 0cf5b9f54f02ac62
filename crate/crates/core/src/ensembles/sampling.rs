use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
#[allow(unused_imports)]
use num_traits::Float;

use super::{AtomNumber, EnsembleKind, EnsembleSpec};
use crate::dipole::Configuration;
use crate::error::{Error, Result};

/// Sweeps (of `N` single-particle proposals each) discarded before the
/// first emitted configuration; the step size adapts during this phase.
pub const BURN_IN_SWEEPS: usize = 100;

/// Sweeps between successive emitted configurations.
pub const THINNING_SWEEPS: usize = 10;

const TARGET_ACCEPTANCE: f64 = 0.4;
const ACCEPTANCE_WINDOW: (f64, f64) = (0.1, 0.9);

fn doppler_offsets<R: Rng + ?Sized>(spec: &EnsembleSpec, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if spec.doppler_width == 0.0 {
        return Ok(alloc::vec![spec.base_detuning; n]);
    }
    let normal = Normal::new(spec.base_detuning, spec.doppler_width).map_err(|_| Error::InvalidParameter {
        name: "doppler_width",
        reason: "must be finite and non-negative",
    })?;
    Ok((0..n).map(|_| normal.sample(rng)).collect())
}

fn atom_count<R: Rng + ?Sized>(atoms: AtomNumber, rng: &mut R) -> Result<usize> {
    match atoms {
        AtomNumber::Fixed(n) => Ok(n),
        AtomNumber::Poisson { mean } if mean == 0.0 => Ok(0),
        AtomNumber::Poisson { mean } => {
            let poisson = Poisson::new(mean).map_err(|_| Error::InvalidParameter {
                name: "nbar",
                reason: "Poisson mean out of range",
            })?;
            Ok(poisson.sample(rng) as usize)
        }
    }
}

const MAX_REDRAWS: usize = 1000;

/// Independent uniform positions on `[0, L]` with Gaussian detuning
/// offsets. The atom number is drawn first when it is Poisson distributed.
///
/// Draws in which two atoms land closer than the minimum separation are
/// discarded and repeated.
pub fn sample_uniform<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Configuration> {
    let n = atom_count(spec.atoms, rng)?;
    let mut last = None;
    for _ in 0..MAX_REDRAWS {
        let positions = (0..n).map(|_| spec.box_length * rng.random::<f64>()).collect();
        let detunings = doppler_offsets(spec, n, rng)?;
        match Configuration::new(positions, detunings) {
            Err(e @ Error::AtomsTooClose { .. }) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("at least one draw"))
}

/// One configuration of the free-fermion ground state, from a fresh chain.
pub fn sample_fermionic<R: Rng>(spec: &EnsembleSpec, rng: &mut R) -> Result<Configuration> {
    let AtomNumber::Fixed(n) = spec.atoms else {
        return Err(Error::InvalidParameter {
            name: "atoms",
            reason: "a fermionic ensemble needs a fixed atom number",
        });
    };
    let mut chain = FermionChain::new(n, spec.box_length, &mut *rng)?;
    let positions = chain.next_configuration()?;
    let detunings = doppler_offsets(spec, n, chain.rng())?;
    Configuration::new(positions, detunings)
}

/// Draws a configuration of whichever kind `spec` describes.
pub fn sample_configuration<R: Rng>(spec: &EnsembleSpec, rng: &mut R) -> Result<Configuration> {
    match &spec.kind {
        EnsembleKind::ClassicalUniform => sample_uniform(spec, rng),
        EnsembleKind::Fermionic => sample_fermionic(spec, rng),
        EnsembleKind::Custom(positions) => {
            let detunings = doppler_offsets(spec, positions.len(), rng)?;
            Configuration::new(positions.clone(), detunings)
        }
    }
}

/// Metropolis chain for `N` free fermions on a ring of circumference `L`,
/// whose ground-state density is `|Ψ|² ∝ Π_{i<j} sin²(π(x_i − x_j)/L)`.
///
/// Proposals move one particle by a Gaussian step (initially `L/(4N)`) with
/// periodic wrap. The step adapts toward 40% acceptance during burn-in and
/// is frozen afterwards.
#[derive(Debug, Clone)]
pub struct FermionChain<R> {
    rng: R,
    positions: Vec<f64>,
    length: f64,
    step: f64,
    proposed: u64,
    accepted: u64,
}

impl<R: Rng> FermionChain<R> {
    /// Starts from an evenly spaced lattice and runs the burn-in.
    pub fn new(n: usize, length: f64, rng: R) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter {
                name: "box_length",
                reason: "must be finite and positive",
            });
        }
        let mut chain = Self {
            rng,
            positions: (0..n).map(|i| (i as f64 + 0.5) * length / n as f64).collect(),
            length,
            step: length / (4.0 * n.max(1) as f64),
            proposed: 0,
            accepted: 0,
        };
        if n > 1 {
            for _ in 0..BURN_IN_SWEEPS {
                let rate = chain.sweep() as f64 / n as f64;
                chain.step = (chain.step * (rate - TARGET_ACCEPTANCE).exp()).clamp(1e-9 * length, 0.5 * length);
            }
        }
        chain.proposed = 0;
        chain.accepted = 0;
        Ok(chain)
    }

    pub fn rng(&mut self) -> &mut R {
        &mut self.rng
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    /// Acceptance rate since burn-in ended (`None` before any proposal).
    pub fn acceptance(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    /// Advances by the thinning interval and returns the sorted positions.
    pub fn next_configuration(&mut self) -> Result<Vec<f64>> {
        if self.positions.len() > 1 {
            for _ in 0..THINNING_SWEEPS {
                self.sweep();
            }
            let rate = self.acceptance().unwrap_or(TARGET_ACCEPTANCE);
            if !(ACCEPTANCE_WINDOW.0..=ACCEPTANCE_WINDOW.1).contains(&rate) {
                return Err(Error::ChainNotEquilibrated { acceptance: rate });
            }
        } else if let Some(x) = self.positions.first_mut() {
            // A single fermion is uniformly distributed.
            *x = self.length * self.rng.random::<f64>();
        }
        let mut out = self.positions.clone();
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    fn log_weight_change(&self, i: usize, to: f64) -> f64 {
        let scale = core::f64::consts::PI / self.length;
        let from = self.positions[i];
        let mut change = 0.0;
        for (j, &xj) in self.positions.iter().enumerate() {
            if j != i {
                let new = ((to - xj) * scale).sin().abs();
                let old = ((from - xj) * scale).sin().abs();
                change += 2.0 * (new.ln() - old.ln());
            }
        }
        change
    }

    /// One proposal per particle; returns the number accepted.
    fn sweep(&mut self) -> usize {
        let n = self.positions.len();
        let mut accepted = 0;
        for _ in 0..n {
            let i = self.rng.random_range(0..n);
            let kick = Normal::new(0.0, self.step).expect("step is positive and finite");
            let to = (self.positions[i] + kick.sample(&mut self.rng)).rem_euclid(self.length);
            let change = self.log_weight_change(i, to);
            let accept = change >= 0.0 || self.rng.random::<f64>() < change.exp();
            self.proposed += 1;
            if accept && change.is_finite() {
                self.positions[i] = to;
                self.accepted += 1;
                accepted += 1;
            }
        }
        accepted
    }
}
