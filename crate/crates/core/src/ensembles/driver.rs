use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sample_configuration, EnsembleSpec};
use crate::dipole::{self, Configuration};
use crate::error::{Error, Result};
use crate::params::{reflection_amplitude, single_atom_scatter, Detuning, ScatterResult, WaveguideParams};
use crate::quadrature::{GaussianAverager, Tolerance};
use crate::transfer;

/// Transmittances below this are counted as diverged and left out of
/// `⟨ln T⟩` (they still enter `⟨T⟩`).
pub const T_FLOOR: f64 = 1e-300;

/// Exact solver used for each realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    Dipole,
    Transfer,
    /// Transfer matrices, switching to the dipole solver for configurations
    /// containing a (nearly) perfectly reflecting atom.
    #[default]
    Auto,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of realization `index`: `splitmix64(splitmix64(master) ^ index)`.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

pub fn solve_configuration(p: &WaveguideParams, c: &Configuration, backend: Backend) -> Result<ScatterResult> {
    match backend {
        Backend::Dipole => dipole::scatter(p, c),
        Backend::Transfer => transfer::scatter(p, c),
        Backend::Auto => {
            let near_mirror = (0..c.len()).any(|j| (reflection_amplitude(p, c.detuning(j)) + 1.0).norm() < 1e-6);
            if near_mirror {
                return dipole::scatter(p, c);
            }
            transfer::scatter(p, c).or_else(|_| dipole::scatter(p, c))
        }
    }
}

/// Outcome of one realization across a detuning grid. The configuration is
/// drawn once and shifted rigidly in detuning for each grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationRecord {
    pub index: u64,
    pub seed: u64,
    pub n_atoms: usize,
    pub outcomes: Vec<Result<ScatterResult>>,
}

pub fn run_realization(
    p: &WaveguideParams,
    spec: &EnsembleSpec,
    index: u64,
    deltas: &[f64],
    backend: Backend,
) -> Result<RealizationRecord> {
    let seed = realization_seed(spec.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = sample_configuration(spec, &mut rng)?;
    let outcomes = deltas
        .iter()
        .map(|&delta| solve_configuration(p, &config.retuned(delta), backend))
        .collect();
    Ok(RealizationRecord {
        index,
        seed,
        n_atoms: config.len(),
        outcomes,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    fn stderr(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct PointStats {
    re: Welford,
    im: Welford,
    power: Welford,
    log: Welford,
    diverged: usize,
    failed: usize,
}

/// Ensemble statistics at one detuning.
///
/// `n_used + n_diverged + n_failed` is the number of realizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub delta: Detuning,
    pub mean_amplitude: Complex64,
    /// Standard error of `mean_amplitude`, combining both components.
    pub stderr_amplitude: f64,
    pub mean_transmittance: f64,
    pub stderr_transmittance: f64,
    /// `⟨ln T⟩` over realizations with `T ≥ T_FLOOR`.
    pub mean_log_transmittance: f64,
    pub stderr_log_transmittance: f64,
    pub n_used: usize,
    pub n_diverged: usize,
    /// Realizations whose solve failed; excluded from every mean.
    pub n_failed: usize,
}

impl SpectrumPoint {
    /// A noiseless point from a single deterministic calculation.
    pub fn exact(delta: Detuning, s: ScatterResult) -> Self {
        let mut acc = SpectrumAccumulator::new(&[delta.value()]);
        acc.push_outcomes(&[Ok(s)]);
        acc.finish().remove(0)
    }

    pub fn n_realizations(&self) -> usize {
        self.n_used + self.n_diverged + self.n_failed
    }

    /// `−⟨ln T⟩`.
    pub fn optical_thickness(&self) -> f64 {
        -self.mean_log_transmittance
    }
}

/// Running per-detuning statistics. Feed realizations in index order for
/// results that do not depend on scheduling.
#[derive(Debug, Clone)]
pub struct SpectrumAccumulator {
    deltas: Vec<f64>,
    stats: Vec<PointStats>,
}

impl SpectrumAccumulator {
    pub fn new(deltas: &[f64]) -> Self {
        Self {
            deltas: deltas.to_vec(),
            stats: alloc::vec![PointStats::default(); deltas.len()],
        }
    }

    pub fn push(&mut self, record: &RealizationRecord) {
        self.push_outcomes(&record.outcomes);
    }

    pub fn push_outcomes(&mut self, outcomes: &[Result<ScatterResult>]) {
        assert_eq!(outcomes.len(), self.stats.len(), "outcome count must match the grid");
        for (stats, outcome) in self.stats.iter_mut().zip(outcomes) {
            let Ok(s) = outcome else {
                stats.failed += 1;
                continue;
            };
            let t = s.transmittance();
            stats.re.push(s.t.re);
            stats.im.push(s.t.im);
            stats.power.push(t);
            if t >= T_FLOOR {
                stats.log.push(t.ln());
            } else {
                stats.diverged += 1;
            }
        }
    }

    pub fn finish(self) -> Vec<SpectrumPoint> {
        self.deltas
            .iter()
            .zip(&self.stats)
            .map(|(&delta, s)| SpectrumPoint {
                delta: Detuning::new(delta).expect("grid validated"),
                mean_amplitude: Complex64::new(s.re.mean(), s.im.mean()),
                stderr_amplitude: (s.re.stderr().powi(2) + s.im.stderr().powi(2)).sqrt(),
                mean_transmittance: s.power.mean(),
                stderr_transmittance: s.power.stderr(),
                mean_log_transmittance: s.log.mean(),
                stderr_log_transmittance: s.log.stderr(),
                n_used: s.log.n as usize,
                n_diverged: s.diverged,
                n_failed: s.failed,
            })
            .collect()
    }
}

fn validate_grid(deltas: &[f64]) -> Result<()> {
    if deltas.iter().all(|d| d.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "delta_grid",
            reason: "detunings must be finite",
        })
    }
}

/// Sequential ensemble average over `spec.n_realizations` configurations.
/// Per-point solver failures are counted; a sampler failure aborts.
pub fn average_transmission(
    p: &WaveguideParams,
    spec: &EnsembleSpec,
    deltas: &[f64],
    backend: Backend,
) -> Result<Vec<SpectrumPoint>> {
    spec.validate()?;
    validate_grid(deltas)?;
    let mut acc = SpectrumAccumulator::new(deltas);
    for index in 0..spec.n_realizations as u64 {
        acc.push(&run_realization(p, spec, index, deltas, backend)?);
    }
    Ok(acc.finish())
}

/// Mean-field transmission `⟨t⁽¹⁾⟩ⁿ`, the single-atom amplitude averaged
/// over Gaussian detunings of width `doppler_width` centred on `d`.
pub fn mft_product(p: &WaveguideParams, d: Detuning, n: u32, doppler_width: f64) -> Result<Complex64> {
    if !(doppler_width.is_finite() && doppler_width >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "doppler_width",
            reason: "must be finite and non-negative",
        });
    }
    let mean_t = if doppler_width == 0.0 {
        single_atom_scatter(p, d).t
    } else {
        let gt = p.gamma_t();
        GaussianAverager::new(Tolerance::new(1e-13, 1e-10)).expectation(
            |x| single_atom_scatter(p, Detuning::new(x).expect("finite quadrature node")).t,
            d.value(),
            doppler_width,
            &[-4.0 * gt, -gt, 0.0, gt, 4.0 * gt],
        )?
    };
    Ok(mean_t.powu(n))
}
