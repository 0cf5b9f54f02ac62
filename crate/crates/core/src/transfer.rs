//! Transfer-matrix formulation of the same scattering problem, the exact
//! two-atom transmission and its ensemble averages, and the Poisson-averaged
//! mean-field optical thickness.
//!
//! Matrices act on `(right-moving, left-moving)` amplitude pairs measured
//! relative to a local reference plane, so that a scatterer with incident
//! amplitude 1 and reflection `r` satisfies `M·(1, r) = (t, 0)`.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::dipole::Configuration;
use crate::error::{Error, Result};
use crate::hypergeometric::hyp2f1_unit_shift;
use crate::params::{reflection_amplitude, single_atom_scatter, Detuning, ScatterResult, WaveguideParams};
use crate::quadrature::{integrate_with_breakpoints, GaussianAverager, Tolerance};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Default truncation order of the recurrent-scattering series.
pub const DEFAULT_SERIES_TERMS: usize = 50;

/// Below this `|z|` the hypergeometric series is summed directly.
const SERIES_RADIUS: f64 = 0.9;

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// A 2×2 transfer matrix together with the phases `k·x` of its input and
/// output reference planes. The phases let [`extract_scatter`] remove the
/// free-propagation factor so that an empty stretch of guide gives `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    m: [[Complex64; 2]; 2],
    entry_phase: f64,
    exit_phase: f64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        Self::from_entries([[ONE, ZERO], [ZERO, ONE]])
    }

    /// A matrix with both reference planes at the origin.
    pub fn from_entries(m: [[Complex64; 2]; 2]) -> Self {
        Self {
            m,
            entry_phase: 0.0,
            exit_phase: 0.0,
        }
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `k·x` of the input and output reference planes.
    pub fn reference_phases(&self) -> (f64, f64) {
        (self.entry_phase, self.exit_phase)
    }

    /// `next · self`: light passes through `self` first.
    pub fn then(&self, next: &TransferMatrix) -> TransferMatrix {
        let a = &next.m;
        let b = &self.m;
        let mut m = [[ZERO; 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        TransferMatrix {
            m,
            entry_phase: self.entry_phase,
            exit_phase: next.exit_phase,
        }
    }
}

/// Transfer matrix of a single atom at the origin.
pub fn atom_matrix(p: &WaveguideParams, d: Detuning) -> Result<TransferMatrix> {
    let eta = reflection_amplitude(p, d);
    let denom = eta + 1.0;
    if denom.norm() < 1e-12 {
        return Err(Error::SingularAtomMatrix);
    }
    Ok(TransferMatrix::from_entries([
        [(2.0 * eta + 1.0) / denom, eta / denom],
        [-eta / denom, ONE / denom],
    ]))
}

/// Free propagation from `x_from` to `x_to`.
pub fn propagation_matrix(p: &WaveguideParams, x_from: f64, x_to: f64) -> TransferMatrix {
    let phase = p.k() * (x_to - x_from);
    TransferMatrix {
        m: [[cis(phase), ZERO], [ZERO, cis(-phase)]],
        entry_phase: p.k() * x_from,
        exit_phase: p.k() * x_to,
    }
}

/// Ordered product of propagation and atom matrices spanning
/// `[x_left, x_right]`.
pub fn composite(p: &WaveguideParams, c: &Configuration, x_left: f64, x_right: f64) -> Result<TransferMatrix> {
    let x = c.positions();
    if x.first().is_some_and(|&first| x_left > first) || x.last().is_some_and(|&last| x_right < last) {
        return Err(Error::InvalidParameter {
            name: "x_left",
            reason: "reference planes must enclose every atom",
        });
    }
    if c.is_empty() && x_right < x_left {
        return Err(Error::InvalidParameter {
            name: "x_right",
            reason: "must not precede x_left",
        });
    }
    let mut total = propagation_matrix(p, x_left, x_left);
    let mut here = x_left;
    for (j, &xj) in x.iter().enumerate() {
        total = total
            .then(&propagation_matrix(p, here, xj))
            .then(&atom_matrix(p, c.detuning(j))?);
        here = xj;
    }
    Ok(total.then(&propagation_matrix(p, here, x_right)))
}

/// `(t, r)` from `M·(1, r) = (t, 0)`, with the free-propagation phase across
/// the matrix's span divided out.
///
/// Every factor has unit determinant, so `t = 1/m₂₂`. Forming the determinant
/// explicitly would cancel terms of order `1/|t|²` in opaque samples.
pub fn extract_scatter(m: &TransferMatrix) -> Result<ScatterResult> {
    let [[_, _], [m21, m22]] = m.m;
    if !(m22.norm() >= 1e-14) || !(m22.re.is_finite() && m22.im.is_finite()) {
        return Err(Error::NoTransmissionSolution);
    }
    let t_local = ONE / m22;
    let r_local = -m21 / m22;
    Ok(ScatterResult {
        t: t_local * cis(-(m.exit_phase - m.entry_phase)),
        r: r_local * cis(2.0 * m.entry_phase),
    })
}

/// `(t, r)` of a configuration by the transfer-matrix route, referenced like
/// [`crate::dipole::fields`].
pub fn scatter(p: &WaveguideParams, c: &Configuration) -> Result<ScatterResult> {
    let (left, right) = match (c.positions().first(), c.positions().last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 0.0),
    };
    extract_scatter(&composite(p, c, left, right)?)
}

/// Exact transmission of an atom pair separated by `x12`:
/// `t₁t₂ / (1 − η₁η₂e^{2ikx₁₂})`.
pub fn two_atom_amplitude(p: &WaveguideParams, d1: Detuning, d2: Detuning, x12: f64) -> Result<Complex64> {
    let eta1 = reflection_amplitude(p, d1);
    let eta2 = reflection_amplitude(p, d2);
    let denom = ONE - eta1 * eta2 * cis(2.0 * p.k() * x12);
    if denom.norm() <= 1e-14 {
        return Err(Error::ResonantDivergence);
    }
    Ok(single_atom_scatter(p, d1).t * single_atom_scatter(p, d2).t / denom)
}

/// The first `terms` terms of the recurrent-scattering expansion
/// `t₁t₂ Σ_n (η₁η₂e^{2ikx₁₂})ⁿ`; each term adds one more round trip.
pub fn two_atom_series(p: &WaveguideParams, d1: Detuning, d2: Detuning, x12: f64, terms: usize) -> Complex64 {
    let ratio = reflection_amplitude(p, d1) * reflection_amplitude(p, d2) * cis(2.0 * p.k() * x12);
    let mft = single_atom_scatter(p, d1).t * single_atom_scatter(p, d2).t;
    let mut power = ONE;
    let mut sum = ZERO;
    for _ in 0..terms {
        sum += power;
        power *= ratio;
    }
    mft * sum
}

/// `⟨1/(1 − z e^{iθ})⟩` for `θ ~ Exponential(rate)`, which equals
/// `₂F₁(1, i·rate; 1 + i·rate; z)`. Summed as a series for `|z| ≤ 0.9`,
/// otherwise integrated over the phase folded onto `[0, 2π)`.
pub fn exponential_phase_average(z: Complex64, rate: f64) -> Result<Complex64> {
    if z.norm() <= SERIES_RADIUS {
        match hyp2f1_unit_shift(Complex64::new(0.0, rate), z) {
            Ok(v) => return Ok(v),
            Err(Error::NonconvergentSeries { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    exponential_phase_average_quadrature(z, rate)
}

/// Quadrature route for [`exponential_phase_average`], valid for `|z| ≤ 1`
/// except at the single pole `z e^{iθ} = 1`.
pub fn exponential_phase_average_quadrature(z: Complex64, rate: f64) -> Result<Complex64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "rho",
            reason: "density must be finite and positive",
        });
    }
    // Folded density rate·e^{-rate·θ}/(1 − e^{-2π·rate}) on [0, 2π).
    let norm = rate / (-(-TWO_PI * rate).exp_m1());
    let pole = (-z.arg()).rem_euclid(TWO_PI);
    let mut points = alloc::vec![0.0, pole, TWO_PI];
    points.sort_by(f64::total_cmp);
    integrate_with_breakpoints(
        |theta| norm * (-rate * theta).exp() / (ONE - z * cis(theta)),
        &points,
        Tolerance::new(1e-11, 1e-10),
    )
}

/// `⟨t₁₂⟩` for a homogeneously broadened pair whose separation is
/// exponentially distributed with rate `rho` (the nearest-neighbour law of a
/// uniform gas of density `rho`).
pub fn two_atom_average_analytic(p: &WaveguideParams, d: Detuning, rho: f64) -> Result<Complex64> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "rho",
            reason: "density must be finite and positive",
        });
    }
    let t1 = single_atom_scatter(p, d).t;
    if t1 == ZERO {
        return Ok(ZERO);
    }
    let eta = reflection_amplitude(p, d);
    Ok(t1 * t1 * exponential_phase_average(eta * eta, rho / (2.0 * p.k()))?)
}

/// Distribution of the pair separation `x₁₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeparationModel {
    Fixed(f64),
    /// Exponential with rate `rho` (a uniform gas of density `rho`).
    Exponential { rho: f64 },
}

/// `⟨t₁₂⟩` over two independent Gaussian detunings, `δ_j ~ N(delta_mean,
/// delta_width²)`, and the given separation law.
pub fn two_atom_average_doppler(
    p: &WaveguideParams,
    delta_mean: f64,
    delta_width: f64,
    separation: SeparationModel,
) -> Result<Complex64> {
    if !(delta_width >= 0.0 && delta_width.is_finite() && delta_mean.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "delta_width",
            reason: "Doppler width must be finite and non-negative",
        });
    }
    let pair = |d1: f64, d2: f64| -> Result<Complex64> {
        let (d1, d2) = (Detuning::new(d1)?, Detuning::new(d2)?);
        match separation {
            SeparationModel::Fixed(x12) => two_atom_amplitude(p, d1, d2, x12),
            SeparationModel::Exponential { rho } => {
                let mft = single_atom_scatter(p, d1).t * single_atom_scatter(p, d2).t;
                if mft == ZERO {
                    return Ok(ZERO);
                }
                let z = reflection_amplitude(p, d1) * reflection_amplitude(p, d2);
                Ok(mft * exponential_phase_average(z, rho / (2.0 * p.k()))?)
            }
        }
    };
    if delta_width == 0.0 {
        return pair(delta_mean, delta_mean);
    }

    let gt = p.gamma_t();
    let features = [-16.0 * gt, -4.0 * gt, -gt, 0.0, gt, 4.0 * gt, 16.0 * gt];
    let averager = GaussianAverager::new(Tolerance::new(1e-12, 1e-8));
    // The integrand has isolated 0/0 points (a lossless resonant pair at a
    // pole); they have measure zero and contribute nothing.
    let mut failure = None;
    let mut value = |d1: f64, d2: f64| match pair(d1, d2) {
        Ok(v) => v,
        Err(Error::ResonantDivergence) => ZERO,
        Err(e) => {
            failure.get_or_insert(e);
            ZERO
        }
    };
    let mut inner_failure = None;
    let outer = averager.expectation(
        |d1| {
            let mut inner_features = features;
            inner_features[3] = -d1;
            match averager.expectation(|d2| value(d1, d2), delta_mean, delta_width, &inner_features) {
                Ok(v) => v,
                Err(e) => {
                    inner_failure.get_or_insert(e);
                    ZERO
                }
            }
        },
        delta_mean,
        delta_width,
        &features,
    )?;
    if let Some(e) = inner_failure.or(failure) {
        return Err(e);
    }
    Ok(outer)
}

/// `|exact − mft| / |mft|`.
pub fn relative_deviation(exact: Complex64, mft: Complex64) -> Result<f64> {
    let scale = mft.norm();
    if !(scale > 1e-14) {
        return Err(Error::MftVanishes);
    }
    Ok((exact - mft).norm() / scale)
}

/// Mean-field optical thickness `−ln⟨(T⁽¹⁾)^N⟩` for a Poisson-distributed
/// atom number with mean `nbar`: `(2γ_t − γ_w)N̄γ_w / (γ_t² + δ²)`.
pub fn poisson_mft_thickness(p: &WaveguideParams, d: Detuning, nbar: f64) -> Result<f64> {
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "nbar",
            reason: "mean atom number must be finite and non-negative",
        });
    }
    let (gt, gw, delta) = (p.gamma_t(), p.gamma_w(), d.value());
    Ok((2.0 * gt - gw) * nbar * gw / (gt * gt + delta * delta))
}
