//! Effective-medium description of a uniform atomic slab: refractive index,
//! slab transmission, the cooperative Lamb shift and resonance widths, and
//! resonance-shift extraction from sampled spectra.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::ensembles::SpectrumPoint;
use crate::error::{Error, Result};
use crate::params::{polarizability, Detuning, ScatterResult, WaveguideParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Atoms of line density `rho` smeared uniformly over `[0, length]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabMedium {
    rho: f64,
    length: f64,
    params: WaveguideParams,
}

impl SlabMedium {
    pub fn new(params: WaveguideParams, rho: f64, length: f64) -> Result<Self> {
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: "density must be finite and non-negative",
            });
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter {
                name: "length",
                reason: "slab length must be finite and positive",
            });
        }
        Ok(Self { rho, length, params })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn params(&self) -> &WaveguideParams {
        &self.params
    }
}

/// Susceptibility `χ = αρ`. There is no local-field correction in one
/// dimension, so `χ` is exactly linear in density.
pub fn susceptibility(m: &SlabMedium, d: Detuning) -> Complex64 {
    polarizability(&m.params, d) * m.rho
}

/// `n = √(1 + χ)` on the branch with `Im n ≥ 0` (damped propagation).
pub fn refractive_index(m: &SlabMedium, d: Detuning) -> Complex64 {
    let mut eps = Complex64::new(1.0, 0.0) + susceptibility(m, d);
    if eps.im == 0.0 {
        // Approach the real axis from above, including a signed zero.
        eps.im = 0.0;
    }
    let n = eps.sqrt();
    if n.im < 0.0 {
        -n
    } else {
        n
    }
}

/// Transmission and reflection of the slab, by matching the field and its
/// derivative at both faces. Phases follow the point-scatterer convention:
/// `t` relative to the incident plane wave, `r` referenced to `x = 0`.
pub fn slab_transmission(m: &SlabMedium, d: Detuning) -> ScatterResult {
    let k = m.params.k();
    let n = refractive_index(m, d);
    let theta = n * k * m.length;
    let (tau, r) = if theta.im > 20.0 {
        // Opaque slab: only the wave growing toward the entrance face
        // survives; the neglected terms are below e^{-40}.
        let tau = 4.0 * n * (I * theta).exp() / ((n + 1.0) * (n + 1.0));
        (tau, (1.0 - n) / (1.0 + n))
    } else {
        let (cos, sin) = (theta.cos(), theta.sin());
        // (E, E'/k) at x = L is [[a, b], [c, d]] applied to its value at 0.
        let (a, b, c, dd) = (cos, sin / n, -n * sin, cos);
        let enter = I * a - c;
        let leave = b + I * dd;
        let r = (leave - enter) / (enter + leave);
        let tau = 2.0 / (a + dd + I * (c - b));
        (tau, r)
    };
    ScatterResult {
        t: tau * Complex64::from_polar(1.0, -k * m.length),
        r,
    }
}

/// Slab spectrum as noiseless spectrum points, for [`extract_peak_shift`].
pub fn slab_spectrum(m: &SlabMedium, deltas: &[f64]) -> Result<Vec<SpectrumPoint>> {
    deltas
        .iter()
        .map(|&delta| {
            let d = Detuning::new(delta)?;
            Ok(SpectrumPoint::exact(d, slab_transmission(m, d)))
        })
        .collect()
}

/// `1 − sin(x)/x`, accurate for small `x`.
fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        let x2 = x * x;
        x2 / 6.0 * (1.0 - x2 / 20.0)
    } else {
        1.0 - x.sin() / x
    }
}

/// Cooperative Lamb shift `(γ_wρ/2k)(1 − sin 2Lk / 2Lk)`, leading order in
/// density.
pub fn cls_shift(m: &SlabMedium) -> f64 {
    let k = m.params.k();
    m.params.gamma_w() * m.rho / (2.0 * k) * one_minus_sinc(2.0 * m.length * k)
}

fn width_factor(m: &SlabMedium) -> f64 {
    let lk = m.length * m.params.k();
    // 1 + 2L²k² − cos 2Lk, written to avoid cancellation for thin slabs.
    let s = lk.sin();
    (2.0 * s * s + 2.0 * lk * lk) / (2.0 * lk)
}

/// Resonance half width at half maximum of the mean-field optical thickness:
/// `γ_t √(1 + (γ_wρ/γ_t k)(1 + 2L²k² − cos 2Lk)/(2Lk))`.
pub fn mft_width(m: &SlabMedium) -> f64 {
    let p = &m.params;
    let gt = p.gamma_t();
    gt * (1.0 + p.gamma_w() * m.rho / (gt * p.k()) * width_factor(m)).sqrt()
}

/// First-order expansion of [`mft_width`] in the density.
pub fn mft_width_thin(m: &SlabMedium) -> f64 {
    let p = &m.params;
    p.gamma_t() + p.gamma_w() * m.rho / p.k() * width_factor(m) / 2.0
}

/// Quantity whose maximum defines the resonance position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakObservable {
    /// `⟨T⟩`, with `stderr_transmittance` as its noise.
    #[default]
    Transmission,
    /// `−⟨ln T⟩` (the transmission dip), with `stderr_log_transmittance`.
    OpticalThickness,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakShift {
    pub shift: f64,
    pub uncertainty: f64,
}

/// Location of the maximum of `observable` over the spectrum, refined by a
/// parabola through the maximal grid point and its neighbours. The
/// uncertainty propagates the per-point standard errors through the
/// vertex formula.
pub fn extract_peak_shift(spectrum: &[SpectrumPoint], observable: PeakObservable) -> Result<PeakShift> {
    if spectrum.len() < 5 {
        return Err(Error::InvalidParameter {
            name: "spectrum",
            reason: "at least 5 grid points are required",
        });
    }
    let x: Vec<f64> = spectrum.iter().map(|p| p.delta.value()).collect();
    let increasing = x.windows(2).all(|w| w[1] > w[0]);
    let decreasing = x.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidParameter {
            name: "spectrum",
            reason: "detuning grid must be strictly monotone",
        });
    }
    let (y, sigma): (Vec<f64>, Vec<f64>) = spectrum
        .iter()
        .map(|p| match observable {
            PeakObservable::Transmission => (p.mean_transmittance, p.stderr_transmittance),
            PeakObservable::OpticalThickness => (-p.mean_log_transmittance, p.stderr_log_transmittance),
        })
        .unzip();
    if y.iter().chain(&sigma).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "spectrum",
            reason: "observable or its standard error is not finite",
        });
    }
    let peak = (0..y.len())
        .reduce(|best, i| if y[i] > y[best] { i } else { best })
        .expect("non-empty");
    if peak == 0 || peak == y.len() - 1 {
        return Err(Error::PeakAtBoundary);
    }

    let (x0, x1, x2) = (x[peak - 1], x[peak], x[peak + 1]);
    let (y0, y1, y2) = (y[peak - 1], y[peak], y[peak + 1]);
    let (a, b) = (x1 - x0, x1 - x2);
    let num = a * a * (y1 - y2) - b * b * (y1 - y0);
    let den = a * (y1 - y2) - b * (y1 - y0);
    if den == 0.0 {
        // Flat top: the grid point itself is the best estimate.
        return Ok(PeakShift {
            shift: x1,
            uncertainty: 0.0,
        });
    }
    let shift = x1 - num / (2.0 * den);
    let dnum = [b * b, a * a - b * b, -a * a];
    let dden = [b, a - b, -a];
    let variance: f64 = (0..3)
        .map(|j| {
            let grad = -(dnum[j] * den - num * dden[j]) / (2.0 * den * den);
            let s = sigma[peak - 1 + j];
            grad * grad * s * s
        })
        .sum();
    Ok(PeakShift {
        shift,
        uncertainty: variance.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn medium(ratio: f64, rho: f64, length: f64) -> SlabMedium {
        SlabMedium::new(WaveguideParams::normalized(ratio).unwrap(), rho, length).unwrap()
    }

    fn det(delta: f64) -> Detuning {
        Detuning::new(delta).unwrap()
    }

    fn synthetic(deltas: &[f64], f: impl Fn(f64) -> f64, noise: f64) -> Vec<SpectrumPoint> {
        deltas
            .iter()
            .map(|&x| {
                let mut p = SpectrumPoint::exact(
                    det(x),
                    ScatterResult {
                        t: Complex64::new(f(x).sqrt(), 0.0),
                        r: Complex64::new(0.0, 0.0),
                    },
                );
                p.stderr_transmittance = noise;
                p
            })
            .collect()
    }

    #[test]
    fn rejects_bad_media() {
        let p = WaveguideParams::lossless();
        assert!(SlabMedium::new(p, -1.0, 1.0).is_err());
        assert!(SlabMedium::new(p, 1.0, 0.0).is_err());
    }

    #[test]
    fn empty_medium_has_unit_index() {
        let m = medium(0.5, 0.0, 2.0);
        assert_eq!(refractive_index(&m, det(0.3)), Complex64::new(1.0, 0.0));
        let s = slab_transmission(&m, det(0.3));
        assert!((s.t - 1.0).norm() < 1e-15 && s.r.norm() < 1e-15);
    }

    #[test]
    fn far_detuned_index_tends_to_one() {
        let m = medium(0.5, 10.0, 2.0);
        assert!((refractive_index(&m, det(1e9)) - 1.0).norm() < 1e-8);
    }

    #[test]
    fn resonant_susceptibility_is_absorptive() {
        let m = medium(0.3, 4.0, 1.0);
        let chi = susceptibility(&m, det(0.0));
        assert!(chi.re.abs() < 1e-15);
        assert!((chi.im - 2.0 * 0.3 * 4.0).abs() < 1e-14);
        let n = refractive_index(&m, det(0.0));
        assert!(n.im > 0.0);
    }

    #[test]
    fn opaque_branch_is_continuous() {
        // Just below and above the switch to the asymptotic form.
        let p = WaveguideParams::normalized(0.5).unwrap();
        let chi_im = 2.0 * 0.5 * 4.0;
        let n = Complex64::new(1.0, chi_im).sqrt();
        let switch = 20.0 / n.im;
        let below = slab_transmission(&SlabMedium::new(p, 4.0, switch * (1.0 - 1e-9)).unwrap(), det(0.0));
        let above = slab_transmission(&SlabMedium::new(p, 4.0, switch * (1.0 + 1e-9)).unwrap(), det(0.0));
        assert!((below.t - above.t).norm() < 1e-7 * below.t.norm(), "{} {}", below.t, above.t);
        assert!((below.r - above.r).norm() < 1e-12);
        let huge = slab_transmission(&SlabMedium::new(p, 4.0, 1e4).unwrap(), det(0.0));
        assert_eq!(huge.transmittance(), 0.0);
        assert!(huge.r.re.is_finite() && huge.r.im.is_finite());
    }

    #[test]
    fn vanishing_slab_is_transparent() {
        let m = medium(0.8, 5.0, 1e-9);
        let s = slab_transmission(&m, det(0.2));
        assert!((s.t - 1.0).norm() < 1e-7);
    }

    #[test]
    fn thin_dilute_slab_attenuates_coherently() {
        // ρL ≪ 1 atoms: |t|² ≈ 1 − ρL·k·Im α = 1 − ρL·2γ_wγ_t/(γ_t² + δ²).
        let p = WaveguideParams::normalized(0.4).unwrap();
        let m = SlabMedium::new(p, 1e-4, 0.01).unwrap();
        for delta in [-1.0, 0.0, 0.6] {
            let s = slab_transmission(&m, det(delta));
            let expected = 1.0 - 1e-6 * 2.0 * 0.4 / (1.0 + delta * delta);
            assert!((s.transmittance() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn cls_examples() {
        let m = medium(0.1, 5.0, 1e-12);
        assert!(cls_shift(&m).abs() < 1e-20);
        for mult in 1..6 {
            let lk = mult as f64 * core::f64::consts::PI / 2.0;
            let m = medium(0.1, 5.0, lk);
            assert!((cls_shift(&m) - 0.1 * 5.0 / 2.0).abs() < 1e-14);
        }
        let m = medium(0.1, 5.0, 3.0 * core::f64::consts::PI / 4.0);
        let expected = 0.25 * (1.0 + 1.0 / (1.5 * core::f64::consts::PI));
        assert!((cls_shift(&m) - expected).abs() < 1e-14);
    }

    #[test]
    fn width_examples() {
        assert_eq!(mft_width(&medium(0.4, 0.0, 3.0)), 1.0);
        let mut last = 0.0;
        for rho in [0.0, 0.1, 1.0, 5.0, 20.0] {
            let w = mft_width(&medium(0.4, rho, 3.0));
            assert!(w > last || rho == 0.0);
            last = w;
        }
    }

    #[test]
    fn thin_width_expansion_is_first_order() {
        let mut last_gap = f64::INFINITY;
        for rho in [0.004, 0.002, 0.001, 0.0005] {
            let m = medium(0.5, rho, 2.0);
            let gap = (mft_width(&m) - mft_width_thin(&m)).abs();
            if last_gap.is_finite() {
                let ratio = last_gap / gap;
                assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
            }
            last_gap = gap;
        }
    }

    #[test]
    fn width_factor_matches_direct_form() {
        for lk in [1e-3, 0.1, 1.0, 7.3] {
            let m = medium(0.5, 1.0, lk);
            let direct = (1.0 + 2.0 * lk * lk - (2.0 * lk).cos()) / (2.0 * lk);
            assert!((width_factor(&m) - direct).abs() < 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn lorentzian_peak_is_located() {
        let grid: Vec<f64> = (0..=60).map(|i| -1.5 + 0.05 * i as f64).collect();
        let centred = synthetic(&grid, |x| 1.0 / (1.0 + x * x), 0.0);
        let s = extract_peak_shift(&centred, PeakObservable::Transmission).unwrap();
        assert!(s.shift.abs() < 1e-12);
        let shifted = synthetic(&grid, |x| 1.0 / (1.0 + (x - 0.3).powi(2)), 0.0);
        let s = extract_peak_shift(&shifted, PeakObservable::Transmission).unwrap();
        assert!((s.shift - 0.3).abs() < 0.005);
    }

    #[test]
    fn peak_uncertainty_reflects_noise() {
        let grid: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
        let quiet = synthetic(&grid, |x| 1.0 / (1.0 + (x - 0.12).powi(2)), 1e-4);
        let loud = synthetic(&grid, |x| 1.0 / (1.0 + (x - 0.12).powi(2)), 1e-2);
        let a = extract_peak_shift(&quiet, PeakObservable::Transmission).unwrap();
        let b = extract_peak_shift(&loud, PeakObservable::Transmission).unwrap();
        assert!(a.uncertainty > 0.0);
        assert!((b.uncertainty / a.uncertainty - 100.0).abs() < 1e-6);
    }

    #[test]
    fn peak_extraction_preconditions() {
        let grid: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let rising = synthetic(&grid, |x| x / 10.0, 0.0);
        assert_eq!(extract_peak_shift(&rising, PeakObservable::Transmission), Err(Error::PeakAtBoundary));
        assert!(extract_peak_shift(&rising[..4], PeakObservable::Transmission).is_err());
        let mut shuffled = synthetic(&grid, |x| 1.0 / (1.0 + (x - 4.0).powi(2)), 0.0);
        shuffled.swap(2, 7);
        assert!(extract_peak_shift(&shuffled, PeakObservable::Transmission).is_err());
    }

    #[test]
    fn optical_thickness_peak_is_the_transmission_dip() {
        let grid: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
        let dip = synthetic(&grid, |x| (-2.0 / (1.0 + (x + 0.2).powi(2))).exp(), 0.0);
        let s = extract_peak_shift(&dip, PeakObservable::OpticalThickness).unwrap();
        assert!((s.shift + 0.2).abs() < 0.005);
    }

    #[test]
    fn slab_spectrum_shift_is_positive_for_half_wave_slab() {
        let m = medium(0.01, 1e-2, core::f64::consts::PI);
        let grid: Vec<f64> = (0..=200).map(|i| -0.05 + 5e-4 * i as f64).collect();
        let spectrum = slab_spectrum(&m, &grid).unwrap();
        let s = extract_peak_shift(&spectrum, PeakObservable::OpticalThickness).unwrap();
        assert!(s.shift > 0.0);
    }

    proptest! {
        #[test]
        fn susceptibility_is_linear_in_density(ratio in 0.0..=1.0f64, rho in 0.0..50.0f64, delta in -10.0..10.0f64) {
            let a = susceptibility(&medium(ratio, rho, 1.0), det(delta));
            let b = susceptibility(&medium(ratio, 2.0 * rho, 1.0), det(delta));
            prop_assert!((b - 2.0 * a).norm() <= 1e-14 * b.norm().max(1.0));
        }

        #[test]
        fn index_branch_is_damped(ratio in 0.0..=1.0f64, rho in 0.0..50.0f64, delta in -10.0..10.0f64) {
            let n = refractive_index(&medium(ratio, rho, 1.0), det(delta));
            prop_assert!(n.im >= 0.0);
            let eps = 1.0 + susceptibility(&medium(ratio, rho, 1.0), det(delta));
            prop_assert!((n * n - eps).norm() < 1e-12 * eps.norm().max(1.0));
        }

        #[test]
        fn slab_never_creates_power(ratio in 0.0..=1.0f64, rho in 0.0..20.0f64, lk in 0.01..20.0f64, delta in -10.0..10.0f64) {
            let s = slab_transmission(&medium(ratio, rho, lk), det(delta));
            prop_assert!(s.transmittance() + s.reflectance() <= 1.0 + 1e-12);
        }

        #[test]
        fn peak_is_invariant_under_vertical_scaling(centre in -0.5..0.5f64, scale in 0.01..100.0f64) {
            let grid: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
            let base = synthetic(&grid, |x| 1.0 / (1.0 + (x - centre).powi(2)), 0.0);
            let scaled = synthetic(&grid, |x| scale / (1.0 + (x - centre).powi(2)), 0.0);
            let a = extract_peak_shift(&base, PeakObservable::Transmission).unwrap();
            let b = extract_peak_shift(&scaled, PeakObservable::Transmission).unwrap();
            prop_assert!((a.shift - b.shift).abs() < 1e-12);
        }
    }
}
