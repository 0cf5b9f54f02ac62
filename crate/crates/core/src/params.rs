//! Physical parameters and the single-atom response of a two-level atom
//! coupled to a single-mode waveguide.

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Wavenumber, decay rates and incident amplitude.
///
/// Only `gamma_w` and `gamma_l` are stored; the total linewidth is always
/// their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideParams {
    k: f64,
    gamma_w: f64,
    gamma_l: f64,
    d0: Complex64,
}

impl WaveguideParams {
    pub fn new(k: f64, gamma_w: f64, gamma_l: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidParameter {
                name: "k",
                reason: "must be finite and positive",
            });
        }
        if !(gamma_w.is_finite() && gamma_w >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma_w",
                reason: "must be finite and non-negative",
            });
        }
        if !(gamma_l.is_finite() && gamma_l >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma_l",
                reason: "must be finite and non-negative",
            });
        }
        if gamma_w + gamma_l <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "gamma_t",
                reason: "total linewidth must be positive",
            });
        }
        Ok(Self {
            k,
            gamma_w,
            gamma_l,
            d0: Complex64::new(1.0, 0.0),
        })
    }

    /// Dimensionless parameters: `k = 1`, `gamma_t = 1`, `gamma_w` given as
    /// the fraction of the linewidth emitted into the guide.
    pub fn normalized(gamma_w_over_gamma_t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma_w_over_gamma_t) {
            return Err(Error::InvalidParameter {
                name: "gamma_w_over_gamma_t",
                reason: "must lie in [0, 1]",
            });
        }
        Self::new(1.0, gamma_w_over_gamma_t, 1.0 - gamma_w_over_gamma_t)
    }

    /// Lossless guide with unit linewidth.
    pub fn lossless() -> Self {
        Self {
            k: 1.0,
            gamma_w: 1.0,
            gamma_l: 0.0,
            d0: Complex64::new(1.0, 0.0),
        }
    }

    pub fn with_incident_amplitude(mut self, d0: Complex64) -> Result<Self> {
        if !(d0.re.is_finite() && d0.im.is_finite()) || d0.norm_sqr() == 0.0 {
            return Err(Error::InvalidParameter {
                name: "d0",
                reason: "incident amplitude must be finite and non-zero",
            });
        }
        self.d0 = d0;
        Ok(self)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn gamma_w(&self) -> f64 {
        self.gamma_w
    }

    pub fn gamma_l(&self) -> f64 {
        self.gamma_l
    }

    pub fn gamma_t(&self) -> f64 {
        self.gamma_w + self.gamma_l
    }

    pub fn incident_amplitude(&self) -> Complex64 {
        self.d0
    }

    pub fn is_lossless(&self) -> bool {
        self.gamma_l == 0.0
    }
}

/// Detuning of the drive from the atomic resonance, in the same units as
/// the decay rates.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Detuning(f64);

impl Detuning {
    pub fn new(delta: f64) -> Result<Self> {
        if delta.is_finite() {
            Ok(Self(delta))
        } else {
            Err(Error::InvalidParameter {
                name: "delta",
                reason: "detuning must be finite",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Complex transmission and reflection amplitudes of a scatterer.
///
/// `t` is referenced to the incident plane wave (an empty guide gives
/// `t = 1`); `r` is the amplitude of `e^{-ikx}` on the incident side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterResult {
    pub t: Complex64,
    pub r: Complex64,
}

impl ScatterResult {
    pub const TRANSPARENT: Self = Self {
        t: Complex64::new(1.0, 0.0),
        r: Complex64::new(0.0, 0.0),
    };

    pub fn transmittance(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    /// `-ln T`, which is `+inf` (never NaN) for a completely opaque sample.
    pub fn optical_thickness(&self) -> f64 {
        let t = self.transmittance();
        if t == 0.0 {
            f64::INFINITY
        } else {
            -t.ln()
        }
    }
}

/// `α = -2γ_w / [k(δ + iγ_t)]`.
pub fn polarizability(p: &WaveguideParams, d: Detuning) -> Complex64 {
    -2.0 * p.gamma_w / (p.k * Complex64::new(d.0, p.gamma_t()))
}

/// `η_δ = γ_w / (iδ - γ_t)`, the single-atom reflection amplitude and the
/// coupling constant of the dipole equations. Equals `iαk/2`.
pub fn reflection_amplitude(p: &WaveguideParams, d: Detuning) -> Complex64 {
    p.gamma_w / Complex64::new(-p.gamma_t(), d.0)
}

pub fn single_atom_scatter(p: &WaveguideParams, d: Detuning) -> ScatterResult {
    let denom = Complex64::new(-p.gamma_t(), d.0);
    ScatterResult {
        t: (Complex64::new(p.gamma_w - p.gamma_t(), 0.0) + I * d.0) / denom,
        r: p.gamma_w / denom,
    }
}

/// Single-atom power coefficients `(T, R)` from their closed forms.
pub fn single_atom_power(p: &WaveguideParams, d: Detuning) -> (f64, f64) {
    let gt = p.gamma_t();
    let denom = gt * gt + d.0 * d.0;
    let loss = gt - p.gamma_w;
    ((loss * loss + d.0 * d.0) / denom, p.gamma_w * p.gamma_w / denom)
}

/// Phase `φ` of the reflection amplitude, with the branch chosen so that
/// `η_δ = √R · e^{iφ}` holds exactly.
///
/// This differs from `arctan(δ/γ_t)` by π. The offset cancels in every pair
/// product `η_1 η_2`, so composite phases are unaffected.
pub fn reflection_phase(p: &WaveguideParams, d: Detuning) -> f64 {
    let eta = reflection_amplitude(p, d);
    eta.im.atan2(eta.re)
}
