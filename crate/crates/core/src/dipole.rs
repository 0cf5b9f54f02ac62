//! Exact steady state of the coupled point-dipole equations
//!
//! ```text
//! P_j = α_j D_F(x_j) + η_j Σ_{l≠j} e^{ik|x_j - x_l|} P_l
//! ```
//!
//! for a fixed set of atom positions, and the field they radiate.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LuDecomposition};
use crate::params::{polarizability, reflection_amplitude, Detuning, ScatterResult, WaveguideParams};

/// Smallest allowed distance between two atoms (or between an atom and a
/// field probe point), in units of `1/k` with `k = 1`.
pub const MIN_SEPARATION: f64 = 1e-9;

const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// One stochastic realization: atom positions in ascending order and the
/// detuning seen by each atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    positions: Vec<f64>,
    detunings: Vec<f64>,
}

impl Configuration {
    /// Builds a configuration, sorting atoms by position. Atoms closer than
    /// [`MIN_SEPARATION`] are rejected rather than merged.
    pub fn new(positions: Vec<f64>, detunings: Vec<f64>) -> Result<Self> {
        if positions.len() != detunings.len() {
            return Err(Error::InvalidParameter {
                name: "detunings",
                reason: "length must equal the number of atoms",
            });
        }
        if positions.iter().chain(&detunings).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "positions",
                reason: "positions and detunings must be finite",
            });
        }
        let (positions, detunings) = if positions.windows(2).all(|w| w[0] <= w[1]) {
            (positions, detunings)
        } else {
            let mut atoms: Vec<(f64, f64)> = positions.into_iter().zip(detunings).collect();
            atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
            atoms.into_iter().unzip()
        };
        if let Some(i) = positions.windows(2).position(|w| w[1] - w[0] < MIN_SEPARATION) {
            return Err(Error::AtomsTooClose {
                first: i,
                second: i + 1,
            });
        }
        Ok(Self {
            positions,
            detunings,
        })
    }

    /// All atoms share the detuning `delta`.
    pub fn uniform(positions: Vec<f64>, delta: Detuning) -> Result<Self> {
        let detunings = alloc::vec![delta.value(); positions.len()];
        Self::new(positions, detunings)
    }

    pub fn empty() -> Self {
        Self {
            positions: Vec::new(),
            detunings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn detuning(&self, j: usize) -> Detuning {
        Detuning::new(self.detunings[j]).expect("validated at construction")
    }

    /// Same positions, every detuning shifted by `shift`.
    pub fn retuned(&self, shift: f64) -> Self {
        Self {
            positions: self.positions.clone(),
            detunings: self.detunings.iter().map(|d| d + shift).collect(),
        }
    }

    /// Same detunings, every position shifted by `dx`.
    pub fn translated(&self, dx: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|x| x + dx).collect(),
            detunings: self.detunings.clone(),
        }
    }
}

/// Steady-state excitation dipoles, one per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleAmplitudes(Vec<Complex64>);

impl DipoleAmplitudes {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

fn system(p: &WaveguideParams, c: &Configuration) -> (DenseMatrix, Vec<Complex64>) {
    let n = c.len();
    let k = p.k();
    let x = c.positions();
    let mut a = DenseMatrix::identity(n);
    let mut rhs = Vec::with_capacity(n);
    for j in 0..n {
        let d = c.detuning(j);
        let eta = reflection_amplitude(p, d);
        for l in 0..n {
            if l != j {
                a[(j, l)] = -eta * cis(k * (x[j] - x[l]).abs());
            }
        }
        rhs.push(polarizability(p, d) * p.incident_amplitude() * cis(k * x[j]));
    }
    (a, rhs)
}

fn residual(a: &DenseMatrix, x: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
    a.mul_vec(x).iter().zip(rhs).map(|(ax, b)| b - ax).collect()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the coupled-dipole system by dense LU.
///
/// The residual is checked against `1e-10·‖α·drive‖`; one step of
/// iterative refinement is attempted before reporting a singular system.
pub fn solve_dipoles(p: &WaveguideParams, c: &Configuration) -> Result<DipoleAmplitudes> {
    let (a, rhs) = system(p, c);
    let lu = LuDecomposition::factor(a.clone())?;
    let mut x = rhs.clone();
    lu.solve_in_place(&mut x);

    let scale = norm(&rhs);
    let mut res = residual(&a, &x, &rhs);
    if norm(&res) > RESIDUAL_TOLERANCE * scale {
        lu.solve_in_place(&mut res);
        for (xi, di) in x.iter_mut().zip(&res) {
            *xi += di;
        }
        if norm(&residual(&a, &x, &rhs)) > RESIDUAL_TOLERANCE * scale {
            return Err(Error::SingularSystem {
                condition_estimate: lu.condition_estimate(),
            });
        }
    }
    if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::SingularSystem {
            condition_estimate: lu.condition_estimate(),
        });
    }
    Ok(DipoleAmplitudes(x))
}

/// Transmitted and reflected amplitudes radiated by the solved dipoles.
pub fn fields(p: &WaveguideParams, c: &Configuration, amps: &DipoleAmplitudes) -> ScatterResult {
    let k = p.k();
    let prefactor = Complex64::new(0.0, k / 2.0) / p.incident_amplitude();
    let (forward, backward) = c.positions().iter().zip(amps.as_slice()).fold(
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        |(f, b), (&x, &dip)| (f + cis(-k * x) * dip, b + cis(k * x) * dip),
    );
    ScatterResult {
        t: Complex64::new(1.0, 0.0) + prefactor * forward,
        r: prefactor * backward,
    }
}

/// Total field divided by the incident amplitude at each point of `xs`.
pub fn field_profile(
    p: &WaveguideParams,
    c: &Configuration,
    amps: &DipoleAmplitudes,
    xs: &[f64],
) -> Result<Vec<Complex64>> {
    let k = p.k();
    let prefactor = Complex64::new(0.0, k / 2.0) / p.incident_amplitude();
    xs.iter()
        .enumerate()
        .map(|(index, &x)| {
            let mut scattered = Complex64::new(0.0, 0.0);
            for (&xl, &dip) in c.positions().iter().zip(amps.as_slice()) {
                let dist = (x - xl).abs();
                if dist < MIN_SEPARATION {
                    return Err(Error::GridTooClose { index });
                }
                scattered += cis(k * dist) * dip;
            }
            Ok(cis(k * x) + prefactor * scattered)
        })
        .collect()
}

/// Solve and extract `(t, r)` in one step.
pub fn scatter(p: &WaveguideParams, c: &Configuration) -> Result<ScatterResult> {
    let amps = solve_dipoles(p, c)?;
    Ok(fields(p, c, &amps))
}
