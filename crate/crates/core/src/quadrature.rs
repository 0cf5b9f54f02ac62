//! Numerical integration of complex-valued functions of one real variable:
//! globally adaptive Gauss–Kronrod (7/15) on finite intervals, and
//! Gauss–Hermite rules for Gaussian-weighted averages.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Absolute and relative error targets; the looser of the two wins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-9,
            rel: 1e-9,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mid = f(center);
    let mut kronrod = mid * KRONROD_WEIGHTS[7];
    let mut gauss = mid * GAUSS_WEIGHTS[3];
    for i in 0..7 {
        let dx = half * KRONROD_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * KRONROD_WEIGHTS[i];
        if i % 2 == 1 {
            gauss += pair * GAUSS_WEIGHTS[i / 2];
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).norm(),
    }
}

/// `∫_a^b f(x) dx`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    integrate_with_breakpoints(f, &[a, b], tol)
}

/// Integral over `[points[0], points[last]]`, with the listed interior
/// points used as initial subdivision boundaries. Points must ascend.
pub fn integrate_with_breakpoints<F>(mut f: F, points: &[f64], tol: Tolerance) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    let mut heap: BinaryHeap<Segment> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| kronrod(&mut f, w[0], w[1]))
        .collect();

    loop {
        let total: Complex64 = heap.iter().map(|s| s.value).sum();
        let error: f64 = heap.iter().map(|s| s.error).sum();
        if error <= tol.abs.max(tol.rel * total.norm()) {
            return Ok(total);
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::QuadratureFailure { estimate: error });
        }
        let Some(worst) = heap.pop() else {
            return Ok(total);
        };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Interval exhausted at machine precision.
            return Err(Error::QuadratureFailure { estimate: error });
        }
        heap.push(kronrod(&mut f, worst.a, mid));
        heap.push(kronrod(&mut f, mid, worst.b));
    }
}

/// Gauss–Hermite rule for `∫ e^{-x²} f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes by Newton iteration on orthonormal Hermite polynomials.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Hermite order must be positive");
        let n = order;
        let pim4 = core::f64::consts::PI.powf(-0.25);
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (mut p1, mut p2) = (pim4, 0.0);
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
                }
                derivative = (2.0 * n as f64).sqrt() * p2;
                let step = p1 / derivative;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (derivative * derivative);
            weights[n - 1 - i] = weights[i];
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[f(X)]` for `X ~ Normal(mean, sigma²)`.
    pub fn expectation<F>(&self, mut f: F, mean: f64, sigma: f64) -> Complex64
    where
        F: FnMut(f64) -> Complex64,
    {
        let scale = core::f64::consts::SQRT_2 * sigma;
        let sum: Complex64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(mean + scale * x) * w)
            .sum();
        sum / core::f64::consts::PI.sqrt()
    }
}

/// Standard normal density.
pub fn normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * core::f64::consts::PI).sqrt()
}

/// Range, in standard deviations, beyond which Gaussian mass is ignored
/// (two-sided tail `< 1e-22`).
pub const GAUSSIAN_CUTOFF: f64 = 10.0;

/// `E[f(X)]` for `X ~ Normal(mean, sigma²)` by adaptive quadrature over
/// `mean ± 10 sigma`. `features` lists abscissae (in `x`) near which `f`
/// varies on scales much finer than `sigma`; they seed the subdivision.
pub fn gaussian_expectation_adaptive<F>(
    mut f: F,
    mean: f64,
    sigma: f64,
    features: &[f64],
    tol: Tolerance,
) -> Result<Complex64>
where
    F: FnMut(f64) -> Complex64,
{
    if sigma == 0.0 {
        return Ok(f(mean));
    }
    let lo = -GAUSSIAN_CUTOFF;
    let hi = GAUSSIAN_CUTOFF;
    let mut points: Vec<f64> = features
        .iter()
        .map(|x| (x - mean) / sigma)
        .filter(|u| *u > lo && *u < hi)
        .collect();
    points.push(lo);
    points.push(hi);
    points.sort_by(f64::total_cmp);
    points.dedup();
    integrate_with_breakpoints(|u| f(mean + sigma * u) * normal_pdf(u), &points, tol)
}

/// Gaussian expectation with automatic choice of method.
///
/// Uses a 64-point Gauss–Hermite rule when it agrees with a 96-point rule
/// to the tolerance; otherwise (typically when the integrand has structure
/// much narrower than `sigma`) falls back to
/// [`gaussian_expectation_adaptive`]. Build once and reuse: constructing the
/// rules is the expensive part.
#[derive(Debug, Clone)]
pub struct GaussianAverager {
    coarse: GaussHermite,
    fine: GaussHermite,
    tol: Tolerance,
}

impl GaussianAverager {
    pub fn new(tol: Tolerance) -> Self {
        Self {
            coarse: GaussHermite::new(64),
            fine: GaussHermite::new(96),
            tol,
        }
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    /// `E[f(X)]` for `X ~ Normal(mean, sigma²)`; `features` as for
    /// [`gaussian_expectation_adaptive`].
    pub fn expectation<F>(&self, mut f: F, mean: f64, sigma: f64, features: &[f64]) -> Result<Complex64>
    where
        F: FnMut(f64) -> Complex64,
    {
        if sigma == 0.0 {
            return Ok(f(mean));
        }
        let coarse = self.coarse.expectation(&mut f, mean, sigma);
        let fine = self.fine.expectation(&mut f, mean, sigma);
        if (coarse - fine).norm() <= self.tol.abs.max(self.tol.rel * fine.norm()) {
            return Ok(fine);
        }
        gaussian_expectation_adaptive(f, mean, sigma, features, self.tol)
    }
}
