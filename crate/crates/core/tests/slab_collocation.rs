//! The closed-form slab against a direct discretization of the mean-field
//! integral equation.
//!
//! Trapezoidal collocation of `P(x) = αρE₀(x) + ηρ∫₀^L e^{ik|x−x'|}P(x')dx'`
//! with weights `w_i` is algebraically a chain of point scatterers with
//! strengths `η'_i = ηρw_i/(1 − ηρw_i)`. The chain is solved here by
//! combining scatterers pairwise (scattering-matrix composition), which
//! shares no code with the library's solvers.

use corr1d_core::meanfield::{slab_transmission, SlabMedium};
use corr1d_core::params::{reflection_amplitude, Detuning};
use corr1d_core::{Complex64, WaveguideParams};

/// Global-phase scattering data of a left-to-right block: transmission, and
/// reflection for incidence from the left and from the right.
#[derive(Clone, Copy)]
struct Block {
    t: Complex64,
    left: Complex64,
    right: Complex64,
}

fn combine(a: Block, b: Block) -> Block {
    let bounce = Complex64::new(1.0, 0.0) - a.right * b.left;
    Block {
        t: a.t * b.t / bounce,
        left: a.left + a.t * a.t * b.left / bounce,
        right: b.right + b.t * b.t * a.right / bounce,
    }
}

fn collocation(p: &WaveguideParams, rho: f64, length: f64, d: Detuning, intervals: usize) -> Complex64 {
    let eta = reflection_amplitude(p, d);
    let h = length / intervals as f64;
    let k = p.k();
    let mut chain = Block {
        t: Complex64::new(1.0, 0.0),
        left: Complex64::new(0.0, 0.0),
        right: Complex64::new(0.0, 0.0),
    };
    for i in 0..=intervals {
        let w = if i == 0 || i == intervals { h / 2.0 } else { h };
        let x = i as f64 * h;
        let s = eta * rho * w / (1.0 - eta * rho * w);
        let atom = Block {
            t: 1.0 + s,
            left: s * Complex64::from_polar(1.0, 2.0 * k * x),
            right: s * Complex64::from_polar(1.0, -2.0 * k * x),
        };
        chain = combine(chain, atom);
    }
    chain.t
}

#[test]
fn closed_form_matches_collocation() {
    let p = WaveguideParams::normalized(0.1).unwrap();
    let rho = 32.0 / std::f64::consts::PI;
    let length = 4.0 * std::f64::consts::PI;
    let slab = SlabMedium::new(p, rho, length).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..201 {
        let d = Detuning::new(-5.0 + 0.05 * i as f64).unwrap();
        let coarse = collocation(&p, rho, length, d, 2048);
        let fine = collocation(&p, rho, length, d, 4096);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        let exact = slab_transmission(&slab, d).t;
        worst = worst.max((extrapolated - exact).norm() / exact.norm());
    }
    assert!(worst < 1e-6, "worst relative difference {worst:e}");
}

#[test]
fn collocation_converges_toward_closed_form() {
    let p = WaveguideParams::normalized(0.5).unwrap();
    let slab = SlabMedium::new(p, 2.0, 3.0).unwrap();
    let d = Detuning::new(0.4).unwrap();
    let exact = slab_transmission(&slab, d).t;
    let errors: Vec<f64> = [256, 512, 1024]
        .iter()
        .map(|&m| (collocation(&p, 2.0, 3.0, d, m) - exact).norm())
        .collect();
    assert!(errors[0] / errors[1] > 3.5 && errors[1] / errors[2] > 3.5, "{errors:?}");
}
