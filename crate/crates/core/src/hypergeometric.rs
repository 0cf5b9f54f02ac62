//! The Gauss hypergeometric function in the special case
//! `₂F₁(1, b; 1 + b; z) = Σ_{n≥0} b/(b + n) · zⁿ`, which is what averaging
//! a geometric series over an exponentially distributed phase produces.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_TERMS: usize = 200_000;

/// `₂F₁(1, b; 1 + b; z)` by direct summation, for `|z| < 1`.
///
/// Summation stops once the geometric bound on the remaining tail drops
/// below `1e-12` of the running sum.
pub fn hyp2f1_unit_shift(b: Complex64, z: Complex64) -> Result<Complex64> {
    let modulus = z.norm();
    if !(modulus < 1.0) {
        return Err(Error::NonconvergentSeries { terms: 0 });
    }
    // (b)_0 / (1 + b)_0 = 1, including the degenerate b = 0.
    let mut sum = Complex64::new(1.0, 0.0);
    if b == Complex64::new(0.0, 0.0) {
        return Ok(sum);
    }
    let mut power = Complex64::new(1.0, 0.0);
    for n in 1..MAX_TERMS {
        power *= z;
        let term = power * b / (b + n as f64);
        sum += term;
        let tail_bound = term.norm() / (1.0 - modulus);
        if tail_bound <= 1e-12 * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::NonconvergentSeries { terms: MAX_TERMS })
}
