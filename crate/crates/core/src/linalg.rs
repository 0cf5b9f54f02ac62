//! Dense complex LU factorization with partial pivoting.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: alloc::vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        self.data
            .chunks_exact(self.n.max(1))
            .take(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl core::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// `PA = LU`, with the unit-diagonal `L` and `U` packed into one matrix.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    lu: DenseMatrix,
    pivots: Vec<usize>,
}

impl LuDecomposition {
    pub fn factor(mut a: DenseMatrix) -> Result<Self> {
        let n = a.n;
        let mut pivots = Vec::with_capacity(n);
        let mut max_pivot = 0.0f64;
        let mut min_pivot = f64::INFINITY;

        for col in 0..n {
            let (p, best) = (col..n)
                .map(|row| (row, a[(row, col)].norm()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::SingularSystem {
                    condition_estimate: f64::INFINITY,
                });
            }
            max_pivot = max_pivot.max(best);
            min_pivot = min_pivot.min(best);
            pivots.push(p);
            if p != col {
                for j in 0..n {
                    a.data.swap(col * n + j, p * n + j);
                }
            }

            let inv = a[(col, col)].inv();
            for row in col + 1..n {
                let factor = a[(row, col)] * inv;
                a[(row, col)] = factor;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in col + 1..n {
                    let u = a[(col, j)];
                    a[(row, j)] -= factor * u;
                }
            }
        }

        // Pivot growth ratio as a cheap stand-in for a condition number.
        if n > 0 && max_pivot / min_pivot > 1e14 {
            return Err(Error::SingularSystem {
                condition_estimate: max_pivot / min_pivot,
            });
        }

        Ok(Self { lu: a, pivots })
    }

    pub fn condition_estimate(&self) -> f64 {
        let diag = (0..self.lu.n).map(|i| self.lu[(i, i)].norm());
        let (lo, hi) = diag.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if self.lu.n == 0 {
            1.0
        } else {
            hi / lo
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.lu.n;
        assert_eq!(b.len(), n);
        for (col, &p) in self.pivots.iter().enumerate() {
            b.swap(col, p);
        }
        for i in 0..n {
            let mut acc = b[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * b[j];
            }
            b[i] = acc / self.lu[(i, i)];
        }
    }
}
