//! Dense LU factorization with partial pivoting for complex matrices.
//!
//! The point of rolling this by hand is the adjoint solve: the solver loop
//! needs both A x = b and Aᴴ x = b from the *same* stored factors, which
//! off-the-shelf dense LU types do not expose.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LuError {
    #[error("matrix is singular to working precision (pivot {pivot:.3e} at step {step})")]
    Singular { step: usize, pivot: f64 },
}

/// Packed LU factors of a square complex matrix, P A = L U.
pub struct ComplexLu {
    n: usize,
    /// Row-major packed factors: strictly lower part holds L (unit diagonal
    /// implied), upper part holds U.
    lu: Vec<Complex64>,
    /// Row permutation: row `i` of the factored matrix is row `piv[i]` of A.
    piv: Vec<usize>,
}

impl ComplexLu {
    /// Factor a row-major `n`×`n` matrix.
    pub fn factor(mut a: Vec<Complex64>, n: usize) -> Result<Self, LuError> {
        assert_eq!(a.len(), n * n, "matrix buffer has wrong length");
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut best_row, mut best_mag) = (k, a[k * n + k].norm_sqr());
            for i in k + 1..n {
                let mag = a[i * n + k].norm_sqr();
                if mag > best_mag {
                    best_row = i;
                    best_mag = mag;
                }
            }
            if best_mag == 0.0 {
                return Err(LuError::Singular {
                    step: k,
                    pivot: 0.0,
                });
            }
            if best_row != k {
                for j in 0..n {
                    a.swap(k * n + j, best_row * n + j);
                }
                piv.swap(k, best_row);
            }
            let inv_pivot = Complex64::new(1.0, 0.0) / a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] * inv_pivot;
                a[i * n + k] = factor;
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= factor * akj;
                }
            }
        }
        Ok(Self { n, lu: a, piv })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve A x = b, overwriting `b` with x.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        // Forward substitution with unit-diagonal L.
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        // Back substitution with U.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solve Aᴴ x = b, overwriting `b` with x. Uses Aᴴ = Uᴴ Lᴴ P, so the
    /// factors are reused: Uᴴ is lower triangular, Lᴴ upper with unit
    /// diagonal, and the permutation undoes the pivoting at the end.
    pub fn solve_adjoint_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        // Uᴴ z = b (forward substitution; Uᴴ[i][j] = conj(U[j][i])).
        for i in 0..n {
            let mut acc = y[i];
            for j in 0..i {
                acc -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = acc / self.lu[i * n + i].conj();
        }
        // Lᴴ w = z (back substitution, unit diagonal).
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= self.lu[j * n + i].conj() * y[j];
            }
            y[i] = acc;
        }
        // x = Pᵀ w.
        for (i, &p) in self.piv.iter().enumerate() {
            b[p] = y[i];
        }
    }
}
