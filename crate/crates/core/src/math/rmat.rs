//! Small row-major real matrix used for the element-local operators.
//!
//! All hot-path matrices (reference mass, face mass, interpolation) are
//! real even though the fields are complex; keeping them real halves the
//! memory traffic of the inner products and matrix-vector products.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct RealMat {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl RealMat {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.data[i * m.ncols() + j] = m[(i, j)];
            }
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    /// y += alpha * M x.
    pub fn matvec_acc(&self, x: &[Complex64], alpha: f64, y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &xj) in row.iter().zip(x) {
                acc += m * xj;
            }
            y[i] += alpha * acc;
        }
    }

    /// y += alpha * Mᵀ x.
    pub fn matvec_t_acc(&self, x: &[Complex64], alpha: f64, y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.nrows);
        debug_assert_eq!(y.len(), self.ncols);
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            let xi = alpha * x[i];
            for (m, yj) in row.iter().zip(y.iter_mut()) {
                *yj += m * xi;
            }
        }
    }

    /// Weighted sesquilinear form yᴴ M x (M real).
    pub fn sesquilinear(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..self.nrows {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &xj) in row.iter().zip(x) {
                acc += m * xj;
            }
            total += acc * y[i].conj();
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose_agree_with_dense_reference() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, -1.0, 0.5, -2.0, 4.0]);
        let rm = RealMat::from_dmatrix(&m);
        let x = [
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, -2.0),
            Complex64::new(3.0, 0.5),
        ];
        let mut y = [Complex64::new(0.0, 0.0); 2];
        rm.matvec_acc(&x, 2.0, &mut y);
        assert!((y[0] - Complex64::new(2.0 * (1.0 - 3.0), 2.0 * (1.0 - 4.0 - 0.5))).norm() < 1e-14);

        let z = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        let mut w = [Complex64::new(0.0, 0.0); 3];
        rm.matvec_t_acc(&z, 1.0, &mut w);
        assert!((w[0] - Complex64::new(1.0, 0.5)).norm() < 1e-14);
        assert!((w[1] - Complex64::new(2.0, -2.0)).norm() < 1e-14);
        assert!((w[2] - Complex64::new(-1.0, 4.0)).norm() < 1e-14);
    }
}
