//! Dense square complex matrices for small Hilbert-space dimensions.
//!
//! Everything here targets dims up to ~16; operations are straightforward
//! O(n^3) loops with no attempt at blocking or sparsity.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        ComplexMatrix {
            dim,
            data: vec![Complex64::ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    /// Build from a row-major list of entries; length must be dim^2 and all
    /// entries finite.
    pub fn from_rows(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::invalid(format!(
                "matrix data length {} does not match dim {}",
                data.len(),
                dim
            )));
        }
        let m = ComplexMatrix { dim, data };
        if !m.is_finite() {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dim mismatch in add");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix { dim: self.dim, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dim mismatch in sub");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix { dim: self.dim, data }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dim mismatch in matmul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + aik * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Kronecker product; result dim is the product of the input dims.
    pub fn kron(&self, other: &Self) -> Self {
        let n = self.dim;
        let m = other.dim;
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self.get(i, j);
                if a == Complex64::ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out.set(i * m + k, j * m + l, a * other.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest entrywise absolute deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dim mismatch in max_abs_diff");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in i..n {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Checks P^2 = P entrywise within `tol`.
    pub fn is_idempotent(&self, tol: f64) -> bool {
        self.matmul(self).max_abs_diff(self) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert_eq!(a.kron(&b), ComplexMatrix::identity(6));
    }

    #[test]
    fn trace_and_adjoint() {
        let m = ComplexMatrix::from_rows(2, vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, -1.0), c(3.0, 0.0)])
            .unwrap();
        assert_eq!(m.trace(), c(4.0, 0.0));
        let mh = m.adjoint();
        assert_eq!(mh.get(0, 1), c(2.0, 1.0));
        assert_eq!(mh.get(1, 0), c(0.0, -1.0));
    }

    #[test]
    fn hermitian_check() {
        let h = ComplexMatrix::from_rows(2, vec![c(1.0, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(2.0, 0.0)])
            .unwrap();
        assert!(h.is_hermitian(1e-12));
        let nh = ComplexMatrix::from_rows(2, vec![c(1.0, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(2.0, 0.0)])
            .unwrap();
        assert!(!nh.is_hermitian(1e-12));
    }

    #[test]
    fn from_rows_rejects_bad_lengths_and_nan() {
        assert!(ComplexMatrix::from_rows(2, vec![c(1.0, 0.0)]).is_err());
        assert!(ComplexMatrix::from_rows(1, vec![c(f64::NAN, 0.0)]).is_err());
    }
}
