//! Fixed-capacity vectors and matrices for d ≤ 2.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

pub const MAX_DIM: usize = 2;

pub type RawVector = [f64; MAX_DIM];
pub type RawMatrix = [[f64; MAX_DIM]; MAX_DIM];

/// A d-vector (d ∈ {1, 2}). Components beyond `dim` are zero.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vector {
    dim: usize,
    data: RawVector,
}

impl Vector {
    pub fn new(dim: usize, raw: RawVector) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&dim));
        let mut data = [0.0; MAX_DIM];
        data[..dim].copy_from_slice(&raw[..dim]);
        Self { dim, data }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut raw = [0.0; MAX_DIM];
        raw[..values.len()].copy_from_slice(values);
        Self::new(values.len(), raw)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(dim, [0.0; MAX_DIM])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    pub fn raw(&self) -> RawVector {
        self.data
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        for v in out.data.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

/// A d×d matrix (d ∈ {1, 2}). Entries outside the leading block are zero.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: RawMatrix,
}

impl Matrix {
    pub fn new(dim: usize, raw: RawMatrix) -> Self {
        debug_assert!((1..=MAX_DIM).contains(&dim));
        let mut data = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..dim {
            data[i][..dim].copy_from_slice(&raw[i][..dim]);
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(dim, [[0.0; MAX_DIM]; MAX_DIM])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim, "index ({i},{j}) out of range");
        self.data[i][j]
    }

    pub fn raw(&self) -> RawMatrix {
        self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.data[i][..self.dim].to_vec())
            .collect()
    }

    /// κᵀ M κ
    pub fn quadratic_form(&self, kappa: &Vector) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += kappa[i] * self.data[i][j] * kappa[j];
            }
        }
        acc
    }

    /// M Mᵀ
    pub fn gram(&self) -> Matrix {
        let mut out = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i][j] = (0..self.dim).map(|k| self.data[i][k] * self.data[j][k]).sum();
            }
        }
        Matrix::new(self.dim, out)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.data[i][j] - other.data[i][j]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&Matrix::zeros(self.dim))
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| self.data[i][..self.dim].iter().all(|v| v.is_finite()))
    }

    /// Largest |M_ij − M_ji|, scaled by max(1, |M_ij|, |M_ji|).
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let (a, b) = (self.data[i][j], self.data[j][i]);
                worst = worst.max((a - b).abs() / 1f64.max(a.abs()).max(b.abs()));
            }
        }
        worst
    }

    /// Eigen-decomposition of the symmetric part: eigenvalues in descending
    /// order and the matching orthonormal eigenvectors as columns.
    pub fn symmetric_eigen(&self) -> (RawVector, RawMatrix) {
        if self.dim == 1 {
            return ([self.data[0][0], 0.0], [[1.0, 0.0], [0.0, 1.0]]);
        }
        let a = self.data[0][0];
        let c = self.data[1][1];
        let b = 0.5 * (self.data[0][1] + self.data[1][0]);
        let mean = 0.5 * (a + c);
        let radius = (0.5 * (a - c)).hypot(b);
        // One Jacobi rotation diagonalizes a symmetric 2×2 block.
        let theta = 0.5 * (2.0 * b).atan2(a - c);
        let (s, co) = theta.sin_cos();
        ([mean + radius, mean - radius], [[co, -s], [s, co]])
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = self.symmetric_eigen();
        vals[self.dim - 1]
    }

    /// Symmetric square root V·diag(√λ)·Vᵀ. Eigenvalues in [-tol, 0) are
    /// clamped to zero; anything more negative returns `None`.
    pub fn psd_sqrt(&self, tol: f64) -> Option<Matrix> {
        let (vals, vecs) = self.symmetric_eigen();
        let mut out = [[0.0; MAX_DIM]; MAX_DIM];
        for (k, &lam) in vals.iter().enumerate().take(self.dim) {
            if lam < -tol {
                return None;
            }
            let root = lam.max(0.0).sqrt();
            for i in 0..self.dim {
                for j in 0..self.dim {
                    out[i][j] += root * vecs[i][k] * vecs[j][k];
                }
            }
        }
        Some(Matrix::new(self.dim, out))
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_of_diagonal() {
        let a = Matrix::new(2, [[4.0, 0.0], [0.0, 0.0]]);
        let s = a.psd_sqrt(1e-12).unwrap();
        assert!(s.max_abs_diff(&Matrix::new(2, [[2.0, 0.0], [0.0, 0.0]])) < 1e-15);
    }

    #[test]
    fn sqrt_of_zero() {
        let s = Matrix::zeros(2).psd_sqrt(1e-12).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn sqrt_reconstructs_full_matrix() {
        let a = Matrix::new(2, [[2.0, 1.0], [1.0, 2.0]]);
        let s = a.psd_sqrt(1e-12).unwrap();
        assert!(s.gram().max_abs_diff(&a) < 1e-12);
        assert!(s.asymmetry() < 1e-15);
    }

    #[test]
    fn negative_definite_has_no_sqrt() {
        assert!(Matrix::new(1, [[-1.0, 0.0], [0.0, 0.0]]).psd_sqrt(1e-12).is_none());
        assert!(Matrix::new(2, [[1.0, 2.0], [2.0, 1.0]]).psd_sqrt(1e-12).is_none());
    }

    #[test]
    fn eigenvalues_of_rotated_matrix() {
        let a = Matrix::new(2, [[3.0, 1.0], [1.0, 3.0]]);
        let (vals, _) = a.symmetric_eigen();
        assert!((vals[0] - 4.0).abs() < 1e-14 && (vals[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn quadratic_form() {
        let a = Matrix::new(2, [[4.0, 0.0], [0.0, 0.0]]);
        assert_eq!(a.quadratic_form(&Vector::from_slice(&[1.0, 5.0])), 4.0);
    }
}
