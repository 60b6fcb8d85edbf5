//! Minimal dense linear algebra for registers of at most six qubits.
//!
//! Matrices are at most 64 x 64 here, so a cyclic Jacobi eigensolver is
//! exact to machine precision and there is no need for a general-purpose
//! linear algebra dependency in the `no_std` core.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![Complex64::ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_rows(dim: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), dim * dim);
        CMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    /// Largest element-wise absolute difference between `self` and `other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest |M - M†| element; zero for exactly Hermitian matrices.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                let d = (self[(r, c)] - self[(c, r)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Smallest eigenvalue of a Hermitian matrix.
    ///
    /// Embeds `A + iB` into the real symmetric matrix `[[A, -B], [B, A]]`,
    /// whose spectrum is that of the Hermitian matrix with doubled
    /// multiplicity.
    pub fn min_eigenvalue_hermitian(&self) -> f64 {
        let n = self.dim;
        let mut real = vec![0.0f64; (2 * n) * (2 * n)];
        for r in 0..n {
            for c in 0..n {
                let z = self[(r, c)];
                real[r * 2 * n + c] = z.re;
                real[r * 2 * n + (c + n)] = -z.im;
                real[(r + n) * 2 * n + c] = z.im;
                real[(r + n) * 2 * n + (c + n)] = z.re;
            }
        }
        let (vals, _) = eigh_symmetric(&real, 2 * n);
        vals.into_iter().fold(f64::INFINITY, f64::min)
    }
}

impl core::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl core::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvectors stored row-major;
/// column `k` of the returned matrix is the eigenvector for eigenvalue `k`.
/// Eigenvalues are sorted ascending.
pub fn eigh_symmetric(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += a[r * n + c] * a[r * n + c];
                }
            }
        }
        s
    };

    for _sweep in 0..100 {
        if off_norm(&a) < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // stable tangent of the rotation angle
                let t = if theta >= 0.0 {
                    1.0 / (theta + libm::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + libm::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut vals: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    // sort eigenpairs ascending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = vec![0.0f64; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            sorted_vecs[r * n + new_col] = v[r * n + old_col];
        }
    }
    vals = sorted_vals;
    (vals, sorted_vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jacobi_diagonalizes_small_symmetric_matrix() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a = [2.0, 1.0, 1.0, 2.0];
        let (vals, vecs) = eigh_symmetric(&a, 2);
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        // residual || A v - lambda v ||
        for k in 0..2 {
            for r in 0..2 {
                let av: f64 = (0..2).map(|c| a[r * 2 + c] * vecs[c * 2 + k]).sum();
                assert_abs_diff_eq!(av, vals[k] * vecs[r * 2 + k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric_matrix() {
        use crate::rng::{stream, uniform_f64};
        let n = 16;
        let mut rng = stream(9);
        let mut a = vec![0.0f64; n * n];
        for r in 0..n {
            for c in r..n {
                let x = uniform_f64(&mut rng) - 0.5;
                a[r * n + c] = x;
                a[c * n + r] = x;
            }
        }
        let (vals, vecs) = eigh_symmetric(&a, n);
        // A = V diag(vals) V^T
        for r in 0..n {
            for c in 0..n {
                let recon: f64 = (0..n)
                    .map(|k| vecs[r * n + k] * vals[k] * vecs[c * n + k])
                    .sum();
                assert_abs_diff_eq!(recon, a[r * n + c], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn hermitian_min_eigenvalue_matches_real_case() {
        let mut m = CMatrix::zeros(2);
        m[(0, 0)] = Complex64::new(2.0, 0.0);
        m[(0, 1)] = Complex64::new(0.0, -1.0);
        m[(1, 0)] = Complex64::new(0.0, 1.0);
        m[(1, 1)] = Complex64::new(2.0, 0.0);
        // eigenvalues of [[2, -i],[i, 2]] are 1 and 3
        assert_abs_diff_eq!(m.min_eigenvalue_hermitian(), 1.0, epsilon = 1e-10);
    }
}
