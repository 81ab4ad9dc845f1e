//! Dense complex matrices and a numerical hermitian eigensolver.
//!
//! Everything here is deliberately independent of the closed-form
//! constructions in [`crate::zmatrix`]; this module is the oracle side of
//! every closed-form/numerical comparison in the crate.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not hermitian: max |A - A^dagger| = {residual:.3e} exceeds {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },
    #[error("hermitian eigensolver failed to converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Dense complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows of real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mat_mul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `A^m` by repeated multiplication; `A^0 = I`. Oracle for the
    /// closed-form power in [`crate::zmatrix`].
    pub fn power_naive(&self, m: u32) -> Self {
        assert_eq!(self.rows, self.cols, "power of a non-square matrix");
        let mut out = Self::identity(self.rows);
        for _ in 0..m {
            out = out.mat_mul(self).expect("square dimensions");
        }
        out
    }

    pub fn mat_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} * vec of len {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max entrywise modulus of `A - B`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |A - A^dagger|`; zero for exactly hermitian matrices.
    pub fn hermiticity_residual(&self) -> f64 {
        self.max_abs_diff(&self.dagger()).unwrap_or(f64::INFINITY)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.rows == self.cols
            && self.hermiticity_residual() <= tol * f64::max(1.0, self.max_abs())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e *= s;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = self.clone();
        for (e, o) in out.entries.iter_mut().zip(&other.entries) {
            *e -= o;
        }
        Ok(out)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.cols + j]
    }
}

/// Numerically computed hermitian eigensystem; eigenvalues ascending,
/// eigenvectors in the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub vectors: ComplexMatrix,
}

const EIG_MAX_ITER: usize = 10_000;

/// Diagonalizes a hermitian matrix. `tol` bounds the accepted hermiticity
/// defect relative to `max(1, max|A|)`.
pub fn hermitian_eig(a: &ComplexMatrix, tol: f64) -> Result<HermitianEig, LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} is not square",
            a.rows(),
            a.cols()
        )));
    }
    let residual = a.hermiticity_residual();
    let scale = f64::max(1.0, a.max_abs());
    if residual > tol * scale {
        return Err(LinalgError::NotHermitian {
            residual,
            tol: tol * scale,
        });
    }
    let n = a.rows();
    // Hermitize exactly before handing off; the defect is within tol.
    let mut na = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            na[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)].conj());
        }
    }
    let eig = na
        .try_symmetric_eigen(1e-14, EIG_MAX_ITER)
        .ok_or(LinalgError::NoConvergence {
            iterations: EIG_MAX_ITER,
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig {
        eigenvalues,
        vectors,
    })
}

impl HermitianEig {
    /// `max |U^dagger U - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let u = &self.vectors;
        let prod = u.dagger().mat_mul(u).expect("square");
        prod.max_abs_diff(&ComplexMatrix::identity(u.rows()))
            .expect("same dims")
    }

    /// `max |A - U L U^dagger|`.
    pub fn reconstruction_residual(&self, a: &ComplexMatrix) -> f64 {
        let n = a.rows();
        let u = &self.vectors;
        let mut ul = u.clone();
        for j in 0..n {
            for i in 0..n {
                ul[(i, j)] *= Complex64::new(self.eigenvalues[j], 0.0);
            }
        }
        let rec = ul.mat_mul(&u.dagger()).expect("square");
        a.max_abs_diff(&rec).expect("same dims")
    }
}
