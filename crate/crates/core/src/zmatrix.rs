//! Closed-form construction of the bordered hermitian matrix, its
//! eigensystem, the even/odd scalars E_m and O_m, and the entrywise
//! closed-form power.

use crate::disc::DiscTuple;
use crate::linalg::{hermitian_eig, ComplexMatrix};
use num_complex::Complex64;

/// Default degeneracy threshold for routing to the numerical fallback.
pub const DEFAULT_FALLBACK_TOL: f64 = 1e-8;

/// The even/odd binomial pair generating all entries of the matrix power:
/// E_m = ((1+a)^m + (1-a)^m)/2, O_m = ((1+a)^m - (1-a)^m)/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EOPair {
    pub m: u32,
    pub a: f64,
    pub e: f64,
    pub o: f64,
}

pub fn eo(m: u32, a: f64) -> EOPair {
    debug_assert!(a >= 0.0);
    let p = (1.0 + a).powi(m as i32);
    let q = (1.0 - a).powi(m as i32);
    EOPair {
        m,
        a,
        e: 0.5 * (p + q),
        o: 0.5 * (p - q),
    }
}

/// Builds the n x n hermitian matrix: identity plus the border whose first
/// row is (0, z_1, ..., z_{n-1}) and first column the conjugates.
pub fn build_z(t: &DiscTuple) -> ComplexMatrix {
    let n = t.n();
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else if i == 0 {
            t.z(j)
        } else if j == 0 {
            t.z(i).conj()
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    ClosedForm,
    NumericalFallback,
}

/// Orthonormal eigenvector matrix with the eigenvalue of each column,
/// assigned by Rayleigh quotient rather than by labeling.
#[derive(Debug, Clone)]
pub struct ClosedEigensystem {
    pub p: ComplexMatrix,
    pub eigenvalues: Vec<f64>,
    pub construction: Construction,
}

/// Closed-form eigenvectors of the bordered matrix. Tuples with any
/// r_j, a, or partial sum b_j below `fallback_tol` (b below tol^2) route to
/// the numerical eigensolver, which absorbs the degenerate divisions.
pub fn closed_eigvecs(t: &DiscTuple, fallback_tol: f64) -> ClosedEigensystem {
    let n = t.n();
    let a = t.a();
    let b = t.b_seq_extended();
    let degenerate = a < fallback_tol
        || t.radii().iter().any(|&r| r < fallback_tol)
        || b.iter().any(|&bj| bj < fallback_tol * fallback_tol);
    if degenerate {
        return numerical_fallback(t);
    }

    let z = build_z(t);
    let mut p = ComplexMatrix::zeros(n, n);
    let mut eigenvalues = vec![0.0; n];

    // Columns 0..n-3: the eigenvalue-1 family. Row pattern for column j
    // (1-based j = 1..n-2):
    //   j = 1: (0, -z_2, z_1, 0, ...)/sqrt(b_1)
    //   j >= 2: pref * (0, -r_1^2 z_{j+1}/b_{j-1},
    //                   -z_1 conj(z_k) z_{j+1}/b_{j-1} for k = 2..j,
    //                   z_1 at position j+2, 0, ...),
    //           pref = sqrt(b_{j-1})/(r_1 sqrt(b_j)).
    for col in 0..n.saturating_sub(2) {
        let j = col + 1;
        if j == 1 {
            let b1 = b[0];
            let s = 1.0 / b1.sqrt();
            p[(1, col)] = -t.z(2) * s;
            p[(2, col)] = t.z(1) * s;
        } else {
            let bjm1 = b[j - 2];
            let bj = b[j - 1];
            let pref = bjm1.sqrt() / (t.radii()[0] * bj.sqrt());
            let zj1 = t.z(j + 1);
            p[(1, col)] = Complex64::new(-t.radii()[0] * t.radii()[0] / bjm1, 0.0) * zj1 * pref;
            for k in 2..=j {
                p[(k, col)] = -t.z(1) * t.z(k).conj() * zj1 / bjm1 * pref;
            }
            p[(j + 1, col)] = t.z(1) * pref;
        }
        eigenvalues[col] = 1.0;
    }

    // The two border vectors (-a, conj(z_1), ...)/(sqrt(2) a) and
    // (a, conj(z_1), ...)/(sqrt(2) a); eigenvalues via Rayleigh quotient.
    let s = 1.0 / (std::f64::consts::SQRT_2 * a);
    for (col, sign) in [(n - 2, -1.0), (n - 1, 1.0)] {
        p[(0, col)] = Complex64::new(sign * a * s, 0.0);
        for k in 1..n {
            p[(k, col)] = t.z(k).conj() * s;
        }
        let v = p.column(col);
        let zv = z.mat_vec(&v).expect("dims");
        let rayleigh: Complex64 = v.iter().zip(&zv).map(|(vi, zi)| vi.conj() * zi).sum();
        eigenvalues[col] = rayleigh.re;
    }

    ClosedEigensystem {
        p,
        eigenvalues,
        construction: Construction::ClosedForm,
    }
}

fn numerical_fallback(t: &DiscTuple) -> ClosedEigensystem {
    let z = build_z(t);
    let eig = hermitian_eig(&z, 1e-12).expect("bordered matrix is hermitian by construction");
    let n = t.n();
    let mut p = eig.vectors;
    let eigenvalues = eig.eigenvalues;

    // Re-orthonormalize within the eigenvalue-1 cluster (modified
    // Gram-Schmidt); the solver already returns orthonormal columns, this
    // tightens the cluster when eigenvalues nearly coincide.
    let cluster: Vec<usize> = (0..n)
        .filter(|&j| (eigenvalues[j] - 1.0).abs() <= 1e-10)
        .collect();
    for (idx, &j) in cluster.iter().enumerate() {
        let mut v = p.column(j);
        for &k in &cluster[..idx] {
            let w = p.column(k);
            let proj: Complex64 = w.iter().zip(&v).map(|(wi, vi)| wi.conj() * vi).sum();
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi -= proj * wi;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for (row, vi) in v.iter().enumerate() {
            p[(row, j)] = vi / norm;
        }
    }

    ClosedEigensystem {
        p,
        eigenvalues,
        construction: Construction::NumericalFallback,
    }
}

impl ClosedEigensystem {
    pub fn orthonormality_residual(&self) -> f64 {
        let prod = self.p.dagger().mat_mul(&self.p).expect("square");
        prod.max_abs_diff(&ComplexMatrix::identity(self.p.rows()))
            .expect("same dims")
    }

    /// `max |Z P - P diag(eigenvalues)|`.
    pub fn eigen_residual(&self, z: &ComplexMatrix) -> f64 {
        let n = self.p.rows();
        let zp = z.mat_mul(&self.p).expect("square");
        let mut pl = self.p.clone();
        for j in 0..n {
            for i in 0..n {
                pl[(i, j)] *= Complex64::new(self.eigenvalues[j], 0.0);
            }
        }
        zp.max_abs_diff(&pl).expect("same dims")
    }
}

/// Entrywise closed-form power. Valid for every tuple except a = 0, which
/// returns the identity (the continuity limit); the formulas never divide
/// by individual radii.
pub fn closed_power(t: &DiscTuple, m: u32) -> ComplexMatrix {
    let n = t.n();
    let a = t.a();
    if a == 0.0 || m == 0 {
        return ComplexMatrix::identity(n);
    }
    let EOPair { e, o, .. } = eo(m, a);
    let a2 = a * a;
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == 0 && j == 0 {
            Complex64::new(e, 0.0)
        } else if i == 0 {
            t.z(j) * (o / a)
        } else if j == 0 {
            t.z(i).conj() * (o / a)
        } else if i == j {
            let r2 = t.radii()[i - 1] * t.radii()[i - 1];
            Complex64::new((r2 * e + a2 - r2) / a2, 0.0)
        } else {
            t.z(j) * t.z(i).conj() * ((e - 1.0) / a2)
        }
    })
}
