//! Points of the poly-disc in polar form and the associated measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiscError {
    #[error("radius {0} outside [0, 1)")]
    RadiusOutOfRange(f64),
    #[error("expected {expected} polar pairs for n = {n}, got {got}")]
    WrongArity { n: usize, expected: usize, got: usize },
    #[error("matrix dimension n must be >= 2, got {0}")]
    DimensionTooSmall(usize),
}

/// A point (z_1, ..., z_{n-1}) of the poly-disc in polar form, attached to
/// the matrix dimension n. Angles are normalized into [0, 2*pi).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscTuple {
    n: usize,
    radii: Vec<f64>,
    angles: Vec<f64>,
}

impl DiscTuple {
    pub fn new(n: usize, polar: &[(f64, f64)]) -> Result<Self, DiscError> {
        if n < 2 {
            return Err(DiscError::DimensionTooSmall(n));
        }
        if polar.len() != n - 1 {
            return Err(DiscError::WrongArity {
                n,
                expected: n - 1,
                got: polar.len(),
            });
        }
        let mut radii = Vec::with_capacity(n - 1);
        let mut angles = Vec::with_capacity(n - 1);
        for &(r, theta) in polar {
            if !(0.0..1.0).contains(&r) {
                return Err(DiscError::RadiusOutOfRange(r));
            }
            radii.push(r);
            angles.push(theta.rem_euclid(TAU));
        }
        Ok(Self { n, radii, angles })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// z_j = r_j e^{i theta_j}, 1-based j.
    pub fn z(&self, j: usize) -> num_complex::Complex64 {
        let r = self.radii[j - 1];
        let t = self.angles[j - 1];
        num_complex::Complex64::from_polar(r, t)
    }

    /// a = sqrt(sum r_j^2), the norm of the border row.
    pub fn a(&self) -> f64 {
        self.radii.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    /// theta = theta_1 + ... + theta_{n-1}.
    pub fn theta_sum(&self) -> f64 {
        self.angles.iter().sum()
    }

    /// b_j = r_1^2 + ... + r_{j+1}^2 for j = 1..n-3; empty for n <= 3.
    pub fn b_seq(&self) -> Vec<f64> {
        if self.n <= 3 {
            return Vec::new();
        }
        self.partial_radius_sq(self.n - 3)
    }

    /// Same prefix sums extended through j = n-2 (so the last value is a^2);
    /// used by the closed-form eigenvector rows.
    pub(crate) fn b_seq_extended(&self) -> Vec<f64> {
        if self.n == 2 {
            return Vec::new();
        }
        self.partial_radius_sq(self.n - 2)
    }

    fn partial_radius_sq(&self, upto: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(upto);
        let mut acc = self.radii[0] * self.radii[0];
        for j in 1..=upto {
            acc += self.radii[j] * self.radii[j];
            out.push(acc);
        }
        out
    }
}

/// Radial Jacobian of the flat poly-disc measure: prod r_j.
pub fn measure_density_general(t: &DiscTuple) -> f64 {
    t.radii().iter().product()
}

/// Radial density of the SU(1,1) computation measure: r / (pi (1+r^2)^2).
pub fn measure_density_su11(r: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&r));
    r / (PI * (1.0 + r * r) * (1.0 + r * r))
}

/// Radial density of the SU(1,1)-invariant measure as displayed in the
/// group preliminaries: r / (pi (1-r^2)^2). The frame computations use
/// [`measure_density_su11`]; this one is exposed for side-by-side reports.
pub fn measure_density_su11_invariant(r: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&r));
    r / (PI * (1.0 - r * r) * (1.0 - r * r))
}

/// Radii and angles i.i.d. uniform on [0,1) x [0, 2*pi); deterministic per seed.
pub fn sample_uniform(n: usize, count: usize, seed: u64) -> Vec<DiscTuple> {
    assert!(count >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let polar: Vec<(f64, f64)> = (0..n - 1)
                .map(|_| (rng.gen::<f64>(), rng.gen::<f64>() * TAU))
                .collect();
            DiscTuple::new(n, &polar).expect("sampled radii lie in [0,1)")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn basic_tuple() {
        let t = DiscTuple::new(2, &[(0.5, 0.0)]).unwrap();
        assert_abs_diff_eq!(t.a(), 0.5);
    }

    #[test]
    fn a_and_theta_for_n3() {
        let t = DiscTuple::new(3, &[(0.3, 0.0), (0.4, PI / 2.0)]).unwrap();
        assert_abs_diff_eq!(t.a(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t.theta_sum(), PI / 2.0);
    }

    #[test]
    fn boundary_radius_rejected() {
        assert!(matches!(
            DiscTuple::new(2, &[(1.0, 0.0)]),
            Err(DiscError::RadiusOutOfRange(_))
        ));
        assert!(matches!(
            DiscTuple::new(2, &[(-0.1, 0.0)]),
            Err(DiscError::RadiusOutOfRange(_))
        ));
    }

    #[test]
    fn wrong_arity_rejected() {
        assert!(matches!(
            DiscTuple::new(3, &[(0.5, 0.0)]),
            Err(DiscError::WrongArity { .. })
        ));
    }

    #[test]
    fn b_seq_values() {
        let t = DiscTuple::new(4, &[(0.3, 0.0), (0.4, 0.0), (0.5, 0.0)]).unwrap();
        let b = t.b_seq();
        assert_eq!(b.len(), 1);
        assert_abs_diff_eq!(b[0], 0.25, epsilon = 1e-15);

        let t = DiscTuple::new(3, &[(0.3, 0.0), (0.4, 0.0)]).unwrap();
        assert!(t.b_seq().is_empty());

        let t = DiscTuple::new(5, &[(0.1, 0.0), (0.2, 0.0), (0.2, 0.0), (0.4, 0.0)]).unwrap();
        let b = t.b_seq();
        assert_abs_diff_eq!(b[0], 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(b[1], 0.09, epsilon = 1e-15);
    }

    #[test]
    fn measure_density_values() {
        let t = DiscTuple::new(3, &[(0.3, 0.0), (0.4, 0.0)]).unwrap();
        assert_abs_diff_eq!(measure_density_general(&t), 0.12, epsilon = 1e-15);
        let t0 = DiscTuple::new(3, &[(0.0, 0.0), (0.4, 0.0)]).unwrap();
        assert_eq!(measure_density_general(&t0), 0.0);
        let t2 = DiscTuple::new(2, &[(0.5, 0.0)]).unwrap();
        assert_abs_diff_eq!(measure_density_general(&t2), 0.5);
    }

    #[test]
    fn su11_density_values() {
        assert_eq!(measure_density_su11(0.0), 0.0);
        assert_abs_diff_eq!(
            measure_density_su11(0.5),
            0.5 / (PI * 1.5625),
            epsilon = 1e-15
        );
        // r -> 1 limit is 1/(4 pi)
        assert_abs_diff_eq!(
            measure_density_su11(1.0 - 1e-12),
            1.0 / (4.0 * PI),
            epsilon = 1e-10
        );
    }

    #[test]
    fn sampler_is_deterministic() {
        let a = sample_uniform(3, 5, 42);
        let b = sample_uniform(3, 5, 42);
        assert_eq!(a, b);
        assert_eq!(sample_uniform(4, 1, 7).len(), 1);
    }

    #[test]
    fn sampler_mean_radius() {
        let count = 100_000;
        let tuples = sample_uniform(2, count, 123);
        let mean: f64 = tuples.iter().map(|t| t.radii()[0]).sum::<f64>() / count as f64;
        let sigma = (1.0 / 12.0f64).sqrt() / (count as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * sigma, "mean {mean} too far from 0.5");
    }

    proptest! {
        #[test]
        fn b_plus_remainder_is_a_squared(
            radii in proptest::collection::vec(0.0f64..0.999, 3..6)
        ) {
            let n = radii.len() + 1;
            let polar: Vec<(f64, f64)> = radii.iter().map(|&r| (r, 0.0)).collect();
            let t = DiscTuple::new(n, &polar).unwrap();
            let a2: f64 = radii.iter().map(|r| r * r).sum();
            for (j, b) in t.b_seq().iter().enumerate() {
                let rest: f64 = radii[j + 2..].iter().map(|r| r * r).sum();
                prop_assert!((b + rest - a2).abs() <= 1e-15 * f64::max(1.0, a2));
            }
        }

        #[test]
        fn density_is_permutation_symmetric(
            radii in proptest::collection::vec(0.0f64..0.999, 2..5)
        ) {
            let n = radii.len() + 1;
            let polar: Vec<(f64, f64)> = radii.iter().map(|&r| (r, 0.0)).collect();
            let t = DiscTuple::new(n, &polar).unwrap();
            let mut rev = radii.clone();
            rev.reverse();
            let polar_rev: Vec<(f64, f64)> = rev.iter().map(|&r| (r, 0.0)).collect();
            let t_rev = DiscTuple::new(n, &polar_rev).unwrap();
            let d1 = measure_density_general(&t);
            let d2 = measure_density_general(&t_rev);
            prop_assert!((d1 - d2).abs() <= 1e-15 * f64::max(1.0, d1.abs()));
        }
    }
}
