//! One-dimensional rules (Gauss-Legendre on [0,1], uniform periodic on
//! [0, 2*pi]), tensor-product integration over the poly-disc coordinates,
//! and seeded Monte Carlo.

use crate::disc::DiscTuple;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("gauss-legendre size {0} outside 1..=512")]
    SizeOutOfRange(usize),
    #[error("rule mismatch: {0}")]
    RuleMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    GaussLegendre,
    UniformPeriodic,
}

/// A one-dimensional quadrature rule with explicit nodes and weights.
#[derive(Debug, Clone)]
pub struct Rule1D {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub domain: (f64, f64),
}

impl Rule1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        kahan_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }
}

/// Gauss-Legendre rule with `k` nodes mapped to [0, 1]; exact for
/// polynomials of degree <= 2k-1. Nodes by Newton iteration on the
/// three-term recurrence.
pub fn gauss_legendre(k: usize) -> Result<Rule1D, QuadError> {
    if k < 1 || k > 512 {
        return Err(QuadError::SizeOutOfRange(k));
    }
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let n = k as f64;
    for i in 0..(k + 1) / 2 {
        // Chebyshev-based initial guess on [-1, 1].
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // Map [-1,1] -> [0,1]; symmetric counterpart fills the other half.
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 0.5 * w;
        nodes[k - 1 - i] = 0.5 * (1.0 + x);
        weights[k - 1 - i] = 0.5 * w;
    }
    nodes.sort_by(f64::total_cmp);
    Ok(Rule1D {
        kind: RuleKind::GaussLegendre,
        nodes,
        weights,
        domain: (0.0, 1.0),
    })
}

fn legendre_and_derivative(k: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=k {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if k == 0 {
        return (1.0, 0.0);
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Uniform rule on [0, 2*pi]: nodes 2*pi*j/N, weights 2*pi/N. Integrates
/// e^{i e theta} exactly for integer |e| < N.
pub fn uniform_angular(n: usize) -> Rule1D {
    assert!(n >= 1);
    let w = TAU / n as f64;
    Rule1D {
        kind: RuleKind::UniformPeriodic,
        nodes: (0..n).map(|j| w * j as f64).collect(),
        weights: vec![w; n],
        domain: (0.0, TAU),
    }
}

fn kahan_sum(iter: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in iter {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

#[derive(Debug, Clone, Copy, Default)]
struct KahanComplex {
    sum: Complex64,
    comp: Complex64,
}

impl KahanComplex {
    fn add(&mut self, x: Complex64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

fn validate_rules(radial: &Rule1D, angular: &Rule1D) -> Result<(), QuadError> {
    if radial.kind != RuleKind::GaussLegendre {
        return Err(QuadError::RuleMismatch(
            "radial rule must be gauss-legendre on [0,1]".into(),
        ));
    }
    if angular.kind != RuleKind::UniformPeriodic {
        return Err(QuadError::RuleMismatch(
            "angular rule must be uniform-periodic on [0,2*pi]".into(),
        ));
    }
    Ok(())
}

/// Tensor-product integral of `f` over [0,1]^{n-1} x [0,2*pi]^{n-1}; the
/// same radial rule is applied to each radius and the same angular rule to
/// each angle. Measure densities belong to `f`. Partial sums are combined
/// in grid order, so the result is bit-stable across thread counts.
pub fn tensor_integrate<F>(
    n: usize,
    radial: &Rule1D,
    angular: &Rule1D,
    f: F,
) -> Result<Complex64, QuadError>
where
    F: Fn(&DiscTuple) -> Complex64 + Sync,
{
    validate_rules(radial, angular)?;
    let d = n - 1;
    let kr = radial.len();
    let ka = angular.len();
    // Grid index = mixed radix over (radius, angle) pairs; parallelize over
    // the first radial index, combine chunk sums in index order.
    let per_outer: usize = kr.pow((d - 1) as u32) * ka.pow(d as u32);
    let partials: Vec<Complex64> = (0..kr)
        .into_par_iter()
        .map(|outer| {
            let mut acc = KahanComplex::default();
            let mut radii = vec![0.0; d];
            let mut angles = vec![0.0; d];
            for rest in 0..per_outer {
                let mut idx = rest;
                radii[0] = radial.nodes[outer];
                let mut weight = radial.weights[outer];
                for s in 1..d {
                    let i = idx % kr;
                    idx /= kr;
                    radii[s] = radial.nodes[i];
                    weight *= radial.weights[i];
                }
                for s in 0..d {
                    let i = idx % ka;
                    idx /= ka;
                    angles[s] = angular.nodes[i];
                    weight *= angular.weights[i];
                }
                let polar: Vec<(f64, f64)> =
                    radii.iter().copied().zip(angles.iter().copied()).collect();
                let t = DiscTuple::new(n, &polar).expect("nodes interior");
                acc.add(f(&t) * weight);
            }
            acc.sum
        })
        .collect();
    let mut total = KahanComplex::default();
    for p in partials {
        total.add(p);
    }
    Ok(total.sum)
}

/// Radial-only tensor integral over [0,1]^{n-1}; `f` sees the radii.
pub fn radial_integrate<F>(n: usize, radial: &Rule1D, f: F) -> Result<f64, QuadError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if radial.kind != RuleKind::GaussLegendre {
        return Err(QuadError::RuleMismatch(
            "radial rule must be gauss-legendre on [0,1]".into(),
        ));
    }
    let d = n - 1;
    let kr = radial.len();
    let per_outer = kr.pow((d - 1) as u32);
    let partials: Vec<f64> = (0..kr)
        .into_par_iter()
        .map(|outer| {
            let mut radii = vec![0.0; d];
            let mut sum = 0.0;
            let mut comp = 0.0;
            for rest in 0..per_outer {
                let mut idx = rest;
                radii[0] = radial.nodes[outer];
                let mut weight = radial.weights[outer];
                for s in 1..d {
                    let i = idx % kr;
                    idx /= kr;
                    radii[s] = radial.nodes[i];
                    weight *= radial.weights[i];
                }
                let x = f(&radii) * weight;
                let y = x - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
            sum
        })
        .collect();
    Ok(kahan_sum(partials.into_iter()))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct MCEstimate {
    pub value: Complex64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Unbiased Monte Carlo estimate of the integral of `f` over
/// [0,1]^{n-1} x [0,2*pi]^{n-1} with the flat Lebesgue density; any measure
/// density belongs to `f`. Deterministic per seed.
pub fn mc_integrate<F>(f: F, n: usize, samples: usize, seed: u64) -> MCEstimate
where
    F: Fn(&DiscTuple) -> Complex64,
{
    assert!(samples >= 100, "need at least 100 samples");
    let d = n - 1;
    let volume = TAU.powi(d as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = Complex64::new(0.0, 0.0);
    let mut m2 = 0.0;
    for i in 0..samples {
        let polar: Vec<(f64, f64)> = (0..d)
            .map(|_| (rng.gen::<f64>(), rng.gen::<f64>() * TAU))
            .collect();
        let t = DiscTuple::new(n, &polar).expect("uniform draw stays in range");
        let x = f(&t);
        // Welford update on complex samples.
        let delta = x - mean;
        mean += delta / (i as f64 + 1.0);
        m2 += (delta.conj() * (x - mean)).re;
    }
    let variance = if samples > 1 {
        m2 / (samples as f64 - 1.0)
    } else {
        0.0
    };
    MCEstimate {
        value: volume * mean,
        stderr: volume * (variance / samples as f64).sqrt(),
        samples,
        seed,
    }
}
