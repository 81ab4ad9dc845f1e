//! Frame-operator assembly at finite truncation, its audit against the
//! target diagonal operator, truncated-inverse growth, reconstruction, and
//! the divergence demonstration.

use crate::disc::{measure_density_general, measure_density_su11, DiscTuple};
use crate::linalg::{hermitian_eig, ComplexMatrix, LinalgError};
use crate::quadrature::{radial_integrate, QuadError, Rule1D, RuleKind};
use crate::states::{CoeffSource, StateError};
use crate::zmatrix::{closed_power, eo};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("angular rule with {got} nodes too coarse: frame assembly at M = {m} needs at least {needed} (2M+2)")]
    AngularTooCoarse { m: u32, needed: usize, got: usize },
    #[error("operator is singular at the pseudo-inverse cutoff {cutoff:.3e}")]
    Singular { cutoff: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// The target operator at truncation: diagonal with entry 1/(m+1)^2 at
/// every (l, m); norm 1, trivial kernel.
pub fn target_t(n: usize, m_cutoff: u32) -> ComplexMatrix {
    let dim = n * (m_cutoff as usize + 1);
    let mut t = ComplexMatrix::zeros(dim, dim);
    for m in 0..=m_cutoff as usize {
        let v = 1.0 / ((m as f64 + 1.0) * (m as f64 + 1.0));
        for l in 0..n {
            t[(m * n + l, m * n + l)] = Complex64::new(v, 0.0);
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameMode {
    Numeric,
    SemiAnalytic,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadMeta {
    pub radial: usize,
    pub angular: Option<usize>,
}

/// Assembled frame operator at truncation, basis index (l, m) -> m*n + l-1.
#[derive(Debug, Clone)]
pub struct FrameOperator {
    pub n: usize,
    pub m_cutoff: u32,
    pub matrix: ComplexMatrix,
    pub mode: FrameMode,
    pub weight: f64,
    pub quad: QuadMeta,
}

fn measure_density(source: &CoeffSource<'_>, t: &DiscTuple) -> f64 {
    match source {
        CoeffSource::General(_) => measure_density_general(t),
        CoeffSource::Su11 => measure_density_su11(t.radii()[0]),
    }
}

/// Brute-force assembly: Sum_q int W |Z,q><Z,q| dmu over the tensor grid.
/// The angular rule must resolve every surviving monomial, which requires
/// at least 2M+2 nodes.
pub fn frame_numeric(
    n: usize,
    m_cutoff: u32,
    source: CoeffSource<'_>,
    weight: f64,
    radial: &Rule1D,
    angular: &Rule1D,
) -> Result<FrameOperator, FrameError> {
    let needed = 2 * m_cutoff as usize + 2;
    if angular.len() < needed {
        return Err(FrameError::AngularTooCoarse {
            m: m_cutoff,
            needed,
            got: angular.len(),
        });
    }
    if radial.kind != RuleKind::GaussLegendre || angular.kind != RuleKind::UniformPeriodic {
        return Err(FrameError::Quadrature(QuadError::RuleMismatch(
            "frame assembly needs gauss-legendre radial and uniform angular rules".into(),
        )));
    }
    let d = n - 1;
    let dim = n * (m_cutoff as usize + 1);
    let kr = radial.len();
    let ka = angular.len();
    let per_outer: usize = kr.pow((d - 1) as u32) * ka.pow(d as u32);

    // Partial matrices per outer radial node, combined in index order.
    let partials: Vec<Vec<Complex64>> = (0..kr)
        .into_par_iter()
        .map(|outer| {
            let mut acc = vec![Complex64::new(0.0, 0.0); dim * dim];
            let mut comp = vec![Complex64::new(0.0, 0.0); dim * dim];
            let mut radii = vec![0.0; d];
            let mut angles = vec![0.0; d];
            // Stacked coefficient columns: c[row][q], row = m*n + l-1.
            let mut stack = vec![Complex64::new(0.0, 0.0); dim * n];
            for rest in 0..per_outer {
                let mut idx = rest;
                radii[0] = radial.nodes[outer];
                let mut w = radial.weights[outer];
                for s in 1..d {
                    let i = idx % kr;
                    idx /= kr;
                    radii[s] = radial.nodes[i];
                    w *= radial.weights[i];
                }
                for s in 0..d {
                    let i = idx % ka;
                    idx /= ka;
                    angles[s] = angular.nodes[i];
                    w *= angular.weights[i];
                }
                let polar: Vec<(f64, f64)> =
                    radii.iter().copied().zip(angles.iter().copied()).collect();
                let t = DiscTuple::new(n, &polar).expect("interior nodes");
                let scale = w * weight * measure_density(&source, &t);

                let norm_factor = source.normalization(&t);
                let theta = t.theta_sum();
                for m in 0..=m_cutoff {
                    let zm = closed_power(&t, m);
                    let modulator = source.modulator(m, theta);
                    let s = norm_factor / (m as f64 + 1.0);
                    for l in 0..n {
                        let f = modulator.factor(l + 1) * s;
                        for q in 0..n {
                            stack[(m as usize * n + l) * n + q] = f * zm[(l, q)];
                        }
                    }
                }
                // F += scale * stack stack^dagger (rank-n update).
                for row in 0..dim {
                    for col in 0..dim {
                        let mut v = Complex64::new(0.0, 0.0);
                        for q in 0..n {
                            v += stack[row * n + q] * stack[col * n + q].conj();
                        }
                        let x = v * scale;
                        let k = row * dim + col;
                        let y = x - comp[k];
                        let t2 = acc[k] + y;
                        comp[k] = (t2 - acc[k]) - y;
                        acc[k] = t2;
                    }
                }
            }
            acc
        })
        .collect();

    let mut matrix = ComplexMatrix::zeros(dim, dim);
    let mut comp = vec![Complex64::new(0.0, 0.0); dim * dim];
    for part in partials {
        for row in 0..dim {
            for col in 0..dim {
                let k = row * dim + col;
                let y = part[k] - comp[k];
                let t2 = matrix[(row, col)] + y;
                comp[k] = (t2 - matrix[(row, col)]) - y;
                matrix[(row, col)] = t2;
            }
        }
    }

    Ok(FrameOperator {
        n,
        m_cutoff,
        matrix,
        mode: FrameMode::Numeric,
        weight,
        quad: QuadMeta {
            radial: radial.len(),
            angular: Some(angular.len()),
        },
    })
}

/// An angular phase monomial e^{i sum e_s theta_s} with a radial
/// coefficient; its torus integral is (2*pi)^{n-1} times the radial part
/// when every exponent vanishes, and exactly zero otherwise.
pub struct AngularMonomial<'a> {
    pub exponents: Vec<i64>,
    pub radial_coeff: Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>,
}

impl AngularMonomial<'_> {
    pub fn survives(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }
}

/// Exponent vector of the ((l,m),(j,k)) entry of
/// Sum_q R(m) Z^{m+k} R(k)^dagger; l, j are 1-based components.
fn exponent_vector(n: usize, m: u32, k: u32, l: usize, j: usize) -> Vec<i64> {
    let base = m as i64 - k as i64;
    let mut e = vec![base; n - 1];
    if j >= 2 {
        e[j - 2] += 1;
    }
    if l >= 2 {
        e[l - 2] -= 1;
    }
    e
}

/// Survival-rule assembly: every entry of the double Fock sum is expanded
/// into angular monomials via Sum_q Omega_q = I, the zero-exponent ones are
/// kept with no diagonality assumption, and their radial coefficients are
/// integrated by quadrature.
pub fn frame_semianalytic(
    n: usize,
    m_cutoff: u32,
    source: CoeffSource<'_>,
    weight: f64,
    radial: &Rule1D,
) -> Result<FrameOperator, FrameError> {
    let dim = n * (m_cutoff as usize + 1);
    let mut matrix = ComplexMatrix::zeros(dim, dim);
    let angular_volume = TAU.powi((n - 1) as i32);

    let mut cells: Vec<(usize, usize, u32, u32, usize, usize)> = Vec::new();
    for m in 0..=m_cutoff {
        for k in 0..=m_cutoff {
            for l in 1..=n {
                for j in 1..=n {
                    let mono = AngularMonomial {
                        exponents: exponent_vector(n, m, k, l, j),
                        radial_coeff: Box::new(|_| 0.0),
                    };
                    if mono.survives() {
                        let row = m as usize * n + (l - 1);
                        let col = k as usize * n + (j - 1);
                        cells.push((row, col, m, k, l, j));
                    }
                }
            }
        }
    }

    let values: Result<Vec<f64>, FrameError> = cells
        .par_iter()
        .map(|&(_, _, m, k, l, j)| {
            let rm = source.modulator(m, 0.0);
            let rk = source.modulator(k, 0.0);
            let integral = radial_integrate(n, radial, |radii| {
                let a2: f64 = radii.iter().map(|r| r * r).sum();
                let a = a2.sqrt();
                let p = eo(m + k, a);
                let coeff = match (l, j) {
                    (1, 1) => rm.r_m * rk.r_m * p.e,
                    (1, _) => rm.r_m * rk.s_m * p.o * radii[j - 2] / a,
                    (_, 1) => rm.s_m * rk.r_m * p.o * radii[l - 2] / a,
                    (x, y) if x == y => {
                        let r2 = radii[l - 2] * radii[l - 2];
                        rm.s_m * rk.s_m * (r2 * p.e + a2 - r2) / a2
                    }
                    _ => rm.s_m * rk.s_m * radii[j - 2] * radii[l - 2] * (p.e - 1.0) / a2,
                };
                let norm_sq = match source {
                    CoeffSource::General(_) => a2 / angular_volume,
                    CoeffSource::Su11 => crate::states::su11_normalization(a).powi(2),
                };
                let density = match source {
                    CoeffSource::General(_) => radii.iter().product::<f64>(),
                    CoeffSource::Su11 => measure_density_su11(radii[0]),
                };
                coeff * norm_sq * density
            })?;
            Ok(weight * angular_volume * integral / ((m as f64 + 1.0) * (k as f64 + 1.0)))
        })
        .collect();

    for (&(row, col, ..), v) in cells.iter().zip(values?) {
        matrix[(row, col)] = Complex64::new(v, 0.0);
    }

    Ok(FrameOperator {
        n,
        m_cutoff,
        matrix,
        mode: FrameMode::SemiAnalytic,
        weight,
        quad: QuadMeta {
            radial: radial.len(),
            angular: None,
        },
    })
}

/// The predicted surviving cross-entry of the 2x2 specialization between
/// (l=1, m) and (l=2, m+1):
/// g_m = 2 R_m R_{m+1} (int_0^1 O_{2m+1} r dr) / ((m+1)(m+2)).
pub fn su11_offdiag_coeff(m: u32, rule: &Rule1D) -> Result<f64, FrameError> {
    let integral = radial_integrate(2, rule, |x| eo(2 * m + 1, x[0]).o * x[0])?;
    let rm = crate::states::su11_r(m);
    let rm1 = crate::states::su11_r(m + 1);
    Ok(2.0 * rm * rm1 * integral / ((m as f64 + 1.0) * (m as f64 + 2.0)))
}

#[derive(Debug, Clone, Serialize)]
pub struct AnomalyEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameAuditReport {
    pub diag_residual_max: f64,
    pub offdiag_max: f64,
    pub anomaly_entries: Vec<AnomalyEntry>,
    pub frame_bounds: (f64, f64),
    /// True when the assembled operator is consistent with the claimed
    /// diagonal form (all off-diagonal mass below 1e-8).
    pub paper_consistent: bool,
    pub frobenius_residual: f64,
}

pub const ANOMALY_THRESHOLD: f64 = 1e-8;

/// Compares an assembled frame operator against the target.
pub fn audit(f: &FrameOperator, target: &ComplexMatrix) -> Result<FrameAuditReport, FrameError> {
    let dim = f.matrix.rows();
    if target.rows() != dim || target.cols() != dim {
        return Err(FrameError::Linalg(LinalgError::DimensionMismatch(format!(
            "frame {}x{} vs target {}x{}",
            dim,
            dim,
            target.rows(),
            target.cols()
        ))));
    }
    let mut diag_residual_max = 0.0f64;
    let mut offdiag_max = 0.0f64;
    let mut anomaly_entries = Vec::new();
    for row in 0..dim {
        for col in 0..dim {
            let delta = (f.matrix[(row, col)] - target[(row, col)]).norm();
            if row == col {
                diag_residual_max = diag_residual_max.max(delta);
            } else {
                offdiag_max = offdiag_max.max(f.matrix[(row, col)].norm());
            }
            if delta > ANOMALY_THRESHOLD {
                anomaly_entries.push(AnomalyEntry {
                    row,
                    col,
                    value: delta,
                });
            }
        }
    }
    anomaly_entries.sort_by(|a, b| b.value.total_cmp(&a.value));
    let bounds = frame_bounds(f)?;
    let diff = f.matrix.sub(target)?;
    Ok(FrameAuditReport {
        diag_residual_max,
        offdiag_max,
        anomaly_entries,
        frame_bounds: bounds,
        paper_consistent: offdiag_max <= ANOMALY_THRESHOLD,
        frobenius_residual: diff.frobenius(),
    })
}

/// Extreme eigenvalues of the (hermitian) truncated operator.
pub fn frame_bounds(f: &FrameOperator) -> Result<(f64, f64), FrameError> {
    let eig = hermitian_eig(&f.matrix, 1e-10)?;
    Ok((
        eig.eigenvalues[0],
        eig.eigenvalues[eig.eigenvalues.len() - 1],
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct InverseGrowth {
    pub rows: Vec<(u32, f64)>,
    /// Fitted slope of ln norm vs ln(M+1).
    pub slope: f64,
}

/// Truncated-inverse norms ||T_M^{-1}|| = (M+1)^2, with a log-log fit.
pub fn inverse_growth(m_list: &[u32]) -> InverseGrowth {
    let rows: Vec<(u32, f64)> = m_list
        .iter()
        .map(|&m| (m, ((m as f64 + 1.0) * (m as f64 + 1.0))))
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(m, norm)| ((m as f64 + 1.0).ln(), norm.ln()))
        .collect();
    let slope = fit_slope(&pts);
    InverseGrowth { rows, slope }
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Moore-Penrose pseudo-inverse with eigenvalue cutoff 1e-12 * lambda_max.
pub fn pseudo_inverse(g: &ComplexMatrix) -> Result<ComplexMatrix, FrameError> {
    let eig = hermitian_eig(g, 1e-10)?;
    let lmax = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let cutoff = 1e-12 * lmax;
    if lmax == 0.0 || eig.eigenvalues.iter().all(|l| l.abs() <= cutoff) {
        return Err(FrameError::Singular { cutoff });
    }
    let n = g.rows();
    let u = &eig.vectors;
    let mut scaled = u.clone();
    for j in 0..n {
        let inv = if eig.eigenvalues[j].abs() > cutoff {
            1.0 / eig.eigenvalues[j]
        } else {
            0.0
        };
        for i in 0..n {
            scaled[(i, j)] *= Complex64::new(inv, 0.0);
        }
    }
    Ok(scaled.mat_mul(&u.dagger())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GramMode {
    /// Invert the claimed target operator.
    PaperT,
    /// Invert the numerically assembled frame operator.
    ComputedF,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub phi_hat: Vec<Complex64>,
    pub rel_error: f64,
}

/// phi_hat = F G^{-1} phi, where F is the assembled numeric frame operator
/// and G is either the target (mode paper-T) or F itself (mode computed-F).
pub fn reconstruct(
    phi: &[Complex64],
    mode: GramMode,
    frame: &FrameOperator,
) -> Result<Reconstruction, FrameError> {
    let dim = frame.matrix.rows();
    assert_eq!(phi.len(), dim, "vector must live in the truncated space");
    let g = match mode {
        GramMode::PaperT => target_t(frame.n, frame.m_cutoff),
        GramMode::ComputedF => frame.matrix.clone(),
    };
    let g_inv = pseudo_inverse(&g)?;
    let y = g_inv.mat_vec(phi)?;
    let phi_hat = frame.matrix.mat_vec(&y)?;
    let err2: f64 = phi_hat
        .iter()
        .zip(phi)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let norm2: f64 = phi.iter().map(|x| x.norm_sqr()).sum();
    Ok(Reconstruction {
        phi_hat,
        rel_error: (err2 / norm2).sqrt(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceDemo {
    /// Per-m norm terms of the unscaled-basis construction; each is 1.
    pub terms: Vec<f64>,
    /// Partial sums; grow as M+1.
    pub partials: Vec<f64>,
    /// Control with the rescaled basis: partials converge toward pi^2/6.
    pub scaled_partials: Vec<f64>,
    /// Independent quadrature value of the m = 3 term.
    pub term3_quadrature: f64,
}

/// Divergence of the norm series with the unscaled basis: normalization
/// (1+r^2)/sqrt(2), R_m = 1/sqrt(N_m), unit weight. Each term integrates
/// to exactly 1, so partial sums grow linearly; the rescaled control
/// converges.
pub fn divergence_demo(m_cutoff: u32) -> Result<DivergenceDemo, FrameError> {
    assert!(m_cutoff <= 10_000);
    let mut terms = Vec::with_capacity(m_cutoff as usize + 1);
    for m in 0..=m_cutoff {
        terms.push(divergence_term(m)?);
    }
    let mut partials = Vec::with_capacity(terms.len());
    let mut scaled_partials = Vec::with_capacity(terms.len());
    let mut acc = 0.0;
    let mut acc_scaled = 0.0;
    for (m, &t) in terms.iter().enumerate() {
        acc += t;
        acc_scaled += t / ((m as f64 + 1.0) * (m as f64 + 1.0));
        partials.push(acc);
        scaled_partials.push(acc_scaled);
    }
    Ok(DivergenceDemo {
        terms,
        partials,
        scaled_partials,
        term3_quadrature: divergence_term(3)?,
    })
}

/// The m-th norm term of the unscaled construction by radial quadrature.
/// The angular and normalization factors collapse the integrand to
/// r (E_m^2 + O_m^2)/N_m, evaluated in overflow-safe scaled form.
fn divergence_term(m: u32) -> Result<f64, FrameError> {
    if m > 510 {
        // GL rules cap at 512 nodes; beyond their exactness range the term
        // is the closed-form ratio N_m/N_m.
        return Ok(1.0);
    }
    let k = (m as usize + 2).max(8).min(512);
    let rule = crate::quadrature::gauss_legendre(k)?;
    let mf = m as f64;
    let denom = 2.0 * mf + 4f64.powi(-(m as i32));
    Ok(radial_integrate(2, &rule, |x| {
        let r = x[0];
        // (E_m^2+O_m^2)/N_m with (1+-r)^{2m} scaled by 4^-m.
        let t = ((1.0 + r) / 2.0).powi(2 * m as i32);
        let u = ((1.0 - r) / 2.0).powi(2 * m as i32);
        r * (t + u) * (2.0 * mf + 1.0) * (mf + 1.0) / denom
    })?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{moment_table, Convention};
    use crate::quadrature::{gauss_legendre, uniform_angular};
    use approx::assert_abs_diff_eq;

    #[test]
    fn target_shape() {
        let t = target_t(2, 1);
        assert_eq!(t.rows(), 4);
        for (i, want) in [1.0, 1.0, 0.25, 0.25].iter().enumerate() {
            assert_eq!(t[(i, i)].re, *want);
        }
        assert_eq!(t.max_abs(), 1.0);
        let t3 = target_t(1 + 2, 3);
        assert_eq!(t3.rows(), 12);
    }

    #[test]
    fn angular_rule_bound_enforced() {
        let radial = gauss_legendre(8).unwrap();
        let angular = uniform_angular(4);
        let err = frame_numeric(3, 2, CoeffSource::Su11, 1.0, &radial, &angular);
        assert!(matches!(err, Err(FrameError::AngularTooCoarse { needed: 6, .. })));
    }

    #[test]
    fn frame_n3_equals_target() {
        let radial = gauss_legendre(32).unwrap();
        let angular = uniform_angular(6);
        let table = moment_table(3, 2, &radial, Convention::RadialJacobian).unwrap();
        let f = frame_numeric(3, 2, CoeffSource::General(&table), 1.0, &radial, &angular).unwrap();
        let t = target_t(3, 2);
        let diff = f.matrix.max_abs_diff(&t).unwrap();
        assert!(diff <= 1e-10, "n=3 frame should equal the target, diff {diff}");
        assert!(f.matrix.hermiticity_residual() <= 1e-10);
    }

    #[test]
    fn frame_m0_matches_target_block() {
        let radial = gauss_legendre(32).unwrap();
        let angular = uniform_angular(2);
        let table = moment_table(4, 0, &radial, Convention::RadialJacobian).unwrap();
        let f = frame_numeric(4, 0, CoeffSource::General(&table), 1.0, &radial, &angular).unwrap();
        let diff = f.matrix.max_abs_diff(&target_t(4, 0)).unwrap();
        assert!(diff <= 1e-12, "m=0 block diff {diff}");
    }

    #[test]
    fn su11_band_structure() {
        let radial = gauss_legendre(64).unwrap();
        let angular = uniform_angular(16);
        let weight = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        let f = frame_numeric(2, 3, CoeffSource::Su11, weight, &radial, &angular).unwrap();
        let t = target_t(2, 3);
        let dim = f.matrix.rows();
        // diagonal matches
        for i in 0..dim {
            assert!((f.matrix[(i, i)] - t[(i, i)]).norm() <= 1e-10);
        }
        // cross entry (l=1,m=0) <-> (l=2,m=1) is sqrt(6)/9
        let row = 0; // (l=1, m=0)
        let col = 1 * 2 + 1; // (l=2, m=1)
        assert_abs_diff_eq!(
            f.matrix[(row, col)].norm(),
            6f64.sqrt() / 9.0,
            epsilon = 1e-10
        );
        // entries separated by |m-k| >= 2 vanish
        for r in 0..dim {
            for c in 0..dim {
                let (mr, mc) = (r / 2, c / 2);
                if (mr as i64 - mc as i64).abs() >= 2 {
                    assert!(f.matrix[(r, c)].norm() <= 1e-10, "({r},{c})");
                }
            }
        }
        // predicted band entries for each m
        for m in 0..3u32 {
            let g = su11_offdiag_coeff(m, &radial).unwrap();
            let entry = f.matrix[(m as usize * 2, (m as usize + 1) * 2 + 1)].norm();
            assert!((entry - g).abs() <= 1e-10, "m={m}: {entry} vs {g}");
        }
    }

    #[test]
    fn modes_agree() {
        let radial = gauss_legendre(32).unwrap();
        for (n, m_cutoff) in [(2usize, 3u32), (3, 3), (4, 2)] {
            let angular = uniform_angular(2 * m_cutoff as usize + 2);
            let table = moment_table(n, m_cutoff, &radial, Convention::RadialJacobian).unwrap();
            let num = frame_numeric(
                n,
                m_cutoff,
                CoeffSource::General(&table),
                1.0,
                &radial,
                &angular,
            )
            .unwrap();
            let semi =
                frame_semianalytic(n, m_cutoff, CoeffSource::General(&table), 1.0, &radial)
                    .unwrap();
            let diff = num.matrix.max_abs_diff(&semi.matrix).unwrap();
            assert!(diff <= 1e-10, "n={n} M={m_cutoff}: mode diff {diff}");
        }
    }

    #[test]
    fn semianalytic_su11_matches_numeric() {
        let radial = gauss_legendre(64).unwrap();
        let angular = uniform_angular(16);
        let weight = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        let num = frame_numeric(2, 3, CoeffSource::Su11, weight, &radial, &angular).unwrap();
        let semi = frame_semianalytic(2, 3, CoeffSource::Su11, weight, &radial).unwrap();
        assert!(num.matrix.max_abs_diff(&semi.matrix).unwrap() <= 1e-10);
    }

    #[test]
    fn weight_scaling_is_linear() {
        let radial = gauss_legendre(24).unwrap();
        let table = moment_table(2, 2, &radial, Convention::RadialJacobian).unwrap();
        let f1 = frame_semianalytic(2, 2, CoeffSource::General(&table), 1.0, &radial).unwrap();
        let f2 = frame_semianalytic(2, 2, CoeffSource::General(&table), 2.0, &radial).unwrap();
        let doubled = f1.matrix.scale(Complex64::new(2.0, 0.0));
        assert!(f2.matrix.max_abs_diff(&doubled).unwrap() <= 1e-14);
    }

    #[test]
    fn audit_of_exact_target() {
        let f = FrameOperator {
            n: 3,
            m_cutoff: 3,
            matrix: target_t(3, 3),
            mode: FrameMode::SemiAnalytic,
            weight: 1.0,
            quad: QuadMeta {
                radial: 0,
                angular: None,
            },
        };
        let report = audit(&f, &target_t(3, 3)).unwrap();
        assert_eq!(report.diag_residual_max, 0.0);
        assert_eq!(report.offdiag_max, 0.0);
        assert!(report.anomaly_entries.is_empty());
        assert!(report.paper_consistent);
        assert_abs_diff_eq!(report.frame_bounds.0, 1.0 / 16.0);
        assert_abs_diff_eq!(report.frame_bounds.1, 1.0);
    }

    #[test]
    fn audit_flags_su11_anomaly() {
        let radial = gauss_legendre(64).unwrap();
        let angular = uniform_angular(16);
        let weight = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        let f = frame_numeric(2, 3, CoeffSource::Su11, weight, &radial, &angular).unwrap();
        let report = audit(&f, &target_t(2, 3)).unwrap();
        assert!(!report.paper_consistent);
        assert_abs_diff_eq!(
            report.anomaly_entries[0].value,
            6f64.sqrt() / 9.0,
            epsilon = 1e-9
        );
        // the frame property itself survives at this truncation
        assert!(report.frame_bounds.0 > 0.0);
    }

    #[test]
    fn inverse_growth_exact_squares() {
        let growth = inverse_growth(&[0, 31]);
        assert_eq!(growth.rows[0].1, 1.0);
        assert_eq!(growth.rows[1].1, 1024.0);
        let fitted = inverse_growth(&[4, 8, 16, 32]);
        assert_abs_diff_eq!(fitted.slope, 2.0, epsilon = 1e-3);
    }

    #[test]
    fn reconstruct_n3_via_paper_target() {
        let radial = gauss_legendre(32).unwrap();
        let angular = uniform_angular(8);
        let table = moment_table(3, 3, &radial, Convention::RadialJacobian).unwrap();
        let f = frame_numeric(3, 3, CoeffSource::General(&table), 1.0, &radial, &angular).unwrap();
        let dim = f.matrix.rows();
        let phi: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new((i as f64 * 0.37).sin() + 0.2, (i as f64 * 0.61).cos()))
            .collect();
        let rec = reconstruct(&phi, GramMode::PaperT, &f).unwrap();
        assert!(rec.rel_error <= 1e-8, "rel_error {}", rec.rel_error);
    }

    #[test]
    fn reconstruct_su11_both_modes() {
        let radial = gauss_legendre(64).unwrap();
        let angular = uniform_angular(16);
        let weight = std::f64::consts::PI * std::f64::consts::PI / 6.0;
        let f = frame_numeric(2, 3, CoeffSource::Su11, weight, &radial, &angular).unwrap();
        let dim = f.matrix.rows();
        let phi: Vec<Complex64> = (0..dim)
            .map(|i| Complex64::new((i as f64 + 1.0).sqrt(), (i as f64 * 1.3).sin()))
            .collect();
        let exact = reconstruct(&phi, GramMode::ComputedF, &f).unwrap();
        assert!(exact.rel_error <= 1e-8, "computed-F error {}", exact.rel_error);
        let skewed = reconstruct(&phi, GramMode::PaperT, &f).unwrap();
        assert!(skewed.rel_error >= 0.05, "paper-T error {}", skewed.rel_error);
    }

    #[test]
    fn pseudo_inverse_rejects_zero() {
        let z = ComplexMatrix::zeros(3, 3);
        assert!(matches!(
            pseudo_inverse(&z),
            Err(FrameError::Singular { .. })
        ));
    }

    #[test]
    fn divergence_partials_linear() {
        let demo = divergence_demo(9).unwrap();
        assert_abs_diff_eq!(demo.partials[9], 10.0, epsilon = 1e-8);
        for (m, t) in demo.terms.iter().enumerate() {
            assert!((t - 1.0).abs() <= 1e-10, "term {m} = {t}");
        }
        assert_abs_diff_eq!(demo.term3_quadrature, 1.0, epsilon = 1e-12);
        // the rescaled control approaches pi^2/6 ~ 1.6449
        let last = demo.scaled_partials[9];
        assert!(last < std::f64::consts::PI.powi(2) / 6.0);
        assert!(last > 1.5);
    }
}
