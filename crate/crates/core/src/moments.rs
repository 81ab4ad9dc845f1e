//! Moment integrals N_1m and N_2m for general n, the closed-form radial
//! moments of the 2x2 specialization, the derived normalization
//! coefficients R_m and S_m, and relation audits.

use crate::quadrature::{radial_integrate, QuadError, Rule1D};
use crate::zmatrix::eo;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MOMENT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MomentError {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("component index l = {l} outside 2..={n}")]
    IndexOutOfRange { l: usize, n: usize },
    #[error("Fock index m = {0} exceeds the supported 64")]
    FockTooLarge(u32),
    #[error("cache I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cache header mismatch: {0}")]
    CacheMismatch(String),
}

/// Whether the radial Jacobian prod r_j of the poly-disc measure is part of
/// the moment integrands. The frame-operator derivation requires it;
/// `Bare` reproduces the displayed integrals verbatim for auditability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    RadialJacobian,
    Bare,
}

impl std::fmt::Display for Convention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Convention::RadialJacobian => write!(f, "radial-jacobian"),
            Convention::Bare => write!(f, "bare"),
        }
    }
}

fn jacobian(radii: &[f64], convention: Convention) -> f64 {
    match convention {
        Convention::RadialJacobian => radii.iter().product(),
        Convention::Bare => 1.0,
    }
}

/// E_m^2 + O_m^2 at a, equal to E_{2m}(a).
pub fn eo_sq_sum(m: u32, a: f64) -> f64 {
    eo(2 * m, a).e
}

/// N_1m = int a^2 (E_m^2 + O_m^2) [prod r_j] dr over [0,1]^{n-1}. The
/// normalization R_m^2 is excluded: it is defined from this integral.
pub fn compute_n1(
    n: usize,
    m: u32,
    rule: &Rule1D,
    convention: Convention,
) -> Result<f64, MomentError> {
    if m > 64 {
        return Err(MomentError::FockTooLarge(m));
    }
    Ok(radial_integrate(n, rule, |radii| {
        let a2: f64 = radii.iter().map(|r| r * r).sum();
        a2 * eo_sq_sum(m, a2.sqrt()) * jacobian(radii, convention)
    })?)
}

/// N_2m = int [r_{l-1}^2 (E_m^2+O_m^2) + a^2 - r_{l-1}^2] [prod r_j] dr;
/// independent of l by permutation symmetry.
pub fn compute_n2(
    n: usize,
    m: u32,
    l: usize,
    rule: &Rule1D,
    convention: Convention,
) -> Result<f64, MomentError> {
    if m > 64 {
        return Err(MomentError::FockTooLarge(m));
    }
    if l < 2 || l > n {
        return Err(MomentError::IndexOutOfRange { l, n });
    }
    Ok(radial_integrate(n, rule, |radii| {
        let a2: f64 = radii.iter().map(|r| r * r).sum();
        let r2 = radii[l - 2] * radii[l - 2];
        (r2 * eo_sq_sum(m, a2.sqrt()) + a2 - r2) * jacobian(radii, convention)
    })?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEntry {
    pub m: u32,
    pub n1: f64,
    pub n2: f64,
    pub r: f64,
    pub s: f64,
}

/// Per-m moment integrals with the derived R_m = 1/sqrt(N_1m) and
/// S_m = 1/sqrt(N_2m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTable {
    pub schema_version: u32,
    pub n: usize,
    #[serde(rename = "M")]
    pub m_max: u32,
    pub convention: Convention,
    pub radial_rule: usize,
    pub entries: Vec<MomentEntry>,
}

pub fn moment_table(
    n: usize,
    m_max: u32,
    rule: &Rule1D,
    convention: Convention,
) -> Result<MomentTable, MomentError> {
    if m_max > 64 {
        return Err(MomentError::FockTooLarge(m_max));
    }
    let entries: Result<Vec<MomentEntry>, MomentError> = (0..=m_max)
        .into_par_iter()
        .map(|m| {
            let n1 = compute_n1(n, m, rule, convention)?;
            let n2 = compute_n2(n, m, 2, rule, convention)?;
            Ok(MomentEntry {
                m,
                n1,
                n2,
                r: 1.0 / n1.sqrt(),
                s: 1.0 / n2.sqrt(),
            })
        })
        .collect();
    Ok(MomentTable {
        schema_version: MOMENT_SCHEMA_VERSION,
        n,
        m_max,
        convention,
        radial_rule: rule.len(),
        entries: entries?,
    })
}

impl MomentTable {
    pub fn entry(&self, m: u32) -> &MomentEntry {
        &self.entries[m as usize]
    }

    pub fn cache_file_name(&self) -> String {
        format!(
            "moments_v{}_n{}_M{}_k{}_{}.json",
            self.schema_version, self.n, self.m_max, self.radial_rule, self.convention
        )
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf, MomentError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(self.cache_file_name());
        let mut body = serde_json::to_string_pretty(self)?;
        body.push('\n');
        std::fs::write(&path, body)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, MomentError> {
        let body = std::fs::read_to_string(path)?;
        let table: MomentTable = serde_json::from_str(&body)?;
        if table.schema_version != MOMENT_SCHEMA_VERSION {
            return Err(MomentError::CacheMismatch(format!(
                "schema_version {} != {}",
                table.schema_version, MOMENT_SCHEMA_VERSION
            )));
        }
        Ok(table)
    }

    /// Loads a cached table matching (n, M, rule size, convention) if one
    /// exists under `dir`, otherwise computes and stores it.
    pub fn cached_or_compute(
        dir: Option<&Path>,
        n: usize,
        m_max: u32,
        rule: &Rule1D,
        convention: Convention,
    ) -> Result<Self, MomentError> {
        if let Some(dir) = dir {
            let probe = MomentTable {
                schema_version: MOMENT_SCHEMA_VERSION,
                n,
                m_max,
                convention,
                radial_rule: rule.len(),
                entries: Vec::new(),
            };
            let path = dir.join(probe.cache_file_name());
            if path.exists() {
                let table = Self::load(&path)?;
                if table.n == n
                    && table.m_max == m_max
                    && table.convention == convention
                    && table.radial_rule == rule.len()
                {
                    return Ok(table);
                }
                return Err(MomentError::CacheMismatch(format!(
                    "cache file {} does not match requested parameters",
                    path.display()
                )));
            }
            let table = moment_table(n, m_max, rule, convention)?;
            table.save(dir)?;
            return Ok(table);
        }
        moment_table(n, m_max, rule, convention)
    }
}

/// Residuals of N_1m against the printed relation
/// N_1m = (n-1) N_2m - (n-2)/4 and against the corrected constant
/// (n-2)(n-1)/2^n, per m.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RelationResidual {
    pub m: u32,
    pub residual_paper: f64,
    pub residual_derived: f64,
}

pub fn relation_residual(table: &MomentTable) -> Vec<RelationResidual> {
    let n = table.n as f64;
    let paper_const = 0.25 * (n - 2.0);
    let derived_const = (n - 2.0) * (n - 1.0) / 2f64.powi(table.n as i32);
    table
        .entries
        .iter()
        .map(|e| RelationResidual {
            m: e.m,
            residual_paper: e.n1 - ((n - 1.0) * e.n2 - paper_const),
            residual_derived: e.n1 - ((n - 1.0) * e.n2 - derived_const),
        })
        .collect()
}

/// int_0^1 E_m^2 r dr in closed form: (m 4^m + m + 1)/(2 (2m+1)(m+1)).
/// This is the value direct integration produces; the printed form is
/// exposed by [`su11_moment_e2_printed`] for discrepancy reports.
pub fn su11_moment_e2(m: u32) -> f64 {
    let mf = m as f64;
    (mf * 4f64.powi(m as i32) + mf + 1.0) / (2.0 * (2.0 * mf + 1.0) * (mf + 1.0))
}

/// The printed E_m^2 moment, (4^m + 1 + m)/(2 (2m+1)(m+1)); disagrees with
/// direct integration for m >= 2.
pub fn su11_moment_e2_printed(m: u32) -> f64 {
    let mf = m as f64;
    (4f64.powi(m as i32) + 1.0 + mf) / (2.0 * (2.0 * mf + 1.0) * (mf + 1.0))
}

/// int_0^1 O_m^2 r dr = m (4^m - 1)/(2 (2m+1)(m+1)).
pub fn su11_moment_o2(m: u32) -> f64 {
    let mf = m as f64;
    mf * (4f64.powi(m as i32) - 1.0) / (2.0 * (2.0 * mf + 1.0) * (mf + 1.0))
}

/// int_0^1 (E_m^2 + O_m^2) r dr = (2 * 4^m m + 1)/(2 (2m+1)(m+1)).
pub fn su11_moment_sum(m: u32) -> f64 {
    let mf = m as f64;
    (2.0 * 4f64.powi(m as i32) * mf + 1.0) / (2.0 * (2.0 * mf + 1.0) * (mf + 1.0))
}

/// N_m of the divergence remark; identical to [`su11_moment_sum`], kept as
/// a named quantity.
pub fn remark_n(m: u32) -> f64 {
    su11_moment_sum(m)
}
