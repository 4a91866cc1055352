//! JSON problem files.
//!
//! Polynomials are coefficient arrays, low degree first. Functions of `m`
//! are given either by a closed-form family sampled on the problem grid,
//! inline samples, or a path to a serialized [`FourierFn`].

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::QError;
use crate::fourier::{FourierFn, Grid};
use crate::geometry::{Forcing, MahlerTerm, ProblemSpec};
use crate::poly::Poly;
use crate::qcore::QParams;

/// A function of `m` as written in a problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FnSource {
    /// `scale · exp(-m² / (2 width²))`.
    Gaussian { scale: f64, width: f64 },
    /// `scale · exp(-rate |m|) / (1+|m|)^power`.
    ExpDecay { scale: f64, rate: f64, power: f64 },
    /// `scale / cosh(rate · m)`.
    Sech { scale: f64, rate: f64 },
    /// One `[re, im]` pair per grid point.
    Samples { values: Vec<[f64; 2]> },
    /// A serialized grid function; relative paths resolve against the data root.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "M")]
    pub m_max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub l0: u32,
    pub l1: i32,
    pub l2: u32,
    #[serde(rename = "R")]
    pub r: Poly,
    #[serde(rename = "A")]
    pub a: FnSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    pub j: u32,
    #[serde(rename = "F")]
    pub f: FnSource,
}

/// Problem file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub q: f64,
    pub k: u32,
    #[serde(default)]
    pub eps_abs: Option<f64>,
    #[serde(default)]
    pub eps_rel: Option<f64>,
    pub beta: f64,
    pub mu: f64,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(rename = "Q")]
    pub q_poly: Poly,
    #[serde(rename = "R_D")]
    pub r_d: Poly,
    pub alpha_d: f64,
    pub d_d: u32,
    /// Requested bisecting direction of the τ-plane sector.
    #[serde(default)]
    pub direction: f64,
    #[serde(default)]
    pub mahler_terms: Vec<TermSpec>,
    #[serde(default)]
    pub forcing: Vec<ForcingSpec>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, QError> {
        serde_json::from_str(text).map_err(|e| QError::InvalidSpec { condition: "parse".into(), detail: e.to_string() })
    }

    pub fn read(path: &Path) -> Result<Self, QError> {
        let text = std::fs::read_to_string(path).map_err(|e| QError::InvalidSpec {
            condition: "read".into(),
            detail: format!("{}: {e}", path.display()),
        })?;
        Self::from_json(&text)
    }

    /// Samples every function on the grid and builds the problem.
    pub fn build(&self, data_root: Option<&Path>) -> Result<ProblemSpec, QError> {
        let mut params = QParams::new(self.q, self.k)?;
        if self.eps_abs.is_some() || self.eps_rel.is_some() {
            params = params.with_tolerances(self.eps_abs.unwrap_or(1e-12), self.eps_rel.unwrap_or(1e-10))?;
        }
        let grid = match &self.grid {
            Some(g) => Grid::new(g.m_max, g.step)?,
            None => Grid::default_for(self.beta)?,
        };
        let sample = |src: &FnSource| sample_source(src, grid, self.beta, self.mu, data_root);
        let terms = self
            .mahler_terms
            .iter()
            .map(|t| Ok(MahlerTerm { l0: t.l0, l1: t.l1, l2: t.l2, r: t.r.clone(), a: sample(&t.a)? }))
            .collect::<Result<_, QError>>()?;
        let forcing =
            self.forcing.iter().map(|f| Ok(Forcing { j: f.j, f: sample(&f.f)? })).collect::<Result<_, QError>>()?;
        Ok(ProblemSpec {
            params,
            q_poly: self.q_poly.clone(),
            r_d: self.r_d.clone(),
            terms,
            alpha_d: self.alpha_d,
            d_d: self.d_d,
            forcing,
            beta: self.beta,
            mu: self.mu,
            grid,
        })
    }
}

fn sample_source(src: &FnSource, grid: Grid, beta: f64, mu: f64, root: Option<&Path>) -> Result<FourierFn, QError> {
    let real = |f: &dyn Fn(f64) -> f64| FourierFn::from_fn(grid, beta, mu, |m| Complex64::new(f(m), 0.0));
    match src {
        FnSource::Gaussian { scale, width } => real(&|m| scale * (-m * m / (2.0 * width * width)).exp()),
        FnSource::ExpDecay { scale, rate, power } => {
            real(&|m| scale * (-rate * m.abs()).exp() / (1.0 + m.abs()).powf(*power))
        }
        FnSource::Sech { scale, rate } => real(&|m| scale / (rate * m).cosh()),
        FnSource::Samples { values } => {
            FourierFn::new(grid, beta, mu, values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
        }
        FnSource::File { path } => {
            let mut p = PathBuf::from(path);
            if p.is_relative() {
                if let Some(root) = root {
                    p = root.join(p);
                }
            }
            let text = std::fs::read_to_string(&p).map_err(|e| QError::InvalidSpec {
                condition: "read".into(),
                detail: format!("{}: {e}", p.display()),
            })?;
            let f: FourierFn = serde_json::from_str(&text)
                .map_err(|e| QError::InvalidSpec { condition: "parse".into(), detail: e.to_string() })?;
            if f.grid() != &grid {
                return Ok(f.resample(grid));
            }
            Ok(f)
        }
    }
}
