//! Run configuration: a single JSON document with centralized defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toroidal::matching::MatchOptions;
use toroidal::reduction::{FixedPointOptions, PrescribedCurvature};
use toroidal::stencil::Stencil;
use toroidal::WeightedNormSpec;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("γ = {0} outside (0, 2)")]
    Gamma(f64),
    #[error("N_theta = {0} must be a power of two, at least 16")]
    NTheta(usize),
    #[error("N_t = {0} must be even and at least 64")]
    NT(usize),
    #[error("exactly one of `a` and `auto_match` must be set")]
    NeckChoice,
    #[error("exactly one of `n` and `eps` must be set")]
    TargetChoice,
    #[error("auto_match needs `n`")]
    MatchNeedsN,
    #[error("{name} = {value} out of range")]
    Range { name: &'static str, value: f64 },
    #[error("invalid JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "A")]
    pub amp: f64,
    pub gamma: f64,
    pub beta: Option<f64>,
    pub n: Option<usize>,
    pub eps: Option<f64>,
    pub a: Option<f64>,
    pub auto_match: bool,
    pub n_t: usize,
    pub n_theta: usize,
    pub tol_fp: f64,
    pub tol_match: f64,
    pub max_iter: usize,
    pub anderson: usize,
    pub mu: f64,
    pub delta: f64,
    pub r0: f64,
    pub output: OutputPaths,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            amp: -1.0,
            gamma: 1.0,
            beta: None,
            n: Some(32),
            eps: None,
            a: None,
            auto_match: true,
            n_t: 512,
            n_theta: 32,
            tol_fp: 1e-10,
            tol_match: 1e-6,
            max_iter: 200,
            anderson: 0,
            mu: 1.5,
            delta: 1.0,
            r0: 0.3,
            output: OutputPaths::default(),
            seed: 0,
        }
    }
}

fn range(name: &'static str, value: f64, ok: bool) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::Range { name, value })
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(ConfigError::Gamma(self.gamma));
        }
        if self.n_theta < 16 || !self.n_theta.is_power_of_two() {
            return Err(ConfigError::NTheta(self.n_theta));
        }
        if self.n_t < 64 || self.n_t % 2 != 0 {
            return Err(ConfigError::NT(self.n_t));
        }
        if self.a.is_some() == self.auto_match {
            return Err(ConfigError::NeckChoice);
        }
        if self.n.is_some() == self.eps.is_some() {
            return Err(ConfigError::TargetChoice);
        }
        if self.auto_match && self.n.is_none() {
            return Err(ConfigError::MatchNeedsN);
        }
        range("A", self.amp, self.amp.is_finite())?;
        if let Some(a) = self.a {
            range("a", a, a > 0.0 && a <= 0.5)?;
        }
        if let Some(e) = self.eps {
            range("eps", e, e > 0.0 && e < 1.0)?;
        }
        if let Some(n) = self.n {
            range("n", n as f64, n >= 4)?;
        }
        if let Some(b) = self.beta {
            range("beta", b, b > 0.0)?;
        }
        range("tol_fp", self.tol_fp, self.tol_fp > 0.0)?;
        range("tol_match", self.tol_match, self.tol_match > 0.0)?;
        range("mu", self.mu, self.mu > 1.0 && self.mu < 2.0)?;
        range("delta", self.delta, self.delta > 0.0)?;
        range("r0", self.r0, self.r0 > 0.0 && self.r0 < 1.0)?;
        range("anderson", self.anderson as f64, self.anderson <= 3)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: Self = serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text)?)
    }

    pub fn curvature(&self) -> anyhow::Result<PrescribedCurvature> {
        let h = PrescribedCurvature::new(self.amp, self.gamma)?;
        Ok(match self.beta {
            Some(b) => PrescribedCurvature { beta: Some(b), ..h },
            None => h,
        })
    }

    pub fn fixed_point(&self) -> FixedPointOptions {
        FixedPointOptions {
            tol: self.tol_fp,
            max_iter: self.max_iter,
            anderson: self.anderson,
            divergence_window: 5,
            norm: WeightedNormSpec {
                mu: self.mu,
                delta: self.delta,
            },
            stencil: Stencil::Second,
        }
    }

    pub fn match_options(&self) -> MatchOptions {
        MatchOptions {
            n_t: self.n_t,
            n_theta: self.n_theta,
            fixed_point: self.fixed_point(),
            tol: self.tol_match,
            ..MatchOptions::default()
        }
    }
}
