//! Scenario configuration: one JSON document describing the inputs and all
//! numeric knobs of a run.
//!
//! ```json
//! {
//!   "n": 1,
//!   "factors": ["0.7*bump(x1/0.7)*bump(y1/0.7)"],
//!   "displacement": { "l": null, "eps": null, "allow_short_translation": false },
//!   "integrator": { "scheme": "rk4", "step": 0.001, "max_steps": 10000000 },
//!   "verification": { "samples": 200, "seed": 42, "tolerance": 0.001,
//!                     "deep_conjugation_points": 0 },
//!   "calabi": { "grid_spacing": null, "balance": false, "volume_check": false }
//! }
//! ```
//!
//! Every section is optional; omitted fields take the defaults above.
//! Factor expressions use the grammar of [`crate::expr::parse`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::expr::{parse, HamiltonianExpr};
use crate::factorization::PlanOverrides;
use crate::geometry::{IntegratorConfig, Scheme};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: usize,
    pub factors: Vec<String>,
    #[serde(default)]
    pub displacement: DisplacementSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub verification: VerificationSection,
    #[serde(default)]
    pub calabi: CalabiSection,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementSection {
    /// Translation length per application; default `3r`.
    #[serde(default)]
    pub l: Option<f64>,
    /// Profile transition width in `(0, 1]`; default 1.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Admit `L <= 2r` for the overlap counterexample.
    #[serde(default)]
    pub allow_short_translation: bool,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationSection {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Points for the pushforward-field check on `A1`; 0 skips it.
    #[serde(default)]
    pub deep_conjugation_points: usize,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CalabiSection {
    /// Quadrature spacing; default `(r + 1) / 64`.
    #[serde(default)]
    pub grid_spacing: Option<f64>,
    /// Rebuild the plan with a Calabi-zero displacing Hamiltonian.
    #[serde(default)]
    pub balance: bool,
    /// Run the coarse change-of-variables check of `Cal(H o g^{-1})`.
    #[serde(default)]
    pub volume_check: bool,
}

fn default_scheme() -> String {
    "rk4".to_string()
}
fn default_step() -> f64 {
    1e-3
}
fn default_max_steps() -> usize {
    10_000_000
}
fn default_samples() -> usize {
    200
}
fn default_seed() -> u64 {
    42
}
fn default_tolerance() -> f64 {
    1e-3
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            scheme: default_scheme(),
            step: default_step(),
            max_steps: default_max_steps(),
        }
    }
}

impl Default for VerificationSection {
    fn default() -> Self {
        VerificationSection {
            samples: default_samples(),
            seed: default_seed(),
            tolerance: default_tolerance(),
            deep_conjugation_points: 0,
        }
    }
}

/// Configuration errors carry the offending field for diagnostics.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("half-dimension must be at least 1")]
    ZeroDimension,
    #[error("factor list is empty")]
    NoFactors,
    #[error("factor {index}: {source}")]
    BadFactor {
        index: usize,
        source: crate::expr::ParseError,
    },
    #[error("unknown integrator scheme {0:?}; expected \"rk4\" or \"implicit-midpoint\"")]
    BadScheme(String),
    #[error("integrator step must be positive")]
    BadStep,
    #[error("verification needs at least one sample")]
    NoSamples,
}

impl ScenarioConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: ScenarioConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::ZeroDimension);
        }
        if self.factors.is_empty() {
            return Err(ConfigError::NoFactors);
        }
        if !(self.integrator.step > 0.0) {
            return Err(ConfigError::BadStep);
        }
        if self.verification.samples == 0 {
            return Err(ConfigError::NoSamples);
        }
        self.scheme()?;
        Ok(())
    }

    /// Parse the factor expressions against the declared half-dimension.
    pub fn parsed_factors(&self) -> Result<Vec<HamiltonianExpr>, ConfigError> {
        self.factors
            .iter()
            .enumerate()
            .map(|(index, text)| {
                parse(text, self.n).map_err(|source| ConfigError::BadFactor { index, source })
            })
            .collect()
    }

    pub fn scheme(&self) -> Result<Scheme, ConfigError> {
        match self.integrator.scheme.as_str() {
            "rk4" => Ok(Scheme::Rk4),
            "implicit-midpoint" | "midpoint" => Ok(Scheme::ImplicitMidpoint),
            other => Err(ConfigError::BadScheme(other.to_string())),
        }
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig, ConfigError> {
        Ok(IntegratorConfig {
            scheme: self.scheme()?,
            step: self.integrator.step,
            max_steps: self.integrator.max_steps,
        })
    }

    pub fn plan_overrides(&self) -> PlanOverrides {
        PlanOverrides {
            l: self.displacement.l,
            eps: self.displacement.eps,
            allow_short_translation: self.displacement.allow_short_translation,
        }
    }
}
