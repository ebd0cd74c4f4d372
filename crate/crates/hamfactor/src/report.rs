//! The JSON report emitted by the command-line tools: one object with the
//! sections `plan`, `displacement`, `composition`, `calabi`, `environment`.
//! Sections a command does not produce serialize as `null`. Nothing
//! run-dependent (timestamps, hosts) is recorded, so identical inputs give
//! byte-identical reports.

use serde::Serialize;

use crate::calabi::CalabiReport;
use crate::config::ScenarioConfig;
use crate::displacement::DisplacementReport;
use crate::expr::SupportBound;
use crate::factorization::{CompositionReport, FactorizationPlan};

#[derive(Debug, Serialize)]
pub struct Report {
    pub plan: PlanSummary,
    pub displacement: Option<DisplacementReport>,
    pub composition: Option<CompositionReport>,
    pub calabi: Option<CalabiSection>,
    pub environment: Environment,
}

#[derive(Debug, Serialize)]
pub struct PlanSummary {
    pub n: usize,
    pub m: usize,
    /// Ball radius covering the factor supports (with margin).
    pub r: f64,
    /// Translation length per application of the displacing map.
    pub l: f64,
    /// Profile transition width.
    pub eps: f64,
    /// `x_1` extent of the tube where the displacement is an exact
    /// translation.
    pub tube_x1: [f64; 2],
    pub factors: Vec<String>,
    pub factor_supports: Vec<SupportBound>,
    pub a1: FactorSummary,
    pub a2: FactorSummary,
    pub a3: FactorSummary,
}

#[derive(Debug, Serialize)]
pub struct FactorSummary {
    /// Number of letters in the word realizing the factor.
    pub letters: usize,
    /// The autonomy witness: the single Hamiltonian generating the factor.
    pub hamiltonian: String,
}

#[derive(Debug, Serialize)]
pub struct CalabiSection {
    pub report: CalabiReport,
    pub balance: Option<BalanceSummary>,
}

#[derive(Debug, Serialize)]
pub struct BalanceSummary {
    /// Amplitude of the compensating bump.
    pub kappa: f64,
    /// Measured `sum Cal(F_i)` of the inputs.
    pub kernel_sum: f64,
    /// `|Cal(H')|` after balancing.
    pub displacing_residual: f64,
}

#[derive(Debug, Serialize)]
pub struct Environment {
    pub package: &'static str,
    pub version: &'static str,
    pub integrator_scheme: String,
    pub integrator_step: f64,
    pub max_steps: usize,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub grid_spacing: Option<f64>,
}

impl PlanSummary {
    pub fn from_plan(plan: &FactorizationPlan) -> Self {
        PlanSummary {
            n: plan.spec.n,
            m: plan.m(),
            r: plan.spec.r,
            l: plan.spec.l,
            eps: plan.spec.eps,
            tube_x1: plan.spec.tube_x1(),
            factors: plan.factors.iter().map(|f| f.print()).collect(),
            factor_supports: plan.factors.iter().map(|f| f.support_bound()).collect(),
            a1: FactorSummary {
                letters: plan.a1.len(),
                hamiltonian: plan.a1_witness.describe(),
            },
            a2: FactorSummary {
                letters: plan.a2.len(),
                hamiltonian: plan.a2_witness.describe(),
            },
            a3: FactorSummary {
                letters: plan.a3.len(),
                hamiltonian: plan.a3_witness.describe(),
            },
        }
    }
}

impl Environment {
    pub fn from_config(config: &ScenarioConfig) -> Self {
        Environment {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            integrator_scheme: config.integrator.scheme.clone(),
            integrator_step: config.integrator.step,
            max_steps: config.integrator.max_steps,
            samples: config.verification.samples,
            seed: config.verification.seed,
            tolerance: config.verification.tolerance,
            grid_spacing: config.calabi.grid_spacing,
        }
    }
}

impl Report {
    /// Pretty-printed JSON with a trailing newline; key order follows the
    /// struct declarations, so serialization is deterministic.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}
