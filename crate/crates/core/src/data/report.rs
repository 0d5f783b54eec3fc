use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::{read_json, write_json};
use crate::analysis::{
    ConfidenceInterval, MetricReport, PureLlmRisk, RiskDecomposition, ToleranceInterval,
};
use crate::error::Result;

/// Everything one evaluation run produced. Metrics can be recomputed from the
/// raw decision lists stored per problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    /// Snapshot of the effective configuration.
    pub config: serde_json::Value,
    pub problems: Vec<ProblemReport>,
    /// Aggregated-decision metrics keyed by aggregator name.
    pub metrics: BTreeMap<String, MetricReport>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemReport {
    pub problem_id: String,
    pub y_ref: Option<f64>,
    /// Simulated decisions, in participant order.
    pub decisions: Vec<f64>,
    /// Reference human decisions.
    pub human_decisions: Vec<f64>,
    pub aggregated: BTreeMap<String, f64>,
    pub human_aggregated: BTreeMap<String, f64>,
    pub wasserstein: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Fraction of problems with absolute aggregated error below the threshold, per aggregator.
    pub resolution_rate: BTreeMap<String, f64>,
    pub kappa: Option<f64>,
    pub problems: Vec<ProblemDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDiagnostics {
    pub problem_id: String,
    pub pure_llm: Option<PureLlmRisk>,
    pub tolerance: Option<ToleranceInterval>,
    pub confidence: Option<ConfidenceInterval>,
    /// Twin risk decomposition, when digital participants pair with humans.
    pub risk: Option<RiskDecomposition>,
    /// Mean belief effect of the simulated crowd on this problem.
    pub mean_belief_effect: Option<f64>,
}

pub fn save_report(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), report)
}

pub fn load_report(path: impl AsRef<Path>) -> Result<RunReport> {
    read_json(path.as_ref())
}
