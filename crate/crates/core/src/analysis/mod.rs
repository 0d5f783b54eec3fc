//! Accuracy and diversity metrics plus the risk and interval calculators.

mod intervals;
mod metrics;
mod risk;

pub use intervals::{
    estimate_kappa, theorem3_interval, theorem5_ci, theorem5_from_stats, z_quantile, Branch,
    ConfidenceInterval, ToleranceInterval,
};
pub use metrics::{
    cosine, mae, metrics, resolution_rate, rmse, spearman, MetricReport, ProblemOutcome,
};
pub use risk::{
    pair_twins, pure_llm_risk, pure_llm_risk_for_problem, risk_decomposition, DigitalOutput,
    PureLlmRisk, RiskDecomposition, TwinRecord,
};
