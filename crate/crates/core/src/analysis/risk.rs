use serde::{Deserialize, Serialize};

use crate::data::ResponseMatrix;
use crate::error::{Error, Result};

/// One human participant paired with their digital twin on a single problem.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinRecord {
    /// Observed human response `y_i`.
    pub human_response: f64,
    /// Expected human response `ybar_i`.
    pub human_mean: f64,
    /// Human individual noise variance `eta_i^2`.
    pub human_noise_var: f64,
    /// Observed digital response `ytilde_i`.
    pub digital_response: f64,
    /// Expected digital response.
    pub digital_mean: f64,
    /// Digital individual noise variance.
    pub digital_noise_var: f64,
}

/// Digital output for one participant, used to pair against human data.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalOutput {
    pub participant_id: String,
    pub response: f64,
    pub mean: f64,
    pub noise_var: f64,
}

/// Squared-loss plug-in estimates of the five risk components.
///
/// `target` is the directly evaluated loss between the human population mean
/// and the digital crowd mean. `interaction = target - total` collects the
/// cross terms the five components do not account for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskDecomposition {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub l4: f64,
    pub l5: f64,
    pub total: f64,
    pub target: f64,
    pub interaction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureLlmRisk {
    pub l1: f64,
    pub l2: f64,
    pub deviation: f64,
    pub eta: f64,
    pub total: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Plug-ins: `ybar` is the mean of the individual human means,
/// `L1 = mean (ybar - y_i)^2`, `L2 = mean eta_i^2`, `L3 = mean (ybar_i - ytilde-bar_i)^2`,
/// `L4 = mean etatilde_i^2`, `L5 = mean (ytilde-bar - ytilde_i)^2`.
pub fn risk_decomposition(twins: &[TwinRecord]) -> Result<RiskDecomposition> {
    if twins.is_empty() {
        return Err(Error::Empty("twin records"));
    }
    let y_bar = mean(twins.iter().map(|t| t.human_mean));
    let yt_bar = mean(twins.iter().map(|t| t.digital_response));
    let l1 = mean(twins.iter().map(|t| (y_bar - t.human_response).powi(2)));
    let l2 = mean(twins.iter().map(|t| t.human_noise_var));
    let l3 = mean(
        twins
            .iter()
            .map(|t| (t.human_mean - t.digital_mean).powi(2)),
    );
    let l4 = mean(twins.iter().map(|t| t.digital_noise_var));
    let l5 = mean(twins.iter().map(|t| (yt_bar - t.digital_response).powi(2)));
    let total = l1 + l2 + l3 + l4 - l5;
    let target = (y_bar - yt_bar).powi(2);
    Ok(RiskDecomposition {
        l1,
        l2,
        l3,
        l4,
        l5,
        total,
        target,
        interaction: target - total,
    })
}

/// Pair the human responses on `problem` with digital outputs by participant id.
/// With one response per participant the human mean is the response itself and
/// the noise variance comes from `human_noise_var`.
pub fn pair_twins(
    human: &ResponseMatrix,
    problem: &str,
    digital: &[DigitalOutput],
    human_noise_var: f64,
) -> Result<Vec<TwinRecord>> {
    let responses = human.responses_for_problem(problem);
    if responses.is_empty() {
        return Err(Error::Empty("human responses"));
    }
    responses
        .iter()
        .map(|r| {
            let d = digital
                .iter()
                .find(|d| d.participant_id == r.participant_id)
                .ok_or_else(|| Error::Unpaired(r.participant_id.clone()))?;
            Ok(TwinRecord {
                human_response: r.value,
                human_mean: r.value,
                human_noise_var,
                digital_response: d.response,
                digital_mean: d.mean,
                digital_noise_var: d.noise_var,
            })
        })
        .collect()
}

/// Risk of answering with `y_ref` for everyone, given individual human means.
pub fn pure_llm_risk(
    human_means: &[f64],
    y_ref: f64,
    eta: f64,
    human_noise_var: f64,
) -> Result<PureLlmRisk> {
    if human_means.is_empty() {
        return Err(Error::Empty("human responses"));
    }
    let y_bar = mean(human_means.iter().copied());
    let l1 = mean(human_means.iter().map(|y| (y_bar - y).powi(2)));
    let deviation = mean(human_means.iter().map(|y| (y - y_ref).powi(2)));
    let l2 = human_noise_var;
    Ok(PureLlmRisk {
        l1,
        l2,
        deviation,
        eta,
        total: l1 + l2 + deviation + eta,
    })
}

pub fn pure_llm_risk_for_problem(
    human: &ResponseMatrix,
    problem: &str,
    y_ref: f64,
    eta: f64,
    human_noise_var: f64,
) -> Result<PureLlmRisk> {
    pure_llm_risk(
        &human.values_for_problem(problem),
        y_ref,
        eta,
        human_noise_var,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn twin(y: f64, yt: f64) -> TwinRecord {
        TwinRecord {
            human_response: y,
            human_mean: y,
            human_noise_var: 0.0,
            digital_response: yt,
            digital_mean: yt,
            digital_noise_var: 0.0,
        }
    }

    #[test]
    fn perfect_twin_has_no_discrepancy() {
        let r = risk_decomposition(&[twin(1.0, 1.0), twin(3.0, 3.0), twin(2.5, 2.5)]).unwrap();
        assert_eq!(r.l3, 0.0);
    }

    #[test]
    fn two_member_diversity() {
        let r = risk_decomposition(&[twin(1.0, 1.0), twin(3.0, 3.0)]).unwrap();
        assert!((r.l5 - 1.0).abs() < 1e-15);
        assert!(r.target.abs() < 1e-15);
    }

    #[test]
    fn cross_terms_surface_as_interaction() {
        // Swapped twins: crowd means agree, individuals do not.
        let r = risk_decomposition(&[twin(1.0, 3.0), twin(3.0, 1.0)]).unwrap();
        assert_eq!(r.target, 0.0);
        assert!((r.total - 4.0).abs() < 1e-12);
        assert!((r.interaction + 4.0).abs() < 1e-12);
    }

    #[test]
    fn pure_llm_examples() {
        let r = pure_llm_risk(&[2.0, 4.0], 3.0, 0.0, 0.0).unwrap();
        assert_eq!(r.deviation, 1.0);
        let r0 = pure_llm_risk(&[3.0, 3.0], 3.0, 0.0, 0.0).unwrap();
        assert_eq!(r0.deviation, 0.0);
        let r5 = pure_llm_risk(&[2.0, 4.0], 3.0, 0.5, 0.0).unwrap();
        assert_eq!(r5.total - r.total, 0.5);
    }
}
