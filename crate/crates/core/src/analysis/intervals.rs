use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    H1,
    H2,
}

/// Range of mean belief offsets for which the blended crowd is expected to beat
/// the plain reference decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceInterval {
    pub delta: f64,
    pub h: f64,
    pub lower: f64,
    pub upper: f64,
    pub branch: Branch,
    pub delta0: f64,
    pub n: usize,
    pub kappa: f64,
    pub eps2: f64,
    pub eta: f64,
}

pub fn theorem3_interval(
    n: usize,
    kappa: f64,
    eps2: f64,
    eta: f64,
    delta: f64,
) -> Result<ToleranceInterval> {
    if n < 2 {
        return Err(Error::Insufficient(format!(
            "tolerance interval needs N >= 2, got {n}"
        )));
    }
    for (name, v) in [("kappa", kappa), ("eps2", eps2), ("eta", eta)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    if !delta.is_finite() {
        return Err(Error::NonFinite("tolerance interval center"));
    }
    let nf = n as f64;
    let s = (nf - 2.0) * eps2 + nf * eta;
    let delta0 = (nf - 2.0) / nf * (s / 2.0).sqrt();
    let (h, branch) = if delta0 >= kappa {
        let disc = nf * nf * kappa * kappa + 2.0 * (nf - 1.0) * s;
        (
            (disc.sqrt() - (nf - 2.0) * kappa) / (2.0 * (nf - 1.0)),
            Branch::H1,
        )
    } else {
        ((2.0 * s).sqrt() / nf, Branch::H2)
    };
    Ok(ToleranceInterval {
        delta,
        h,
        lower: delta - h,
        upper: delta + h,
        branch,
        delta0,
        n,
        kappa,
        eps2,
        eta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub half_width: f64,
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub z: f64,
    pub eps0: f64,
    pub n_digital: usize,
    pub n_human: usize,
    pub sigma_delta2: f64,
    pub sigma_r2: f64,
    pub eta: f64,
}

/// Two-sided standard normal quantile `z_{1 - alpha/2}`.
pub fn z_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(1.0 - alpha / 2.0))
}

fn biased_var(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Interval from summary statistics.
#[allow(clippy::too_many_arguments)]
pub fn theorem5_from_stats(
    center: f64,
    n_digital: usize,
    n_human: usize,
    sigma_delta2: f64,
    sigma_r2: f64,
    eta: f64,
    alpha: f64,
    eps0: f64,
) -> Result<ConfidenceInterval> {
    if n_digital < 2 || n_human < 2 {
        return Err(Error::Insufficient(format!(
            "confidence interval needs N >= 2 and n >= 2, got N={n_digital}, n={n_human}"
        )));
    }
    if !(eps0 >= 0.0 && eta >= 0.0 && sigma_delta2 >= 0.0 && sigma_r2 >= 0.0) {
        return Err(Error::InvalidArgument(
            "variances and eps0 must be >= 0".into(),
        ));
    }
    let z = z_quantile(alpha)?;
    let half_width = eps0
        + z * (eta / n_digital as f64
            + sigma_delta2 / n_digital as f64
            + sigma_r2 / n_human as f64)
            .sqrt();
    Ok(ConfidenceInterval {
        center,
        half_width,
        lower: center - half_width,
        upper: center + half_width,
        alpha,
        z,
        eps0,
        n_digital,
        n_human,
        sigma_delta2,
        sigma_r2,
        eta,
    })
}

/// Interval around the mean digital decision; `sigma_delta2` and `sigma_r2`
/// use 1/N and 1/n normalizations.
pub fn theorem5_ci(
    digital: &[f64],
    deltas: &[f64],
    residuals: &[f64],
    eta: f64,
    alpha: f64,
    eps0: f64,
) -> Result<ConfidenceInterval> {
    if digital.len() != deltas.len() {
        return Err(Error::Dimension {
            what: "belief biases",
            expected: digital.len(),
            got: deltas.len(),
        });
    }
    if digital.len() < 2 || residuals.len() < 2 {
        return Err(Error::Insufficient(format!(
            "confidence interval needs N >= 2 and n >= 2, got N={}, n={}",
            digital.len(),
            residuals.len()
        )));
    }
    let center = digital.iter().sum::<f64>() / digital.len() as f64;
    theorem5_from_stats(
        center,
        digital.len(),
        residuals.len(),
        biased_var(deltas),
        biased_var(residuals),
        eta,
        alpha,
        eps0,
    )
}

/// `(1 - alpha)` empirical quantile of `|y_ref - ybar|` (the
/// `ceil((1 - alpha) n)`-th order statistic).
pub fn estimate_kappa(y_refs: &[f64], human_means: &[f64], alpha: f64) -> Result<f64> {
    if y_refs.len() != human_means.len() {
        return Err(Error::Dimension {
            what: "human means",
            expected: y_refs.len(),
            got: human_means.len(),
        });
    }
    if y_refs.is_empty() {
        return Err(Error::Empty("kappa inputs"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0,1), got {alpha}"
        )));
    }
    let mut gaps: Vec<f64> = y_refs
        .iter()
        .zip(human_means)
        .map(|(a, b)| (a - b).abs())
        .collect();
    gaps.sort_by(f64::total_cmp);
    let k = ((1.0 - alpha) * gaps.len() as f64).ceil() as usize;
    Ok(gaps[k.clamp(1, gaps.len()) - 1])
}
