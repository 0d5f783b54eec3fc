use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::empirical_w1;

/// Per-problem prediction or reference: an aggregated value plus the raw
/// decision distribution it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemOutcome {
    pub problem_id: String,
    pub value: f64,
    pub distribution: Vec<f64>,
}

impl ProblemOutcome {
    pub fn new(problem_id: impl Into<String>, value: f64, distribution: Vec<f64>) -> Self {
        ProblemOutcome {
            problem_id: problem_id.into(),
            value,
            distribution,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mae: f64,
    pub rmse: f64,
    pub cosine: f64,
    pub avg_wd: f64,
    pub n_problems: usize,
}

pub fn mae(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::Empty("residuals"));
    }
    Ok(residuals.iter().map(|r| r.abs()).sum::<f64>() / residuals.len() as f64)
}

pub fn rmse(residuals: &[f64]) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::Empty("residuals"));
    }
    Ok((residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt())
}

/// Cosine similarity. Two zero vectors are identical (1); one zero vector is
/// orthogonal to everything (0).
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "cosine operands",
            expected: a.len(),
            got: b.len(),
        });
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(match (na == 0.0, nb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (dot / (na * nb)).clamp(-1.0, 1.0),
    })
}

/// MAE, RMSE and cosine on aggregated values; mean per-problem W1 between
/// decision distributions. Problems are matched by id.
pub fn metrics(predicted: &[ProblemOutcome], reference: &[ProblemOutcome]) -> Result<MetricReport> {
    if predicted.is_empty() || reference.is_empty() {
        return Err(Error::Empty("metric inputs"));
    }
    if predicted.len() != reference.len() {
        return Err(Error::IdMismatch(format!(
            "{} predicted vs {} reference problems",
            predicted.len(),
            reference.len()
        )));
    }
    let by_id: HashMap<&str, &ProblemOutcome> = reference
        .iter()
        .map(|r| (r.problem_id.as_str(), r))
        .collect();
    let mut residuals = Vec::with_capacity(predicted.len());
    let mut pv = Vec::with_capacity(predicted.len());
    let mut rv = Vec::with_capacity(predicted.len());
    let mut wd = 0.0;
    for p in predicted {
        let r = by_id
            .get(p.problem_id.as_str())
            .ok_or_else(|| Error::IdMismatch(format!("no reference for {}", p.problem_id)))?;
        residuals.push(p.value - r.value);
        pv.push(p.value);
        rv.push(r.value);
        wd += empirical_w1(&p.distribution, &r.distribution)?;
    }
    Ok(MetricReport {
        mae: mae(&residuals)?,
        rmse: rmse(&residuals)?,
        cosine: cosine(&pv, &rv)?,
        avg_wd: wd / predicted.len() as f64,
        n_problems: predicted.len(),
    })
}

/// Fraction of absolute errors strictly below `threshold`.
pub fn resolution_rate(abs_errors: &[f64], threshold: f64) -> Result<f64> {
    if abs_errors.is_empty() {
        return Err(Error::Empty("absolute errors"));
    }
    let hits = abs_errors.iter().filter(|e| e.abs() < threshold).count();
    Ok(hits as f64 / abs_errors.len() as f64)
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            what: "spearman operands",
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Insufficient(
            "spearman needs at least 2 points".into(),
        ));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some(sxy / (sxx * syy).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(id: &str, v: f64) -> ProblemOutcome {
        ProblemOutcome::new(id, v, vec![v])
    }

    #[test]
    fn residual_examples() {
        assert_eq!(mae(&[1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(mae(&[0.0, 2.0]).unwrap(), 1.0);
        assert!((rmse(&[0.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn identity_report() {
        let p = vec![outcome("a", 2.0), outcome("b", 4.0)];
        let m = metrics(&p, &p).unwrap();
        assert_eq!((m.mae, m.rmse, m.avg_wd), (0.0, 0.0, 0.0));
        assert!((m.cosine - 1.0).abs() < 1e-15);
    }

    #[test]
    fn id_mismatch_and_empty() {
        let p = vec![outcome("a", 2.0)];
        let r = vec![outcome("b", 2.0)];
        assert!(matches!(metrics(&p, &r), Err(Error::IdMismatch(_))));
        assert!(metrics(&[], &[]).is_err());
    }

    #[test]
    fn resolution_examples() {
        assert_eq!(resolution_rate(&[0.0, 0.0], 0.5).unwrap(), 1.0);
        assert_eq!(resolution_rate(&[0.4, 0.6], 0.5).unwrap(), 0.5);
        assert_eq!(resolution_rate(&[0.1, 0.2], 0.0).unwrap(), 0.0);
        assert!(resolution_rate(&[], 0.5).is_err());
    }

    #[test]
    fn spearman_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap().unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&x, &[1.0; 4]).unwrap(), None);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn cosine_zero_conventions() {
        assert_eq!(cosine(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
    }
}
