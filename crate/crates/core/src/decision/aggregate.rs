use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order-free statistics over one problem's decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    Mean,
    Median,
    Majority,
}

impl Aggregator {
    pub const ALL: [Aggregator; 3] = [Aggregator::Mean, Aggregator::Median, Aggregator::Majority];

    pub fn name(&self) -> &'static str {
        match self {
            Aggregator::Mean => "mean",
            Aggregator::Median => "median",
            Aggregator::Majority => "majority",
        }
    }
}

impl std::str::FromStr for Aggregator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Aggregator::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown aggregator {s:?}")))
    }
}

fn check(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty("responses to aggregate"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("responses to aggregate"));
    }
    Ok(())
}

/// Arithmetic mean computed about the first value, so a constant input is
/// returned exactly.
pub fn mean(values: &[f64]) -> Result<f64> {
    check(values)?;
    let x0 = values[0];
    Ok(x0 + values.iter().map(|v| v - x0).sum::<f64>() / values.len() as f64)
}

/// Middle order statistic; the average of the two middle values for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    check(values)?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Most frequent value; ties go to the smallest value.
pub fn majority(values: &[f64]) -> Result<f64> {
    check(values)?;
    let mut counts: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
    for &v in values {
        // Order-preserving key for finite floats (-0.0 folded into 0.0).
        let v = if v == 0.0 { 0.0 } else { v };
        let bits = v.to_bits() as i64;
        let key = if bits < 0 { bits ^ i64::MAX } else { bits };
        counts.entry(key).or_insert((v, 0)).1 += 1;
    }
    let best = counts.values().map(|(_, c)| *c).max().unwrap_or(0);
    Ok(counts
        .values()
        .find(|(_, c)| *c == best)
        .map(|(v, _)| *v)
        .unwrap_or(f64::NAN))
}

pub fn aggregate(values: &[f64], method: Aggregator) -> Result<f64> {
    match method {
        Aggregator::Mean => mean(values),
        Aggregator::Median => median(values),
        Aggregator::Majority => majority(values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        for a in Aggregator::ALL {
            assert_eq!(aggregate(&[4.0], a).unwrap(), 4.0);
        }
        assert_eq!(majority(&[1.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(median(&[1.0, 2.0, 2.0, 5.0]).unwrap(), 2.0);
        assert_eq!(mean(&[1.0, 2.0, 2.0, 5.0]).unwrap(), 2.5);
        assert!(aggregate(&[], Aggregator::Mean).is_err());
    }

    #[test]
    fn ties_and_signs() {
        assert_eq!(majority(&[3.0, 2.0, 3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(majority(&[-1.0, 2.0, -1.0, 2.0]).unwrap(), -1.0);
        assert_eq!(majority(&[-3.0, -2.0]).unwrap(), -3.0);
    }

    #[test]
    fn constant_mean_is_exact() {
        let v = vec![0.1 + 0.2; 7];
        assert_eq!(mean(&v).unwrap(), 0.1 + 0.2);
    }

    #[test]
    fn parse_names() {
        assert_eq!("median".parse::<Aggregator>().unwrap(), Aggregator::Median);
        assert!("mode".parse::<Aggregator>().is_err());
    }
}
