use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::LlmBackend;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, str_tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRule {
    /// Substring that must occur in the prompt.
    pub contains: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleAdjustment {
    pub contains: String,
    pub shift: f64,
}

/// Deterministic stand-ins for a hosted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StubMode {
    /// Returns `outputs[seed % len]` regardless of prompt and temperature.
    Cycle { outputs: Vec<String> },
    /// The first matching rule sets a base value (else `default`); every
    /// matching adjustment is added; Gaussian noise of scale
    /// `noise * temperature` is drawn from a stream keyed by (prompt, seed).
    Oracle {
        rules: Vec<OracleRule>,
        #[serde(default)]
        adjustments: Vec<OracleAdjustment>,
        default: f64,
        #[serde(default)]
        noise: f64,
        #[serde(default)]
        decimals: usize,
    },
}

#[derive(Debug, Clone)]
pub struct StubBackend {
    mode: StubMode,
    tag: String,
}

impl StubBackend {
    pub fn new(mode: StubMode) -> Result<Self> {
        match &mode {
            StubMode::Cycle { outputs } if outputs.is_empty() => {
                return Err(Error::InvalidArgument(
                    "cycle stub needs at least one output".into(),
                ))
            }
            StubMode::Oracle { noise, default, .. }
                if !(noise.is_finite() && *noise >= 0.0 && default.is_finite()) =>
            {
                return Err(Error::InvalidArgument(
                    "oracle stub needs finite default and noise >= 0".into(),
                ))
            }
            _ => {}
        }
        let json = serde_json::to_vec(&mode).expect("stub mode serializes");
        let tag = hex::encode(&Sha256::digest(&json)[..6]);
        Ok(StubBackend { mode, tag })
    }

    pub fn cycle<S: Into<String>>(outputs: impl IntoIterator<Item = S>) -> Result<Self> {
        Self::new(StubMode::Cycle {
            outputs: outputs.into_iter().map(Into::into).collect(),
        })
    }
}

impl LlmBackend for StubBackend {
    fn complete(&self, prompt: &str, temperature: f64, seed: u64) -> Result<String> {
        match &self.mode {
            StubMode::Cycle { outputs } => {
                Ok(outputs[(seed % outputs.len() as u64) as usize].clone())
            }
            StubMode::Oracle {
                rules,
                adjustments,
                default,
                noise,
                decimals,
            } => {
                let base = rules
                    .iter()
                    .find(|r| prompt.contains(&r.contains))
                    .map_or(*default, |r| r.value);
                let shift: f64 = adjustments
                    .iter()
                    .filter(|a| prompt.contains(&a.contains))
                    .map(|a| a.shift)
                    .sum();
                let mut v = base + shift;
                if *noise > 0.0 && temperature > 0.0 {
                    let mut rng = rng_from_seed(derive_seed(str_tag(prompt), &[seed]));
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v += noise * temperature * z;
                }
                Ok(format!("My answer: {v:.decimals$}"))
            }
        }
    }

    fn descriptor(&self) -> String {
        format!("stub:{}", self.tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_by_seed() {
        let s = StubBackend::cycle(["a", "b", "c"]).unwrap();
        assert_eq!(s.complete("x", 0.0, 4).unwrap(), "b");
        assert!(StubBackend::cycle(Vec::<String>::new()).is_err());
    }

    #[test]
    fn oracle_is_pure() {
        let s = StubBackend::new(StubMode::Oracle {
            rules: vec![OracleRule {
                contains: "apples".into(),
                value: 4.0,
            }],
            adjustments: vec![OracleAdjustment {
                contains: "teacher".into(),
                shift: -1.0,
            }],
            default: 2.0,
            noise: 1.0,
            decimals: 2,
        })
        .unwrap();
        assert_eq!(
            s.complete("rate apples", 0.0, 1).unwrap(),
            "My answer: 4.00"
        );
        assert_eq!(
            s.complete("rate apples as a teacher", 0.0, 1).unwrap(),
            "My answer: 3.00"
        );
        assert_eq!(s.complete("pears", 0.0, 9).unwrap(), "My answer: 2.00");
        let a = s.complete("rate apples", 0.7, 3).unwrap();
        assert_eq!(a, s.complete("rate apples", 0.7, 3).unwrap());
        assert_ne!(a, s.complete("rate apples", 0.7, 4).unwrap());
    }
}
