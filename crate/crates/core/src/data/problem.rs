use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::io::read_json_lines;
use super::DecisionScale;
use crate::error::{Error, Result};

pub const DEFAULT_FEATURE_DIM: usize = 32;

/// A task put to every participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub description: String,
    #[serde(default)]
    pub requirements: String,
    #[serde(default)]
    pub context: String,
    pub scale: DecisionScale,
    /// Numeric embedding of the description fed to the belief generator.
    pub features: Vec<f64>,
}

/// On-disk form: `features` may be omitted, in which case a hashed
/// bag-of-tokens vector is derived from the description.
#[derive(Debug, Deserialize)]
struct ProblemRecord {
    id: String,
    description: String,
    #[serde(default)]
    requirements: String,
    #[serde(default)]
    context: String,
    scale: DecisionScale,
    #[serde(default)]
    features: Option<Vec<f64>>,
}

impl Problem {
    /// Build a problem whose features come from [`hashed_features`].
    pub fn new(
        id: impl Into<String>,
        description: impl Into<String>,
        requirements: impl Into<String>,
        context: impl Into<String>,
        scale: DecisionScale,
        feature_dim: usize,
    ) -> Self {
        let description = description.into();
        let features = hashed_features(&description, feature_dim);
        Problem {
            id: id.into(),
            description,
            requirements: requirements.into(),
            context: context.into(),
            scale,
            features,
        }
    }

    pub fn with_features(mut self, features: Vec<f64>) -> Self {
        self.features = features;
        self
    }
}

/// Deterministic signed feature hashing of lower-cased alphanumeric tokens,
/// L2-normalised (all-zero when the text has no tokens).
pub fn hashed_features(text: &str, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    if dim == 0 {
        return v;
    }
    for token in text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        let digest = Sha256::digest(token.to_lowercase().as_bytes());
        let mut idx_bytes = [0u8; 8];
        idx_bytes.copy_from_slice(&digest[..8]);
        let idx = (u64::from_le_bytes(idx_bytes) % dim as u64) as usize;
        let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
        v[idx] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Problems keyed by id, kept in file order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Problem>", into = "Vec<Problem>")]
pub struct ProblemSet {
    problems: Vec<Problem>,
    index: HashMap<String, usize>,
}

impl TryFrom<Vec<Problem>> for ProblemSet {
    type Error = Error;

    fn try_from(problems: Vec<Problem>) -> Result<Self> {
        ProblemSet::new(problems)
    }
}

impl From<ProblemSet> for Vec<Problem> {
    fn from(set: ProblemSet) -> Self {
        set.problems
    }
}

impl ProblemSet {
    pub fn new(problems: Vec<Problem>) -> Result<Self> {
        let mut index = HashMap::with_capacity(problems.len());
        let mut dim = None;
        for (i, p) in problems.iter().enumerate() {
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::DuplicateProblem(p.id.clone()));
            }
            if p.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("problem features"));
            }
            match dim {
                None => dim = Some(p.features.len()),
                Some(d) if d != p.features.len() => {
                    return Err(Error::Dimension {
                        what: "problem features",
                        expected: d,
                        got: p.features.len(),
                    })
                }
                _ => {}
            }
        }
        if dim == Some(0) {
            return Err(Error::InvalidArgument(
                "problem feature dimension must be positive".into(),
            ));
        }
        Ok(ProblemSet { problems, index })
    }

    pub fn get(&self, id: &str) -> Option<&Problem> {
        self.index.get(id).map(|&i| &self.problems[i])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Problem> {
        self.problems.iter()
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.problems.first().map(|p| p.features.len())
    }

    pub fn as_slice(&self) -> &[Problem] {
        &self.problems
    }

    /// Subset in the given id order.
    pub fn select(&self, ids: &[String]) -> Result<ProblemSet> {
        let picked = ids
            .iter()
            .map(|id| {
                self.get(id)
                    .cloned()
                    .ok_or_else(|| Error::UnknownProblem(id.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        ProblemSet::new(picked)
    }
}

/// Load problems from JSON-lines; missing `features` are hashed to `feature_dim`.
pub fn load_problems(path: impl AsRef<Path>, feature_dim: usize) -> Result<ProblemSet> {
    let records: Vec<ProblemRecord> = read_json_lines(path.as_ref())?;
    let problems = records
        .into_iter()
        .map(|r| {
            let features = match r.features {
                Some(f) => f,
                None => hashed_features(&r.description, feature_dim),
            };
            Problem {
                id: r.id,
                description: r.description,
                requirements: r.requirements,
                context: r.context,
                scale: r.scale,
                features,
            }
        })
        .collect();
    ProblemSet::new(problems)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashed_features_are_deterministic_and_normalised() {
        let a = hashed_features("Is this comment offensive?", 32);
        let b = hashed_features("is THIS comment offensive", 32);
        assert_eq!(a, b);
        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        assert_eq!(hashed_features("   ", 8), vec![0.0; 8]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let s = DecisionScale::likert(1, 5).unwrap();
        let p = Problem::new("p1", "a", "", "", s, 4);
        assert!(matches!(
            ProblemSet::new(vec![p.clone(), p]),
            Err(Error::DuplicateProblem(_))
        ));
    }

    #[test]
    fn mixed_feature_dims_rejected() {
        let s = DecisionScale::likert(1, 5).unwrap();
        let a = Problem::new("a", "x", "", "", s.clone(), 4);
        let b = Problem::new("b", "y", "", "", s, 5);
        assert!(matches!(
            ProblemSet::new(vec![a, b]),
            Err(Error::Dimension { .. })
        ));
    }
}
