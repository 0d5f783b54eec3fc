use indexmap::IndexMap;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

const PROB_TOL: f64 = 1e-9;
/// Rejection cap per profile when a pool constraint is active.
pub const MAX_POOL_ATTEMPTS: usize = 1000;

/// Target profile distribution plus the qualified-pool constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ProfileSpec {
    fields: Vec<FieldSpec>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    fields: Vec<FieldSpec>,
}

impl TryFrom<RawSpec> for ProfileSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        ProfileSpec::new(raw.fields)
    }
}

impl From<ProfileSpec> for RawSpec {
    fn from(s: ProfileSpec) -> Self {
        RawSpec { fields: s.fields }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    #[serde(flatten)]
    pub dist: FieldDist,
    /// Qualified pool: admissible levels or range. `None` admits everything.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow: Option<Allow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldDist {
    Categorical {
        levels: Vec<String>,
        probs: Vec<f64>,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Normal {
        mean: f64,
        std: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Allow {
    Levels(Vec<String>),
    Range { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileValue {
    Number(f64),
    Level(String),
}

impl ProfileValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            ProfileValue::Number(x) => Some(*x),
            ProfileValue::Level(_) => None,
        }
    }

    pub fn as_level(&self) -> Option<&str> {
        match self {
            ProfileValue::Level(s) => Some(s),
            ProfileValue::Number(_) => None,
        }
    }
}

impl std::fmt::Display for ProfileValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProfileValue::Number(x) => write!(f, "{x}"),
            ProfileValue::Level(s) => f.write_str(s),
        }
    }
}

/// One virtual (or real) participant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub participant_id: String,
    pub values: IndexMap<String, ProfileValue>,
    /// One-hot categorical blocks followed by min-max scaled continuous values,
    /// in field order.
    pub encoded: Vec<f64>,
}

impl FieldSpec {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(format!("field {}: {msg}", self.name)));
        match &self.dist {
            FieldDist::Categorical { levels, probs } => {
                if levels.is_empty() || levels.len() != probs.len() {
                    return bad("levels and probs must be nonempty and equal length".into());
                }
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return bad("probabilities must be finite and nonnegative".into());
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_TOL {
                    return bad(format!("probabilities sum to {total}, not 1"));
                }
                let mut seen = std::collections::HashSet::new();
                if !levels.iter().all(|l| seen.insert(l)) {
                    return bad("duplicate level".into());
                }
                match &self.allow {
                    None => {}
                    Some(Allow::Levels(allowed)) => {
                        if let Some(x) = allowed.iter().find(|a| !levels.contains(a)) {
                            return bad(format!("allow-list names unknown level {x}"));
                        }
                        let mass: f64 = levels
                            .iter()
                            .zip(probs)
                            .filter(|(l, _)| allowed.contains(l))
                            .map(|(_, p)| p)
                            .sum();
                        if mass <= 0.0 {
                            return bad("allow-list has zero probability".into());
                        }
                    }
                    Some(Allow::Range { .. }) => {
                        return bad("categorical field needs a level allow-list".into())
                    }
                }
            }
            FieldDist::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return bad(format!("uniform needs finite lo < hi, got [{lo}, {hi}]"));
                }
            }
            FieldDist::Normal { mean, std } => {
                if !(mean.is_finite() && std.is_finite() && *std > 0.0) {
                    return bad(format!(
                        "normal needs finite mean and std > 0, got ({mean}, {std})"
                    ));
                }
            }
        }
        if let (Some(Allow::Range { lo, hi }), false) = (&self.allow, self.is_categorical()) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("allowed range [{lo}, {hi}] is invalid"));
            }
        }
        if let (Some(Allow::Levels(_)), false) = (&self.allow, self.is_categorical()) {
            return bad("continuous field needs a range allow-list".into());
        }
        Ok(())
    }

    fn is_categorical(&self) -> bool {
        matches!(self.dist, FieldDist::Categorical { .. })
    }

    fn width(&self) -> usize {
        match &self.dist {
            FieldDist::Categorical { levels, .. } => levels.len(),
            _ => 1,
        }
    }

    /// Range used for min-max scaling. Normals use mean +/- 3 std.
    fn scaling_range(&self) -> (f64, f64) {
        match self.dist {
            FieldDist::Uniform { lo, hi } => (lo, hi),
            FieldDist::Normal { mean, std } => (mean - 3.0 * std, mean + 3.0 * std),
            FieldDist::Categorical { .. } => (0.0, 1.0),
        }
    }

    fn admits(&self, value: &ProfileValue) -> bool {
        match (&self.allow, value) {
            (None, _) => true,
            (Some(Allow::Levels(allowed)), ProfileValue::Level(l)) => allowed.contains(l),
            (Some(Allow::Range { lo, hi }), ProfileValue::Number(x)) => *lo <= *x && *x <= *hi,
            _ => false,
        }
    }
}

impl ProfileSpec {
    pub fn new(fields: Vec<FieldSpec>) -> Result<Self> {
        let mut names = std::collections::HashSet::new();
        for f in &fields {
            if !names.insert(f.name.as_str()) {
                return Err(Error::InvalidSpec(format!("duplicate field {}", f.name)));
            }
            f.validate()?;
        }
        Ok(ProfileSpec { fields })
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    /// d_z, the encoded profile length.
    pub fn encoded_dim(&self) -> usize {
        self.fields.iter().map(FieldSpec::width).sum()
    }

    pub fn encode(&self, values: &IndexMap<String, ProfileValue>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.encoded_dim());
        for f in &self.fields {
            let v = values
                .get(&f.name)
                .ok_or_else(|| Error::InvalidSpec(format!("profile lacks field {}", f.name)))?;
            match (&f.dist, v) {
                (FieldDist::Categorical { levels, .. }, ProfileValue::Level(l)) => {
                    let k = levels.iter().position(|x| x == l).ok_or_else(|| {
                        Error::InvalidSpec(format!("{l:?} is not a level of {}", f.name))
                    })?;
                    out.extend((0..levels.len()).map(|j| if j == k { 1.0 } else { 0.0 }));
                }
                (FieldDist::Uniform { .. } | FieldDist::Normal { .. }, ProfileValue::Number(x)) => {
                    let (lo, hi) = f.scaling_range();
                    out.push((x - lo) / (hi - lo));
                }
                _ => {
                    return Err(Error::InvalidSpec(format!(
                        "value {v} has the wrong type for field {}",
                        f.name
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Recover the categorical level of field `field` from an encoded vector.
    pub fn decode_level<'a>(&'a self, encoded: &[f64], field: &str) -> Option<&'a str> {
        let mut offset = 0;
        for f in &self.fields {
            if f.name == field {
                let FieldDist::Categorical { levels, .. } = &f.dist else {
                    return None;
                };
                let block = encoded.get(offset..offset + levels.len())?;
                let k = block
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(k, _)| k)?;
                return Some(&levels[k]);
            }
            offset += f.width();
        }
        None
    }

    /// Build a profile from raw field values (e.g. a real participant's record).
    pub fn make_profile(
        &self,
        participant_id: impl Into<String>,
        values: IndexMap<String, ProfileValue>,
    ) -> Result<Profile> {
        let encoded = self.encode(&values)?;
        Ok(Profile {
            participant_id: participant_id.into(),
            values,
            encoded,
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Result<IndexMap<String, ProfileValue>> {
        let mut values = IndexMap::with_capacity(self.fields.len());
        for f in &self.fields {
            let v = match &f.dist {
                FieldDist::Categorical { levels, probs } => {
                    let idx =
                        WeightedIndex::new(probs).map_err(|e| Error::InvalidSpec(e.to_string()))?;
                    ProfileValue::Level(levels[idx.sample(rng)].clone())
                }
                FieldDist::Uniform { lo, hi } => ProfileValue::Number(rng.random_range(*lo..*hi)),
                FieldDist::Normal { mean, std } => {
                    let n =
                        Normal::new(*mean, *std).map_err(|e| Error::InvalidSpec(e.to_string()))?;
                    ProfileValue::Number(n.sample(rng))
                }
            };
            values.insert(f.name.clone(), v);
        }
        Ok(values)
    }

    fn admits(&self, values: &IndexMap<String, ProfileValue>) -> bool {
        self.fields.iter().all(|f| f.admits(&values[&f.name]))
    }
}

/// Draw `n` i.i.d. profiles. Profile `i` consumes its own derived stream, so
/// the result depends only on `(spec, n, seed)`.
pub fn sample_profiles(spec: &ProfileSpec, n: usize, seed: u64) -> Result<Vec<Profile>> {
    (0..n)
        .map(|i| {
            let mut rng = rng_from_seed(derive_seed(seed, &[i as u64]));
            for _ in 0..MAX_POOL_ATTEMPTS {
                let values = spec.draw(&mut rng)?;
                if spec.admits(&values) {
                    return spec.make_profile(format!("v{i:05}"), values);
                }
            }
            Err(Error::PoolExhausted {
                attempts: MAX_POOL_ATTEMPTS,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gender(probs: Vec<f64>) -> FieldSpec {
        let levels = ["F", "M"]
            .iter()
            .take(probs.len())
            .map(|s| s.to_string())
            .collect();
        FieldSpec {
            name: "Gender".into(),
            dist: FieldDist::Categorical { levels, probs },
            allow: None,
        }
    }

    #[test]
    fn rejects_non_simplex() {
        assert!(ProfileSpec::new(vec![gender(vec![0.6, 0.6])]).is_err());
        assert!(ProfileSpec::new(vec![gender(vec![1.2, -0.2])]).is_err());
        assert!(ProfileSpec::new(vec![gender(vec![0.5, 0.5 + 1e-12])]).is_ok());
    }

    #[test]
    fn empty_draw() {
        let spec = ProfileSpec::new(vec![gender(vec![0.5, 0.5])]).unwrap();
        assert!(sample_profiles(&spec, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn degenerate_category() {
        let spec = ProfileSpec::new(vec![gender(vec![1.0])]).unwrap();
        let ps = sample_profiles(&spec, 5, 3).unwrap();
        assert!(ps
            .iter()
            .all(|p| p.values["Gender"].as_level() == Some("F")));
    }

    #[test]
    fn balanced_category_frequency() {
        let spec = ProfileSpec::new(vec![gender(vec![0.5, 0.5])]).unwrap();
        let ps = sample_profiles(&spec, 10_000, 2024).unwrap();
        let f = ps
            .iter()
            .filter(|p| p.values["Gender"].as_level() == Some("F"))
            .count() as f64
            / 10_000.0;
        // 4 sigma of Binomial(10^4, 0.5) / 10^4 = 0.02
        assert!((f - 0.5).abs() <= 0.02, "F frequency {f}");
    }

    #[test]
    fn pool_constraint_by_rejection() {
        let spec = ProfileSpec::new(vec![FieldSpec {
            name: "Age".into(),
            dist: FieldDist::Uniform { lo: 18.0, hi: 80.0 },
            allow: Some(Allow::Range { lo: 30.0, hi: 40.0 }),
        }])
        .unwrap();
        let ps = sample_profiles(&spec, 200, 9).unwrap();
        assert!(ps.iter().all(|p| {
            let a = p.values["Age"].as_number().unwrap();
            (30.0..=40.0).contains(&a)
        }));

        let impossible = ProfileSpec::new(vec![FieldSpec {
            name: "Age".into(),
            dist: FieldDist::Uniform { lo: 18.0, hi: 80.0 },
            allow: Some(Allow::Range { lo: 90.0, hi: 95.0 }),
        }])
        .unwrap();
        assert!(matches!(
            sample_profiles(&impossible, 1, 0),
            Err(Error::PoolExhausted { .. })
        ));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let text = r#"{"fields":[
            {"name":"Gender","kind":"categorical","levels":["F","M"],"probs":[0.5,0.5],"allow":["F"]},
            {"name":"Age","kind":"normal","mean":40,"std":10}
        ]}"#;
        let spec: ProfileSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.encoded_dim(), 3);
        let back: ProfileSpec =
            serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(spec, back);
        let bad = r#"{"fields":[{"name":"G","kind":"categorical","levels":["F"],"probs":[0.3]}]}"#;
        assert!(serde_json::from_str::<ProfileSpec>(bad).is_err());
    }
}
