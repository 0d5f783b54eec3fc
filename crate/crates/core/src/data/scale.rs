use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LEVEL_TOL: f64 = 1e-9;

/// The domain a decision lives in.
///
/// Constructed values are always valid: the serde path goes through the same
/// checks as the constructors, so an invalid scale never reaches downstream code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScale", into = "RawScale")]
pub enum DecisionScale {
    Continuous {
        lo: f64,
        hi: f64,
    },
    /// Strictly increasing numeric levels; decisions are stored as the level value.
    Ordinal {
        levels: Vec<f64>,
    },
    /// Alternatives `1..=alternatives`.
    Choice {
        alternatives: usize,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawScale {
    Continuous { lo: f64, hi: f64 },
    Ordinal { levels: Vec<f64> },
    Choice { alternatives: usize },
}

impl TryFrom<RawScale> for DecisionScale {
    type Error = Error;

    fn try_from(raw: RawScale) -> Result<Self> {
        match raw {
            RawScale::Continuous { lo, hi } => DecisionScale::continuous(lo, hi),
            RawScale::Ordinal { levels } => DecisionScale::ordinal(levels),
            RawScale::Choice { alternatives } => DecisionScale::choice(alternatives),
        }
    }
}

impl From<DecisionScale> for RawScale {
    fn from(s: DecisionScale) -> Self {
        match s {
            DecisionScale::Continuous { lo, hi } => RawScale::Continuous { lo, hi },
            DecisionScale::Ordinal { levels } => RawScale::Ordinal { levels },
            DecisionScale::Choice { alternatives } => RawScale::Choice { alternatives },
        }
    }
}

impl DecisionScale {
    pub fn continuous(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidScale(format!(
                "continuous scale needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(DecisionScale::Continuous { lo, hi })
    }

    pub fn ordinal(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidScale(
                "ordinal scale needs at least two levels".into(),
            ));
        }
        if levels.iter().any(|l| !l.is_finite()) || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidScale(format!(
                "ordinal levels must be finite and strictly increasing: {levels:?}"
            )));
        }
        Ok(DecisionScale::Ordinal { levels })
    }

    /// Ordinal scale with integer levels `lo..=hi`.
    pub fn likert(lo: i32, hi: i32) -> Result<Self> {
        DecisionScale::ordinal((lo..=hi).map(f64::from).collect())
    }

    pub fn choice(alternatives: usize) -> Result<Self> {
        if alternatives < 2 {
            return Err(Error::InvalidScale(format!(
                "choice scale needs at least two alternatives, got {alternatives}"
            )));
        }
        Ok(DecisionScale::Choice { alternatives })
    }

    pub fn contains(&self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        match self {
            DecisionScale::Continuous { lo, hi } => *lo <= v && v <= *hi,
            DecisionScale::Ordinal { levels } => levels.iter().any(|l| (l - v).abs() <= LEVEL_TOL),
            DecisionScale::Choice { alternatives } => {
                v.fract() == 0.0 && v >= 1.0 && v <= *alternatives as f64
            }
        }
    }

    pub fn check(&self, v: f64) -> Result<f64> {
        if self.contains(v) {
            Ok(v)
        } else {
            Err(Error::OffScale {
                value: v,
                scale: self.to_string(),
            })
        }
    }

    /// Map any finite number onto the scale: clamp for continuous, nearest level
    /// (ties go up) for ordinal and choice.
    pub fn project(&self, v: f64) -> f64 {
        match self {
            DecisionScale::Continuous { lo, hi } => v.clamp(*lo, *hi),
            DecisionScale::Ordinal { levels } => nearest_level_half_up(levels, v),
            DecisionScale::Choice { alternatives } => {
                (v + 0.5).floor().clamp(1.0, *alternatives as f64)
            }
        }
    }

    /// Lowest and highest admissible values.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            DecisionScale::Continuous { lo, hi } => (*lo, *hi),
            DecisionScale::Ordinal { levels } => (levels[0], levels[levels.len() - 1]),
            DecisionScale::Choice { alternatives } => (1.0, *alternatives as f64),
        }
    }

    /// Discrete support, if any.
    pub fn levels(&self) -> Option<Vec<f64>> {
        match self {
            DecisionScale::Continuous { .. } => None,
            DecisionScale::Ordinal { levels } => Some(levels.clone()),
            DecisionScale::Choice { alternatives } => {
                Some((1..=*alternatives).map(|k| k as f64).collect())
            }
        }
    }

    /// Index of `v` within the discrete support.
    pub fn level_index(&self, v: f64) -> Option<usize> {
        self.levels()?
            .iter()
            .position(|l| (l - v).abs() <= LEVEL_TOL)
    }

    pub fn is_choice(&self) -> bool {
        matches!(self, DecisionScale::Choice { .. })
    }

    /// Width of the decision vector used by the belief generator: one coordinate
    /// for numeric scales, one per alternative for choice scales.
    pub fn decision_dim(&self) -> usize {
        match self {
            DecisionScale::Choice { alternatives } => *alternatives,
            _ => 1,
        }
    }

    /// Human-readable instruction embedded in prompts.
    pub fn instruction(&self) -> String {
        match self {
            DecisionScale::Continuous { lo, hi } => {
                format!("Answer with a single number between {lo} and {hi}.")
            }
            DecisionScale::Ordinal { levels } => {
                let joined: Vec<String> = levels.iter().map(|l| l.to_string()).collect();
                format!("Answer with exactly one of: {}.", joined.join(", "))
            }
            DecisionScale::Choice { alternatives } => {
                format!("Answer with the number of exactly one option, from 1 to {alternatives}.")
            }
        }
    }
}

fn nearest_level_half_up(levels: &[f64], v: f64) -> f64 {
    let mut best = levels[0];
    for w in levels.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        if v >= mid {
            best = w[1];
        } else {
            break;
        }
    }
    best
}

impl fmt::Display for DecisionScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionScale::Continuous { lo, hi } => write!(f, "continuous[{lo}, {hi}]"),
            DecisionScale::Ordinal { levels } => write!(f, "ordinal{levels:?}"),
            DecisionScale::Choice { alternatives } => write!(f, "choice[1..={alternatives}]"),
        }
    }
}
