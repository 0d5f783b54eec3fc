use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::{CachedBackend, ResponseCache};
use super::parse::parse_decision;
use super::prompt::{render_prompt, Strategy};
use super::LlmBackend;
use crate::data::{Problem, ProblemSet};
use crate::decision::{aggregate, Aggregator};
use crate::error::{Error, Result};
use crate::population::Profile;
use crate::rng::{derive_seed, str_tag};

/// Re-asks per sample after an unparseable completion.
pub const MAX_RETRIES: usize = 2;
/// Temperature used by self-consistency prompting.
pub const SELF_CONSISTENCY_TEMPERATURE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub strategy: Strategy,
    /// Samples per problem.
    pub k: usize,
    pub aggregator: Aggregator,
    pub temperature: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            strategy: Strategy::ZeroShot,
            k: 8,
            aggregator: Aggregator::Mean,
            temperature: 0.0,
        }
    }
}

impl ReferenceConfig {
    /// Temperature and aggregator actually used; self-consistency fixes both.
    pub fn effective(&self) -> (f64, Aggregator) {
        match self.strategy {
            Strategy::SelfConsistency => (SELF_CONSISTENCY_TEMPERATURE, Aggregator::Majority),
            _ => (self.temperature, self.aggregator),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("reference K must be >= 1".into()));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidArgument("temperature must be >= 0".into()));
        }
        Ok(())
    }
}

/// Seed of sample `k` (of `n`) on retry `attempt`: `seed + k + attempt * n`.
pub fn sample_seed(seed: u64, k: usize, n: usize, attempt: usize) -> u64 {
    seed.wrapping_add(k as u64)
        .wrapping_add((attempt * n) as u64)
}

/// Draw `n` parsed decisions for one prompt. A sample whose completions stay
/// unparseable after [`MAX_RETRIES`] re-asks is dropped; if every sample is
/// dropped the last parse error is returned.
pub fn sample_decisions(
    problem: &Problem,
    backend: &dyn LlmBackend,
    prompt: &str,
    n: usize,
    temperature: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut last_err = None;
    for k in 0..n {
        for attempt in 0..=MAX_RETRIES {
            let raw = backend.complete(prompt, temperature, sample_seed(seed, k, n, attempt))?;
            match parse_decision(&raw, &problem.scale) {
                Ok(v) => {
                    out.push(v);
                    break;
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    if out.is_empty() {
        return Err(last_err.unwrap_or(Error::Empty("reference samples")));
    }
    Ok(out)
}

/// Aggregate `K` sampled decisions into the reference decision.
pub fn generate_reference(
    problem: &Problem,
    backend: &dyn LlmBackend,
    cfg: &ReferenceConfig,
    persona: Option<&Profile>,
    seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    let bundle = render_prompt(problem, cfg.strategy, persona)?;
    let (temperature, aggregator) = cfg.effective();
    let samples = sample_decisions(problem, backend, &bundle.text, cfg.k, temperature, seed)?;
    let v = aggregate(&samples, aggregator)?;
    Ok(match aggregator {
        Aggregator::Majority => v,
        _ => problem.scale.project(v),
    })
}

/// Unbiased sample variance of `m` zero-shot decisions at `temperature`.
pub fn estimate_backend_variance(
    problem: &Problem,
    backend: &dyn LlmBackend,
    temperature: f64,
    m: usize,
    seed: u64,
) -> Result<f64> {
    if m < 2 {
        return Err(Error::Insufficient(format!(
            "variance needs m >= 2 samples, got {m}"
        )));
    }
    let bundle = render_prompt(problem, Strategy::ZeroShot, None)?;
    let s = sample_decisions(problem, backend, &bundle.text, m, temperature, seed)?;
    if s.len() < 2 {
        return Err(Error::Insufficient("fewer than 2 parseable samples".into()));
    }
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    Ok(s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64)
}

/// References for every problem. Each problem uses its own seed stream and
/// cache writes are committed in problem order, so results and the journal do
/// not depend on `parallelism`. The multi-persona strategy is not supported
/// here since it needs a persona per participant.
pub fn generate_references(
    problems: &ProblemSet,
    backend: &dyn LlmBackend,
    cache: Option<&ResponseCache>,
    cfg: &ReferenceConfig,
    seed: u64,
    parallelism: usize,
) -> Result<BTreeMap<String, f64>> {
    if cfg.strategy == Strategy::MultiPersona {
        return Err(Error::InvalidArgument(
            "population-level references use zero_shot or self_consistency".into(),
        ));
    }
    let run = |p: &Problem| -> Result<(f64, Vec<super::cache::JournalEntry>)> {
        let s = derive_seed(seed, &[str_tag(&p.id)]);
        match cache {
            Some(c) => {
                let view = CachedBackend::deferred(backend, c);
                let v = generate_reference(p, &view, cfg, None, s)?;
                Ok((v, view.into_pending()))
            }
            None => Ok((generate_reference(p, backend, cfg, None, s)?, Vec::new())),
        }
    };
    let results: Vec<Result<(f64, Vec<_>)>> = if parallelism > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::Backend(e.to_string()))?;
        pool.install(|| problems.as_slice().par_iter().map(run).collect())
    } else {
        problems.iter().map(run).collect()
    };
    let mut out = BTreeMap::new();
    for (p, r) in problems.iter().zip(results) {
        let (v, pending) = r?;
        if let Some(c) = cache {
            c.commit(pending)?;
        }
        out.insert(p.id.clone(), v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::StubBackend;
    use crate::data::DecisionScale;

    fn problem() -> Problem {
        Problem::new("p", "rate", "", "", DecisionScale::likert(1, 5).unwrap(), 4)
    }

    fn cycle() -> StubBackend {
        StubBackend::cycle(["3", "3", "4", "3", "5", "3", "3", "4"]).unwrap()
    }

    #[test]
    fn worked_aggregations() {
        let mean_cfg = ReferenceConfig::default();
        let p = problem();
        // A continuous scale keeps the mean unprojected.
        let pc = Problem::new(
            "p",
            "rate",
            "",
            "",
            DecisionScale::continuous(1.0, 5.0).unwrap(),
            4,
        );
        assert_eq!(
            generate_reference(&pc, &cycle(), &mean_cfg, None, 0).unwrap(),
            3.5
        );
        let maj = ReferenceConfig {
            aggregator: Aggregator::Majority,
            ..ReferenceConfig::default()
        };
        assert_eq!(
            generate_reference(&p, &cycle(), &maj, None, 0).unwrap(),
            3.0
        );
        let one = ReferenceConfig {
            k: 1,
            ..ReferenceConfig::default()
        };
        assert_eq!(
            generate_reference(&p, &cycle(), &one, None, 2).unwrap(),
            4.0
        );
    }

    #[test]
    fn retries_then_fails() {
        let p = problem();
        // Seeds 0..K: "x" at even seeds; retries land on odd ones.
        let flaky = StubBackend::cycle(["x", "2"]).unwrap();
        let cfg = ReferenceConfig {
            k: 1,
            ..ReferenceConfig::default()
        };
        assert_eq!(generate_reference(&p, &flaky, &cfg, None, 0).unwrap(), 2.0);
        let dead = StubBackend::cycle(["nothing"]).unwrap();
        assert!(matches!(
            generate_reference(&p, &dead, &cfg, None, 0),
            Err(Error::Unparseable { .. })
        ));
    }

    #[test]
    fn variance_examples() {
        let p = problem();
        let alt = StubBackend::cycle(["2", "4"]).unwrap();
        let v = estimate_backend_variance(&p, &alt, 1.0, 100, 0).unwrap();
        assert!((v - 100.0 / 99.0).abs() < 1e-12);
        let same = StubBackend::cycle(["3"]).unwrap();
        assert_eq!(
            estimate_backend_variance(&p, &same, 0.0, 2, 0).unwrap(),
            0.0
        );
        assert!(estimate_backend_variance(&p, &same, 0.0, 1, 0).is_err());
    }

    #[test]
    fn warm_cache_skips_backend() {
        let problems = ProblemSet::new(vec![
            Problem::new(
                "a",
                "first",
                "",
                "",
                DecisionScale::likert(1, 5).unwrap(),
                4,
            ),
            Problem::new(
                "b",
                "second",
                "",
                "",
                DecisionScale::likert(1, 5).unwrap(),
                4,
            ),
        ])
        .unwrap();
        let cache = ResponseCache::in_memory();
        let cfg = ReferenceConfig::default();
        let cold = generate_references(&problems, &cycle(), Some(&cache), &cfg, 5, 2).unwrap();
        let live = cache.live_calls();
        assert_eq!(live, 16);
        let warm = generate_references(&problems, &cycle(), Some(&cache), &cfg, 5, 1).unwrap();
        assert_eq!(cold, warm);
        assert_eq!(cache.live_calls(), live);
    }
}
