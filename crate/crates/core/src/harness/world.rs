use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::backend::{OracleRule, StubMode};
use crate::beliefnet::{BeliefNet, NetDims};
use crate::data::{DecisionScale, Problem, ProblemSet, Response, ResponseMatrix};
use crate::error::{Error, Result};
use crate::population::{sample_profiles, FieldDist, FieldSpec, Profile, ProfileSpec};
use crate::rng::{derive_seed, rng_from_seed};

const PROBLEM_STREAM: u64 = 1;
const NET_STREAM: u64 = 2;
const PROFILE_STREAM: u64 = 3;
const TASK_STREAM: u64 = 4;
const NOISE_STREAM: u64 = 5;
const SPLIT_STREAM: u64 = 6;

/// Ground-truth model for a synthetic study. The population answers problem
/// `t` around `g(t) = y_ref(t) + b(x_t)`, where `b` is the readout of a fixed
/// random belief net at a neutral profile; participant `i` adds
/// `eps_div * u_i` with `u_i` the standardized value of `diversity_field`, and
/// each response adds `N(0, sigma_resp^2)` noise before projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldSpec {
    pub n_problems: usize,
    pub test_fraction: f64,
    pub feature_dim: usize,
    pub scale_lo: f64,
    pub scale_hi: f64,
    /// Reference decisions are drawn uniformly from this range.
    pub reference_lo: f64,
    pub reference_hi: f64,
    /// Standard deviation of `b(x_t)` across problems.
    pub belief_scale: f64,
    pub profile_spec: ProfileSpec,
    /// Normal field whose standardized value carries the participant offset.
    pub diversity_field: String,
    pub n_workers: usize,
    pub tasks_per_worker: usize,
    pub sigma_resp: f64,
    pub eps_div: f64,
}

pub fn default_world_profile_spec() -> ProfileSpec {
    let field = |name: &str, dist| FieldSpec {
        name: name.into(),
        dist,
        allow: None,
    };
    ProfileSpec::new(vec![
        field(
            "Trait",
            FieldDist::Normal {
                mean: 0.0,
                std: 1.0,
            },
        ),
        field(
            "Group",
            FieldDist::Categorical {
                levels: vec!["a".into(), "b".into()],
                probs: vec![0.5, 0.5],
            },
        ),
        field("Age", FieldDist::Uniform { lo: 18.0, hi: 80.0 }),
    ])
    .expect("built-in spec is valid")
}

impl Default for WorldSpec {
    fn default() -> Self {
        WorldSpec {
            n_problems: 50,
            test_fraction: 0.2,
            feature_dim: 16,
            scale_lo: 0.0,
            scale_hi: 10.0,
            reference_lo: 3.0,
            reference_hi: 7.0,
            belief_scale: 0.5,
            profile_spec: default_world_profile_spec(),
            diversity_field: "Trait".into(),
            n_workers: 10,
            tasks_per_worker: 10,
            sigma_resp: 0.0,
            eps_div: 0.0,
        }
    }
}

impl WorldSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_problems < 2 {
            return bad("world needs at least 2 problems".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad(format!(
                "test_fraction must lie in (0,1), got {}",
                self.test_fraction
            ));
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be > 0".into());
        }
        if !(self.scale_lo < self.reference_lo
            && self.reference_lo < self.reference_hi
            && self.reference_hi < self.scale_hi)
        {
            return bad("need scale_lo < reference_lo < reference_hi < scale_hi".into());
        }
        for (name, v) in [
            ("belief_scale", self.belief_scale),
            ("sigma_resp", self.sigma_resp),
            ("eps_div", self.eps_div),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        if self.tasks_per_worker == 0 {
            return bad("tasks_per_worker must be >= 1".into());
        }
        self.diversity_moments().map(|_| ())
    }

    fn diversity_moments(&self) -> Result<(f64, f64)> {
        match self
            .profile_spec
            .fields()
            .iter()
            .find(|f| f.name == self.diversity_field)
        {
            Some(FieldSpec {
                dist: FieldDist::Normal { mean, std },
                ..
            }) => Ok((*mean, *std)),
            _ => Err(Error::InvalidSpec(format!(
                "diversity field {} must be a normal field of the profile spec",
                self.diversity_field
            ))),
        }
    }

    fn n_test(&self) -> usize {
        ((self.n_problems as f64 * self.test_fraction).round() as usize)
            .clamp(1, self.n_problems - 1)
    }
}

#[derive(Debug, Clone)]
pub struct SynthWorld {
    pub problems: ProblemSet,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub profiles: Vec<Profile>,
    /// Training-split responses of the human population.
    pub responses: ResponseMatrix,
    pub y_ref: BTreeMap<String, f64>,
    /// Noise-free population mean `g(t)` per problem.
    pub truth: BTreeMap<String, f64>,
    /// Stub whose zero-temperature answers reproduce `y_ref`.
    pub oracle: StubMode,
}

/// Problems, participants and responses are drawn from separate streams of
/// `seed`, so worlds that differ only in `n_workers`, `tasks_per_worker`,
/// `sigma_resp` or `eps_div` share problems, truth and leading participants.
pub fn synth_world(spec: &WorldSpec, seed: u64) -> Result<SynthWorld> {
    spec.validate()?;
    let scale = DecisionScale::continuous(spec.scale_lo, spec.scale_hi)?;
    let width = spec.n_problems.to_string().len().max(3);

    let mut prng = rng_from_seed(derive_seed(seed, &[PROBLEM_STREAM]));
    let mut problems = Vec::with_capacity(spec.n_problems);
    let mut y_ref = BTreeMap::new();
    let mut rules = Vec::with_capacity(spec.n_problems);
    for t in 0..spec.n_problems {
        let id = format!("t{t:0width$}");
        let features: Vec<f64> = (0..spec.feature_dim)
            .map(|_| StandardNormal.sample(&mut prng))
            .collect();
        let r: f64 = prng.random_range(spec.reference_lo..spec.reference_hi);
        let r = (r * 100.0).round() / 100.0;
        problems.push(
            Problem::new(
                &id,
                format!("Synthetic item {id}."),
                "Give a single rating.",
                "",
                scale.clone(),
                spec.feature_dim,
            )
            .with_features(features),
        );
        rules.push(OracleRule {
            contains: format!("item {id}."),
            value: r,
        });
        y_ref.insert(id, r);
    }

    let d_z = spec.profile_spec.encoded_dim();
    let mut net = BeliefNet::new(
        NetDims::new(spec.feature_dim, d_z, 1).with_sizes(16, 16, 4),
        derive_seed(seed, &[NET_STREAM]),
    )?;
    let mut nrng = rng_from_seed(derive_seed(seed, &[NET_STREAM, 1]));
    for w in net.readout_mut() {
        *w = StandardNormal.sample(&mut nrng);
    }
    let z0 = vec![0.0; d_z];
    let raw: Vec<f64> = problems
        .iter()
        .map(|p| {
            let (mu, _) = net.encode(&p.features, &z0)?;
            Ok(net.belief_effect(&mu)?[0])
        })
        .collect::<Result<_>>()?;
    let m = raw.iter().sum::<f64>() / raw.len() as f64;
    let sd = (raw.iter().map(|b| (b - m).powi(2)).sum::<f64>() / raw.len() as f64).sqrt();
    let gain = if sd > 0.0 {
        spec.belief_scale / sd
    } else {
        0.0
    };
    let truth: BTreeMap<String, f64> = problems
        .iter()
        .zip(&raw)
        .map(|(p, b)| (p.id.clone(), scale.project(y_ref[&p.id] + gain * b)))
        .collect();

    let mut ids: Vec<String> = problems.iter().map(|p| p.id.clone()).collect();
    ids.shuffle(&mut rng_from_seed(derive_seed(seed, &[SPLIT_STREAM])));
    let test_ids: Vec<String> = ids[..spec.n_test()].to_vec();
    let mut train_ids: Vec<String> = ids[spec.n_test()..].to_vec();
    let mut test_sorted = test_ids.clone();
    test_sorted.sort();
    train_ids.sort();

    let profiles = sample_profiles(
        &spec.profile_spec,
        spec.n_workers,
        derive_seed(seed, &[PROFILE_STREAM]),
    )?;
    let (mean, std) = spec.diversity_moments()?;
    let mut responses = Vec::new();
    for (i, p) in profiles.iter().enumerate() {
        let u = (p.values[&spec.diversity_field]
            .as_number()
            .expect("normal field")
            - mean)
            / std;
        let mut tasks = train_ids.clone();
        tasks.shuffle(&mut rng_from_seed(derive_seed(
            seed,
            &[TASK_STREAM, i as u64],
        )));
        let mut noise = rng_from_seed(derive_seed(seed, &[NOISE_STREAM, i as u64]));
        for t in tasks.iter().take(spec.tasks_per_worker) {
            let z: f64 = StandardNormal.sample(&mut noise);
            let v = scale.project(truth[t] + spec.eps_div * u + spec.sigma_resp * z);
            responses.push(Response::new(&p.participant_id, t, v));
        }
    }

    Ok(SynthWorld {
        problems: ProblemSet::new(problems)?,
        train_ids,
        test_ids: test_sorted,
        profiles,
        responses: ResponseMatrix::new(responses)?,
        y_ref,
        truth,
        oracle: StubMode::Oracle {
            rules,
            adjustments: Vec::new(),
            default: (spec.reference_lo + spec.reference_hi) / 2.0,
            noise: 0.0,
            decimals: 2,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n_workers: usize, tasks: usize, sigma: f64, eps: f64) -> WorldSpec {
        WorldSpec {
            n_workers,
            tasks_per_worker: tasks,
            sigma_resp: sigma,
            eps_div: eps,
            ..WorldSpec::default()
        }
    }

    #[test]
    fn noiseless_world_answers_truth() {
        let w = synth_world(&spec(6, 8, 0.0, 0.0), 3).unwrap();
        assert_eq!(w.responses.len(), 48);
        for r in w.responses.responses() {
            assert_eq!(r.value, w.truth[&r.problem_id]);
            assert!(w.train_ids.contains(&r.problem_id));
        }
        assert_eq!(w.test_ids.len(), 10);
        assert_eq!(w.train_ids.len(), 40);
    }

    #[test]
    fn response_noise_has_requested_scale() {
        let s = WorldSpec {
            reference_lo: 4.9,
            reference_hi: 5.1,
            belief_scale: 0.1,
            ..spec(250, 40, 1.0, 0.0)
        };
        let w = synth_world(&s, 11).unwrap();
        let res: Vec<f64> = w
            .responses
            .responses()
            .iter()
            .map(|r| r.value - w.truth[&r.problem_id])
            .collect();
        assert_eq!(res.len(), 10_000);
        let m = res.iter().sum::<f64>() / res.len() as f64;
        let sd = (res.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (res.len() - 1) as f64).sqrt();
        assert!((sd - 1.0).abs() < 0.05, "{sd}");
    }

    #[test]
    fn deterministic_and_nested() {
        let a = synth_world(&spec(5, 5, 1.0, 1.0), 9).unwrap();
        let b = synth_world(&spec(5, 5, 1.0, 1.0), 9).unwrap();
        assert_eq!(a.responses, b.responses);
        assert_eq!(a.truth, b.truth);
        let big = synth_world(&spec(10, 10, 1.0, 1.0), 9).unwrap();
        assert_eq!(a.truth, big.truth);
        assert_eq!(a.profiles[..], big.profiles[..5]);
        let first = a.responses.responses_for_problem(&a.train_ids[0]);
        for r in first {
            assert_eq!(
                big.responses.get(&r.problem_id, &r.participant_id),
                Some(r.value)
            );
        }
    }

    #[test]
    fn belief_effect_has_requested_spread() {
        let w = synth_world(&spec(1, 1, 0.0, 0.0), 2).unwrap();
        let b: Vec<f64> = w.truth.iter().map(|(k, v)| v - w.y_ref[k]).collect();
        let m = b.iter().sum::<f64>() / b.len() as f64;
        let sd = (b.iter().map(|x| (x - m).powi(2)).sum::<f64>() / b.len() as f64).sqrt();
        assert!((sd - 0.5).abs() < 1e-9, "{sd}");
    }
}
