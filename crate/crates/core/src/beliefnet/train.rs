use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{Example, ExampleNoise, LossWeights};
use super::net::BeliefNet;
use crate::data::{DecisionScale, ProblemSet, ResponseMatrix};
use crate::error::{Error, Result};
use crate::population::Profile;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Belief draws per decision.
    pub j: usize,
    /// Blender noise scale used inside the decision loss.
    pub sigma: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1.0,
            learning_rate: 0.001,
            epochs: 100,
            batch_size: 32,
            j: 10,
            sigma: 0.0,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be >= 0");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be > 0");
        }
        if self.j == 0 || self.batch_size == 0 {
            return bad("J and batch size must be >= 1");
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be >= 0");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0,1)");
        }
        Ok(())
    }
}

/// Weighted epoch means of the loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub epoch: usize,
    pub l1: f64,
    pub l2: f64,
    pub total: f64,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            params[i] -=
                cfg.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + cfg.adam_eps);
        }
    }
}

/// Minibatch Adam on `L1 + lambda L2`. Returns one record per epoch, preceded
/// by the loss of the initial parameters (epoch 0).
pub fn train(
    net: &mut BeliefNet,
    examples: &[Example],
    cfg: &TrainConfig,
) -> Result<Vec<LossRecord>> {
    cfg.validate()?;
    if examples.is_empty() {
        return Err(Error::Empty("training examples"));
    }
    let d = net.dims();
    let weights = LossWeights::with_lambda(cfg.lambda);
    let mut rng = rng_from_seed(cfg.seed);
    let wsum: f64 = examples.iter().map(|e| e.weight).sum();

    let initial_noise: Vec<ExampleNoise> = examples
        .iter()
        .map(|_| ExampleNoise::draw(&mut rng, cfg.j, d.d_delta, d.decision_dim))
        .collect();
    let p0 = net.loss_and_gradient(examples, &initial_noise, weights, cfg.sigma, None)?;
    if !p0.total.is_finite() {
        return Err(Error::Divergence { epoch: 0 });
    }
    let mut trace = vec![LossRecord {
        epoch: 0,
        l1: p0.l1,
        l2: p0.l2,
        total: p0.total,
    }];

    let mut adam = Adam::new(net.num_params());
    let mut grad = vec![0.0; net.num_params()];
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut rec = LossRecord {
            epoch,
            l1: 0.0,
            l2: 0.0,
            total: 0.0,
        };
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Example> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let noise: Vec<ExampleNoise> = batch
                .iter()
                .map(|_| ExampleNoise::draw(&mut rng, cfg.j, d.d_delta, d.decision_dim))
                .collect();
            let parts =
                net.loss_and_gradient(&batch, &noise, weights, cfg.sigma, Some(&mut grad))?;
            if !parts.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch });
            }
            let share = batch.iter().map(|e| e.weight).sum::<f64>() / wsum;
            rec.l1 += share * parts.l1;
            rec.l2 += share * parts.l2;
            rec.total += share * parts.total;
            adam.step(net.params_mut(), &grad, cfg);
        }
        if net.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        trace.push(rec);
    }
    Ok(trace)
}

/// Decision coordinates of a value: the value itself, or a one-hot vector for
/// choice scales.
pub fn decision_coordinates(scale: &DecisionScale, value: f64) -> Vec<f64> {
    match scale {
        DecisionScale::Choice { alternatives } => {
            let k = scale.project(value) as usize;
            (1..=*alternatives)
                .map(|a| if a == k { 1.0 } else { 0.0 })
                .collect()
        }
        _ => vec![value],
    }
}

/// One example per observed response, weighted by `1 / T_i`.
pub fn build_examples(
    problems: &ProblemSet,
    responses: &ResponseMatrix,
    profiles: &[Profile],
    y_ref: &BTreeMap<String, f64>,
    decision_dim: usize,
) -> Result<Vec<Example>> {
    let by_id: HashMap<&str, &Profile> = profiles
        .iter()
        .map(|p| (p.participant_id.as_str(), p))
        .collect();
    let counts = responses.counts_by_participant();
    responses
        .responses()
        .iter()
        .map(|r| {
            let problem = problems
                .get(&r.problem_id)
                .ok_or_else(|| Error::UnknownProblem(r.problem_id.clone()))?;
            if problem.scale.decision_dim() != decision_dim {
                return Err(Error::Dimension {
                    what: "decision coordinates",
                    expected: decision_dim,
                    got: problem.scale.decision_dim(),
                });
            }
            let profile = by_id
                .get(r.participant_id.as_str())
                .ok_or_else(|| Error::Unpaired(r.participant_id.clone()))?;
            let reference = *y_ref
                .get(&r.problem_id)
                .ok_or_else(|| Error::MissingReference(r.problem_id.clone()))?;
            Ok(Example {
                x: problem.features.clone(),
                z: profile.encoded.clone(),
                y_ref: decision_coordinates(&problem.scale, reference),
                y: decision_coordinates(&problem.scale, r.value),
                weight: 1.0 / counts[&r.participant_id] as f64,
            })
        })
        .collect()
}

pub fn write_loss_trace(path: impl AsRef<Path>, trace: &[LossRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = crate::data::io::create(path)?;
    let mut w = csv::Writer::from_writer(file);
    let wrap = |e: csv::Error| Error::Parse {
        what: path.display().to_string(),
        message: e.to_string(),
    };
    w.write_record(["epoch", "L1", "L2", "total"])
        .map_err(wrap)?;
    for r in trace {
        w.write_record([
            r.epoch.to_string(),
            r.l1.to_string(),
            r.l2.to_string(),
            r.total.to_string(),
        ])
        .map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefnet::NetDims;

    fn tiny_examples() -> Vec<Example> {
        // 5 problems x 4 participants, target linear in features and profile.
        let mut out = Vec::new();
        for t in 0..5 {
            let x = vec![t as f64 / 4.0, 1.0 - t as f64 / 4.0, 0.5];
            for i in 0..4 {
                let z = vec![i as f64 / 3.0, 1.0];
                let y = 3.0 + 0.8 * x[0] - 0.5 * z[0];
                out.push(Example {
                    x: x.clone(),
                    z,
                    y_ref: vec![3.0],
                    y: vec![y],
                    weight: 1.0 / 5.0,
                });
            }
        }
        out
    }

    #[test]
    fn loss_decreases_and_is_deterministic() {
        let dims = NetDims::new(3, 2, 1).with_sizes(8, 8, 2);
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 8,
            learning_rate: 0.01,
            seed: 3,
            ..TrainConfig::default()
        };
        let run = || {
            let mut net = BeliefNet::new(dims, 7).unwrap();
            let trace = train(&mut net, &tiny_examples(), &cfg).unwrap();
            (net, trace)
        };
        let (a, ta) = run();
        let (b, tb) = run();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert_eq!(ta.len(), 201);
        assert!(ta.last().unwrap().total < ta[0].total);
    }

    #[test]
    fn lambda_zero_trace_is_elbo() {
        let dims = NetDims::new(3, 2, 1).with_sizes(4, 4, 2);
        let cfg = TrainConfig {
            epochs: 5,
            lambda: 0.0,
            ..TrainConfig::default()
        };
        let mut net = BeliefNet::new(dims, 1).unwrap();
        for r in train(&mut net, &tiny_examples(), &cfg).unwrap() {
            assert_eq!(r.total, r.l1);
        }
    }

    #[test]
    fn divergence_reports_epoch() {
        let dims = NetDims::new(3, 2, 1).with_sizes(4, 4, 2);
        let mut ex = tiny_examples();
        ex[0].y = vec![f64::INFINITY];
        let mut net = BeliefNet::new(dims, 1).unwrap();
        assert!(matches!(
            train(&mut net, &ex, &TrainConfig::default()),
            Err(Error::Divergence { epoch: 0 })
        ));
    }

    #[test]
    fn one_hot_coordinates() {
        let s = DecisionScale::choice(3).unwrap();
        assert_eq!(decision_coordinates(&s, 2.0), vec![0.0, 1.0, 0.0]);
        let c = DecisionScale::continuous(0.0, 1.0).unwrap();
        assert_eq!(decision_coordinates(&c, 0.25), vec![0.25]);
    }
}
