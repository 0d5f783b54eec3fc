use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::beliefnet::BeliefNet;
use crate::data::{DecisionScale, Problem};
use crate::error::{Error, Result};
use crate::population::Profile;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Normal,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlenderConfig {
    pub noise: NoiseFamily,
    pub sigma: f64,
    /// Belief draws averaged per decision.
    pub j: usize,
}

impl Default for BlenderConfig {
    fn default() -> Self {
        BlenderConfig {
            noise: NoiseFamily::Normal,
            sigma: 0.0,
            j: 10,
        }
    }
}

impl BlenderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "blender sigma must be >= 0, got {}",
                self.sigma
            )));
        }
        if self.j == 0 {
            return Err(Error::InvalidArgument("blender J must be >= 1".into()));
        }
        Ok(())
    }

    fn noise<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.noise {
            NoiseFamily::Normal if self.sigma > 0.0 => {
                let z: f64 = StandardNormal.sample(rng);
                self.sigma * z
            }
            _ => 0.0,
        }
    }
}

/// One blended draw centred at `y_ref + effect`.
pub fn blend_with<R: Rng>(y_ref: f64, effect: f64, cfg: &BlenderConfig, rng: &mut R) -> f64 {
    y_ref + effect + cfg.noise(rng)
}

pub fn blend(y_ref: f64, effect: f64, cfg: &BlenderConfig, seed: u64) -> f64 {
    blend_with(y_ref, effect, cfg, &mut rng_from_seed(seed))
}

/// Scalar belief effect `w . delta`.
pub fn map_belief_to_effect(readout: &[f64], delta: &[f64]) -> f64 {
    readout.iter().zip(delta).map(|(w, d)| w * d).sum()
}

/// A projected decision with the averaged belief effect that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Personalized {
    pub value: f64,
    /// Mean belief effect over the `J` draws, one entry per decision coordinate.
    pub effect: Vec<f64>,
}

/// Average `J` blended draws, then project onto the problem's scale. Choice
/// problems blend one-hot scores and emit the arg-max alternative.
pub fn personalized_decision_with<R: Rng>(
    net: &BeliefNet,
    problem: &Problem,
    profile: &Profile,
    y_ref: f64,
    cfg: &BlenderConfig,
    rng: &mut R,
) -> Result<Personalized> {
    cfg.validate()?;
    let dims = net.dims();
    let dim = problem.scale.decision_dim();
    if dim != dims.decision_dim {
        return Err(Error::Dimension {
            what: "decision coordinates",
            expected: dims.decision_dim,
            got: dim,
        });
    }
    if !y_ref.is_finite() {
        return Err(Error::NonFinite("reference decision"));
    }
    let (mu, var) = net.encode(&problem.features, &profile.encoded)?;
    let std: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let jf = cfg.j as f64;
    let mut effect = vec![0.0; dim];
    let mut offset = vec![0.0; dim];
    let mut delta = vec![0.0; dims.d_delta];
    for _ in 0..cfg.j {
        for k in 0..dims.d_delta {
            let z: f64 = StandardNormal.sample(rng);
            delta[k] = mu[k] + std[k] * z;
        }
        let e = net.belief_effect(&delta)?;
        for k in 0..dim {
            let noise = cfg.noise(rng);
            effect[k] += e[k] / jf;
            offset[k] += (e[k] + noise) / jf;
        }
    }
    let value = match &problem.scale {
        DecisionScale::Choice { .. } => {
            let reference = problem.scale.project(y_ref) as usize;
            let best = (0..dim)
                .map(|k| (k, offset[k] + if k + 1 == reference { 1.0 } else { 0.0 }))
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (k, s)| if s > acc.1 { (k, s) } else { acc },
                );
            (best.0 + 1) as f64
        }
        scale => scale.project(y_ref + offset[0]),
    };
    Ok(Personalized { value, effect })
}

pub fn personalized_decision(
    net: &BeliefNet,
    problem: &Problem,
    profile: &Profile,
    y_ref: f64,
    cfg: &BlenderConfig,
    seed: u64,
) -> Result<f64> {
    personalized_decision_with(net, problem, profile, y_ref, cfg, &mut rng_from_seed(seed))
        .map(|p| p.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefnet::NetDims;
    use indexmap::IndexMap;

    fn problem(scale: DecisionScale) -> Problem {
        Problem::new("p", "rate it", "one number", "", scale, 4)
    }

    fn profile() -> Profile {
        Profile {
            participant_id: "v0".into(),
            values: IndexMap::new(),
            encoded: vec![1.0, 0.0],
        }
    }

    #[test]
    fn degenerate_noise() {
        let cfg = BlenderConfig::default();
        assert_eq!(blend(3.0, 0.5, &cfg, 1), 3.5);
        let none = BlenderConfig {
            noise: NoiseFamily::None,
            sigma: 2.0,
            j: 1,
        };
        assert_eq!(blend(3.0, 0.5, &none, 1), 3.5);
    }

    #[test]
    fn blend_variance() {
        let cfg = BlenderConfig {
            sigma: 0.2,
            ..BlenderConfig::default()
        };
        let mut rng = rng_from_seed(42);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| blend_with(1.0, 0.0, &cfg, &mut rng))
            .collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!((v / 0.04 - 1.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn effect_readout() {
        assert_eq!(map_belief_to_effect(&[0.0, 0.0], &[2.0, -1.0]), 0.0);
        assert_eq!(
            map_belief_to_effect(&[1.0, 0.0, 0.0], &[2.0, -1.0, 4.0]),
            2.0
        );
    }

    #[test]
    fn zero_net_returns_reference() {
        let net = BeliefNet::zeros(NetDims::new(4, 2, 1).with_sizes(3, 3, 2)).unwrap();
        let cfg = BlenderConfig::default();
        let p = problem(DecisionScale::likert(1, 5).unwrap());
        for seed in 0..5 {
            assert_eq!(
                personalized_decision(&net, &p, &profile(), 4.0, &cfg, seed).unwrap(),
                4.0
            );
        }
        let c = problem(DecisionScale::choice(3).unwrap());
        let net3 = BeliefNet::zeros(NetDims::new(4, 2, 3).with_sizes(3, 3, 2)).unwrap();
        assert_eq!(
            personalized_decision(&net3, &c, &profile(), 2.0, &cfg, 0).unwrap(),
            2.0
        );
    }

    #[test]
    fn deterministic_belief_shifts_decision() {
        // Zero weights, mu bias 0.5 on coordinate 0, log-variance clamped low.
        let dims = NetDims::new(4, 2, 1).with_sizes(3, 3, 2);
        let mut net = BeliefNet::zeros(dims).unwrap();
        let ck = net.to_checkpoint(None);
        let mut ck2 = ck.clone();
        ck2.tensors.get_mut("mu.bias").unwrap().data = vec![0.5, 0.0];
        ck2.tensors.get_mut("logvar.bias").unwrap().data = vec![-19.0, -19.0];
        ck2.tensors.get_mut("readout.weight").unwrap().data = vec![1.0, 0.0];
        net = BeliefNet::from_checkpoint(&ck2).unwrap();
        let p = problem(DecisionScale::continuous(0.0, 10.0).unwrap());
        let cfg = BlenderConfig::default();
        let a = personalized_decision(&net, &p, &profile(), 3.0, &cfg, 1).unwrap();
        let b = personalized_decision(&net, &p, &profile(), 3.0, &cfg, 2).unwrap();
        assert!((a - 3.5).abs() < 1e-3 && (a - b).abs() < 1e-3);
    }
}
