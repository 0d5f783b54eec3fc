use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Equal-variance Gaussian mixture `sum_k p_k N(v_k, std^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub means: Vec<f64>,
    pub weights: Vec<f64>,
    pub std: f64,
}

fn check_simplex(probs: &[f64]) -> Result<()> {
    if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidArgument(
            "probabilities must be nonempty, finite and nonnegative".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Replace each atom `v_k` of a discrete law by `N(v_k, (eps*eta)^2)`.
pub fn smooth_discrete(
    levels: &[f64],
    probs: &[f64],
    eps: f64,
    eta: f64,
) -> Result<GaussianMixture> {
    if levels.len() != probs.len() {
        return Err(Error::Dimension {
            what: "smoothing probabilities",
            expected: levels.len(),
            got: probs.len(),
        });
    }
    check_simplex(probs)?;
    if levels.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("smoothing levels"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must lie in (0,1), got {eps}"
        )));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive, got {eta}"
        )));
    }
    Ok(GaussianMixture {
        means: levels.to_vec(),
        weights: probs.to_vec(),
        std: eps * eta,
    })
}

/// `W1(delta_v, N(v, (eps*eta)^2)) = E|N(0, (eps*eta)^2)|`.
pub fn dirac_smoothing_w1(eps: f64, eta: f64) -> f64 {
    (2.0 / std::f64::consts::PI).sqrt() * eta * eps
}

impl GaussianMixture {
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let pick = WeightedIndex::new(&self.weights).expect("weights validated at construction");
        (0..n)
            .map(|_| {
                let k = pick.sample(&mut rng);
                let z: f64 = StandardNormal.sample(&mut rng);
                self.means[k] + self.std * z
            })
            .collect()
    }

    pub fn mean(&self) -> f64 {
        self.means
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| m * w)
            .sum()
    }

    /// Upper bound on W1 to the unsmoothed discrete law (coupling each atom
    /// with its own component).
    pub fn w1_bound(&self) -> f64 {
        (2.0 / std::f64::consts::PI).sqrt() * self.std
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::w1_to_discrete;

    #[test]
    fn single_level() {
        let g = smooth_discrete(&[3.0], &[1.0], 0.1, 1.0).unwrap();
        assert_eq!(g.means, vec![3.0]);
        assert!((g.std * g.std - 0.01).abs() < 1e-15);
        assert!((dirac_smoothing_w1(0.1, 1.0) - 0.079_788_456).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(smooth_discrete(&[0.0, 1.0], &[0.4, 0.4], 0.1, 1.0).is_err());
        assert!(smooth_discrete(&[0.0], &[1.0], 1.0, 1.0).is_err());
        assert!(smooth_discrete(&[0.0], &[1.0], 0.1, 0.0).is_err());
    }

    #[test]
    fn collapses_as_eps_shrinks() {
        let g = smooth_discrete(&[0.0, 1.0], &[0.5, 0.5], 1e-6, 1.0).unwrap();
        let s = g.sample(10_000, 4);
        assert!(w1_to_discrete(&s, &[0.0, 1.0], &[0.5, 0.5]).unwrap() < 0.01);
    }
}
