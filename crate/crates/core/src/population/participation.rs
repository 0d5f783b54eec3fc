use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// Independent Bernoulli participation draws; row `i` uses its own stream.
pub fn sample_participation(p: &[Vec<f64>], seed: u64) -> Result<Vec<Vec<bool>>> {
    if let Some(x) = p.iter().flatten().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidArgument(format!(
            "participation probability {x} outside [0,1]"
        )));
    }
    Ok(p.iter()
        .enumerate()
        .map(|(i, row)| {
            let mut rng = rng_from_seed(derive_seed(seed, &[i as u64]));
            row.iter().map(|&q| rng.random::<f64>() < q).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_masks() {
        let ones = sample_participation(&vec![vec![1.0; 7]; 3], 1).unwrap();
        assert!(ones.iter().flatten().all(|&b| b));
        let zeros = sample_participation(&vec![vec![0.0; 7]; 3], 1).unwrap();
        assert!(zeros.iter().flatten().all(|&b| !b));
        assert!(sample_participation(&[vec![1.5]], 0).is_err());
    }

    #[test]
    fn rate_per_participant() {
        let mask = sample_participation(&vec![vec![0.3; 1000]; 10], 77).unwrap();
        for row in mask {
            let r = row.iter().filter(|&&b| b).count() as f64 / 1000.0;
            assert!((0.25..=0.35).contains(&r), "rate {r}");
        }
    }
}
