use crate::error::{Error, Result};

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("wasserstein sample"));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Linearly interpolated quantile of sorted `xs` at `p` in [0,1].
fn quantile_sorted(xs: &[f64], p: f64) -> f64 {
    if xs.len() == 1 {
        return xs[0];
    }
    let pos = p * (xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(xs.len() - 1);
    let frac = pos - lo as f64;
    xs[lo] + frac * (xs[hi] - xs[lo])
}

/// 1-D Wasserstein-1 distance between two empirical samples.
///
/// Inputs need not be sorted. Equal lengths pair order statistics exactly.
/// Unequal lengths compare interpolated quantiles at `k/(m-1)`, `m = max(|a|,|b|)`.
pub fn empirical_w1(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("wasserstein sample"));
    }
    let a = sorted(a)?;
    let b = sorted(b)?;
    if a.len() == b.len() {
        let s: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        return Ok(s / a.len() as f64);
    }
    let m = a.len().max(b.len());
    let s: f64 = (0..m)
        .map(|k| {
            let p = k as f64 / (m - 1) as f64;
            (quantile_sorted(&a, p) - quantile_sorted(&b, p)).abs()
        })
        .sum();
    Ok(s / m as f64)
}

/// Exact W1 between the empirical law of `samples` and a finite discrete law,
/// via `integral |F_n - G|`.
pub fn w1_to_discrete(samples: &[f64], levels: &[f64], probs: &[f64]) -> Result<f64> {
    if samples.is_empty() || levels.is_empty() {
        return Err(Error::Empty("wasserstein sample"));
    }
    if levels.len() != probs.len() {
        return Err(Error::Dimension {
            what: "discrete law probabilities",
            expected: levels.len(),
            got: probs.len(),
        });
    }
    let xs = sorted(samples)?;
    let mut atoms: Vec<(f64, f64)> = levels.iter().copied().zip(probs.iter().copied()).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Merge all breakpoints; between consecutive points both CDFs are constant.
    let mut points: Vec<(f64, f64, f64)> = xs
        .iter()
        .map(|&x| (x, 1.0 / xs.len() as f64, 0.0))
        .collect();
    points.extend(atoms.iter().map(|&(v, p)| (v, 0.0, p)));
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut f, mut g, mut total) = (0.0, 0.0, 0.0);
    for w in points.windows(2) {
        f += w[0].1;
        g += w[0].2;
        total += (f - g).abs() * (w[1].0 - w[0].0);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        assert_eq!(empirical_w1(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(empirical_w1(&[1.0, 5.0], &[3.0, 3.0]).unwrap(), 2.0);
        assert_eq!(empirical_w1(&[5.0, 1.0], &[1.0, 5.0]).unwrap(), 0.0);
        assert!(empirical_w1(&[], &[1.0]).is_err());
    }

    #[test]
    fn unequal_lengths_interpolate() {
        // quantiles of {0,1} at 0, .5, 1 are 0, .5, 1; of {0,1,2} are 0, 1, 2
        let d = empirical_w1(&[0.0, 1.0], &[0.0, 1.0, 2.0]).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn discrete_cdf_integral() {
        assert!((w1_to_discrete(&[0.0, 1.0], &[0.0, 1.0], &[0.5, 0.5]).unwrap()).abs() < 1e-12);
        // mean |x - 3| for point mass
        let d = w1_to_discrete(&[2.0, 5.0], &[3.0], &[1.0]).unwrap();
        assert!((d - 1.5).abs() < 1e-12);
    }
}
