use super::dawid_skene::{argmax, log_sum_exp, AggregationModel, AggregationResult, EmConfig};
use super::labels::LabelMatrix;
use crate::error::Result;

const ALPHA_PRIOR_MEAN: f64 = 1.0;
const M_STEPS: usize = 25;
const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

/// `ln sigma(x)` without overflow.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Binary data: `labels[item] = [(worker, 0|1)]`.
struct Binary<'a> {
    labels: &'a [Vec<(usize, bool)>],
    n_workers: usize,
}

struct BinaryFit {
    post: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl Binary<'_> {
    fn log_prior(alpha: &[f64], b: &[f64]) -> f64 {
        -0.5 * alpha
            .iter()
            .map(|a| (a - ALPHA_PRIOR_MEAN).powi(2))
            .sum::<f64>()
            - 0.5 * b.iter().map(|v| v * v).sum::<f64>()
    }

    /// Expected complete-data log-likelihood plus log-prior.
    fn q(&self, post: &[f64], alpha: &[f64], b: &[f64]) -> f64 {
        let mut q = Self::log_prior(alpha, b);
        for ((row, &p), bi) in self.labels.iter().zip(post).zip(b) {
            let beta = bi.exp();
            for &(w, l) in row {
                let c = if l { p } else { 1.0 - p };
                let x = alpha[w] * beta;
                q += c * log_sigmoid(x) + (1.0 - c) * log_sigmoid(-x);
            }
        }
        q
    }

    fn grad(&self, post: &[f64], alpha: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut ga: Vec<f64> = alpha.iter().map(|a| -(a - ALPHA_PRIOR_MEAN)).collect();
        let mut gb: Vec<f64> = b.iter().map(|v| -v).collect();
        for (i, (row, &p)) in self.labels.iter().zip(post).enumerate() {
            let beta = b[i].exp();
            for &(w, l) in row {
                let c = if l { p } else { 1.0 - p };
                let r = c - sigmoid(alpha[w] * beta);
                ga[w] += r * beta;
                gb[i] += r * alpha[w] * beta;
            }
        }
        (ga, gb)
    }

    /// Posterior `P(z = 1)` and log marginal likelihood (uniform class prior).
    fn e_step(&self, alpha: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
        let mut ll = 0.0;
        let post = self
            .labels
            .iter()
            .zip(b)
            .map(|(row, bi)| {
                let beta = bi.exp();
                let (mut l1, mut l0) = (0.5f64.ln(), 0.5f64.ln());
                for &(w, l) in row {
                    let x = alpha[w] * beta;
                    if l {
                        l1 += log_sigmoid(x);
                        l0 += log_sigmoid(-x);
                    } else {
                        l1 += log_sigmoid(-x);
                        l0 += log_sigmoid(x);
                    }
                }
                let z = log_sum_exp(&[l0, l1]);
                ll += z;
                (l1 - z).exp()
            })
            .collect();
        (post, ll)
    }

    fn fit(&self, cfg: &EmConfig) -> BinaryFit {
        let mut post: Vec<f64> = self
            .labels
            .iter()
            .map(|row| row.iter().filter(|(_, l)| *l).count() as f64 / row.len() as f64)
            .collect();
        let mut alpha = vec![ALPHA_PRIOR_MEAN; self.n_workers];
        let mut b = vec![0.0; self.labels.len()];
        let mut trace = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        for _ in 0..cfg.max_iter.max(1) {
            iterations += 1;
            // Generalized M-step: backtracking gradient ascent on Q.
            let mut q_old = self.q(&post, &alpha, &b);
            let mut step = 1.0;
            for _ in 0..M_STEPS {
                let (ga, gb) = self.grad(&post, &alpha, &b);
                let g2: f64 = ga.iter().chain(&gb).map(|g| g * g).sum();
                if g2 < 1e-18 {
                    break;
                }
                let mut accepted = false;
                for _ in 0..MAX_HALVINGS {
                    let a_new: Vec<f64> =
                        alpha.iter().zip(&ga).map(|(a, g)| a + step * g).collect();
                    let b_new: Vec<f64> = b.iter().zip(&gb).map(|(v, g)| v + step * g).collect();
                    let q_new = self.q(&post, &a_new, &b_new);
                    if q_new >= q_old + ARMIJO_C * step * g2 {
                        alpha = a_new;
                        b = b_new;
                        q_old = q_new;
                        accepted = true;
                        step *= 2.0;
                        break;
                    }
                    step *= 0.5;
                }
                if !accepted {
                    break;
                }
            }
            let (next, ll) = self.e_step(&alpha, &b);
            trace.push(ll + Self::log_prior(&alpha, &b));
            let change = next
                .iter()
                .zip(&post)
                .map(|(a, o)| (a - o).abs())
                .fold(0.0, f64::max);
            post = next;
            if change < cfg.tol {
                converged = true;
                break;
            }
        }
        BinaryFit {
            post,
            alpha,
            beta: b.iter().map(|v| v.exp()).collect(),
            trace,
            iterations,
            converged,
        }
    }
}

/// Ability/difficulty aggregation. Binary labels are fitted directly; more
/// classes are fitted one-vs-rest and combined by normalized arg-max.
pub fn glad(m: &LabelMatrix, cfg: &EmConfig) -> Result<AggregationResult> {
    let binarize = |target: usize| -> Vec<Vec<(usize, bool)>> {
        m.labels
            .iter()
            .map(|row| row.iter().map(|&(w, c)| (w, c == target)).collect())
            .collect()
    };
    let targets: Vec<usize> = if m.n_classes == 2 {
        vec![1]
    } else {
        (0..m.n_classes).collect()
    };
    let fits: Vec<BinaryFit> = targets
        .iter()
        .map(|&t| {
            let labels = binarize(t);
            Binary {
                labels: &labels,
                n_workers: m.workers.len(),
            }
            .fit(cfg)
        })
        .collect();

    let posteriors: Vec<Vec<f64>> = (0..m.items.len())
        .map(|i| {
            if m.n_classes == 2 {
                let p = fits[0].post[i];
                vec![1.0 - p, p]
            } else {
                let raw: Vec<f64> = fits.iter().map(|f| f.post[i]).collect();
                let s: f64 = raw.iter().sum();
                if s > 0.0 {
                    raw.iter().map(|r| r / s).collect()
                } else {
                    vec![1.0 / m.n_classes as f64; m.n_classes]
                }
            }
        })
        .collect();
    let labels: Vec<usize> = posteriors.iter().map(|p| argmax(p)).collect();
    Ok(AggregationResult {
        values: labels.iter().map(|&l| m.class_values[l]).collect(),
        labels,
        posteriors,
        traces: fits.iter().map(|f| f.trace.clone()).collect(),
        iterations: fits.iter().map(|f| f.iterations).max().unwrap_or(0),
        converged: fits.iter().all(|f| f.converged),
        model: AggregationModel::Glad {
            ability: fits.iter().map(|f| f.alpha.clone()).collect(),
            inverse_difficulty: fits.iter().map(|f| f.beta.clone()).collect(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn single_worker_is_echoed() {
        let dense: Vec<Vec<Option<usize>>> =
            [0, 1, 1, 0, 1].iter().map(|&c| vec![Some(c)]).collect();
        let m = LabelMatrix::from_dense(2, &dense).unwrap();
        assert_eq!(
            glad(&m, &EmConfig::default()).unwrap().labels,
            vec![0, 1, 1, 0, 1]
        );
    }

    #[test]
    fn recovers_generated_labels() {
        let mut rng = rng_from_seed(99);
        let alpha: Vec<f64> = (0..10).map(|_| rng.random_range(0.5..2.5)).collect();
        let beta: Vec<f64> = (0..50).map(|_| rng.random_range(0.5..2.0)).collect();
        let truth: Vec<usize> = (0..50).map(|_| rng.random_range(0..2)).collect();
        let dense: Vec<Vec<Option<usize>>> = (0..50)
            .map(|i| {
                (0..10)
                    .map(|w| {
                        let ok = rng.random::<f64>() < sigmoid(alpha[w] * beta[i]);
                        Some(if ok { truth[i] } else { 1 - truth[i] })
                    })
                    .collect()
            })
            .collect();
        let r = glad(
            &LabelMatrix::from_dense(2, &dense).unwrap(),
            &EmConfig::default(),
        )
        .unwrap();
        let acc = r.labels.iter().zip(&truth).filter(|(a, b)| a == b).count() as f64 / 50.0;
        assert!(acc >= 0.95, "accuracy {acc}");
        for w in r.traces[0].windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
    }

    #[test]
    fn multiclass_one_vs_rest() {
        let dense: Vec<Vec<Option<usize>>> = [0, 1, 2, 2, 1]
            .iter()
            .map(|&c| vec![Some(c), Some(c), Some((c + 1) % 3)])
            .collect();
        let r = glad(
            &LabelMatrix::from_dense(3, &dense).unwrap(),
            &EmConfig::default(),
        )
        .unwrap();
        assert_eq!(r.labels, vec![0, 1, 2, 2, 1]);
        assert_eq!(r.traces.len(), 3);
        for p in &r.posteriors {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
