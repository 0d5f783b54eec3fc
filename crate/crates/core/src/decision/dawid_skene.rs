use serde::{Deserialize, Serialize};

use super::labels::LabelMatrix;
use crate::error::Result;

/// Pseudo-count added to every confusion cell and class count in each M-step.
pub const DS_SMOOTHING: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum AggregationModel {
    DawidSkene {
        /// `confusion[worker][true][observed]`, rows sum to 1.
        confusion: Vec<Vec<Vec<f64>>>,
        class_priors: Vec<f64>,
    },
    Glad {
        /// Worker abilities, one vector per binary sub-problem.
        ability: Vec<Vec<f64>>,
        /// Item inverse difficulties, one vector per binary sub-problem.
        inverse_difficulty: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub labels: Vec<usize>,
    /// Decision values of the inferred labels.
    pub values: Vec<f64>,
    pub posteriors: Vec<Vec<f64>>,
    /// Objective after each EM iteration, one trace per EM run.
    pub traces: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub model: AggregationModel,
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = k;
        }
    }
    best
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// EM over per-worker confusion matrices, initialized from vote shares.
///
/// The trace holds the smoothed (MAP) log-likelihood, which EM never decreases.
pub fn dawid_skene(m: &LabelMatrix, cfg: &EmConfig) -> Result<AggregationResult> {
    let k = m.n_classes;
    let nw = m.workers.len();
    let ni = m.items.len();
    let s = DS_SMOOTHING;
    let mut post = m.vote_shares();
    let mut trace = Vec::new();
    let mut priors = vec![1.0 / k as f64; k];
    let mut conf = vec![vec![vec![1.0 / k as f64; k]; k]; nw];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iter.max(1) {
        iterations += 1;
        // M-step
        let mut class_mass = vec![s; k];
        let mut counts = vec![vec![vec![s; k]; k]; nw];
        for (row, p) in m.labels.iter().zip(&post) {
            for c in 0..k {
                class_mass[c] += p[c];
            }
            for &(w, l) in row {
                for c in 0..k {
                    counts[w][c][l] += p[c];
                }
            }
        }
        let total: f64 = class_mass.iter().sum();
        priors = class_mass.iter().map(|c| c / total).collect();
        for (w, cw) in counts.iter().enumerate() {
            for c in 0..k {
                let row_total: f64 = cw[c].iter().sum();
                for l in 0..k {
                    conf[w][c][l] = cw[c][l] / row_total;
                }
            }
        }
        // E-step
        let log_prior: Vec<f64> = priors.iter().map(|p| p.ln()).collect();
        let log_conf: Vec<Vec<Vec<f64>>> = conf
            .iter()
            .map(|cw| {
                cw.iter()
                    .map(|r| r.iter().map(|v| v.ln()).collect())
                    .collect()
            })
            .collect();
        let mut ll = 0.0;
        let mut change: f64 = 0.0;
        let mut next = Vec::with_capacity(ni);
        for (row, old) in m.labels.iter().zip(&post) {
            let mut lp = log_prior.clone();
            for &(w, l) in row {
                for c in 0..k {
                    lp[c] += log_conf[w][c][l];
                }
            }
            let z = log_sum_exp(&lp);
            ll += z;
            let p: Vec<f64> = lp.iter().map(|v| (v - z).exp()).collect();
            for c in 0..k {
                change = change.max((p[c] - old[c]).abs());
            }
            next.push(p);
        }
        let penalty =
            s * (log_prior.iter().sum::<f64>() + log_conf.iter().flatten().flatten().sum::<f64>());
        trace.push(ll + penalty);
        post = next;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    let labels: Vec<usize> = post.iter().map(|p| argmax(p)).collect();
    Ok(AggregationResult {
        values: labels.iter().map(|&l| m.class_values[l]).collect(),
        labels,
        posteriors: post,
        traces: vec![trace],
        iterations,
        converged,
        model: AggregationModel::DawidSkene {
            confusion: conf,
            class_priors: priors,
        },
    })
}
