use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::layout::{back_linear, linear};
use super::net::BeliefNet;
use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// One observed response prepared for training.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    /// Reference decision in decision coordinates (one-hot for choice scales).
    pub y_ref: Vec<f64>,
    /// Observed decision in decision coordinates.
    pub y: Vec<f64>,
    /// `1 / T_i` for the responding participant.
    pub weight: f64,
}

/// Fixed standard-normal draws for one example: `J` belief draws and `J`
/// blender draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleNoise {
    pub zeta: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
}

impl ExampleNoise {
    pub fn draw<R: Rng>(rng: &mut R, j: usize, d_delta: usize, decision_dim: usize) -> Self {
        let mut normal =
            |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect() };
        let zeta = (0..j).map(|_| normal(d_delta)).collect();
        let xi = (0..j).map(|_| normal(decision_dim)).collect();
        ExampleNoise { zeta, xi }
    }
}

/// Coefficients of the two loss terms: `total = l1 * L1 + l2 * L2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub l1: f64,
    pub l2: f64,
}

impl LossWeights {
    pub fn with_lambda(lambda: f64) -> Self {
        LossWeights {
            l1: 1.0,
            l2: lambda,
        }
    }
}

/// Weighted batch means of the two loss terms and their combination.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub l1: f64,
    pub l2: f64,
    pub total: f64,
}

/// `KL(N(mu, diag var) || N(0, I))`.
pub fn kl_to_standard_normal(mu: &[f64], var: &[f64]) -> f64 {
    0.5 * mu
        .iter()
        .zip(var)
        .map(|(m, v)| m * m + v - 1.0 - v.ln())
        .sum::<f64>()
}

/// Negative unit-variance Gaussian log-density of `x` at mean `xhat`.
pub fn reconstruction_nll(x: &[f64], xhat: &[f64]) -> f64 {
    0.5 * x
        .iter()
        .zip(xhat)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        + HALF_LN_2PI * x.len() as f64
}

/// Squared decision error.
pub fn squared_decision_loss(yhat: &[f64], y: &[f64]) -> f64 {
    yhat.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum()
}

impl BeliefNet {
    fn check_example(&self, ex: &Example, noise: &ExampleNoise) -> Result<()> {
        self.check_inputs(&ex.x, &ex.z)?;
        let d = self.dims;
        for (what, v) in [
            ("reference decision", &ex.y_ref),
            ("observed decision", &ex.y),
        ] {
            if v.len() != d.decision_dim {
                return Err(Error::Dimension {
                    what,
                    expected: d.decision_dim,
                    got: v.len(),
                });
            }
        }
        if noise.zeta.is_empty() || noise.zeta.len() != noise.xi.len() {
            return Err(Error::InvalidArgument(
                "noise needs J >= 1 paired draws".into(),
            ));
        }
        if noise.zeta.iter().any(|z| z.len() != d.d_delta)
            || noise.xi.iter().any(|x| x.len() != d.decision_dim)
        {
            return Err(Error::Dimension {
                what: "noise draws",
                expected: d.d_delta,
                got: noise.zeta[0].len(),
            });
        }
        Ok(())
    }

    /// Loss terms of one example; accumulates `scale * d(total)/d(params)` into `grad`.
    fn example_pass(
        &self,
        ex: &Example,
        noise: &ExampleNoise,
        w: LossWeights,
        sigma: f64,
        grad: Option<(&mut [f64], f64)>,
    ) -> (f64, f64) {
        let d = self.dims;
        let l = &self.layout;
        let p = &self.params;
        let j = noise.zeta.len();
        let jf = j as f64;

        let enc = self.encode_full(&ex.x, &ex.z);
        let std: Vec<f64> = enc.lv.iter().map(|v| (0.5 * v).exp()).collect();
        let var: Vec<f64> = std.iter().map(|s| s * s).collect();
        let kl = kl_to_standard_normal(&enc.mu, &var);

        let mut deltas = Vec::with_capacity(j);
        let mut dec = Vec::with_capacity(j);
        let mut recon = 0.0;
        let mut offset = vec![0.0; d.decision_dim];
        for (zeta, xi) in noise.zeta.iter().zip(&noise.xi) {
            let delta: Vec<f64> = enc
                .mu
                .iter()
                .zip(&std)
                .zip(zeta)
                .map(|((m, s), z)| m + s * z)
                .collect();
            let (hd, xhat) = self.decode_from(&delta, &enc.hz);
            recon += reconstruction_nll(&ex.x, &xhat);
            let eff = linear(p, l.readout, &delta);
            for k in 0..d.decision_dim {
                offset[k] += (eff[k] + sigma * xi[k]) / jf;
            }
            deltas.push(delta);
            dec.push((hd, xhat));
        }
        let l1 = kl + recon / jf;
        let yhat: Vec<f64> = ex.y_ref.iter().zip(&offset).map(|(r, o)| r + o).collect();
        let l2 = squared_decision_loss(&yhat, &ex.y);

        let Some((g, scale)) = grad else {
            return (l1, l2);
        };
        let a = w.l1 * scale;
        let gy: Vec<f64> = yhat
            .iter()
            .zip(&ex.y)
            .map(|(h, y)| 2.0 * w.l2 * scale * (h - y))
            .collect();

        let mut dmu: Vec<f64> = enc.mu.iter().map(|m| a * m).collect();
        let mut dlv: Vec<f64> = var.iter().map(|v| a * 0.5 * (v - 1.0)).collect();
        let mut dhz = vec![0.0; d.embed];
        let gy_j: Vec<f64> = gy.iter().map(|v| v / jf).collect();
        for ((delta, (hd, xhat)), zeta) in deltas.iter().zip(&dec).zip(&noise.zeta) {
            let dxhat: Vec<f64> = xhat
                .iter()
                .zip(&ex.x)
                .map(|(h, x)| a / jf * (h - x))
                .collect();
            let dhd = back_linear(p, g, l.out_w, Some(l.out_b), hd, &dxhat);
            let dad: Vec<f64> = dhd.iter().zip(hd).map(|(g, h)| g * (1.0 - h * h)).collect();
            let din: Vec<f64> = delta.iter().chain(&enc.hz).copied().collect();
            let ddin = back_linear(p, g, l.dec_w, Some(l.dec_b), &din, &dad);
            let dread = back_linear(p, g, l.readout, None, delta, &gy_j);
            for k in 0..d.d_delta {
                let dd = ddin[k] + dread[k];
                dmu[k] += dd;
                dlv[k] += dd * zeta[k] * 0.5 * std[k];
            }
            for (acc, v) in dhz.iter_mut().zip(&ddin[d.d_delta..]) {
                *acc += v;
            }
        }
        for (dl, free) in dlv.iter_mut().zip(&enc.lv_free) {
            if !free {
                *dl = 0.0;
            }
        }
        let dhe_mu = back_linear(p, g, l.mu_w, Some(l.mu_b), &enc.he, &dmu);
        let dhe_lv = back_linear(p, g, l.lv_w, Some(l.lv_b), &enc.he, &dlv);
        let dae: Vec<f64> = (0..d.hidden)
            .map(|h| (dhe_mu[h] + dhe_lv[h]) * (1.0 - enc.he[h] * enc.he[h]))
            .collect();
        let dc = back_linear(p, g, l.enc_w, Some(l.enc_b), &enc.c, &dae);
        let dax: Vec<f64> = (0..d.embed)
            .map(|k| dc[k] * (1.0 - enc.hx[k] * enc.hx[k]))
            .collect();
        let daz: Vec<f64> = (0..d.embed)
            .map(|k| (dc[d.embed + k] + dhz[k]) * (1.0 - enc.hz[k] * enc.hz[k]))
            .collect();
        back_linear(p, g, l.gx_w, Some(l.gx_b), &ex.x, &dax);
        back_linear(p, g, l.gz_w, Some(l.gz_b), &ex.z, &daz);
        (l1, l2)
    }

    /// Weighted means `sum w L / sum w` over the batch, with fixed noise. When
    /// `grad` is given it is overwritten with the gradient of the total.
    pub fn loss_and_gradient(
        &self,
        batch: &[Example],
        noise: &[ExampleNoise],
        weights: LossWeights,
        sigma: f64,
        mut grad: Option<&mut [f64]>,
    ) -> Result<LossParts> {
        if batch.is_empty() {
            return Err(Error::Empty("training batch"));
        }
        if noise.len() != batch.len() {
            return Err(Error::Dimension {
                what: "noise draws per batch",
                expected: batch.len(),
                got: noise.len(),
            });
        }
        if let Some(g) = grad.as_deref_mut() {
            if g.len() != self.params.len() {
                return Err(Error::Dimension {
                    what: "gradient buffer",
                    expected: self.params.len(),
                    got: g.len(),
                });
            }
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let wsum: f64 = batch.iter().map(|e| e.weight).sum();
        if !(wsum > 0.0 && wsum.is_finite()) {
            return Err(Error::InvalidArgument(
                "example weights must sum to a positive number".into(),
            ));
        }
        let mut parts = LossParts::default();
        for (ex, nz) in batch.iter().zip(noise) {
            self.check_example(ex, nz)?;
            let s = ex.weight / wsum;
            let (l1, l2) =
                self.example_pass(ex, nz, weights, sigma, grad.as_deref_mut().map(|g| (g, s)));
            parts.l1 += s * l1;
            parts.l2 += s * l2;
        }
        parts.total = weights.l1 * parts.l1 + weights.l2 * parts.l2;
        Ok(parts)
    }

    /// Mean negative ELBO over `(x, z)` pairs with `j` seeded belief draws.
    pub fn elbo_loss(&self, batch: &[(Vec<f64>, Vec<f64>)], j: usize, seed: u64) -> Result<f64> {
        let d = self.dims;
        let examples: Vec<Example> = batch
            .iter()
            .map(|(x, z)| Example {
                x: x.clone(),
                z: z.clone(),
                y_ref: vec![0.0; d.decision_dim],
                y: vec![0.0; d.decision_dim],
                weight: 1.0,
            })
            .collect();
        let mut rng = crate::rng::rng_from_seed(seed);
        let noise: Vec<ExampleNoise> = examples
            .iter()
            .map(|_| ExampleNoise::draw(&mut rng, j.max(1), d.d_delta, d.decision_dim))
            .collect();
        Ok(self
            .loss_and_gradient(
                &examples,
                &noise,
                LossWeights { l1: 1.0, l2: 0.0 },
                0.0,
                None,
            )?
            .l1)
    }
}
