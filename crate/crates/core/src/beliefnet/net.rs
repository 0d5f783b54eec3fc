use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::layout::{affine, linear, tanh_in_place, Block, Layout, NetDims};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Log-variances are clamped to this range; the gradient is zero outside it.
pub const LOGVAR_MIN: f64 = -20.0;
pub const LOGVAR_MAX: f64 = 20.0;

/// Profile-conditioned conditional VAE producing belief vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefNet {
    pub(crate) dims: NetDims,
    pub(crate) layout: Layout,
    pub(crate) params: Vec<f64>,
}

/// Intermediate encoder activations.
#[derive(Debug, Clone)]
pub(crate) struct Encoded {
    pub hx: Vec<f64>,
    pub hz: Vec<f64>,
    pub c: Vec<f64>,
    pub he: Vec<f64>,
    pub mu: Vec<f64>,
    pub lv: Vec<f64>,
    /// Whether each log-variance sits strictly inside the clamp range.
    pub lv_free: Vec<bool>,
}

impl BeliefNet {
    /// All parameters zero: `mu = 0`, `sigma^2 = 1`, zero belief effect.
    pub fn zeros(dims: NetDims) -> Result<Self> {
        if !dims.is_valid() {
            return Err(Error::InvalidArgument(format!(
                "all network sizes must be positive: {dims:?}"
            )));
        }
        let layout = Layout::new(&dims);
        Ok(BeliefNet {
            params: vec![0.0; layout.total],
            dims,
            layout,
        })
    }

    /// Uniform Glorot initialization for weights, zero biases and readout.
    pub fn new(dims: NetDims, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let mut rng = rng_from_seed(seed);
        let readout = net.layout.readout;
        for w in net.layout.weights() {
            if w == readout {
                continue;
            }
            let a = (6.0 / (w.rows + w.cols) as f64).sqrt();
            for v in &mut net.params[w.range()] {
                *v = rng.random_range(-a..a);
            }
        }
        Ok(net)
    }

    pub fn dims(&self) -> NetDims {
        self.dims
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Readout matrix (`decision_dim x d_delta`, row-major).
    pub fn readout(&self) -> &[f64] {
        &self.params[self.layout.readout.range()]
    }

    pub fn readout_mut(&mut self) -> &mut [f64] {
        let r = self.layout.readout.range();
        &mut self.params[r]
    }

    pub(crate) fn block(&self, b: Block) -> &[f64] {
        &self.params[b.range()]
    }

    pub(crate) fn check_inputs(&self, x: &[f64], z: &[f64]) -> Result<()> {
        if x.len() != self.dims.d_x {
            return Err(Error::Dimension {
                what: "problem features",
                expected: self.dims.d_x,
                got: x.len(),
            });
        }
        if z.len() != self.dims.d_z {
            return Err(Error::Dimension {
                what: "encoded profile",
                expected: self.dims.d_z,
                got: z.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn encode_full(&self, x: &[f64], z: &[f64]) -> Encoded {
        let p = &self.params;
        let l = &self.layout;
        let mut hx = affine(p, l.gx_w, l.gx_b, x);
        tanh_in_place(&mut hx);
        let mut hz = affine(p, l.gz_w, l.gz_b, z);
        tanh_in_place(&mut hz);
        let c: Vec<f64> = hx.iter().chain(&hz).copied().collect();
        let mut he = affine(p, l.enc_w, l.enc_b, &c);
        tanh_in_place(&mut he);
        let mu = affine(p, l.mu_w, l.mu_b, &he);
        let raw = affine(p, l.lv_w, l.lv_b, &he);
        let lv_free = raw
            .iter()
            .map(|v| *v > LOGVAR_MIN && *v < LOGVAR_MAX)
            .collect();
        let lv = raw
            .iter()
            .map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX))
            .collect();
        Encoded {
            hx,
            hz,
            c,
            he,
            mu,
            lv,
            lv_free,
        }
    }

    /// Posterior mean and diagonal variance of the belief for `(x, z)`.
    pub fn encode(&self, x: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_inputs(x, z)?;
        let e = self.encode_full(x, z);
        let var = e.lv.iter().map(|v| v.exp()).collect();
        Ok((e.mu, var))
    }

    /// Reparameterized draw `delta = mu + sigma * zeta`.
    pub fn sample_belief_with<R: Rng>(
        &self,
        x: &[f64],
        z: &[f64],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let (mu, var) = self.encode(x, z)?;
        Ok(mu
            .iter()
            .zip(&var)
            .map(|(m, v)| {
                let zeta: f64 = StandardNormal.sample(rng);
                m + v.sqrt() * zeta
            })
            .collect())
    }

    pub fn sample_belief(&self, x: &[f64], z: &[f64], seed: u64) -> Result<Vec<f64>> {
        self.sample_belief_with(x, z, &mut rng_from_seed(seed))
    }

    /// Linear readout of a belief vector: one entry per decision coordinate.
    pub fn belief_effect(&self, delta: &[f64]) -> Result<Vec<f64>> {
        if delta.len() != self.dims.d_delta {
            return Err(Error::Dimension {
                what: "belief vector",
                expected: self.dims.d_delta,
                got: delta.len(),
            });
        }
        Ok(linear(&self.params, self.layout.readout, delta))
    }

    /// Reconstruct problem features from a belief and profile.
    pub fn decode(&self, delta: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        if delta.len() != self.dims.d_delta {
            return Err(Error::Dimension {
                what: "belief vector",
                expected: self.dims.d_delta,
                got: delta.len(),
            });
        }
        self.check_inputs(&vec![0.0; self.dims.d_x], z)?;
        let e = self.encode_full(&vec![0.0; self.dims.d_x], z);
        Ok(self.decode_from(delta, &e.hz).1)
    }

    /// Decoder hidden activations and reconstruction.
    pub(crate) fn decode_from(&self, delta: &[f64], hz: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = &self.params;
        let l = &self.layout;
        let din: Vec<f64> = delta.iter().chain(hz).copied().collect();
        let mut hd = affine(p, l.dec_w, l.dec_b, &din);
        tanh_in_place(&mut hd);
        let xhat = affine(p, l.out_w, l.out_b, &hd);
        (hd, xhat)
    }

    /// Jacobian of `mu` with respect to the problem features (`d_delta x d_x`).
    pub fn mu_jacobian_x(&self, x: &[f64], z: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_inputs(x, z)?;
        let d = self.dims;
        let l = &self.layout;
        let e = self.encode_full(x, z);
        let gx = self.block(l.gx_w);
        let enc = self.block(l.enc_w);
        let mu_w = self.block(l.mu_w);
        // A = diag(1 - hx^2) Wgx  (embed x d_x)
        let a: Vec<f64> = (0..d.embed)
            .flat_map(|r| {
                let s = 1.0 - e.hx[r] * e.hx[r];
                gx[r * d.d_x..(r + 1) * d.d_x].iter().map(move |w| s * w)
            })
            .collect();
        // B = diag(1 - he^2) Wenc[:, :embed] A  (hidden x d_x)
        let mut b = vec![0.0; d.hidden * d.d_x];
        for h in 0..d.hidden {
            let s = 1.0 - e.he[h] * e.he[h];
            for k in 0..d.embed {
                let w = s * enc[h * 2 * d.embed + k];
                for c in 0..d.d_x {
                    b[h * d.d_x + c] += w * a[k * d.d_x + c];
                }
            }
        }
        Ok((0..d.d_delta)
            .map(|m| {
                (0..d.d_x)
                    .map(|c| {
                        (0..d.hidden)
                            .map(|h| mu_w[m * d.hidden + h] * b[h * d.d_x + c])
                            .sum()
                    })
                    .collect()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_net_is_the_prior() {
        let net = BeliefNet::zeros(NetDims::new(4, 3, 1)).unwrap();
        let (mu, var) = net
            .encode(&[1.0, -2.0, 0.5, 3.0], &[0.2, 0.4, 1.0])
            .unwrap();
        assert!(mu.iter().all(|m| *m == 0.0));
        assert!(var.iter().all(|v| *v == 1.0));
        assert_eq!(net.belief_effect(&[2.0; 8]).unwrap(), vec![0.0]);
    }

    #[test]
    fn dimension_checks() {
        let net = BeliefNet::zeros(NetDims::new(4, 3, 1)).unwrap();
        assert!(matches!(
            net.encode(&[0.0; 3], &[0.0; 3]),
            Err(Error::Dimension { .. })
        ));
        assert!(BeliefNet::zeros(NetDims::new(0, 3, 1)).is_err());
    }

    #[test]
    fn coordinate_readout() {
        let mut net = BeliefNet::zeros(NetDims::new(2, 2, 1).with_sizes(4, 4, 3)).unwrap();
        net.readout_mut().copy_from_slice(&[1.0, 0.0, 0.0]);
        assert_eq!(net.belief_effect(&[2.0, -1.0, 7.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn clamped_variance_gives_deterministic_belief() {
        let dims = NetDims::new(2, 2, 1).with_sizes(3, 3, 2);
        let mut net = BeliefNet::new(dims, 5).unwrap();
        let lv_b = net.layout.lv_b;
        let lv_w = net.layout.lv_w;
        net.params[lv_w.range()].iter_mut().for_each(|v| *v = 0.0);
        net.params[lv_b.range()].iter_mut().for_each(|v| *v = -1e6);
        let (mu, _) = net.encode(&[0.3, 0.1], &[1.0, 0.0]).unwrap();
        let d = net.sample_belief(&[0.3, 0.1], &[1.0, 0.0], 9).unwrap();
        for (a, b) in mu.iter().zip(&d) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let dims = NetDims::new(5, 3, 1).with_sizes(6, 7, 4);
        let net = BeliefNet::new(dims, 11).unwrap();
        let x = [0.3, -0.2, 0.8, 0.1, -0.5];
        let z = [1.0, 0.0, 0.4];
        let jac = net.mu_jacobian_x(&x, &z).unwrap();
        let h = 1e-5;
        for c in 0..x.len() {
            let (mut xp, mut xm) = (x, x);
            xp[c] += h;
            xm[c] -= h;
            let mp = net.encode(&xp, &z).unwrap().0;
            let mm = net.encode(&xm, &z).unwrap().0;
            for m in 0..dims.d_delta {
                let fd = (mp[m] - mm[m]) / (2.0 * h);
                assert!(
                    (fd - jac[m][c]).abs() < 1e-7,
                    "d mu_{m} / d x_{c}: {fd} vs {}",
                    jac[m][c]
                );
            }
        }
    }
}
