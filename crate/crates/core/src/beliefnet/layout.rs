use serde::{Deserialize, Serialize};

/// Layer sizes of a belief network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDims {
    /// Problem feature dimension.
    pub d_x: usize,
    /// Encoded profile dimension.
    pub d_z: usize,
    /// Embedding width of the problem and profile maps.
    pub embed: usize,
    /// Hidden width of the encoder and decoder.
    pub hidden: usize,
    /// Belief (latent) dimension.
    pub d_delta: usize,
    /// 1 for numeric scales, M for M-way choice scales.
    pub decision_dim: usize,
}

impl NetDims {
    pub const DEFAULT_WIDTH: usize = 64;
    pub const DEFAULT_BELIEF_DIM: usize = 8;

    pub fn new(d_x: usize, d_z: usize, decision_dim: usize) -> Self {
        NetDims {
            d_x,
            d_z,
            embed: Self::DEFAULT_WIDTH,
            hidden: Self::DEFAULT_WIDTH,
            d_delta: Self::DEFAULT_BELIEF_DIM,
            decision_dim,
        }
    }

    pub fn with_sizes(mut self, embed: usize, hidden: usize, d_delta: usize) -> Self {
        self.embed = embed;
        self.hidden = hidden;
        self.d_delta = d_delta;
        self
    }

    pub(crate) fn is_valid(&self) -> bool {
        [
            self.d_x,
            self.d_z,
            self.embed,
            self.hidden,
            self.d_delta,
            self.decision_dim,
        ]
        .iter()
        .all(|&d| d > 0)
    }
}

/// A row-major tensor inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Block {
    pub off: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.off..self.off + self.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Layout {
    pub gx_w: Block,
    pub gx_b: Block,
    pub gz_w: Block,
    pub gz_b: Block,
    pub enc_w: Block,
    pub enc_b: Block,
    pub mu_w: Block,
    pub mu_b: Block,
    pub lv_w: Block,
    pub lv_b: Block,
    pub dec_w: Block,
    pub dec_b: Block,
    pub out_w: Block,
    pub out_b: Block,
    pub readout: Block,
    pub total: usize,
}

impl Layout {
    pub fn new(d: &NetDims) -> Self {
        let mut off = 0;
        let mut block = |rows: usize, cols: usize| {
            let b = Block { off, rows, cols };
            off += rows * cols;
            b
        };
        let gx_w = block(d.embed, d.d_x);
        let gx_b = block(d.embed, 1);
        let gz_w = block(d.embed, d.d_z);
        let gz_b = block(d.embed, 1);
        let enc_w = block(d.hidden, 2 * d.embed);
        let enc_b = block(d.hidden, 1);
        let mu_w = block(d.d_delta, d.hidden);
        let mu_b = block(d.d_delta, 1);
        let lv_w = block(d.d_delta, d.hidden);
        let lv_b = block(d.d_delta, 1);
        let dec_w = block(d.hidden, d.d_delta + d.embed);
        let dec_b = block(d.hidden, 1);
        let out_w = block(d.d_x, d.hidden);
        let out_b = block(d.d_x, 1);
        let readout = block(d.decision_dim, d.d_delta);
        Layout {
            gx_w,
            gx_b,
            gz_w,
            gz_b,
            enc_w,
            enc_b,
            mu_w,
            mu_b,
            lv_w,
            lv_b,
            dec_w,
            dec_b,
            out_w,
            out_b,
            readout,
            total: off,
        }
    }

    pub fn named(&self) -> [(&'static str, Block); 15] {
        [
            ("problem_embed.weight", self.gx_w),
            ("problem_embed.bias", self.gx_b),
            ("profile_embed.weight", self.gz_w),
            ("profile_embed.bias", self.gz_b),
            ("encoder.weight", self.enc_w),
            ("encoder.bias", self.enc_b),
            ("mu.weight", self.mu_w),
            ("mu.bias", self.mu_b),
            ("logvar.weight", self.lv_w),
            ("logvar.bias", self.lv_b),
            ("decoder.weight", self.dec_w),
            ("decoder.bias", self.dec_b),
            ("reconstruction.weight", self.out_w),
            ("reconstruction.bias", self.out_b),
            ("readout.weight", self.readout),
        ]
    }

    /// Weight blocks paired with their fan-in, for initialization.
    pub fn weights(&self) -> [Block; 8] {
        [
            self.gx_w,
            self.gz_w,
            self.enc_w,
            self.mu_w,
            self.lv_w,
            self.dec_w,
            self.out_w,
            self.readout,
        ]
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `W x + b`.
pub(crate) fn affine(p: &[f64], w: Block, b: Block, x: &[f64]) -> Vec<f64> {
    let wm = &p[w.range()];
    let bv = &p[b.range()];
    (0..w.rows)
        .map(|r| bv[r] + dot(&wm[r * w.cols..(r + 1) * w.cols], x))
        .collect()
}

/// `W x` without bias.
pub(crate) fn linear(p: &[f64], w: Block, x: &[f64]) -> Vec<f64> {
    let wm = &p[w.range()];
    (0..w.rows)
        .map(|r| dot(&wm[r * w.cols..(r + 1) * w.cols], x))
        .collect()
}

/// Accumulate `dW += dy x^T` (and `db += dy` when a bias is given); return `W^T dy`.
pub(crate) fn back_linear(
    p: &[f64],
    g: &mut [f64],
    w: Block,
    b: Option<Block>,
    x: &[f64],
    dy: &[f64],
) -> Vec<f64> {
    let wm = &p[w.range()];
    let mut dx = vec![0.0; w.cols];
    for r in 0..w.rows {
        let d = dy[r];
        if d == 0.0 {
            continue;
        }
        if let Some(b) = b {
            g[b.off + r] += d;
        }
        let row = r * w.cols;
        let gw = &mut g[w.off + row..w.off + row + w.cols];
        for c in 0..w.cols {
            gw[c] += d * x[c];
            dx[c] += wm[row + c] * d;
        }
    }
    dx
}

pub(crate) fn tanh_in_place(v: &mut [f64]) {
    v.iter_mut().for_each(|x| *x = x.tanh());
}
