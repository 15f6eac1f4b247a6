use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{step_embedding, Graph, Mat, ParamSet, Var};
use crate::{Error, Result};

/// `G(Y_t, t, X) → Ŷ_0`. Implementations must be deterministic given their
/// parameters and inputs, and return a matrix shaped like `Y_t`.
pub trait Denoiser: Sync {
    type Cond: Sync;

    fn params(&self) -> &ParamSet;
    fn params_mut(&mut self) -> &mut ParamSet;

    /// Records the prediction for `y_t` on `g`.
    fn forward<'p>(&'p self, g: &mut Graph<'p>, y_t: Var, t: usize, cond: &'p Self::Cond) -> Result<Var>;

    fn predict(&self, y_t: &Mat, t: usize, cond: &Self::Cond) -> Result<Mat> {
        let mut g = Graph::new();
        let y = g.input(y_t.clone());
        let out = self.forward(&mut g, y, t, cond)?;
        let v = g.into_value(out);
        if v.dim() != y_t.dim() {
            return Err(Error::shape(format!("denoiser returned {:?} for a {:?} sample", v.dim(), y_t.dim())));
        }
        Ok(v)
    }
}

/// Condition of the body model: both persons' features and the window's
/// relative offset, repeated on every frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyCond {
    /// frames × 124
    pub x: Mat,
    pub offset: [f64; 3],
}

impl BodyCond {
    pub fn frames(&self) -> usize {
        self.x.nrows()
    }

    /// frames × 127: features then the offset.
    pub fn matrix(&self) -> Mat {
        let n = self.x.nrows();
        let w = self.x.ncols();
        Array2::from_shape_fn((n, w + 3), |(i, j)| if j < w { self.x[[i, j]] } else { self.offset[j - w] })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvResConfig {
    pub y_dim: usize,
    pub cond_dim: usize,
    pub hidden: usize,
    pub step_dim: usize,
    pub pos_dim: usize,
}

impl ConvResConfig {
    pub fn input_dim(&self) -> usize {
        self.y_dim + self.cond_dim + self.step_dim + self.pos_dim
    }
}

/// Frame-wise residual network with kernel-3 temporal mixing:
///
/// ```text
/// h0 = [y_t | cond | step(t) | pos]
/// h1 = tanh(conv3(h0))
/// h2 = h1 + tanh(h1·W + b)
/// h3 = h2 + tanh(conv3(h2))
/// out = h3·W_out + b_out
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ConvResDenoiser {
    pub config: ConvResConfig,
    pub params: ParamSet,
}

const IN_W: usize = 0;
const IN_B: usize = 1;
const MID_W: usize = 2;
const MID_B: usize = 3;
const CONV_W: usize = 4;
const CONV_B: usize = 5;
const OUT_W: usize = 6;
const OUT_B: usize = 7;

impl ConvResDenoiser {
    pub fn new(config: ConvResConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, h) = (config.input_dim(), config.hidden);
        let mut p = ParamSet::new();
        p.add_glorot("in.w", 3 * d, h, &mut rng);
        p.add_zeros("in.b", 1, h);
        p.add_glorot("mid.w", h, h, &mut rng);
        p.add_zeros("mid.b", 1, h);
        p.add_glorot("conv.w", 3 * h, h, &mut rng);
        p.add_zeros("conv.b", 1, h);
        p.add_glorot("out.w", h, config.y_dim, &mut rng);
        p.add_zeros("out.b", 1, config.y_dim);
        ConvResDenoiser { config, params: p }
    }

    pub fn from_params(config: ConvResConfig, params: ParamSet) -> Result<Self> {
        let fresh = ConvResDenoiser::new(config, 0);
        if fresh.params.specs() != params.specs() {
            return Err(Error::ManifestMismatch("parameter layout does not match denoiser config".into()));
        }
        Ok(ConvResDenoiser { config, params })
    }
}

/// Fixed sinusoidal frame-position code (frames × dim).
pub fn position_codes(frames: usize, dim: usize) -> Mat {
    let mut m = Mat::zeros((frames, dim));
    for i in 0..frames {
        m.row_mut(i).assign(&step_embedding(i, dim).row(0));
    }
    m
}

fn conv3<'p>(g: &mut Graph<'p>, h: Var, w: Var, b: Var) -> Var {
    let prev = g.shift_rows(h, 1);
    let next = g.shift_rows(h, -1);
    let stacked = g.concat_cols(&[prev, h, next]);
    let z = g.matmul(stacked, w);
    g.add_row(z, b)
}

impl Denoiser for ConvResDenoiser {
    type Cond = BodyCond;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn forward<'p>(&'p self, g: &mut Graph<'p>, y_t: Var, t: usize, cond: &'p BodyCond) -> Result<Var> {
        let c = &self.config;
        let n = g.value(y_t).nrows();
        if g.value(y_t).ncols() != c.y_dim {
            return Err(Error::shape(format!("sample width {} != {}", g.value(y_t).ncols(), c.y_dim)));
        }
        if cond.frames() != n || cond.x.ncols() + 3 != c.cond_dim {
            return Err(Error::shape(format!(
                "condition is {:?} (+3 offset) for {n} frames, expected width {}",
                cond.x.dim(),
                c.cond_dim
            )));
        }
        let xc = g.input(cond.matrix());
        let step = g.input(step_embedding(t, c.step_dim));
        let step = g.broadcast(step, n);
        let pos = g.input(position_codes(n, c.pos_dim));
        let h0 = g.concat_cols(&[y_t, xc, step, pos]);

        let p = &self.params;
        let (w, b) = (g.param(p, IN_W), g.param(p, IN_B));
        let z = conv3(g, h0, w, b);
        let h1 = g.tanh(z);

        let (w, b) = (g.param(p, MID_W), g.param(p, MID_B));
        let z = g.matmul(h1, w);
        let z = g.add_row(z, b);
        let z = g.tanh(z);
        let h2 = g.add(h1, z);

        let (w, b) = (g.param(p, CONV_W), g.param(p, CONV_B));
        let z = conv3(g, h2, w, b);
        let z = g.tanh(z);
        let h3 = g.add(h2, z);

        let (w, b) = (g.param(p, OUT_W), g.param(p, OUT_B));
        let z = g.matmul(h3, w);
        Ok(g.add_row(z, b))
    }
}
