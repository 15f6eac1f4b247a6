//! The face denoiser: audio, style, facing and step encoders feeding one
//! block of biased conditional attention over the noisy joint latent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attention::{attend, attention_bias, DEFAULT_TAU};
use crate::audio::MEL_BANDS;
use crate::diffusion::Denoiser;
use crate::nn::{step_embedding, Graph, Mat, ParamSet, Var};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceNetConfig {
    /// Latent width; every embedding shares it.
    pub width: usize,
    pub audio_dim: usize,
    pub styles: usize,
    pub style_dim: usize,
    pub step_dim: usize,
    pub tau: f64,
}

impl FaceNetConfig {
    pub fn new(width: usize, styles: usize) -> Self {
        FaceNetConfig { width, audio_dim: MEL_BANDS, styles, style_dim: 16, step_dim: 32, tau: DEFAULT_TAU }
    }
}

/// Which style embedding a person uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StyleRef {
    Known(usize),
    /// Average of all learned embeddings, for speakers not seen in training.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceCond {
    /// Per-person T × audio_dim features, frame-aligned with the latent.
    pub audio: [Mat; 2],
    pub styles: [StyleRef; 2],
    /// One-hot: (1, 0) facing, (0, 1) not facing.
    pub facing: [f64; 2],
}

impl FaceCond {
    pub fn frames(&self) -> usize {
        self.audio[0].nrows()
    }

    pub fn check(&self, cfg: &FaceNetConfig, frames: usize) -> Result<()> {
        for (who, a) in ["A", "B"].iter().zip(&self.audio) {
            if a.dim() != (frames, cfg.audio_dim) {
                return Err(Error::shape(format!("audio of person {who} is {:?}, expected ({frames}, {})", a.dim(), cfg.audio_dim)));
            }
        }
        for s in self.styles {
            if let StyleRef::Known(i) = s {
                if i >= cfg.styles {
                    return Err(Error::invalid(format!("style index {i} outside the {} learned styles", cfg.styles)));
                }
            }
        }
        let ones = self.facing.iter().filter(|&&v| v == 1.0).count();
        let zeros = self.facing.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || zeros != 1 {
            return Err(Error::invalid(format!("facing condition {:?} is not one-hot", self.facing)));
        }
        Ok(())
    }
}

pub fn facing_one_hot(facing: bool) -> [f64; 2] {
    if facing {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceDenoiser {
    pub config: FaceNetConfig,
    pub params: ParamSet,
}

mod p {
    pub const AUD_A_W: usize = 0;
    pub const AUD_A_B: usize = 1;
    pub const AUD_B_W: usize = 2;
    pub const AUD_B_B: usize = 3;
    pub const MIX_W: usize = 4;
    pub const MIX_B: usize = 5;
    pub const STYLE_TABLE: usize = 6;
    pub const STYLE_W: usize = 7;
    pub const STYLE_B: usize = 8;
    pub const FACING_W: usize = 9;
    pub const FACING_B: usize = 10;
    pub const STEP_W: usize = 11;
    pub const STEP_B: usize = 12;
    pub const IN_W: usize = 13;
    pub const IN_B: usize = 14;
    pub const Q_W: usize = 15;
    pub const K_W: usize = 16;
    pub const V_W: usize = 17;
    pub const O_W: usize = 18;
    pub const FF_W: usize = 19;
    pub const FF_B: usize = 20;
    pub const OUT_W: usize = 21;
    pub const OUT_B: usize = 22;
}

impl FaceDenoiser {
    pub fn new(config: FaceNetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, a, sd) = (config.width, config.audio_dim, config.style_dim);
        let mut ps = ParamSet::new();
        ps.add_glorot("audio_a.w", a, d, &mut rng);
        ps.add_zeros("audio_a.b", 1, d);
        ps.add_glorot("audio_b.w", a, d, &mut rng);
        ps.add_zeros("audio_b.b", 1, d);
        ps.add_glorot("mix.w", 2 * d, d, &mut rng);
        ps.add_zeros("mix.b", 1, d);
        ps.add_uniform("style.table", config.styles.max(1), sd, 0.5, &mut rng);
        ps.add_glorot("style.w", 2 * sd, d, &mut rng);
        ps.add_zeros("style.b", 1, d);
        ps.add_glorot("facing.w", 2, d, &mut rng);
        ps.add_zeros("facing.b", 1, d);
        ps.add_glorot("step.w", config.step_dim, d, &mut rng);
        ps.add_zeros("step.b", 1, d);
        ps.add_glorot("in.w", d, d, &mut rng);
        ps.add_zeros("in.b", 1, d);
        for name in ["q.w", "k.w", "v.w", "o.w"] {
            ps.add_glorot(name, d, d, &mut rng);
        }
        ps.add_glorot("ff.w", d, d, &mut rng);
        ps.add_zeros("ff.b", 1, d);
        ps.add_glorot("out.w", d, d, &mut rng);
        ps.add_zeros("out.b", 1, d);
        FaceDenoiser { config, params: ps }
    }

    pub fn from_params(config: FaceNetConfig, params: ParamSet) -> Result<Self> {
        if FaceDenoiser::new(config, 0).params.specs() != params.specs() {
            return Err(Error::ManifestMismatch("parameter layout does not match face network config".into()));
        }
        Ok(FaceDenoiser { config, params })
    }

    fn selector(&self, s: StyleRef) -> Mat {
        let n = self.config.styles.max(1);
        match s {
            StyleRef::Known(i) => Mat::from_shape_fn((1, n), |(_, j)| if i == j { 1.0 } else { 0.0 }),
            StyleRef::Mean => Mat::from_elem((1, n), 1.0 / n as f64),
        }
    }

    fn linear<'p>(&'p self, g: &mut Graph<'p>, x: Var, w: usize, b: usize) -> Var {
        let (w, b) = (g.param(&self.params, w), g.param(&self.params, b));
        let z = g.matmul(x, w);
        g.add_row(z, b)
    }

    /// Attention weights of the trained block, for inspection.
    pub fn attention_weights(&self, x: &Mat, t: usize, cond: &FaceCond) -> Result<Mat> {
        let mut g = Graph::new();
        let xv = g.input(x.clone());
        let (w, _) = self.record(&mut g, xv, t, cond)?;
        Ok(g.into_value(w))
    }

    fn record<'p>(&'p self, g: &mut Graph<'p>, x: Var, t: usize, cond: &'p FaceCond) -> Result<(Var, Var)> {
        let cfg = &self.config;
        let (frames, width) = g.value(x).dim();
        if width != cfg.width {
            return Err(Error::shape(format!("latent width {width} != model width {}", cfg.width)));
        }
        cond.check(cfg, frames)?;

        let aa = g.input_ref(&cond.audio[0]);
        let ab = g.input_ref(&cond.audio[1]);
        let ea = self.linear(g, aa, p::AUD_A_W, p::AUD_A_B);
        let eb = self.linear(g, ab, p::AUD_B_W, p::AUD_B_B);
        let both = g.concat_cols(&[ea, eb]);
        let e_a = self.linear(g, both, p::MIX_W, p::MIX_B);
        let e_a = g.tanh(e_a);

        let table = g.param(&self.params, p::STYLE_TABLE);
        let sel_a = g.input(self.selector(cond.styles[0]));
        let sel_b = g.input(self.selector(cond.styles[1]));
        let sa = g.matmul(sel_a, table);
        let sb = g.matmul(sel_b, table);
        let s = g.concat_cols(&[sa, sb]);
        let e_s = self.linear(g, s, p::STYLE_W, p::STYLE_B);
        let e_s = g.tanh(e_s);

        let pv = g.input(Mat::from_shape_vec((1, 2), cond.facing.to_vec()).unwrap());
        let e_p = self.linear(g, pv, p::FACING_W, p::FACING_B);
        let e_p = g.tanh(e_p);

        let sv = g.input(step_embedding(t, cfg.step_dim));
        let e_n = self.linear(g, sv, p::STEP_W, p::STEP_B);
        let e_n = g.tanh(e_n);

        let h = self.linear(g, x, p::IN_W, p::IN_B);
        let en_rows = g.broadcast(e_n, frames);
        let h = g.add(h, en_rows);

        let (wq, wk, wv, wo) =
            (g.param(&self.params, p::Q_W), g.param(&self.params, p::K_W), g.param(&self.params, p::V_W), g.param(&self.params, p::O_W));
        let q = g.matmul(h, wq);
        let q = g.scale(q, 1.0 / (cfg.width as f64).sqrt());
        let k = g.matmul(e_a, wk);
        let v = g.matmul(e_a, wv);
        let bias = g.input(attention_bias(frames, frames, cfg.tau));
        let (w, att) = attend(g, q, k, v, e_s, e_p, e_n, bias)?;
        let att = g.matmul(att, wo);
        let h2 = g.add(h, att);
        let ff = self.linear(g, h2, p::FF_W, p::FF_B);
        let ff = g.tanh(ff);
        let h3 = g.add(h2, ff);
        Ok((w, self.linear(g, h3, p::OUT_W, p::OUT_B)))
    }
}

impl Denoiser for FaceDenoiser {
    type Cond = FaceCond;

    fn params(&self) -> &ParamSet {
        &self.params
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn forward<'p>(&'p self, g: &mut Graph<'p>, y_t: Var, t: usize, cond: &'p FaceCond) -> Result<Var> {
        Ok(self.record(g, y_t, t, cond)?.1)
    }
}
