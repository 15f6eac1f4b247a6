//! The two-person body generator: training on a dataset container,
//! checkpoints, and generation of absolute motion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::denoiser::{BodyCond, ConvResConfig, ConvResDenoiser};
use super::normalize::Normalizer;
use super::sample::sample;
use super::schedule::{Schedule, ScheduleConfig};
use super::train::{train, Item, TrainConfig, TrainState};
use crate::audio::{FrameFeatures, FEATURE_DIM};
use crate::binfmt::{Reader, Writer};
use crate::dataset::{decode_pair, place_relative, DatasetContainer, Manifest, RelativeOffset};
use crate::motion::rotation::rot_y;
use crate::motion::{heading, ExpMap, FramePose, MotionSequence};
use crate::nn::{Adam, BlockSpec, Mat, ParamSet};
use crate::par::Execution;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DUETCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Network size; the input and output widths follow from the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyNetConfig {
    pub hidden: usize,
    pub step_dim: usize,
    pub pos_dim: usize,
}

impl Default for BodyNetConfig {
    fn default() -> Self {
        BodyNetConfig { hidden: 128, step_dim: 32, pos_dim: 16 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyCheckpoint {
    pub manifest: Manifest,
    pub manifest_hash: String,
    pub denoiser: ConvResDenoiser,
    pub schedule_config: ScheduleConfig,
    pub schedule: Schedule,
    pub normalizer: Normalizer,
    pub train: TrainConfig,
    pub state: TrainState,
    /// Default starting poses for generation (from the first training window).
    pub anchors: [FramePose; 2],
    pub config_fingerprint: String,
}

pub fn body_items(c: &DatasetContainer, norm: &Normalizer) -> Result<Vec<Item<BodyCond>>> {
    c.samples
        .iter()
        .map(|s| Ok(Item { cond: BodyCond { x: s.x.clone(), offset: s.offset.to_array() }, y0: norm.normalize(&s.y)? }))
        .collect()
}

impl BodyCheckpoint {
    /// Fresh model with normalisation fitted on `data`.
    pub fn init(
        data: &DatasetContainer,
        net: BodyNetConfig,
        schedule_config: ScheduleConfig,
        train: TrainConfig,
        config_fingerprint: impl Into<String>,
    ) -> Result<Self> {
        let Some(first) = data.samples.first() else {
            return Err(Error::invalid("dataset has no samples"));
        };
        let normalizer = Normalizer::fit(data.samples.iter().map(|s| s.y.view()))?;
        let cfg = ConvResConfig {
            y_dim: data.manifest.motion_width(),
            cond_dim: data.manifest.features.width() + 3,
            hidden: net.hidden,
            step_dim: net.step_dim,
            pos_dim: net.pos_dim,
        };
        let denoiser = ConvResDenoiser::new(cfg, train.seed);
        let state = TrainState::new(&denoiser, train.lr);
        Ok(BodyCheckpoint {
            manifest: data.manifest.clone(),
            manifest_hash: data.manifest.hash(),
            denoiser,
            schedule: schedule_config.build()?,
            schedule_config,
            normalizer,
            train,
            state,
            anchors: first.anchors.clone(),
            config_fingerprint: config_fingerprint.into(),
        })
    }

    pub fn net_config(&self) -> BodyNetConfig {
        let c = self.denoiser.config;
        BodyNetConfig { hidden: c.hidden, step_dim: c.step_dim, pos_dim: c.pos_dim }
    }

    /// Trains up to `self.train.steps` total steps (resuming where the
    /// state left off).
    pub fn fit(&mut self, data: &DatasetContainer, exec: Execution, on_step: impl FnMut(usize, f64)) -> Result<()> {
        let hash = data.manifest.hash();
        if hash != self.manifest_hash {
            return Err(Error::ManifestMismatch(format!(
                "dataset manifest {hash} does not match checkpoint manifest {}",
                self.manifest_hash
            )));
        }
        let items = body_items(data, &self.normalizer)?;
        train(&mut self.denoiser, &items, &self.schedule, &self.train, &mut self.state, exec, on_step)
    }

    /// One normalised-space sample for a condition.
    pub fn sample_normalized(&self, cond: &BodyCond, seed: u64) -> Result<Mat> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample(&self.denoiser, cond, &self.schedule, &mut rng, cond.frames(), self.denoiser.config.y_dim)
    }

    /// Generates both persons' motion for the given features. Person 1
    /// starts at `anchor` (the checkpoint default if `None`); person 2 is
    /// placed by `offset`.
    pub fn generate(
        &self,
        features: [&FrameFeatures; 2],
        offset: RelativeOffset,
        seed: u64,
        anchor: Option<&FramePose>,
    ) -> Result<[MotionSequence; 2]> {
        let n = features[0].frames();
        if features[1].frames() != n {
            return Err(Error::shape(format!("persons have {} and {} feature frames", n, features[1].frames())));
        }
        for f in features {
            if f.0.ncols() != FEATURE_DIM {
                return Err(Error::ManifestMismatch(format!("feature width {} != {FEATURE_DIM}", f.0.ncols())));
            }
        }
        let x = ndarray::concatenate(ndarray::Axis(1), &[features[0].0.view(), features[1].0.view()]).unwrap();
        let (y, anchors) = self.generate_window(&x, offset, seed, anchor)?;
        decode_pair(&y, &anchors, &self.manifest.skeleton, 1.0 / self.manifest.fps)
    }

    /// Delta table and starting poses for one window of concatenated
    /// features (frames × 124).
    pub fn generate_window(
        &self,
        x: &Mat,
        offset: RelativeOffset,
        seed: u64,
        anchor: Option<&FramePose>,
    ) -> Result<(Mat, [FramePose; 2])> {
        let want = self.manifest.features.width();
        if x.ncols() != want {
            return Err(Error::ManifestMismatch(format!("condition width {} != {want}", x.ncols())));
        }
        let cond = BodyCond { x: x.clone(), offset: offset.to_array() };
        let y = self.normalizer.denormalize(&self.sample_normalized(&cond, seed)?)?;
        Ok((y, self.placed_anchors(anchor, &offset)?))
    }

    /// Decodes an arbitrary normalised sample with the default anchors.
    pub fn decode_normalized(&self, y: &Mat, offset: &RelativeOffset) -> Result<[MotionSequence; 2]> {
        let y = self.normalizer.denormalize(y)?;
        decode_pair(&y, &self.placed_anchors(None, offset)?, &self.manifest.skeleton, 1.0 / self.manifest.fps)
    }

    fn placed_anchors(&self, anchor: Option<&FramePose>, offset: &RelativeOffset) -> Result<[FramePose; 2]> {
        let a = anchor.cloned().unwrap_or_else(|| self.anchors[0].clone());
        if a.rotations.len() != self.manifest.skeleton.len() {
            return Err(Error::shape("anchor pose does not match the checkpoint skeleton"));
        }
        let yaw_of = |p: &FramePose| heading(&p.rotations[0].to_matrix()).unwrap_or(0.0);
        let (pos, yaw) = place_relative(a.root_translation, yaw_of(&a), offset);
        let mut b = self.anchors[1].clone();
        let turn = rot_y(yaw - yaw_of(&b));
        b.rotations[0] = ExpMap::from_matrix_unchecked(&(turn * b.rotations[0].to_matrix()));
        b.root_translation = nalgebra::Vector3::new(pos.x, b.root_translation.y, pos.z);
        Ok([a, b])
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    manifest: Manifest,
    manifest_hash: String,
    network: ConvResConfig,
    schedule: ScheduleConfig,
    train: TrainConfig,
    offset_injection: String,
    param_specs: Vec<BlockSpec>,
    adam: AdamHeader,
    step: usize,
    config_fingerprint: String,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
pub(crate) struct AdamHeader {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
}

impl AdamHeader {
    pub(crate) fn of(a: &Adam) -> Self {
        AdamHeader { lr: a.lr, beta1: a.beta1, beta2: a.beta2, eps: a.eps, step: a.step }
    }
}

/// Appends the optimiser moments as two flat blocks.
pub(crate) fn write_adam(w: &mut Writer, a: &Adam) {
    w.block(a.m.iter().flat_map(|m| m.iter().copied()).collect::<Vec<_>>());
    w.block(a.v.iter().flat_map(|m| m.iter().copied()).collect::<Vec<_>>());
}

pub(crate) fn read_adam<H>(r: &mut Reader<H>, h: &AdamHeader, params: &ParamSet) -> Result<Adam> {
    let n = params.len();
    let m = ParamSet::from_flat(params.specs().to_vec(), &r.block_len("adam m", n)?)?;
    let v = ParamSet::from_flat(params.specs().to_vec(), &r.block_len("adam v", n)?)?;
    Ok(Adam {
        lr: h.lr,
        beta1: h.beta1,
        beta2: h.beta2,
        eps: h.eps,
        step: h.step,
        m: m.blocks().to_vec(),
        v: v.blocks().to_vec(),
    })
}

pub fn save_body_checkpoint(c: &BodyCheckpoint) -> Result<Vec<u8>> {
    let header = Header {
        manifest: c.manifest.clone(),
        manifest_hash: c.manifest_hash.clone(),
        network: c.denoiser.config,
        schedule: c.schedule_config,
        train: c.train,
        offset_injection: "concatenated-per-frame".into(),
        param_specs: c.denoiser.params.specs().to_vec(),
        adam: AdamHeader::of(&c.state.adam),
        step: c.state.step,
        config_fingerprint: c.config_fingerprint.clone(),
    };
    let mut w = Writer::new(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, &header)?;
    let [mean, std, mask] = c.normalizer.to_blocks();
    w.block(c.schedule.betas().to_vec()).block(mean).block(std).block(mask);
    w.block(c.denoiser.params.to_flat());
    write_adam(&mut w, &c.state.adam);
    w.block(c.state.losses.clone()).block(c.anchors[0].to_row()).block(c.anchors[1].to_row());
    Ok(w.finish())
}

pub fn load_body_checkpoint(bytes: &[u8]) -> Result<BodyCheckpoint> {
    let mut r: Reader<Header> = Reader::parse(bytes, CHECKPOINT_MAGIC, CHECKPOINT_VERSION)?;
    let h = &r.header;
    let (specs, network, steps) = (h.param_specs.clone(), h.network, h.schedule.steps);
    let d = h.manifest.motion_width();
    let betas = r.block_len("betas", steps)?;
    let schedule = Schedule::from_betas(betas)?;
    let normalizer =
        Normalizer::from_blocks(r.block_len("mean", d)?, r.block_len("std", d)?, r.block_len("mask", d)?)?;
    let n = specs.iter().map(|s| s.rows * s.cols).sum();
    let params = ParamSet::from_flat(specs, &r.block_len("parameters", n)?)?;
    let denoiser = ConvResDenoiser::from_params(network, params)?;
    let adam_h = r.header.adam;
    let adam = read_adam(&mut r, &adam_h, &denoiser.params)?;
    let step = r.header.step;
    let losses = r.block_len("losses", step)?;
    let aw = r.header.manifest.skeleton.frame_width();
    let anchors = [FramePose::from_row(&r.block_len("anchor", aw)?)?, FramePose::from_row(&r.block_len("anchor", aw)?)?];
    if r.remaining() != 0 {
        return Err(Error::format("unexpected trailing data blocks in checkpoint"));
    }
    let h = r.header;
    Ok(BodyCheckpoint {
        manifest: h.manifest,
        manifest_hash: h.manifest_hash,
        denoiser,
        schedule_config: h.schedule,
        schedule,
        normalizer,
        train: h.train,
        state: TrainState { adam, step, losses },
        anchors,
        config_fingerprint: h.config_fingerprint,
    })
}

/// White-noise baseline: standard normal samples in normalised space.
pub fn white_noise_sample(frames: usize, width: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    super::forward::standard_normal(&mut rng, frames, width)
}
