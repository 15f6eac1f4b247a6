//! Training, persistence and generation for the face model.

use std::collections::BTreeSet;

use ndarray::{s, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::FaceDataset;
use super::latent::{FaceAutoencoder, DEFAULT_LATENT_DIM};
use super::model::{facing_one_hot, FaceCond, FaceDenoiser, FaceNetConfig, StyleRef};
use super::sequence::{concat_faces, split_faces, FaceSequence};
use super::topology::RegionMasks;
use crate::binfmt::{Reader, Writer};
use crate::diffusion::body::{read_adam, write_adam, AdamHeader};
use crate::diffusion::{sample, train, Item, Schedule, ScheduleConfig, TrainConfig, TrainState};
use crate::nn::{BlockSpec, Mat, ParamSet};
use crate::par::Execution;
use crate::{Error, Result};

pub const FACE_CHECKPOINT_MAGIC: &[u8; 8] = b"DUETFMDL";
pub const FACE_CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceOptions {
    pub latent_dim: usize,
    pub style_dim: usize,
    pub step_dim: usize,
    pub tau: f64,
    /// Training window in frames; 0 trains on whole recordings.
    pub window: usize,
    pub stride: usize,
}

impl Default for FaceOptions {
    fn default() -> Self {
        FaceOptions { latent_dim: DEFAULT_LATENT_DIM, style_dim: 16, step_dim: 32, tau: super::attention::DEFAULT_TAU, window: 0, stride: 0 }
    }
}

/// What to do with a speaker id the model was not trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StylePolicy {
    /// Use the mean embedding and report a warning.
    #[default]
    Fallback,
    Strict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedFaces {
    pub faces: [FaceSequence; 2],
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceCheckpoint {
    pub data_hash: String,
    pub options: FaceOptions,
    pub autoencoder: FaceAutoencoder,
    pub denoiser: FaceDenoiser,
    pub schedule_config: ScheduleConfig,
    pub schedule: Schedule,
    pub train: TrainConfig,
    pub state: TrainState,
    pub styles: Vec<String>,
    /// Neutral template per style id, in `styles` order.
    pub style_templates: Vec<Array2<f64>>,
    /// Templates of persons A and B in the first recording.
    pub slot_templates: [Array2<f64>; 2],
    pub masks: RegionMasks,
    pub fps: f64,
    pub config_fingerprint: String,
}

impl FaceCheckpoint {
    pub fn init(
        data: &FaceDataset,
        options: FaceOptions,
        schedule_config: ScheduleConfig,
        train: TrainConfig,
        config_fingerprint: impl Into<String>,
    ) -> Result<Self> {
        data.validate()?;
        let styles: Vec<String> =
            data.recordings.iter().flat_map(|r| r.styles.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
        let style_templates = styles
            .iter()
            .map(|s| {
                let (r, k) = data
                    .recordings
                    .iter()
                    .find_map(|r| r.styles.iter().position(|x| x == s).map(|k| (r, k)))
                    .expect("style collected from the recordings");
                r.faces[k].template.clone()
            })
            .collect();
        let joints = data.recordings.iter().map(|r| concat_faces(&r.faces[0], &r.faces[1])).collect::<Result<Vec<_>>>()?;
        let autoencoder = FaceAutoencoder::fit(&joints.iter().collect::<Vec<_>>(), options.latent_dim, train.seed)?;
        let net = FaceNetConfig {
            width: options.latent_dim,
            audio_dim: crate::audio::MEL_BANDS,
            styles: styles.len(),
            style_dim: options.style_dim,
            step_dim: options.step_dim,
            tau: options.tau,
        };
        let denoiser = FaceDenoiser::new(net, train.seed);
        let state = TrainState::new(&denoiser, train.lr);
        let first = &data.recordings[0];
        Ok(FaceCheckpoint {
            data_hash: data.hash()?,
            options,
            autoencoder,
            denoiser,
            schedule: schedule_config.build()?,
            schedule_config,
            train,
            state,
            styles,
            style_templates,
            slot_templates: [first.faces[0].template.clone(), first.faces[1].template.clone()],
            masks: data.masks.clone(),
            fps: data.fps,
            config_fingerprint: config_fingerprint.into(),
        })
    }

    pub fn vertices(&self) -> [usize; 2] {
        [self.slot_templates[0].nrows(), self.slot_templates[1].nrows()]
    }

    /// Latent training windows with their conditions.
    pub fn items(&self, data: &FaceDataset) -> Result<Vec<Item<FaceCond>>> {
        let mut out = Vec::new();
        for r in &data.recordings {
            let z = self.autoencoder.encode(&concat_faces(&r.faces[0], &r.faces[1])?)?;
            let styles = [self.style_index(&r.styles[0])?, self.style_index(&r.styles[1])?];
            let t = r.frames();
            let (w, stride) = (self.options.window, self.options.stride.max(1));
            let starts: Vec<usize> = if w == 0 || w >= t { vec![0] } else { (0..=t - w).step_by(stride).collect() };
            let len = if w == 0 { t } else { w.min(t) };
            for st in starts {
                out.push(Item {
                    cond: FaceCond {
                        audio: [r.mel[0].slice(s![st..st + len, ..]).to_owned(), r.mel[1].slice(s![st..st + len, ..]).to_owned()],
                        styles: styles.map(StyleRef::Known),
                        facing: facing_one_hot(r.facing),
                    },
                    y0: z.slice(s![st..st + len, ..]).to_owned(),
                });
            }
        }
        Ok(out)
    }

    fn style_index(&self, id: &str) -> Result<usize> {
        self.styles.iter().position(|s| s == id).ok_or_else(|| Error::invalid(format!("unseen style id {id:?}")))
    }

    pub fn fit(&mut self, data: &FaceDataset, exec: Execution, on_step: impl FnMut(usize, f64)) -> Result<()> {
        let hash = data.hash()?;
        if hash != self.data_hash {
            return Err(Error::ManifestMismatch(format!("face data {hash} does not match checkpoint data {}", self.data_hash)));
        }
        let items = self.items(data)?;
        train(&mut self.denoiser, &items, &self.schedule, &self.train, &mut self.state, exec, on_step)
    }

    fn resolve(&self, id: &str, policy: StylePolicy, warnings: &mut Vec<String>) -> Result<StyleRef> {
        match (self.style_index(id), policy) {
            (Ok(i), _) => Ok(StyleRef::Known(i)),
            (Err(e), StylePolicy::Strict) => Err(e),
            (Err(_), StylePolicy::Fallback) => {
                warnings.push(format!("style id {id:?} not seen in training; using the mean style embedding"));
                Ok(StyleRef::Mean)
            }
        }
    }

    fn template_for(&self, slot: usize, style: StyleRef) -> &Array2<f64> {
        let v = self.slot_templates[slot].nrows();
        match style {
            StyleRef::Known(i) if self.style_templates[i].nrows() == v => &self.style_templates[i],
            _ => &self.slot_templates[slot],
        }
    }

    /// Decodes a latent sequence into both persons' faces.
    pub fn decode(&self, z: &Mat, styles: [StyleRef; 2]) -> Result<[FaceSequence; 2]> {
        let t0 = self.template_for(0, styles[0]);
        let t1 = self.template_for(1, styles[1]);
        let template = ndarray::concatenate(ndarray::Axis(0), &[t0.view(), t1.view()]).unwrap();
        let joint = self.autoencoder.decode(&template, z)?;
        let (a, b) = split_faces(&joint, t0.nrows())?;
        Ok([a, b])
    }

    /// Generates `frames` frames of both faces from per-person mel features.
    #[allow(clippy::too_many_arguments)]
    pub fn generate(
        &self,
        audio: [&Mat; 2],
        styles: [&str; 2],
        facing: bool,
        seed: u64,
        frames: usize,
        policy: StylePolicy,
    ) -> Result<GeneratedFaces> {
        let (na, nb) = (audio[0].nrows(), audio[1].nrows());
        if na != nb {
            return Err(Error::shape(format!("audio lengths differ after frame alignment: {na} vs {nb}")));
        }
        if frames == 0 || frames > na {
            return Err(Error::invalid(format!("requested {frames} frames from {na} audio frames")));
        }
        let mut warnings = Vec::new();
        let refs = [self.resolve(styles[0], policy, &mut warnings)?, self.resolve(styles[1], policy, &mut warnings)?];
        let cond = FaceCond {
            audio: [audio[0].slice(s![..frames, ..]).to_owned(), audio[1].slice(s![..frames, ..]).to_owned()],
            styles: refs,
            facing: facing_one_hot(facing),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = sample(&self.denoiser, &cond, &self.schedule, &mut rng, frames, self.autoencoder.latent_dim())?;
        Ok(GeneratedFaces { faces: self.decode(&z, refs)?, warnings })
    }

    /// White-noise baseline: a standard normal latent decoded like a sample.
    pub fn white_noise(&self, frames: usize, seed: u64) -> Result<[FaceSequence; 2]> {
        let z = crate::diffusion::body::white_noise_sample(frames, self.autoencoder.latent_dim(), seed);
        self.decode(&z, [StyleRef::Mean, StyleRef::Mean])
    }
}

/// Free-function form of [`FaceCheckpoint::generate`].
#[allow(clippy::too_many_arguments)]
pub fn generate_faces(
    ckpt: &FaceCheckpoint,
    audio_a: &Mat,
    audio_b: &Mat,
    style_a: &str,
    style_b: &str,
    facing: bool,
    seed: u64,
    frames: usize,
) -> Result<GeneratedFaces> {
    ckpt.generate([audio_a, audio_b], [style_a, style_b], facing, seed, frames, StylePolicy::Fallback)
}

#[derive(Serialize, Deserialize)]
struct Header {
    data_hash: String,
    options: FaceOptions,
    network: FaceNetConfig,
    schedule: ScheduleConfig,
    train: TrainConfig,
    styles: Vec<String>,
    style_vertices: Vec<usize>,
    vertices: [usize; 2],
    lip: Vec<usize>,
    upper: Vec<usize>,
    fps: f64,
    reconstruction_tolerance: f64,
    param_specs: Vec<BlockSpec>,
    adam: AdamHeader,
    step: usize,
    config_fingerprint: String,
}

pub fn save_face_checkpoint(c: &FaceCheckpoint) -> Result<Vec<u8>> {
    let header = Header {
        data_hash: c.data_hash.clone(),
        options: c.options,
        network: c.denoiser.config,
        schedule: c.schedule_config,
        train: c.train,
        styles: c.styles.clone(),
        style_vertices: c.style_templates.iter().map(|t| t.nrows()).collect(),
        vertices: c.vertices(),
        lip: c.masks.lip.clone(),
        upper: c.masks.upper.clone(),
        fps: c.fps,
        reconstruction_tolerance: c.autoencoder.tolerance,
        param_specs: c.denoiser.params.specs().to_vec(),
        adam: AdamHeader::of(&c.state.adam),
        step: c.state.step,
        config_fingerprint: c.config_fingerprint.clone(),
    };
    let mut w = Writer::new(FACE_CHECKPOINT_MAGIC, FACE_CHECKPOINT_VERSION, &header)?;
    w.block(c.schedule.betas().to_vec());
    for b in c.autoencoder.to_blocks() {
        w.block(b);
    }
    w.block(c.denoiser.params.to_flat());
    write_adam(&mut w, &c.state.adam);
    w.block(c.state.losses.clone());
    for t in c.slot_templates.iter().chain(&c.style_templates) {
        w.block(t.iter().copied().collect::<Vec<_>>());
    }
    Ok(w.finish())
}

pub fn load_face_checkpoint(bytes: &[u8]) -> Result<FaceCheckpoint> {
    let mut r: Reader<Header> = Reader::parse(bytes, FACE_CHECKPOINT_MAGIC, FACE_CHECKPOINT_VERSION)?;
    let (steps, net) = (r.header.schedule.steps, r.header.network);
    let d = 3 * (r.header.vertices[0] + r.header.vertices[1]);
    let l = r.header.options.latent_dim;
    if net.width != l {
        return Err(Error::format("network width does not match the latent width"));
    }
    let schedule = Schedule::from_betas(r.block_len("betas", steps)?)?;
    let autoencoder = FaceAutoencoder::from_blocks(
        r.block_len("latent bias", d)?,
        r.block_len("latent basis", d * l)?,
        r.block_len("latent scale", l)?,
        r.header.reconstruction_tolerance,
    )?;
    let specs = r.header.param_specs.clone();
    let n = specs.iter().map(|s| s.rows * s.cols).sum();
    let params = ParamSet::from_flat(specs, &r.block_len("parameters", n)?)?;
    let denoiser = FaceDenoiser::from_params(net, params)?;
    let adam_h = r.header.adam;
    let adam = read_adam(&mut r, &adam_h, &denoiser.params)?;
    let step = r.header.step;
    let losses = r.block_len("losses", step)?;
    let template = |r: &mut Reader<Header>, v: usize| -> Result<Array2<f64>> {
        Ok(Array2::from_shape_vec((v, 3), r.block_len("template", 3 * v)?).unwrap())
    };
    let [va, vb] = r.header.vertices;
    let slot_templates = [template(&mut r, va)?, template(&mut r, vb)?];
    let sv = r.header.style_vertices.clone();
    if sv.len() != r.header.styles.len() {
        return Err(Error::format("style template count does not match the style list"));
    }
    let style_templates = sv.into_iter().map(|v| template(&mut r, v)).collect::<Result<Vec<_>>>()?;
    if r.remaining() != 0 {
        return Err(Error::format("unexpected trailing data blocks in face checkpoint"));
    }
    let h = r.header;
    Ok(FaceCheckpoint {
        data_hash: h.data_hash,
        options: h.options,
        autoencoder,
        denoiser,
        schedule_config: h.schedule,
        schedule,
        train: h.train,
        state: TrainState { adam, step, losses },
        styles: h.styles,
        style_templates,
        slot_templates,
        masks: RegionMasks { lip: h.lip, upper: h.upper },
        fps: h.fps,
        config_fingerprint: h.config_fingerprint,
    })
}
