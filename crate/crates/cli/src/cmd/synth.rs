//! Synthetic recording directories plus their preprocessed dataset.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use duet_core::audio::action::write_action_sidecar;
use duet_core::audio::semantic::write_transcript;
use duet_core::audio::wav::write_wav;
use duet_core::dataset::{synth_recording, SynthConfig, SynthRecording};
use duet_core::face::save_face_sequence;
use duet_core::motion::{write_bvh, BvhOptions};
use duet_core::par;

use super::preprocess::{self, PreprocessArgs};
use super::Ctx;
use crate::failure::{usage, write, At, CmdResult};
use crate::recording::SLOTS;

const ID_POOL: [&str; 3] = ["S1", "S2", "S3"];
const RELATIONSHIPS: [&str; 3] = ["friends", "strangers", "colleagues"];
const EMOTIONS: [&str; 2] = ["neutral", "happy"];

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FacingMode {
    Yes,
    No,
    /// Even recordings face each other, odd ones do not.
    Alternate,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 300)]
    pub frames: usize,
    #[arg(long, default_value_t = 1)]
    pub recordings: usize,
    #[arg(long, value_enum, default_value_t = FacingMode::Yes)]
    pub facing: FacingMode,
    /// Also write grid faces, masks and face training data.
    #[arg(long)]
    pub with_face: bool,
}

fn write_recording(dir: &Path, rec: &SynthRecording, k: usize, fingerprint: &str) -> CmdResult {
    let opts = BvhOptions::default();
    for (slot, p) in SLOTS.iter().zip(&rec.persons) {
        let path = dir.join(format!("{slot}.bvh"));
        write(&path, write_bvh(&p.motion.skeleton, &p.motion, &opts).at(&path)?)?;
        let path = dir.join(format!("{slot}.wav"));
        write(&path, write_wav(&p.audio).at(&path)?)?;
        write(&dir.join(format!("{slot}.words")), write_transcript(&p.transcript))?;
        write(&dir.join(format!("{slot}.actions")), write_action_sidecar(&p.labels))?;
        if let Some(face) = &p.face {
            let path = dir.join(format!("{slot}.face"));
            write(&path, save_face_sequence(face, p.motion.fps(), fingerprint).at(&path)?)?;
        }
    }
    let meta = format!(
        "ids = {},{}\nrelationship = {}\nemotion = {}\nfingerprint = {fingerprint}\n",
        rec.persons[0].id,
        rec.persons[1].id,
        RELATIONSHIPS[k % RELATIONSHIPS.len()],
        EMOTIONS[(k / RELATIONSHIPS.len()) % EMOTIONS.len()],
    );
    write(&dir.join("meta.txt"), meta)
}

pub fn run(ctx: &Ctx, args: &SynthArgs) -> CmdResult<preprocess::Summary> {
    if args.recordings == 0 || args.frames == 0 {
        return Err(usage("--recordings and --frames must be at least 1"));
    }
    let cfg = &ctx.cfg;
    let fp = cfg.fingerprint();
    let ks: Vec<usize> = (0..args.recordings).collect();
    let recs = par::try_map(ctx.exec, &ks, |&k| {
        let facing = match args.facing {
            FacingMode::Yes => true,
            FacingMode::No => false,
            FacingMode::Alternate => k % 2 == 0,
        };
        let sc = SynthConfig {
            seed: cfg.seed + k as u64,
            frames: args.frames,
            fps: cfg.fps,
            facing,
            with_face: args.with_face,
            ids: [ID_POOL[k % 3].to_string(), ID_POOL[(k + 1) % 3].to_string()],
            ..SynthConfig::default()
        };
        synth_recording(&sc).at(&args.out)
    })?;
    for (k, rec) in recs.iter().enumerate() {
        write_recording(&args.out.join(format!("rec{k:03}")), rec, k, &fp)?;
    }
    if let Some(masks) = recs.first().and_then(|r| r.masks.as_ref()) {
        write(&args.out.join("masks.txt"), masks.to_text())?;
    }
    let pre = PreprocessArgs {
        input: args.out.clone(),
        out: args.out.join("dataset.duet"),
        faces_out: args.with_face.then(|| args.out.join("faces.duetface")),
        masks: None,
        embeddings: None,
    };
    preprocess::run(ctx, &pre)
}
