//! Sampling from trained body and face checkpoints.

use std::path::PathBuf;

use clap::Args;
use duet_core::audio::{load_wav, mel_spectrogram};
use duet_core::dataset::{load_dataset, save_dataset, DatasetContainer, PairedSample};
use duet_core::diffusion::load_body_checkpoint;
use duet_core::face::{
    load_face_checkpoint, load_face_data, save_face_data, save_face_sequence, FaceCheckpoint, FaceRecording,
    StylePolicy,
};
use duet_core::motion::{write_bvh, BvhOptions};
use duet_core::par;

use super::{parse_yes_no, Ctx};
use crate::failure::{data, read, require_file, usage, write, At, CmdResult};
use crate::recording::SLOTS;

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Dataset container whose windows supply features, offsets and start poses.
    #[arg(long)]
    pub data: PathBuf,
    /// Generated dataset container to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every generated pair as BVH files into this directory.
    #[arg(long)]
    pub bvh: Option<PathBuf>,
    /// Samples per conditioning window.
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
}

pub fn run(ctx: &Ctx, args: &GenerateArgs) -> CmdResult<usize> {
    require_file(&args.checkpoint)?;
    require_file(&args.data)?;
    if args.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let ckpt = load_body_checkpoint(&read(&args.checkpoint)?).at(&args.checkpoint)?;
    let d = load_dataset(&read(&args.data)?).at(&args.data)?;
    if d.manifest.skeleton != ckpt.manifest.skeleton || d.manifest.features != ckpt.manifest.features {
        return Err(data(format!(
            "{}: skeleton or feature layout differs from checkpoint {}",
            args.data.display(),
            args.checkpoint.display()
        )));
    }
    let n = args.samples;
    let jobs: Vec<(usize, usize)> = (0..d.samples.len()).flat_map(|i| (0..n).map(move |k| (i, k))).collect();
    let seed = ctx.cfg.seed;
    let samples = par::try_map(ctx.exec, &jobs, |&(i, k)| {
        let src = &d.samples[i];
        let (y, anchors) = ckpt
            .generate_window(&src.x, src.offset, seed + (i * n + k) as u64, Some(&src.anchors[0]))
            .at(&args.checkpoint)?;
        let mut tags = src.tags.clone();
        tags.insert("source_window".into(), src.window_id.to_string());
        tags.insert("sample".into(), k.to_string());
        Ok::<_, crate::failure::Failure>(PairedSample {
            window_id: i * n + k,
            start: src.start,
            x: src.x.clone(),
            y,
            offset: src.offset,
            anchors,
            tags,
        })
    })?;
    let mut manifest = d.manifest.clone();
    manifest.config_fingerprint = ctx.cfg.fingerprint();
    let out = DatasetContainer::new(manifest, samples).at(&args.out)?;
    write(&args.out, save_dataset(&out).at(&args.out)?)?;
    if let Some(dir) = &args.bvh {
        let opts = BvhOptions::default();
        for s in &out.samples {
            let pair = s.decode(&out.manifest.skeleton, out.frame_time()).at(&args.out)?;
            for (slot, m) in SLOTS.iter().zip(&pair) {
                let path = dir.join(format!("window{:04}_{slot}.bvh", s.window_id));
                write(&path, write_bvh(&m.skeleton, m, &opts).at(&path)?)?;
            }
        }
    }
    Ok(out.samples.len())
}

#[derive(Args, Debug)]
pub struct GenerateFaceArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Face data file supplying audio, styles and facing per recording.
    #[arg(long, conflicts_with_all = ["audio_a", "audio_b"])]
    pub data: Option<PathBuf>,
    #[arg(long, requires = "audio_b")]
    pub audio_a: Option<PathBuf>,
    #[arg(long, requires = "audio_a")]
    pub audio_b: Option<PathBuf>,
    #[arg(long, default_value = "")]
    pub style_a: String,
    #[arg(long, default_value = "")]
    pub style_b: String,
    /// yes or no.
    #[arg(long, default_value = "yes")]
    pub facing: String,
    /// Frames to generate from the audio (default: all).
    #[arg(long)]
    pub frames: Option<usize>,
    /// Error on style ids unseen in training instead of using the mean style.
    #[arg(long)]
    pub strict_style: bool,
    /// Face data file (`--data`) or output directory for `a.face`/`b.face`.
    #[arg(long)]
    pub out: PathBuf,
}

fn warn(ws: &[String]) {
    for w in ws {
        eprintln!("warning: {w}");
    }
}

pub fn run_face(ctx: &Ctx, args: &GenerateFaceArgs) -> CmdResult<usize> {
    require_file(&args.checkpoint)?;
    let policy = if args.strict_style { StylePolicy::Strict } else { StylePolicy::Fallback };
    let ckpt = load_face_checkpoint(&read(&args.checkpoint)?).at(&args.checkpoint)?;
    let seed = ctx.cfg.seed;
    if let Some(path) = &args.data {
        require_file(path)?;
        let mut d = load_face_data(&read(path)?).at(path)?;
        check_vertices(&ckpt, d.vertices(), path)?;
        let idx: Vec<usize> = (0..d.recordings.len()).collect();
        let made = par::try_map(ctx.exec, &idx, |&i| {
            let r: &FaceRecording = &d.recordings[i];
            let styles = [r.styles[0].as_str(), r.styles[1].as_str()];
            ckpt.generate([&r.mel[0], &r.mel[1]], styles, r.facing, seed + i as u64, r.frames(), policy).at(path)
        })?;
        for (r, g) in d.recordings.iter_mut().zip(made) {
            warn(&g.warnings);
            r.faces = g.faces;
        }
        d.config_fingerprint = ctx.cfg.fingerprint();
        write(&args.out, save_face_data(&d).at(&args.out)?)?;
        return Ok(d.recordings.len());
    }
    let (Some(pa), Some(pb)) = (&args.audio_a, &args.audio_b) else {
        return Err(usage("generate-face needs --data or both --audio-a and --audio-b"));
    };
    require_file(pa)?;
    require_file(pb)?;
    let facing = parse_yes_no("--facing", &args.facing)?;
    let mel = |p: &PathBuf| -> CmdResult<_> {
        let clip = load_wav(&read(p)?).at(p)?;
        Ok(mel_spectrogram(&clip, ckpt.fps).at(p)?.values)
    };
    let (ma, mb) = (mel(pa)?, mel(pb)?);
    let common = ma.nrows().min(mb.nrows());
    let frames = args.frames.unwrap_or(common);
    if frames == 0 || frames > common {
        return Err(usage(format!("--frames {frames}: audio covers {common} frames")));
    }
    let (ma, mb) = (ma.slice(ndarray::s![..common, ..]).to_owned(), mb.slice(ndarray::s![..common, ..]).to_owned());
    let g = ckpt
        .generate([&ma, &mb], [args.style_a.as_str(), args.style_b.as_str()], facing, seed, frames, policy)
        .map_err(|e| match e {
            duet_core::Error::InvalidArgument(m) => usage(m),
            e => data(e.to_string()),
        })?;
    warn(&g.warnings);
    for (slot, face) in SLOTS.iter().zip(&g.faces) {
        let path = args.out.join(format!("{slot}.face"));
        write(&path, save_face_sequence(face, ckpt.fps, &ctx.cfg.fingerprint()).at(&path)?)?;
    }
    Ok(1)
}

fn check_vertices(ckpt: &FaceCheckpoint, v: [usize; 2], path: &std::path::Path) -> CmdResult {
    if v != ckpt.vertices() {
        return Err(data(format!("{}: {v:?} vertices, checkpoint expects {:?}", path.display(), ckpt.vertices())));
    }
    Ok(())
}
