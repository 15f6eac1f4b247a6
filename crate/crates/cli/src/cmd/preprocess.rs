//! Recording directories to a dataset container (and optionally face data).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use duet_core::analysis::{detect_facing, FacingLabel};
use duet_core::audio::semantic::EmbeddingTable;
use duet_core::audio::{HashEmbedder, SemanticProvider};
use duet_core::dataset::{build_container, pair_streams, save_dataset, Manifest, PairedStream};
use duet_core::face::{save_face_data, FaceDataset, RegionMasks};
use duet_core::par;

use super::Ctx;
use crate::failure::{data, read_text, require_dir, require_file, usage, write, At, CmdResult};
use crate::recording::{load_recording, recording_dirs, Recording};

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    /// Directory of recording subdirectories.
    #[arg(long)]
    pub input: PathBuf,
    /// Dataset container to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write face training data here (every recording needs faces).
    #[arg(long)]
    pub faces_out: Option<PathBuf>,
    /// Face region masks; defaults to `<input>/masks.txt`.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    /// Word embedding sidecar (`word<TAB>32 floats`); hashed embeddings otherwise.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

pub struct Summary {
    pub recordings: usize,
    pub samples: usize,
    pub face_recordings: usize,
}

pub fn run(ctx: &Ctx, args: &PreprocessArgs) -> CmdResult<Summary> {
    require_dir(&args.input)?;
    if let Some(p) = &args.masks {
        require_file(p)?;
    }
    if let Some(p) = &args.embeddings {
        require_file(p)?;
    }
    let provider: Box<dyn SemanticProvider> = match &args.embeddings {
        Some(p) => Box::new(EmbeddingTable::parse(&read_text(p)?).at(p)?),
        None => Box::new(HashEmbedder::default()),
    };
    let dirs = recording_dirs(&args.input)?;
    if dirs.is_empty() {
        return Err(data(format!("{}: no recording directories (subdirectories with a.bvh)", args.input.display())));
    }
    let cfg = &ctx.cfg;
    let recordings = par::try_map(ctx.exec, &dirs, |d| load_recording(d, cfg.fps))?;
    let skeleton = recordings[0].skeleton().clone();
    if let Some(r) = recordings.iter().find(|r| r.skeleton() != &skeleton) {
        return Err(data(format!("{}: skeleton differs from {}", r.dir.display(), recordings[0].dir.display())));
    }
    let provider = provider.as_ref();
    let streams: Vec<(PairedStream, BTreeMap<String, String>)> = par::try_map(ctx.exec, &recordings, |r| {
        let pair = pair_streams(&r.stream(0, provider)?, &r.stream(1, provider)?).at(&r.dir)?;
        Ok::<_, crate::failure::Failure>((pair, r.tags.clone()))
    })?;
    let fp = cfg.fingerprint();
    let manifest = Manifest::new(cfg.fps, skeleton, cfg.window, cfg.stride, fp.clone());
    let container = build_container(manifest, &streams, ctx.exec).at(&args.input)?;
    if container.samples.is_empty() {
        return Err(data(format!(
            "{}: every recording is shorter than the {}-frame window",
            args.input.display(),
            cfg.window
        )));
    }
    write(&args.out, save_dataset(&container).at(&args.out)?)?;

    let mut face_recordings = 0;
    if let Some(out) = &args.faces_out {
        let faces = face_dataset(ctx, args, &recordings)?;
        face_recordings = faces.recordings.len();
        write(out, save_face_data(&faces).at(out)?)?;
    }
    Ok(Summary { recordings: recordings.len(), samples: container.samples.len(), face_recordings })
}

fn face_dataset(ctx: &Ctx, args: &PreprocessArgs, recordings: &[Recording]) -> CmdResult<FaceDataset> {
    let masks_path = args.masks.clone().unwrap_or_else(|| args.input.join("masks.txt"));
    if !masks_path.is_file() {
        return Err(usage(format!("{}: face masks are required for --faces-out", masks_path.display())));
    }
    let masks = RegionMasks::parse(&read_text(&masks_path)?).at(&masks_path)?;
    if let Some(r) = recordings.iter().find(|r| !r.has_faces()) {
        return Err(data(format!("{}: recording has no a.face/b.face", r.dir.display())));
    }
    let head = &ctx.cfg.head_joint;
    let recs = par::try_map(ctx.exec, recordings, |r| {
        let labels = detect_facing(&r.motions(), head).at(&r.dir)?;
        let facing = labels.iter().filter(|l| **l == FacingLabel::Facing).count();
        r.face_recording(2 * facing >= labels.len())
    })?;
    let d = FaceDataset { fps: ctx.cfg.fps, masks, recordings: recs, config_fingerprint: ctx.cfg.fingerprint() };
    d.validate().at(&masks_path)?;
    Ok(d)
}

pub fn report(s: &Summary, out: &Path) {
    eprintln!("preprocess: {} recordings, {} windows -> {}", s.recordings, s.samples, out.display());
    if s.face_recordings > 0 {
        eprintln!("preprocess: {} face recordings", s.face_recordings);
    }
}
