//! Metric report of generated against ground-truth data.

use std::path::{Path, PathBuf};

use clap::Args;
use duet_core::dataset::{load_dataset, DatasetContainer};
use duet_core::face::{load_face_data, FaceDataset};
use duet_core::metrics::report::SampleCounts;
use duet_core::metrics::{diversity, fdd, fid_g, fid_k, fid_r, foot_slide, lve, window_feature, MetricReport};
use duet_core::motion::MotionSequence;
use duet_core::par;

use super::Ctx;
use crate::failure::{data, read, require_file, usage, write, At, CmdResult};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub gen: PathBuf,
    #[arg(long, requires = "gen_faces")]
    pub gt_faces: Option<PathBuf>,
    #[arg(long, requires = "gt_faces")]
    pub gen_faces: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a one-row CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn decode_all(ctx: &Ctx, d: &DatasetContainer, path: &Path) -> CmdResult<Vec<[MotionSequence; 2]>> {
    let (sk, dt) = (&d.manifest.skeleton, d.frame_time());
    par::try_map(ctx.exec, &d.samples, |s| s.decode(sk, dt)).at(path)
}

pub fn run(ctx: &Ctx, args: &EvaluateArgs) -> CmdResult<MetricReport> {
    for p in [Some(&args.gt), Some(&args.gen), args.gt_faces.as_ref(), args.gen_faces.as_ref()].into_iter().flatten() {
        require_file(p)?;
    }
    let gt = load_dataset(&read(&args.gt)?).at(&args.gt)?;
    let gen = load_dataset(&read(&args.gen)?).at(&args.gen)?;
    if gt.manifest.skeleton != gen.manifest.skeleton {
        return Err(data(format!("{}: skeleton differs from {}", args.gen.display(), args.gt.display())));
    }
    let (gp, np) = (decode_all(ctx, &gt, &args.gt)?, decode_all(ctx, &gen, &args.gen)?);
    let frames = |d: &DatasetContainer| d.samples.iter().map(|s| s.frames()).sum::<usize>();
    let counts = SampleCounts {
        gt_windows: gt.samples.len(),
        gen_windows: gen.samples.len(),
        gt_frames: frames(&gt),
        gen_frames: frames(&gen),
        face_frames: 0,
    };
    let mut r = MetricReport::new(ctx.cfg.fingerprint(), counts);
    r.conventions.lve = if ctx.cfg.lve_squared { "squared" } else { "euclidean" }.into();
    let exec = ctx.exec;
    r.fid_g = Some(fid_g(&gp, &np, exec).at(&args.gen)?);
    let singles = |v: &[[MotionSequence; 2]]| v.iter().flat_map(|p| p.iter().cloned()).collect::<Vec<_>>();
    r.fid_k = Some(fid_k(&singles(&gp), &singles(&np), exec).at(&args.gen)?);
    r.fid_r = Some(fid_r(&gp, &np, exec).at(&args.gen)?);
    if np.len() >= 2 {
        let feats = par::try_map(exec, &np, window_feature).at(&args.gen)?;
        r.div = Some(diversity(&feats, exec).at(&args.gen)?);
    }
    let sk = &gen.manifest.skeleton;
    let feet: Vec<&str> =
        ctx.cfg.foot_joints.iter().map(String::as_str).filter(|f| sk.joint_index(f).is_some()).collect();
    if !feet.is_empty() {
        let all = singles(&np);
        let slides = par::try_map(exec, &all, |m| foot_slide(m, &feet)).at(&args.gen)?;
        r.foot_slide = Some(slides.iter().sum::<f64>() / slides.len() as f64);
    }
    if let (Some(gp), Some(np)) = (&args.gt_faces, &args.gen_faces) {
        let gt = load_face_data(&read(gp)?).at(gp)?;
        let gen = load_face_data(&read(np)?).at(np)?;
        let (l, f, n) = face_metrics(ctx, &gt, &gen, np)?;
        r.lve = Some(l);
        r.fdd = Some(f);
        r.counts.face_frames = n;
    }
    write(&args.out, r.to_json())?;
    if let Some(csv) = &args.csv {
        write(csv, r.to_csv())?;
    }
    Ok(r)
}

/// Mean LVE and FDD over recordings and persons, paired by position.
fn face_metrics(ctx: &Ctx, gt: &FaceDataset, gen: &FaceDataset, path: &Path) -> CmdResult<(f64, f64, usize)> {
    if gt.recordings.len() != gen.recordings.len() {
        return Err(data(format!(
            "{}: {} face recordings, ground truth has {}",
            path.display(),
            gen.recordings.len(),
            gt.recordings.len()
        )));
    }
    if gt.recordings.is_empty() {
        return Err(usage("no face recordings to evaluate"));
    }
    let (lip, upper, sq) = (&gt.masks.lip, &gt.masks.upper, ctx.cfg.lve_squared);
    let pairs: Vec<_> = gt.recordings.iter().zip(&gen.recordings).flat_map(|(a, b)| a.faces.iter().zip(&b.faces)).collect();
    let vals = par::try_map(ctx.exec, &pairs, |(a, b)| Ok::<_, duet_core::Error>((lve(a, b, lip, sq)?, fdd(a, b, upper)?)))
        .at(path)?;
    let n = vals.len() as f64;
    let frames = gt.recordings.iter().map(|r| r.frames()).sum();
    Ok((vals.iter().map(|v| v.0).sum::<f64>() / n, vals.iter().map(|v| v.1).sum::<f64>() / n, frames))
}
