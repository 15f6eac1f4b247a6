//! Body or face model training with resumable checkpoints.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, ValueEnum};
use duet_core::dataset::load_dataset;
use duet_core::diffusion::{load_body_checkpoint, save_body_checkpoint, BodyCheckpoint, BodyNetConfig};
use duet_core::face::{load_face_checkpoint, load_face_data, save_face_checkpoint, FaceCheckpoint};

use super::Ctx;
use crate::failure::{read, require_file, write, At, CmdResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Body,
    Face,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset container (body) or face data file (face).
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Continue from this checkpoint up to `steps` total steps.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelKind::Body)]
    pub model: ModelKind,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Progress goes to stderr; timestamped lines go to a `<out>.log` sidecar so
/// the checkpoint itself stays reproducible.
struct Progress {
    every: usize,
    total: usize,
    log: String,
}

impl Progress {
    fn step(&mut self, step: usize, loss: f64) {
        if self.every > 0 && (step % self.every == 0 || step + 1 == self.total) {
            eprintln!("step {step:>6}  loss {loss:.6}");
            let _ = writeln!(self.log, "{:.3} step={step} loss={loss}", now());
        }
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".log");
    PathBuf::from(s)
}

pub fn run(ctx: &Ctx, args: &TrainArgs) -> CmdResult {
    require_file(&args.data)?;
    if let Some(p) = &args.resume {
        require_file(p)?;
    }
    let cfg = &ctx.cfg;
    let mut progress = Progress { every: cfg.log_every, total: cfg.steps, log: String::new() };
    let _ = writeln!(progress.log, "{:.3} start model={:?} fingerprint={}", now(), args.model, cfg.fingerprint());
    let bytes = match args.model {
        ModelKind::Body => {
            let d = load_dataset(&read(&args.data)?).at(&args.data)?;
            let mut ckpt = match &args.resume {
                Some(p) => {
                    let mut c = load_body_checkpoint(&read(p)?).at(p)?;
                    c.train.steps = cfg.steps;
                    c.config_fingerprint = cfg.fingerprint();
                    c
                }
                None => {
                    let net = BodyNetConfig { hidden: cfg.hidden, step_dim: cfg.step_dim, pos_dim: cfg.pos_dim };
                    BodyCheckpoint::init(&d, net, cfg.schedule_config(), cfg.train_config(), cfg.fingerprint())
                        .at(&args.data)?
                }
            };
            ckpt.fit(&d, ctx.exec, |s, l| progress.step(s, l)).at(&args.data)?;
            save_body_checkpoint(&ckpt).at(&args.out)?
        }
        ModelKind::Face => {
            let d = load_face_data(&read(&args.data)?).at(&args.data)?;
            let mut ckpt = match &args.resume {
                Some(p) => {
                    let mut c = load_face_checkpoint(&read(p)?).at(p)?;
                    c.train.steps = cfg.steps;
                    c.config_fingerprint = cfg.fingerprint();
                    c
                }
                None => FaceCheckpoint::init(&d, cfg.face_options(), cfg.schedule_config(), cfg.train_config(), cfg.fingerprint())
                    .at(&args.data)?,
            };
            ckpt.fit(&d, ctx.exec, |s, l| progress.step(s, l)).at(&args.data)?;
            save_face_checkpoint(&ckpt).at(&args.out)?
        }
    };
    write(&args.out, bytes)?;
    let _ = writeln!(progress.log, "{:.3} done", now());
    write(&sidecar(&args.out), progress.log)
}
