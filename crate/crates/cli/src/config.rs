//! Run configuration: defaults, `key = value` files and `--set` overrides.

use std::path::Path;

use duet_core::diffusion::{ScheduleConfig, ScheduleShape, TrainConfig};
use duet_core::face::FaceOptions;
use duet_core::metrics::DEFAULT_FOOT_JOINTS;
use sha2::{Digest, Sha256};

use crate::failure::{read_text, usage, CmdResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fps: f64,
    pub window: usize,
    pub stride: usize,
    pub schedule: ScheduleShape,
    pub schedule_steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub hidden: usize,
    pub step_dim: usize,
    pub pos_dim: usize,
    pub steps: usize,
    pub lr: f64,
    pub clip: f64,
    pub batch: usize,
    pub seed: u64,
    pub latent_dim: usize,
    pub style_dim: usize,
    pub face_step_dim: usize,
    pub tau: f64,
    pub face_window: usize,
    pub face_stride: usize,
    pub head_joint: String,
    pub foot_joints: Vec<String>,
    pub lve_squared: bool,
    pub hist_range: f64,
    pub hist_bins: usize,
    pub grid_cols: usize,
    pub log_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = ScheduleConfig::default();
        let t = TrainConfig::default();
        let f = FaceOptions::default();
        RunConfig {
            fps: 30.0,
            window: duet_core::dataset::DEFAULT_WINDOW,
            stride: duet_core::dataset::DEFAULT_STRIDE,
            schedule: s.shape,
            schedule_steps: s.steps,
            beta_min: s.beta_min,
            beta_max: s.beta_max,
            hidden: 128,
            step_dim: 32,
            pos_dim: 16,
            steps: t.steps,
            lr: t.lr,
            clip: t.clip,
            batch: t.batch,
            seed: t.seed,
            latent_dim: f.latent_dim,
            style_dim: f.style_dim,
            face_step_dim: f.step_dim,
            tau: f.tau,
            face_window: f.window,
            face_stride: f.stride,
            head_joint: "Head".into(),
            foot_joints: DEFAULT_FOOT_JOINTS.iter().map(|s| s.to_string()).collect(),
            lve_squared: true,
            hist_range: 3.0,
            hist_bins: 30,
            grid_cols: 26,
            log_every: 100,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("{key}: cannot parse {v:?}: {e}"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let v = v.trim();
        match key.trim() {
            "fps" => self.fps = num(key, v)?,
            "window" => self.window = num(key, v)?,
            "stride" => self.stride = num(key, v)?,
            "schedule" => self.schedule = v.parse().map_err(|e| format!("schedule: {e}"))?,
            "schedule_steps" => self.schedule_steps = num(key, v)?,
            "beta_min" => self.beta_min = num(key, v)?,
            "beta_max" => self.beta_max = num(key, v)?,
            "hidden" => self.hidden = num(key, v)?,
            "step_dim" => self.step_dim = num(key, v)?,
            "pos_dim" => self.pos_dim = num(key, v)?,
            "steps" => self.steps = num(key, v)?,
            "lr" => self.lr = num(key, v)?,
            "clip" => self.clip = num(key, v)?,
            "batch" => self.batch = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "latent_dim" => self.latent_dim = num(key, v)?,
            "style_dim" => self.style_dim = num(key, v)?,
            "face_step_dim" => self.face_step_dim = num(key, v)?,
            "tau" => self.tau = num(key, v)?,
            "face_window" => self.face_window = num(key, v)?,
            "face_stride" => self.face_stride = num(key, v)?,
            "head_joint" => self.head_joint = v.to_string(),
            "foot_joints" => {
                self.foot_joints = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
            }
            "lve_squared" => self.lve_squared = num(key, v)?,
            "hist_range" => self.hist_range = num(key, v)?,
            "hist_bins" => self.hist_bins = num(key, v)?,
            "grid_cols" => self.grid_cols = num(key, v)?,
            "log_every" => self.log_every = num(key, v)?,
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Canonical `key = value` listing; the fingerprint hashes exactly this.
    pub fn to_text(&self) -> String {
        let shape = match self.schedule {
            ScheduleShape::Linear => "linear",
            ScheduleShape::Cosine => "cosine",
        };
        let rows: Vec<(&str, String)> = vec![
            ("fps", format!("{:?}", self.fps)),
            ("window", self.window.to_string()),
            ("stride", self.stride.to_string()),
            ("schedule", shape.into()),
            ("schedule_steps", self.schedule_steps.to_string()),
            ("beta_min", format!("{:?}", self.beta_min)),
            ("beta_max", format!("{:?}", self.beta_max)),
            ("hidden", self.hidden.to_string()),
            ("step_dim", self.step_dim.to_string()),
            ("pos_dim", self.pos_dim.to_string()),
            ("steps", self.steps.to_string()),
            ("lr", format!("{:?}", self.lr)),
            ("clip", format!("{:?}", self.clip)),
            ("batch", self.batch.to_string()),
            ("seed", self.seed.to_string()),
            ("latent_dim", self.latent_dim.to_string()),
            ("style_dim", self.style_dim.to_string()),
            ("face_step_dim", self.face_step_dim.to_string()),
            ("tau", format!("{:?}", self.tau)),
            ("face_window", self.face_window.to_string()),
            ("face_stride", self.face_stride.to_string()),
            ("head_joint", self.head_joint.clone()),
            ("foot_joints", self.foot_joints.join(",")),
            ("lve_squared", self.lve_squared.to_string()),
            ("hist_range", format!("{:?}", self.hist_range)),
            ("hist_bins", self.hist_bins.to_string()),
            ("grid_cols", self.grid_cols.to_string()),
            ("log_every", self.log_every.to_string()),
        ];
        rows.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// `sha256:<hex of to_text()>;seed=<seed>`, stored in every artifact.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        format!("sha256:{hex};seed={}", self.seed)
    }

    /// Defaults, then the file (if any), then `--set` pairs, then `--seed`.
    pub fn resolve(file: Option<&Path>, sets: &[String], seed: Option<u64>) -> CmdResult<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = read_text(path).map_err(|e| usage(e.to_string()))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| usage(format!("{}:{}: expected `key = value`", path.display(), i + 1)))?;
                cfg.set(k, v).map_err(|e| usage(format!("{}:{}: {e}", path.display(), i + 1)))?;
            }
        }
        for s in sets {
            let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("--set {s:?}: expected KEY=VALUE")))?;
            cfg.set(k, v).map_err(|e| usage(format!("--set: {e}")))?;
        }
        if let Some(seed) = seed {
            cfg.seed = seed;
        }
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> CmdResult {
        if !(self.fps > 0.0) {
            return Err(usage("fps must be positive"));
        }
        if self.window == 0 || self.stride == 0 {
            return Err(usage("window and stride must be at least 1"));
        }
        if self.hist_bins == 0 || !(self.hist_range > 0.0) {
            return Err(usage("hist_bins and hist_range must be positive"));
        }
        Ok(())
    }

    pub fn schedule_config(&self) -> ScheduleConfig {
        ScheduleConfig { steps: self.schedule_steps, beta_min: self.beta_min, beta_max: self.beta_max, shape: self.schedule }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { steps: self.steps, lr: self.lr, clip: self.clip, batch: self.batch, seed: self.seed }
    }

    pub fn face_options(&self) -> FaceOptions {
        FaceOptions {
            latent_dim: self.latent_dim,
            style_dim: self.style_dim,
            step_dim: self.face_step_dim,
            tau: self.tau,
            window: self.face_window,
            stride: self.face_stride,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flag_over_file_over_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\nlr = 0.5\nsteps = 7\nseed = 3\n").unwrap();
        let cfg = RunConfig::resolve(Some(&path), &["steps=9".into()], Some(4)).unwrap();
        assert_eq!((cfg.lr, cfg.steps, cfg.seed, cfg.window), (0.5, 9, 4, 150));
        std::fs::write(&path, "nonsense = 1\n").unwrap();
        assert!(matches!(RunConfig::resolve(Some(&path), &[], None), Err(crate::failure::Failure::Usage(_))));
    }

    #[test]
    fn text_round_trips_and_fingerprint_tracks_values() {
        let mut cfg = RunConfig::default();
        let mut back = RunConfig { lr: 9.0, ..RunConfig::default() };
        for line in cfg.to_text().lines() {
            let (k, v) = line.split_once('=').unwrap();
            back.set(k, v).unwrap();
        }
        assert_eq!(back, cfg);
        let before = cfg.fingerprint();
        cfg.lr = 2e-4;
        assert_ne!(before, cfg.fingerprint());
        assert!(before.ends_with(";seed=0"));
    }
}
