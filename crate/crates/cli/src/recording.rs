//! One recording directory on disk: `a.bvh`, `b.bvh`, `a.wav`, `b.wav`,
//! optional `{a,b}.words`, `{a,b}.actions`, `{a,b}.face` and `meta.txt`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use duet_core::audio::action::{parse_action_sidecar, AutoLabelConfig};
use duet_core::audio::semantic::parse_transcript;
use duet_core::audio::{auto_label, load_wav, mel_spectrogram, ActionLabel, AudioClip, SemanticProvider, WordSpan};
use duet_core::dataset::synth::person_features;
use duet_core::dataset::PersonStream;
use duet_core::face::{load_face_sequence, FaceRecording, FaceSequence};
use duet_core::motion::{parse_bvh, BvhOptions, MotionSequence, Skeleton};
use ndarray::s;

use crate::failure::{data, read, read_text, At, CmdResult};

pub const SLOTS: [&str; 2] = ["a", "b"];

pub struct Person {
    pub motion: MotionSequence,
    pub audio: AudioClip,
    pub transcript: Vec<WordSpan>,
    pub labels: Option<Vec<ActionLabel>>,
    pub face: Option<FaceSequence>,
}

pub struct Recording {
    pub dir: PathBuf,
    pub ids: [String; 2],
    pub tags: BTreeMap<String, String>,
    pub persons: [Person; 2],
    /// Frames usable by both persons (motion, audio and faces).
    pub frames: usize,
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_meta(text: &str, path: &Path) -> CmdResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| data(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn load_person(dir: &Path, slot: &str, fps: f64) -> CmdResult<Person> {
    let bvh = dir.join(format!("{slot}.bvh"));
    let (_, motion) = parse_bvh(&read_text(&bvh)?, &BvhOptions::default()).at(&bvh)?;
    if (motion.fps() - fps).abs() > 1e-6 * fps {
        return Err(data(format!("{}: frame rate {} does not match configured fps {fps}", bvh.display(), motion.fps())));
    }
    let wav = dir.join(format!("{slot}.wav"));
    let audio = load_wav(&read(&wav)?).at(&wav)?;
    let words = dir.join(format!("{slot}.words"));
    let transcript = if words.is_file() { parse_transcript(&read_text(&words)?).at(&words)? } else { Vec::new() };
    let actions = dir.join(format!("{slot}.actions"));
    let labels = if actions.is_file() { Some(parse_action_sidecar(&read_text(&actions)?).at(&actions)?) } else { None };
    let face_path = dir.join(format!("{slot}.face"));
    let face = if face_path.is_file() {
        let (face, face_fps) = load_face_sequence(&read(&face_path)?).at(&face_path)?;
        if (face_fps - fps).abs() > 1e-6 * fps {
            return Err(data(format!("{}: frame rate {face_fps} does not match configured fps {fps}", face_path.display())));
        }
        Some(face)
    } else {
        None
    };
    Ok(Person { motion, audio, transcript, labels, face })
}

pub fn load_recording(dir: &Path, fps: f64) -> CmdResult<Recording> {
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let meta_path = dir.join("meta.txt");
    let mut tags = if meta_path.is_file() { parse_meta(&read_text(&meta_path)?, &meta_path)? } else { BTreeMap::new() };
    let ids = match tags.remove("ids") {
        Some(v) => {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
                return Err(data(format!("{}: ids must name two persons, got {v:?}", meta_path.display())));
            }
            [parts[0].to_string(), parts[1].to_string()]
        }
        None => [format!("{name}/a"), format!("{name}/b")],
    };
    tags.remove("fingerprint");
    tags.insert("recording".into(), name);
    let a = load_person(dir, "a", fps)?;
    let b = load_person(dir, "b", fps)?;
    if a.motion.skeleton != b.motion.skeleton {
        return Err(data(format!("{}: persons a and b use different skeletons", dir.display())));
    }
    let mut frames = a.motion.len().min(b.motion.len());
    for p in [&a, &b] {
        let mel = duet_core::audio::mel::frame_count(p.audio.samples.len(), p.audio.sample_rate, fps);
        frames = frames.min(mel);
        if let Some(f) = &p.face {
            frames = frames.min(f.len());
        }
    }
    for (slot, p) in SLOTS.iter().zip([&a, &b]) {
        if let Some(l) = p.labels.as_ref().filter(|l| l.len() < frames) {
            let path = dir.join(format!("{slot}.actions"));
            return Err(data(format!("{}: {} action labels for {frames} frames", path.display(), l.len())));
        }
    }
    if frames == 0 {
        return Err(data(format!("{}: no frames shared by motion and audio", dir.display())));
    }
    Ok(Recording { dir: dir.to_path_buf(), ids, tags, persons: [a, b], frames })
}

/// Sorted subdirectories of `root` that contain `a.bvh`.
pub fn recording_dirs(root: &Path) -> CmdResult<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .at(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("a.bvh").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

impl Recording {
    pub fn skeleton(&self) -> &Skeleton {
        &self.persons[0].motion.skeleton
    }

    pub fn motions(&self) -> [MotionSequence; 2] {
        [self.persons[0].motion.slice(0, self.frames), self.persons[1].motion.slice(0, self.frames)]
    }

    pub fn has_faces(&self) -> bool {
        self.persons.iter().all(|p| p.face.is_some())
    }

    pub fn stream(&self, slot: usize, provider: &dyn SemanticProvider) -> CmdResult<PersonStream> {
        let p = &self.persons[slot];
        let motion = p.motion.slice(0, self.frames);
        let labels = match &p.labels {
            Some(l) => l.clone(),
            None => auto_label(&motion, &AutoLabelConfig::default()),
        };
        let fps = motion.fps();
        let features =
            person_features(&p.audio, &p.transcript, &labels, self.frames, fps, provider).at(&self.dir)?;
        let face = p.face.as_ref().map(|f| f.slice_frames(0, self.frames));
        PersonStream::new(self.ids[slot].clone(), features, motion, face).at(&self.dir)
    }

    pub fn face_recording(&self, facing: bool) -> CmdResult<FaceRecording> {
        let mut faces = Vec::with_capacity(2);
        let mut mels = Vec::with_capacity(2);
        for (slot, p) in self.persons.iter().enumerate() {
            let face = p.face.as_ref().ok_or_else(|| data(format!("{}: missing {}.face", self.dir.display(), SLOTS[slot])))?;
            let mel = mel_spectrogram(&p.audio, p.motion.fps()).at(&self.dir)?;
            mels.push(mel.values.slice(s![..self.frames, ..]).to_owned());
            faces.push(face.slice_frames(0, self.frames));
        }
        let [fa, fb]: [FaceSequence; 2] = faces.try_into().unwrap();
        let [ma, mb]: [ndarray::Array2<f64>; 2] = mels.try_into().unwrap();
        FaceRecording::new(self.ids.clone(), facing, [fa, fb], [ma, mb]).at(&self.dir)
    }
}
