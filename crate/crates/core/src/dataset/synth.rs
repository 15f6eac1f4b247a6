//! Deterministic desk-scale recordings: sinusoidal motion, turn-taking
//! band-limited audio, transcripts, action labels and optional grid faces.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use ndarray::{s, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pairing::PersonStream;
use crate::audio::{
    assemble_features, encode_action_labels, mel_spectrogram, semantic_features, ActionLabel, AudioClip,
    HashEmbedder, SemanticProvider, WordSpan,
};
use crate::face::{FaceRecording, FaceSequence, GridFace, RegionMasks};
use crate::motion::rotation::rot_y;
use crate::motion::{ExpMap, FramePose, MotionSequence, Skeleton};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub frames: usize,
    pub fps: f64,
    pub sample_rate: u32,
    /// Persons stand about 1.2 m apart looking at each other; otherwise
    /// person 2 is turned 90° away.
    pub facing: bool,
    pub with_face: bool,
    pub ids: [String; 2],
    pub skeleton: Skeleton,
    pub face_grid: GridFace,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            frames: 300,
            fps: 30.0,
            sample_rate: 16_000,
            facing: true,
            with_face: false,
            ids: ["A".into(), "B".into()],
            skeleton: Skeleton::reference_body(),
            face_grid: GridFace::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthPerson {
    pub id: String,
    pub motion: MotionSequence,
    pub audio: AudioClip,
    pub transcript: Vec<WordSpan>,
    pub labels: Vec<ActionLabel>,
    pub face: Option<FaceSequence>,
}

impl SynthPerson {
    pub fn to_stream(&self, provider: &dyn SemanticProvider) -> Result<PersonStream> {
        let fps = self.motion.fps();
        let features = person_features(&self.audio, &self.transcript, &self.labels, self.motion.len(), fps, provider)?;
        PersonStream::new(self.id.clone(), features, self.motion.clone(), self.face.clone())
    }
}

/// Builds the 62-wide features of one person for exactly `frames` frames.
pub fn person_features(
    audio: &AudioClip,
    transcript: &[WordSpan],
    labels: &[ActionLabel],
    frames: usize,
    fps: f64,
    provider: &dyn SemanticProvider,
) -> Result<crate::audio::FrameFeatures> {
    let mel = mel_spectrogram(audio, fps)?;
    if mel.frames() < frames {
        return Err(Error::shape(format!("audio covers {} frames, motion has {frames}", mel.frames())));
    }
    if labels.len() < frames {
        return Err(Error::shape(format!("{} action labels for {frames} frames", labels.len())));
    }
    let sem = semantic_features(transcript, frames, fps, provider)?;
    let act = encode_action_labels(&labels[..frames]);
    assemble_features(mel.values.slice(s![..frames, ..]), sem.view(), act.view())
}

#[derive(Debug, Clone)]
pub struct SynthRecording {
    pub persons: [SynthPerson; 2],
    pub facing: bool,
    pub masks: Option<RegionMasks>,
}

const VOCAB: [&str; 16] = [
    "hello", "yes", "no", "really", "maybe", "right", "okay", "well", "look", "there", "think", "know", "good",
    "sure", "wait", "so",
];

pub fn synth_recording(cfg: &SynthConfig) -> Result<SynthRecording> {
    if cfg.frames == 0 {
        return Err(Error::invalid("synthetic recording needs at least one frame"));
    }
    if !(cfg.fps > 0.0) || cfg.sample_rate == 0 {
        return Err(Error::invalid("fps and sample rate must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let duration = cfg.frames as f64 / cfg.fps;
    let turns = speaking_turns(&mut rng, duration);

    let half = 0.6;
    let placements = if cfg.facing {
        [(Vector3::new(0.0, 0.0, -half), 0.0), (Vector3::new(0.0, 0.0, half), PI)]
    } else {
        [(Vector3::new(0.0, 0.0, -half), 0.0), (Vector3::new(0.0, 0.0, half), PI / 2.0)]
    };
    let persons: Vec<SynthPerson> = (0..2)
        .map(|p| {
            let speaking: Vec<(f64, f64)> = turns.iter().filter(|t| t.2 == p).map(|t| (t.0, t.1)).collect();
            let motion = synth_motion(&mut rng, cfg, placements[p].0, placements[p].1, &speaking)?;
            let audio = synth_audio(&mut rng, cfg, &speaking);
            let transcript = synth_transcript(&mut rng, &speaking);
            let labels = synth_labels(&mut rng, cfg.frames);
            let face = cfg.with_face.then(|| synth_face(&mut rng, cfg, &speaking)).transpose()?;
            Ok(SynthPerson { id: cfg.ids[p].clone(), motion, audio, transcript, labels, face })
        })
        .collect::<Result<_>>()?;
    let [a, b]: [SynthPerson; 2] = persons.try_into().unwrap();
    Ok(SynthRecording { persons: [a, b], facing: cfg.facing, masks: cfg.with_face.then(|| cfg.face_grid.masks()) })
}

impl SynthRecording {
    /// Face training record: both faces with frame-aligned mel features.
    pub fn face_recording(&self) -> Result<FaceRecording> {
        let mut faces = Vec::with_capacity(2);
        let mut mels = Vec::with_capacity(2);
        for p in &self.persons {
            let face = p.face.clone().ok_or_else(|| Error::invalid(format!("person {} has no face track", p.id)))?;
            let mel = mel_spectrogram(&p.audio, p.motion.fps())?;
            if mel.frames() < face.len() {
                return Err(Error::shape(format!("audio covers {} frames, face has {}", mel.frames(), face.len())));
            }
            mels.push(mel.values.slice(s![..face.len(), ..]).to_owned());
            faces.push(face);
        }
        let [fa, fb]: [FaceSequence; 2] = faces.try_into().unwrap();
        let [ma, mb]: [ndarray::Array2<f64>; 2] = mels.try_into().unwrap();
        FaceRecording::new([self.persons[0].id.clone(), self.persons[1].id.clone()], self.facing, [fa, fb], [ma, mb])
    }
}

/// Both persons' streams, with semantic features from the default embedder.
pub fn synth_generate(cfg: &SynthConfig) -> Result<(PersonStream, PersonStream)> {
    let rec = synth_recording(cfg)?;
    let provider = HashEmbedder::default();
    Ok((rec.persons[0].to_stream(&provider)?, rec.persons[1].to_stream(&provider)?))
}

/// Alternating speaking turns `(start, end, person)` in seconds with short gaps.
fn speaking_turns(rng: &mut ChaCha8Rng, duration: f64) -> Vec<(f64, f64, usize)> {
    let mut turns = Vec::new();
    let mut t = rng.random_range(0.0..0.3);
    let mut who = rng.random_range(0..2usize);
    while t < duration {
        let len = rng.random_range(0.8..2.5);
        turns.push((t, (t + len).min(duration), who));
        t += len + rng.random_range(0.1..0.6);
        who = 1 - who;
    }
    turns
}

fn speaking_at(speaking: &[(f64, f64)], t: f64) -> bool {
    speaking.iter().any(|&(a, b)| t >= a && t < b)
}

/// Syllable-rate loudness envelope in [0, 1].
fn envelope(speaking: &[(f64, f64)], t: f64, rate: f64, phase: f64) -> f64 {
    if speaking_at(speaking, t) {
        0.5 + 0.5 * (TAU * rate * t + phase).sin().abs()
    } else {
        0.0
    }
}

struct Wave {
    amp: f64,
    freq: f64,
    phase: f64,
}

impl Wave {
    fn random(rng: &mut ChaCha8Rng, amp: (f64, f64), freq: (f64, f64)) -> Self {
        Wave {
            amp: rng.random_range(amp.0..=amp.1),
            freq: rng.random_range(freq.0..=freq.1),
            phase: rng.random_range(0.0..TAU),
        }
    }

    fn at(&self, t: f64) -> f64 {
        self.amp * (TAU * self.freq * t + self.phase).sin()
    }
}

fn synth_motion(
    rng: &mut ChaCha8Rng,
    cfg: &SynthConfig,
    place: Vector3<f64>,
    yaw: f64,
    speaking: &[(f64, f64)],
) -> Result<MotionSequence> {
    let sk = &cfg.skeleton;
    let height = sk.standing_root_height();
    // Gaze-carrying joints stay within a few degrees so the facing relation
    // holds throughout; limbs gesture more while speaking.
    let joints: Vec<[Wave; 3]> = sk
        .joints()
        .iter()
        .map(|j| {
            let amp = match j.name.as_str() {
                "Spine" | "Spine1" | "Spine2" | "Neck" | "Head" => 0.04,
                n if n.contains("Arm") || n.contains("Hand") => 0.35,
                n if n.contains("Leg") || n.contains("Foot") || n.contains("Toe") => 0.08,
                _ => 0.15,
            };
            std::array::from_fn(|_| Wave::random(rng, (0.2 * amp, amp), (0.1, 0.8)))
        })
        .collect();
    let root_yaw = Wave::random(rng, (0.02, 0.06), (0.05, 0.2));
    let sway = [Wave::random(rng, (0.01, 0.05), (0.05, 0.3)), Wave::random(rng, (0.01, 0.05), (0.05, 0.3))];
    let bob = Wave::random(rng, (0.002, 0.01), (0.2, 0.6));
    let syllable = rng.random_range(3.0..5.0);
    let phase = rng.random_range(0.0..TAU);

    let world_yaw = rot_y(yaw);
    let frames = (0..cfg.frames)
        .map(|f| {
            let t = f as f64 / cfg.fps;
            let gain = 0.6 + 0.8 * envelope(speaking, t, syllable * 0.25, phase);
            let local_shift = Vector3::new(sway[0].at(t), height + bob.at(t), sway[1].at(t));
            let mut rotations: Vec<ExpMap> = joints
                .iter()
                .map(|w| ExpMap::new(gain * w[0].at(t), gain * w[1].at(t), gain * w[2].at(t)))
                .collect();
            let root = world_yaw * rot_y(root_yaw.at(t)) * rotations[0].to_matrix();
            rotations[0] = ExpMap::from_matrix_unchecked(&root);
            FramePose { root_translation: place + world_yaw * local_shift, rotations }
        })
        .collect();
    MotionSequence::new(sk.clone(), frames, 1.0 / cfg.fps)
}

/// Band-limited noise (random-phase partials between 150 Hz and 3.5 kHz)
/// gated by the speaking turns, plus a faint noise floor.
fn synth_audio(rng: &mut ChaCha8Rng, cfg: &SynthConfig, speaking: &[(f64, f64)]) -> AudioClip {
    let sr = cfg.sample_rate as f64;
    let n = (cfg.frames as f64 * sr / cfg.fps).ceil() as usize;
    let partials: Vec<Wave> = (0..24).map(|_| Wave::random(rng, (0.005, 0.03), (150.0, 3500.0))).collect();
    let syllable = rng.random_range(3.0..5.0);
    let phase = rng.random_range(0.0..TAU);
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let env = envelope(speaking, t, syllable, phase);
            let floor = 1e-4 * rng.random_range(-1.0..1.0);
            if env == 0.0 {
                floor
            } else {
                env * partials.iter().map(|w| w.at(t)).sum::<f64>() + floor
            }
        })
        .collect();
    AudioClip { samples, sample_rate: cfg.sample_rate }
}

fn synth_transcript(rng: &mut ChaCha8Rng, speaking: &[(f64, f64)]) -> Vec<WordSpan> {
    let mut words = Vec::new();
    for &(a, b) in speaking {
        let mut t = a;
        while t < b {
            let end = (t + rng.random_range(0.25..0.45)).min(b);
            words.push(WordSpan { word: VOCAB[rng.random_range(0..VOCAB.len())].to_string(), start: t, end });
            t = end;
        }
    }
    words
}

fn synth_labels(rng: &mut ChaCha8Rng, frames: usize) -> Vec<ActionLabel> {
    let all = [ActionLabel::Sit, ActionLabel::Walk, ActionLabel::Stand];
    let mut labels = Vec::with_capacity(frames);
    while labels.len() < frames {
        let run = rng.random_range(30..=90).min(frames - labels.len());
        let l = all[rng.random_range(0..3)];
        labels.extend(std::iter::repeat_n(l, run));
    }
    labels
}

/// Lips open with the speaking envelope; brows drift slowly, more when the
/// persons face each other.
fn synth_face(rng: &mut ChaCha8Rng, cfg: &SynthConfig, speaking: &[(f64, f64)]) -> Result<FaceSequence> {
    let g = &cfg.face_grid;
    let template = g.template();
    let masks = g.masks();
    let brow = Wave::random(rng, (0.5, 1.0), (0.2, 0.6));
    let brow_amp = if cfg.facing { 0.002 } else { 0.001 };
    let syllable = rng.random_range(3.0..5.0);
    let phase = rng.random_range(0.0..TAU);
    let c0 = (g.cols - 1) as f64 / 2.0;
    let mut frames = Array3::zeros((cfg.frames, g.vertices(), 3));
    for f in 0..cfg.frames {
        let t = f as f64 / cfg.fps;
        let open = envelope(speaking, t, syllable, phase);
        let b = brow.at(t);
        for v in 0..g.vertices() {
            let (r, c) = (v / g.cols, v % g.cols);
            let mut d = [0.0; 3];
            if masks.lip.contains(&v) {
                let taper = 1.0 - ((c as f64 - c0) / c0).abs();
                d[1] = if r == 8 { 0.002 } else { -0.006 } * open * taper;
            } else if masks.upper.contains(&v) {
                d[1] = brow_amp * b * (1.0 - r as f64 / 4.0);
            }
            for k in 0..3 {
                frames[[f, v, k]] = template[[v, k]] + d[k];
            }
        }
    }
    FaceSequence::new(template, frames)
}
