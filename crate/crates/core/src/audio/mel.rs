//! 27-band log-mel spectrogram aligned one frame per motion frame.

use ndarray::Array2;
use rustfft::{num_complex::Complex, FftPlanner};

use super::wav::AudioClip;
use crate::par::{self, Execution};
use crate::{Error, Result};

pub const MEL_BANDS: usize = 27;

#[derive(Debug, Clone, PartialEq)]
pub struct MelConfig {
    /// Audio is resampled to this rate before analysis.
    pub sample_rate: u32,
    pub window: usize,
    pub bands: usize,
    pub fmin: f64,
    pub fmax: f64,
    /// Mel powers are clamped to at least this before the log.
    pub floor: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        MelConfig { sample_rate: 16000, window: 1024, bands: MEL_BANDS, fmin: 0.0, fmax: 8000.0, floor: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    /// frames × bands, natural-log energies.
    pub values: Array2<f64>,
    /// Seconds between frames.
    pub hop: f64,
}

impl MelSpectrogram {
    pub fn frames(&self) -> usize {
        self.values.nrows()
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Corner frequencies of the triangular filters: `bands + 2` points evenly
/// spaced on the mel scale. Filter `i` rises from point `i` to a peak at `i + 1`
/// and falls to zero at `i + 2`.
pub fn mel_points(cfg: &MelConfig) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(cfg.fmin), hz_to_mel(cfg.fmax));
    let n = cfg.bands + 1;
    (0..=n).map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / n as f64)).collect()
}

pub fn mel_center_frequencies(cfg: &MelConfig) -> Vec<f64> {
    let p = mel_points(cfg);
    p[1..=cfg.bands].to_vec()
}

/// bands × (window/2 + 1) weights over FFT bin frequencies.
pub fn mel_filterbank(cfg: &MelConfig) -> Array2<f64> {
    let bins = cfg.window / 2 + 1;
    let pts = mel_points(cfg);
    let mut fb = Array2::zeros((cfg.bands, bins));
    for b in 0..cfg.bands {
        let (lo, c, hi) = (pts[b], pts[b + 1], pts[b + 2]);
        for k in 0..bins {
            let f = k as f64 * cfg.sample_rate as f64 / cfg.window as f64;
            fb[[b, k]] = if f >= lo && f <= c {
                (f - lo) / (c - lo)
            } else if f > c && f <= hi {
                (hi - f) / (hi - c)
            } else {
                0.0
            };
        }
    }
    fb
}

fn resample_linear(samples: &[f64], from: u32, to: u32) -> Vec<f64> {
    if from == to || samples.is_empty() {
        return samples.to_vec();
    }
    let n = ((samples.len() as u64 * to as u64) / from as u64) as usize;
    let ratio = from as f64 / to as f64;
    (0..n)
        .map(|i| {
            let x = i as f64 * ratio;
            let j = x.floor() as usize;
            let t = x - j as f64;
            let a = samples[j.min(samples.len() - 1)];
            let b = samples[(j + 1).min(samples.len() - 1)];
            a + (b - a) * t
        })
        .collect()
}

/// Number of motion-aligned frames for a clip: `floor(duration · fps)`.
pub fn frame_count(samples: usize, sample_rate: u32, fps: f64) -> usize {
    (samples as f64 * fps / sample_rate as f64 + 1e-9).floor() as usize
}

pub fn mel_spectrogram(clip: &AudioClip, fps: f64) -> Result<MelSpectrogram> {
    mel_spectrogram_with(clip, fps, &MelConfig::default(), Execution::default())
}

/// Frame `k` analyses the Hann-windowed block starting at sample
/// `round(k · rate / fps)` (zero-padded past the end).
pub fn mel_spectrogram_with(
    clip: &AudioClip,
    fps: f64,
    cfg: &MelConfig,
    exec: Execution,
) -> Result<MelSpectrogram> {
    if clip.samples.is_empty() {
        return Err(Error::invalid("empty audio clip"));
    }
    if !(fps > 0.0) {
        return Err(Error::invalid(format!("fps must be positive, got {fps}")));
    }
    let n_frames = frame_count(clip.samples.len(), clip.sample_rate, fps);
    let audio = resample_linear(&clip.samples, clip.sample_rate, cfg.sample_rate);
    if audio.len() < cfg.window {
        return Err(Error::invalid(format!(
            "clip has {} samples at {} Hz, shorter than one {}-sample analysis window",
            audio.len(),
            cfg.sample_rate,
            cfg.window
        )));
    }
    let hop = cfg.sample_rate as f64 / fps;
    let hann: Vec<f64> = (0..cfg.window)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / cfg.window as f64).cos())
        .collect();
    let fb = mel_filterbank(cfg);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.window);
    let bins = cfg.window / 2 + 1;

    let rows = par::map_range(exec, n_frames, |k| {
        let start = (k as f64 * hop).round() as usize;
        let mut buf: Vec<Complex<f64>> = (0..cfg.window)
            .map(|i| Complex::new(audio.get(start + i).copied().unwrap_or(0.0) * hann[i], 0.0))
            .collect();
        fft.process(&mut buf);
        let power: Vec<f64> = buf[..bins].iter().map(|c| c.norm_sqr()).collect();
        (0..cfg.bands)
            .map(|b| {
                let e: f64 = fb.row(b).iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(cfg.floor).ln()
            })
            .collect::<Vec<f64>>()
    });
    let mut values = Array2::zeros((n_frames, cfg.bands));
    for (k, row) in rows.into_iter().enumerate() {
        values.row_mut(k).assign(&ndarray::Array1::from(row));
    }
    Ok(MelSpectrogram { values, hop: 1.0 / fps })
}
