use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::offset::RelativeOffset;
use super::pairing::PairedStream;
use super::window::{segment_windows, PairedSample};
use crate::audio::{ACTION_DIM, FEATURE_DIM, MEL_BANDS, SEMANTIC_DIM};
use crate::binfmt::{Reader, Writer};
use crate::motion::{FramePose, Skeleton};
use crate::par::{self, Execution};
use crate::{Error, Result};

pub const DATASET_MAGIC: &[u8; 8] = b"DUETDSET";
pub const DATASET_VERSION: u32 = 1;

/// Column layout of one person's feature block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub mel: usize,
    pub semantic: usize,
    pub action: usize,
    pub persons: usize,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        FeatureLayout { mel: MEL_BANDS, semantic: SEMANTIC_DIM, action: ACTION_DIM, persons: 2 }
    }
}

impl FeatureLayout {
    pub fn width(&self) -> usize {
        (self.mel + self.semantic + self.action) * self.persons
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub fps: f64,
    pub skeleton: Skeleton,
    pub window: usize,
    pub stride: usize,
    pub features: FeatureLayout,
    /// How the relative offset enters the condition.
    pub offset_mode: String,
    pub config_fingerprint: String,
}

impl Manifest {
    pub fn new(fps: f64, skeleton: Skeleton, window: usize, stride: usize, config_fingerprint: impl Into<String>) -> Self {
        Manifest {
            schema_version: DATASET_VERSION,
            fps,
            skeleton,
            window,
            stride,
            features: FeatureLayout::default(),
            offset_mode: "once-per-window".into(),
            config_fingerprint: config_fingerprint.into(),
        }
    }

    /// Width of the two-person motion table.
    pub fn motion_width(&self) -> usize {
        2 * self.skeleton.frame_width()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("manifest serializes");
        hex(&Sha256::digest(json))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetContainer {
    pub manifest: Manifest,
    pub samples: Vec<PairedSample>,
}

impl DatasetContainer {
    pub fn new(manifest: Manifest, samples: Vec<PairedSample>) -> Result<Self> {
        let c = DatasetContainer { manifest, samples };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        if m.features.width() != 2 * FEATURE_DIM {
            return Err(Error::ManifestMismatch(format!("feature width {} != {}", m.features.width(), 2 * FEATURE_DIM)));
        }
        for s in &self.samples {
            if s.x.dim() != (m.window, m.features.width()) {
                return Err(Error::shape(format!("sample {}: features are {:?}", s.window_id, s.x.dim())));
            }
            if s.y.dim() != (m.window, m.motion_width()) {
                return Err(Error::shape(format!("sample {}: motion is {:?}", s.window_id, s.y.dim())));
            }
            if s.anchors.iter().any(|a| a.rotations.len() != m.skeleton.len()) {
                return Err(Error::shape(format!("sample {}: anchor does not match skeleton", s.window_id)));
            }
        }
        Ok(())
    }

    pub fn frame_time(&self) -> f64 {
        1.0 / self.manifest.fps
    }
}

/// Windows every stream and numbers the samples consecutively. Each stream
/// carries its own tags, copied onto its samples.
pub fn build_container(
    manifest: Manifest,
    streams: &[(PairedStream, BTreeMap<String, String>)],
    exec: Execution,
) -> Result<DatasetContainer> {
    let per_stream = par::map(exec, streams, |(pair, tags)| {
        let mut w = segment_windows(pair, manifest.window, manifest.stride);
        for s in &mut w {
            s.tags = tags.clone();
        }
        w
    });
    let samples = per_stream
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(i, mut s)| {
            s.window_id = i;
            s
        })
        .collect();
    DatasetContainer::new(manifest, samples)
}

#[derive(Serialize, Deserialize)]
struct Header {
    manifest: Manifest,
    samples: Vec<SampleMeta>,
}

#[derive(Serialize, Deserialize)]
struct SampleMeta {
    window_id: usize,
    start: usize,
    tags: BTreeMap<String, String>,
}

pub fn save_dataset(c: &DatasetContainer) -> Result<Vec<u8>> {
    c.validate()?;
    let header = Header {
        manifest: c.manifest.clone(),
        samples: c
            .samples
            .iter()
            .map(|s| SampleMeta { window_id: s.window_id, start: s.start, tags: s.tags.clone() })
            .collect(),
    };
    let mut w = Writer::new(DATASET_MAGIC, DATASET_VERSION, &header)?;
    for s in &c.samples {
        w.block(s.x.iter().copied().collect::<Vec<_>>())
            .block(s.y.iter().copied().collect::<Vec<_>>())
            .block(s.anchors[0].to_row())
            .block(s.anchors[1].to_row())
            .block(s.offset.to_array().to_vec());
    }
    Ok(w.finish())
}

pub fn load_dataset(bytes: &[u8]) -> Result<DatasetContainer> {
    let mut r: Reader<Header> = Reader::parse(bytes, DATASET_MAGIC, DATASET_VERSION)?;
    let manifest = r.header.manifest.clone();
    if manifest.schema_version != DATASET_VERSION {
        return Err(Error::format(format!("manifest schema version {} not supported", manifest.schema_version)));
    }
    let metas = std::mem::take(&mut r.header.samples);
    let (wlen, xw, yw, aw) =
        (manifest.window, manifest.features.width(), manifest.motion_width(), manifest.skeleton.frame_width());
    let mut samples = Vec::with_capacity(metas.len());
    for meta in metas {
        let x = Array2::from_shape_vec((wlen, xw), r.block_len("features", wlen * xw)?).unwrap();
        let y = Array2::from_shape_vec((wlen, yw), r.block_len("motion", wlen * yw)?).unwrap();
        let a = FramePose::from_row(&r.block_len("anchor", aw)?)?;
        let b = FramePose::from_row(&r.block_len("anchor", aw)?)?;
        let o = r.block_len("offset", 3)?;
        samples.push(PairedSample {
            window_id: meta.window_id,
            start: meta.start,
            x,
            y,
            offset: RelativeOffset::from_array([o[0], o[1], o[2]]),
            anchors: [a, b],
            tags: meta.tags,
        });
    }
    if r.remaining() != 0 {
        return Err(Error::format(format!("{} unexpected data blocks", r.remaining())));
    }
    DatasetContainer::new(manifest, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::pairing::pair_streams;
    use crate::dataset::synth::{synth_generate, SynthConfig};

    fn sample_container() -> DatasetContainer {
        let (a, b) = synth_generate(&SynthConfig { frames: 50, ..SynthConfig::default() }).unwrap();
        let pair = pair_streams(&a, &b).unwrap();
        let manifest = Manifest::new(30.0, a.motion.skeleton.clone(), 20, 15, "test");
        let tags = BTreeMap::from([("relationship".to_string(), "friends".to_string())]);
        build_container(manifest, &[(pair, tags)], Execution::default()).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample_container();
        assert_eq!(c.samples.len(), 3);
        let bytes = save_dataset(&c).unwrap();
        let back = load_dataset(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(save_dataset(&back).unwrap(), bytes);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let bytes = save_dataset(&sample_container()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(load_dataset(&bad), Err(Error::Format(_))));
        assert!(load_dataset(&bytes[..bytes.len() - 5]).is_err());
        let mut v = bytes.clone();
        v[8] = 9;
        assert!(load_dataset(&v).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn manifest_hash_tracks_content() {
        let c = sample_container();
        let mut m = c.manifest.clone();
        assert_eq!(m.hash(), c.manifest.hash());
        m.stride += 1;
        assert_ne!(m.hash(), c.manifest.hash());
    }
}
