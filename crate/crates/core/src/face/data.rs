//! On-disk face training data: per recording, both persons' templates,
//! vertex frames and frame-aligned mel features.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sequence::FaceSequence;
use super::topology::RegionMasks;
use crate::audio::MEL_BANDS;
use crate::binfmt::{Reader, Writer};
use crate::nn::Mat;
use crate::{Error, Result};

pub const FACE_DATA_MAGIC: &[u8; 8] = b"DUETFACE";
pub const FACE_DATA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct FaceRecording {
    /// Speaker (style) ids of persons A and B.
    pub styles: [String; 2],
    pub facing: bool,
    pub faces: [FaceSequence; 2],
    /// T × 27 per person.
    pub mel: [Mat; 2],
}

impl FaceRecording {
    pub fn new(styles: [String; 2], facing: bool, faces: [FaceSequence; 2], mel: [Mat; 2]) -> Result<Self> {
        let t = faces[0].len();
        if faces[1].len() != t {
            return Err(Error::shape(format!("face lengths differ: {} vs {}", t, faces[1].len())));
        }
        for m in &mel {
            if m.dim() != (t, MEL_BANDS) {
                return Err(Error::shape(format!("mel block is {:?}, expected ({t}, {MEL_BANDS})", m.dim())));
            }
        }
        Ok(FaceRecording { styles, facing, faces, mel })
    }

    pub fn frames(&self) -> usize {
        self.faces[0].len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceDataset {
    pub fps: f64,
    /// Region masks of a single face (both persons share the topology).
    pub masks: RegionMasks,
    pub recordings: Vec<FaceRecording>,
    pub config_fingerprint: String,
}

impl FaceDataset {
    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.recordings.first() else {
            return Err(Error::invalid("face dataset has no recordings"));
        };
        let v = [first.faces[0].vertices(), first.faces[1].vertices()];
        for (i, r) in self.recordings.iter().enumerate() {
            if [r.faces[0].vertices(), r.faces[1].vertices()] != v {
                return Err(Error::shape(format!("recording {i}: vertex counts differ from the first recording")));
            }
        }
        self.masks.check(v[0].min(v[1]))
    }

    pub fn vertices(&self) -> [usize; 2] {
        self.recordings.first().map_or([0, 0], |r| [r.faces[0].vertices(), r.faces[1].vertices()])
    }

    /// Hex SHA-256 of the serialised dataset.
    pub fn hash(&self) -> Result<String> {
        Ok(crate::dataset::container::hex(&Sha256::digest(save_face_data(self)?)))
    }
}

#[derive(Serialize, Deserialize)]
struct RecordingHeader {
    styles: [String; 2],
    facing: bool,
    frames: usize,
    vertices: [usize; 2],
}

#[derive(Serialize, Deserialize)]
struct Header {
    fps: f64,
    masks: MaskHeader,
    recordings: Vec<RecordingHeader>,
    config_fingerprint: String,
}

#[derive(Serialize, Deserialize)]
struct MaskHeader {
    lip: Vec<usize>,
    upper: Vec<usize>,
}

pub fn save_face_data(d: &FaceDataset) -> Result<Vec<u8>> {
    let header = Header {
        fps: d.fps,
        masks: MaskHeader { lip: d.masks.lip.clone(), upper: d.masks.upper.clone() },
        recordings: d
            .recordings
            .iter()
            .map(|r| RecordingHeader {
                styles: r.styles.clone(),
                facing: r.facing,
                frames: r.frames(),
                vertices: [r.faces[0].vertices(), r.faces[1].vertices()],
            })
            .collect(),
        config_fingerprint: d.config_fingerprint.clone(),
    };
    let mut w = Writer::new(FACE_DATA_MAGIC, FACE_DATA_VERSION, &header)?;
    for r in &d.recordings {
        for f in &r.faces {
            w.block(f.template.iter().copied().collect::<Vec<_>>());
        }
        for f in &r.faces {
            w.block(f.frames.iter().copied().collect::<Vec<_>>());
        }
        for m in &r.mel {
            w.block(m.iter().copied().collect::<Vec<_>>());
        }
    }
    Ok(w.finish())
}

pub fn load_face_data(bytes: &[u8]) -> Result<FaceDataset> {
    let mut r: Reader<Header> = Reader::parse(bytes, FACE_DATA_MAGIC, FACE_DATA_VERSION)?;
    let metas: Vec<(usize, [usize; 2], [String; 2], bool)> =
        r.header.recordings.iter().map(|h| (h.frames, h.vertices, h.styles.clone(), h.facing)).collect();
    let mut recordings = Vec::with_capacity(metas.len());
    for (t, v, styles, facing) in metas {
        let templates = [
            Array2::from_shape_vec((v[0], 3), r.block_len("template", 3 * v[0])?).unwrap(),
            Array2::from_shape_vec((v[1], 3), r.block_len("template", 3 * v[1])?).unwrap(),
        ];
        let frames = [
            Array3::from_shape_vec((t, v[0], 3), r.block_len("frames", 3 * t * v[0])?).unwrap(),
            Array3::from_shape_vec((t, v[1], 3), r.block_len("frames", 3 * t * v[1])?).unwrap(),
        ];
        let mel = [
            Mat::from_shape_vec((t, MEL_BANDS), r.block_len("mel", t * MEL_BANDS)?).unwrap(),
            Mat::from_shape_vec((t, MEL_BANDS), r.block_len("mel", t * MEL_BANDS)?).unwrap(),
        ];
        let [ta, tb] = templates;
        let [fa, fb] = frames;
        let faces = [FaceSequence::new(ta, fa)?, FaceSequence::new(tb, fb)?];
        recordings.push(FaceRecording::new(styles, facing, faces, mel)?);
    }
    if r.remaining() != 0 {
        return Err(Error::format("unexpected trailing data blocks in face data"));
    }
    let h = r.header;
    let d = FaceDataset {
        fps: h.fps,
        masks: RegionMasks { lip: h.masks.lip, upper: h.masks.upper },
        recordings,
        config_fingerprint: h.config_fingerprint,
    };
    d.validate()?;
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face::GridFace;

    fn tiny() -> FaceDataset {
        let g = GridFace { rows: 4, cols: 4, spacing: 0.01 };
        let face = |k: f64| {
            let mut f = FaceSequence::static_template(g.template(), 5);
            f.frames[[2, 3, 1]] += k;
            f
        };
        let mel = || Mat::from_shape_fn((5, MEL_BANDS), |(i, j)| (i * j) as f64 * 0.1 - 1.0);
        FaceDataset {
            fps: 30.0,
            masks: RegionMasks { lip: vec![1, 2], upper: vec![0] },
            recordings: vec![FaceRecording::new(["s1".into(), "s2".into()], true, [face(0.1), face(0.2)], [mel(), mel()]).unwrap()],
            config_fingerprint: "fp".into(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let d = tiny();
        let bytes = save_face_data(&d).unwrap();
        assert_eq!(load_face_data(&bytes).unwrap(), d);
        assert!(load_face_data(&bytes[..bytes.len() - 4]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(load_face_data(&bad).is_err());
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let d = tiny();
        let r = &d.recordings[0];
        let short = r.faces[1].slice_frames(0, 4);
        assert!(FaceRecording::new(r.styles.clone(), true, [r.faces[0].clone(), short], r.mel.clone()).is_err());
    }
}
