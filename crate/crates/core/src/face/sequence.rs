use ndarray::{concatenate, s, Array2, Array3, Axis};

use crate::{Error, Result};

/// Per-frame vertex positions plus the neutral template (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceSequence {
    /// V × 3
    pub template: Array2<f64>,
    /// T × V × 3
    pub frames: Array3<f64>,
}

impl FaceSequence {
    pub fn new(template: Array2<f64>, frames: Array3<f64>) -> Result<Self> {
        if template.ncols() != 3 || frames.dim().2 != 3 {
            return Err(Error::shape("face vertices must be 3-vectors"));
        }
        if frames.dim().1 != template.nrows() {
            return Err(Error::shape(format!(
                "frames have {} vertices, template has {}",
                frames.dim().1,
                template.nrows()
            )));
        }
        if template.iter().chain(frames.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("face coordinates".into()));
        }
        Ok(FaceSequence { template, frames })
    }

    /// A sequence that holds the template for `t` frames.
    pub fn static_template(template: Array2<f64>, t: usize) -> Self {
        let frames = template.broadcast((t, template.nrows(), 3)).unwrap().to_owned();
        FaceSequence { template, frames }
    }

    pub fn len(&self) -> usize {
        self.frames.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vertices(&self) -> usize {
        self.template.nrows()
    }

    /// T × V displacement norms from the template.
    pub fn displacement_norms(&self) -> Array2<f64> {
        let (t, v, _) = self.frames.dim();
        Array2::from_shape_fn((t, v), |(f, i)| {
            (0..3)
                .map(|c| {
                    let d = self.frames[[f, i, c]] - self.template[[i, c]];
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        })
    }

    /// T × (3V) displacement rows, vertex-major.
    pub fn displacement_rows(&self) -> Array2<f64> {
        let (t, v, _) = self.frames.dim();
        Array2::from_shape_fn((t, 3 * v), |(f, k)| self.frames[[f, k / 3, k % 3]] - self.template[[k / 3, k % 3]])
    }

    pub fn from_displacement_rows(template: Array2<f64>, rows: &Array2<f64>) -> Result<Self> {
        let v = template.nrows();
        if rows.ncols() != 3 * v {
            return Err(Error::shape(format!("displacement width {} != 3·{v}", rows.ncols())));
        }
        let frames = Array3::from_shape_fn((rows.nrows(), v, 3), |(f, i, c)| rows[[f, 3 * i + c]] + template[[i, c]]);
        FaceSequence::new(template, frames)
    }

    pub fn slice_frames(&self, start: usize, len: usize) -> FaceSequence {
        FaceSequence {
            template: self.template.clone(),
            frames: self.frames.slice(s![start..start + len, .., ..]).to_owned(),
        }
    }
}

/// Concatenates two faces on the vertex axis: `[A | B]`.
pub fn concat_faces(a: &FaceSequence, b: &FaceSequence) -> Result<FaceSequence> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("face lengths differ: {} vs {}", a.len(), b.len())));
    }
    Ok(FaceSequence {
        template: concatenate(Axis(0), &[a.template.view(), b.template.view()]).unwrap(),
        frames: concatenate(Axis(1), &[a.frames.view(), b.frames.view()]).unwrap(),
    })
}

/// Inverse of [`concat_faces`], with `va` vertices going to the first face.
pub fn split_faces(joint: &FaceSequence, va: usize) -> Result<(FaceSequence, FaceSequence)> {
    if va > joint.vertices() {
        return Err(Error::shape("split point beyond vertex count"));
    }
    let part = |r: std::ops::Range<usize>| FaceSequence {
        template: joint.template.slice(s![r.clone(), ..]).to_owned(),
        frames: joint.frames.slice(s![.., r, ..]).to_owned(),
    };
    Ok((part(0..va), part(va..joint.vertices())))
}

pub const FACE_SEQUENCE_MAGIC: &[u8; 8] = b"DUETFSEQ";
pub const FACE_SEQUENCE_VERSION: u32 = 1;

#[derive(serde::Serialize, serde::Deserialize)]
struct SeqHeader {
    frames: usize,
    vertices: usize,
    fps: f64,
    #[serde(default)]
    config_fingerprint: String,
}

/// Single-person face file: template block then frame block.
pub fn save_face_sequence(face: &FaceSequence, fps: f64, config_fingerprint: &str) -> Result<Vec<u8>> {
    let h = SeqHeader { frames: face.len(), vertices: face.vertices(), fps, config_fingerprint: config_fingerprint.into() };
    let mut w = crate::binfmt::Writer::new(FACE_SEQUENCE_MAGIC, FACE_SEQUENCE_VERSION, &h)?;
    w.block(face.template.iter().copied().collect::<Vec<_>>());
    w.block(face.frames.iter().copied().collect::<Vec<_>>());
    Ok(w.finish())
}

/// Returns the face and its frame rate.
pub fn load_face_sequence(bytes: &[u8]) -> Result<(FaceSequence, f64)> {
    let mut r: crate::binfmt::Reader<SeqHeader> =
        crate::binfmt::Reader::parse(bytes, FACE_SEQUENCE_MAGIC, FACE_SEQUENCE_VERSION)?;
    let (t, v, fps) = (r.header.frames, r.header.vertices, r.header.fps);
    let template = Array2::from_shape_vec((v, 3), r.block_len("template", 3 * v)?).unwrap();
    let frames = Array3::from_shape_vec((t, v, 3), r.block_len("frames", 3 * t * v)?).unwrap();
    if r.remaining() != 0 {
        return Err(Error::format("unexpected trailing data blocks in face file"));
    }
    Ok((FaceSequence::new(template, frames)?, fps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn face(t: usize, v: usize, k: f64) -> FaceSequence {
        let template = Array2::from_shape_fn((v, 3), |(i, c)| (i * 3 + c) as f64 * 0.01);
        let frames = Array3::from_shape_fn((t, v, 3), |(f, i, c)| template[[i, c]] + k * (f + i + c) as f64 * 1e-3);
        FaceSequence::new(template, frames).unwrap()
    }

    #[test]
    fn concat_and_split_are_inverse() {
        let (a, b) = (face(4, 3, 1.0), face(4, 3, -2.0));
        let j = concat_faces(&a, &b).unwrap();
        assert_eq!(j.vertices(), 6);
        let (a2, b2) = split_faces(&j, 3).unwrap();
        assert_eq!(a2, a);
        assert_eq!(b2, b);
        assert!(concat_faces(&a, &face(5, 3, 1.0)).is_err());
    }

    #[test]
    fn displacement_rows_round_trip() {
        let f = face(3, 4, 0.5);
        let back = FaceSequence::from_displacement_rows(f.template.clone(), &f.displacement_rows()).unwrap();
        assert!((back.frames - &f.frames).iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn file_round_trip() {
        let f = face(4, 3, 0.7);
        let (back, fps) = load_face_sequence(&save_face_sequence(&f, 25.0, "fp").unwrap()).unwrap();
        assert_eq!(back, f);
        assert_eq!(fps, 25.0);
    }

    #[test]
    fn validation() {
        assert!(FaceSequence::new(Array2::zeros((2, 3)), Array3::zeros((1, 3, 3))).is_err());
        assert!(FaceSequence::new(Array2::zeros((2, 2)), Array3::zeros((1, 2, 2))).is_err());
        let st = FaceSequence::static_template(Array2::ones((2, 3)), 4);
        assert!(st.displacement_norms().iter().all(|&d| d == 0.0));
    }
}
