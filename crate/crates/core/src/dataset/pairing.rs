use ndarray::{concatenate, s, Array2, Axis};

use crate::audio::{FrameFeatures, FEATURE_DIM};
use crate::face::FaceSequence;
use crate::motion::{encode_local_deltas, MotionSequence};
use crate::{Error, Result};

/// One person's features and motion (and optionally face) over a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonStream {
    pub id: String,
    pub features: FrameFeatures,
    pub motion: MotionSequence,
    pub face: Option<FaceSequence>,
}

impl PersonStream {
    pub fn new(id: impl Into<String>, features: FrameFeatures, motion: MotionSequence, face: Option<FaceSequence>) -> Result<Self> {
        if features.frames() != motion.len() {
            return Err(Error::shape(format!(
                "features have {} frames, motion has {}",
                features.frames(),
                motion.len()
            )));
        }
        if let Some(f) = &face {
            if f.len() != motion.len() {
                return Err(Error::shape(format!("face has {} frames, motion has {}", f.len(), motion.len())));
            }
        }
        Ok(PersonStream { id: id.into(), features, motion, face })
    }

    pub fn frames(&self) -> usize {
        self.motion.len()
    }
}

/// Two persons concatenated column-wise: `X = [X¹ | X²]`, `Y = [Y¹ | Y²]`,
/// where `Y` is the per-frame delta table.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedStream {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub motions: [MotionSequence; 2],
    pub ids: [String; 2],
}

impl PairedStream {
    pub fn frames(&self) -> usize {
        self.x.nrows()
    }

    /// Width of one person's motion block in `y`.
    pub fn person_width(&self) -> usize {
        self.y.ncols() / 2
    }
}

pub(crate) fn delta_table(m: &MotionSequence) -> Result<Array2<f64>> {
    let rows = encode_local_deltas(m)?.to_table();
    let w = m.skeleton.frame_width();
    Ok(Array2::from_shape_vec((rows.len(), w), rows.concat()).expect("delta rows have uniform width"))
}

pub fn pair_streams(a: &PersonStream, b: &PersonStream) -> Result<PairedStream> {
    if a.frames() != b.frames() {
        return Err(Error::shape(format!("persons have {} and {} frames", a.frames(), b.frames())));
    }
    if a.motion.skeleton.len() != b.motion.skeleton.len() {
        return Err(Error::shape("persons use skeletons with different joint counts"));
    }
    let x = concatenate(Axis(1), &[a.features.0.view(), b.features.0.view()]).unwrap();
    debug_assert_eq!(x.ncols(), 2 * FEATURE_DIM);
    let (ya, yb) = (delta_table(&a.motion)?, delta_table(&b.motion)?);
    let y = concatenate(Axis(1), &[ya.view(), yb.view()]).unwrap();
    Ok(PairedStream {
        x,
        y,
        motions: [a.motion.clone(), b.motion.clone()],
        ids: [a.id.clone(), b.id.clone()],
    })
}

/// Splits a two-person column block back into per-person blocks.
pub fn split_columns(m: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let h = m.ncols() / 2;
    (m.slice(s![.., ..h]).to_owned(), m.slice(s![.., h..]).to_owned())
}
