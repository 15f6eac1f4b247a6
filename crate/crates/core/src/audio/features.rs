use ndarray::{concatenate, Array2, ArrayView2, Axis};

use super::mel::MEL_BANDS;
use super::semantic::SEMANTIC_DIM;
use crate::{Error, Result};

pub const ACTION_DIM: usize = 3;
pub const FEATURE_DIM: usize = MEL_BANDS + SEMANTIC_DIM + ACTION_DIM;

/// Per-frame conditioning: `[mel (27) | semantic (32) | action one-hot (3)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures(pub Array2<f64>);

impl FrameFeatures {
    pub fn new(m: Array2<f64>) -> Result<Self> {
        if m.ncols() != FEATURE_DIM {
            return Err(Error::shape(format!("feature width {} != {FEATURE_DIM}", m.ncols())));
        }
        Ok(FrameFeatures(m))
    }

    pub fn frames(&self) -> usize {
        self.0.nrows()
    }

    pub fn mel(&self) -> ArrayView2<'_, f64> {
        self.0.slice(ndarray::s![.., ..MEL_BANDS])
    }

    pub fn semantic(&self) -> ArrayView2<'_, f64> {
        self.0.slice(ndarray::s![.., MEL_BANDS..MEL_BANDS + SEMANTIC_DIM])
    }

    pub fn actions(&self) -> ArrayView2<'_, f64> {
        self.0.slice(ndarray::s![.., MEL_BANDS + SEMANTIC_DIM..])
    }
}

pub fn assemble_features(
    mel: ArrayView2<'_, f64>,
    semantic: ArrayView2<'_, f64>,
    actions: ArrayView2<'_, f64>,
) -> Result<FrameFeatures> {
    let n = mel.nrows();
    if semantic.nrows() != n || actions.nrows() != n {
        return Err(Error::shape(format!(
            "frame counts differ: mel {n}, semantic {}, actions {}",
            semantic.nrows(),
            actions.nrows()
        )));
    }
    for (what, got, want) in [("mel", mel.ncols(), MEL_BANDS), ("semantic", semantic.ncols(), SEMANTIC_DIM), ("action", actions.ncols(), ACTION_DIM)] {
        if got != want {
            return Err(Error::shape(format!("{what} width {got} != {want}")));
        }
    }
    FrameFeatures::new(concatenate(Axis(1), &[mel, semantic, actions]).expect("row counts checked"))
}
