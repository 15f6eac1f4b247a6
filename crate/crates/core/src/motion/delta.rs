//! Previous-frame delta encoding.
//!
//! Frame 0 is stored verbatim as the anchor. Every later frame stores, per
//! joint, `R_{t−1}⁻¹ · R_t` as an exponential map, and the root displacement
//! expressed in the root frame at `t − 1`. The delta stream therefore does not
//! change when one rigid transform is applied to the whole sequence.

use nalgebra::{Matrix3, Vector3};

use super::rotation::ExpMap;
use super::skeleton::{FramePose, MotionSequence, Skeleton};
use crate::{Error, Result};

/// One delta frame: same layout as a [`FramePose`] row.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaFrame {
    pub translation: Vector3<f64>,
    pub rotations: Vec<ExpMap>,
}

impl DeltaFrame {
    pub fn identity(joints: usize) -> Self {
        DeltaFrame { translation: Vector3::zeros(), rotations: vec![ExpMap::IDENTITY; joints] }
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(3 + 3 * self.rotations.len());
        row.extend(self.translation.iter());
        for r in &self.rotations {
            row.extend(r.0.iter());
        }
        row
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        let p = FramePose::from_row(row)?;
        Ok(DeltaFrame { translation: p.root_translation, rotations: p.rotations })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalDeltaMotion {
    pub skeleton: Skeleton,
    pub anchor: FramePose,
    /// Deltas for frames 1..N.
    pub deltas: Vec<DeltaFrame>,
    pub frame_time: f64,
}

impl LocalDeltaMotion {
    pub fn frame_count(&self) -> usize {
        self.deltas.len() + 1
    }

    /// Flat table with one row per frame: row 0 is the identity delta
    /// (the anchor is kept separately), row t the delta into frame t.
    pub fn to_table(&self) -> Vec<Vec<f64>> {
        std::iter::once(DeltaFrame::identity(self.skeleton.len()).to_row())
            .chain(self.deltas.iter().map(DeltaFrame::to_row))
            .collect()
    }

    /// Rebuilds from an anchor and a per-frame table; row 0 is ignored.
    pub fn from_table(
        skeleton: Skeleton,
        anchor: FramePose,
        rows: &[Vec<f64>],
        frame_time: f64,
    ) -> Result<Self> {
        let width = skeleton.frame_width();
        if rows.is_empty() {
            return Err(Error::shape("delta table needs at least one row"));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::shape(format!("delta row width {} != {width}", r.len())));
        }
        if anchor.rotations.len() != skeleton.len() {
            return Err(Error::shape("anchor pose does not match skeleton"));
        }
        let deltas = rows[1..].iter().map(|r| DeltaFrame::from_row(r)).collect::<Result<_>>()?;
        Ok(LocalDeltaMotion { skeleton, anchor, deltas, frame_time })
    }
}

/// Encodes a sequence with at least one frame.
pub fn encode_local_deltas(m: &MotionSequence) -> Result<LocalDeltaMotion> {
    let Some(first) = m.frames.first() else {
        return Err(Error::invalid("cannot delta-encode an empty sequence"));
    };
    let mut prev: Vec<Matrix3<f64>> = first.rotations.iter().map(ExpMap::to_matrix).collect();
    let mut deltas = Vec::with_capacity(m.frames.len().saturating_sub(1));
    for pair in m.frames.windows(2) {
        let cur: Vec<Matrix3<f64>> = pair[1].rotations.iter().map(ExpMap::to_matrix).collect();
        let rotations = prev
            .iter()
            .zip(&cur)
            .map(|(p, c)| ExpMap::from_matrix_unchecked(&(p.transpose() * c)))
            .collect();
        let translation = prev[0].transpose() * (pair[1].root_translation - pair[0].root_translation);
        deltas.push(DeltaFrame { translation, rotations });
        prev = cur;
    }
    Ok(LocalDeltaMotion {
        skeleton: m.skeleton.clone(),
        anchor: first.clone(),
        deltas,
        frame_time: m.frame_time,
    })
}

pub fn decode_local_deltas(d: &LocalDeltaMotion) -> Result<MotionSequence> {
    let mut frames = Vec::with_capacity(d.frame_count());
    let mut rot: Vec<Matrix3<f64>> = d.anchor.rotations.iter().map(ExpMap::to_matrix).collect();
    let mut pos = d.anchor.root_translation;
    frames.push(d.anchor.clone());
    for delta in &d.deltas {
        if delta.rotations.len() != rot.len() {
            return Err(Error::shape("delta frame does not match skeleton"));
        }
        pos += rot[0] * delta.translation;
        for (r, dr) in rot.iter_mut().zip(&delta.rotations) {
            *r *= dr.to_matrix();
        }
        frames.push(FramePose {
            root_translation: pos,
            rotations: rot.iter().map(ExpMap::from_matrix_unchecked).collect(),
        });
    }
    MotionSequence::new(d.skeleton.clone(), frames, d.frame_time)
}
