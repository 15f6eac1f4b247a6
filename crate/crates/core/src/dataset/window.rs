use std::collections::BTreeMap;

use ndarray::{s, Array2};

use super::offset::{relative_offset_from, RelativeOffset};
use super::pairing::PairedStream;
use crate::motion::{decode_local_deltas, root_yaws, FramePose, LocalDeltaMotion, MotionSequence, Skeleton};
use crate::Result;

/// One training window of a two-person recording.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub window_id: usize,
    /// First frame of the window in the source recording.
    pub start: usize,
    /// W × 124 features.
    pub x: Array2<f64>,
    /// W × 2D delta tables. Row 0 is the delta into the first window frame
    /// (identity at the start of a recording) and is not used when decoding.
    pub y: Array2<f64>,
    pub offset: RelativeOffset,
    /// Absolute pose of each person at the first window frame.
    pub anchors: [FramePose; 2],
    pub tags: BTreeMap<String, String>,
}

impl PairedSample {
    pub fn frames(&self) -> usize {
        self.x.nrows()
    }

    /// Rebuilds both persons' absolute motion from the anchors and deltas.
    pub fn decode(&self, skeleton: &Skeleton, frame_time: f64) -> Result<[MotionSequence; 2]> {
        decode_pair(&self.y, &self.anchors, skeleton, frame_time)
    }
}

pub fn decode_pair(
    y: &Array2<f64>,
    anchors: &[FramePose; 2],
    skeleton: &Skeleton,
    frame_time: f64,
) -> Result<[MotionSequence; 2]> {
    let w = skeleton.frame_width();
    let decode = |p: usize| {
        let rows: Vec<Vec<f64>> = y.slice(s![.., p * w..(p + 1) * w]).rows().into_iter().map(|r| r.to_vec()).collect();
        decode_local_deltas(&LocalDeltaMotion::from_table(skeleton.clone(), anchors[p].clone(), &rows, frame_time)?)
    };
    Ok([decode(0)?, decode(1)?])
}

/// Number of windows: `floor((n − window)/stride) + 1` when `n ≥ window`, else 0.
pub fn window_count(n: usize, window: usize, stride: usize) -> usize {
    if window == 0 || stride == 0 || n < window {
        0
    } else {
        (n - window) / stride + 1
    }
}

/// Cuts `pair` into windows at offsets `0, stride, 2·stride, …`, dropping a
/// trailing partial window. The relative offset is taken once per window at
/// its first frame.
pub fn segment_windows(pair: &PairedStream, window: usize, stride: usize) -> Vec<PairedSample> {
    let n = pair.frames();
    let count = window_count(n, window, stride);
    let yaws = [root_yaws(&pair.motions[0]), root_yaws(&pair.motions[1])];
    (0..count)
        .map(|i| {
            let start = i * stride;
            let anchors = [pair.motions[0].frames[start].clone(), pair.motions[1].frames[start].clone()];
            let offset = relative_offset_from(
                anchors[0].root_translation,
                yaws[0][start],
                anchors[1].root_translation,
                yaws[1][start],
            );
            PairedSample {
                window_id: i,
                start,
                x: pair.x.slice(s![start..start + window, ..]).to_owned(),
                y: pair.y.slice(s![start..start + window, ..]).to_owned(),
                offset,
                anchors,
                tags: BTreeMap::new(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::pairing::pair_streams;
    use crate::dataset::synth::{synth_generate, SynthConfig};

    #[test]
    fn counts() {
        assert_eq!(window_count(100, 60, 20), 3);
        assert_eq!(window_count(59, 60, 1), 0);
        assert_eq!(window_count(60, 60, 7), 1);
    }

    #[test]
    fn tiling_reproduces_prefix_and_decodes() {
        let (a, b) = synth_generate(&SynthConfig { frames: 100, ..SynthConfig::default() }).unwrap();
        let pair = pair_streams(&a, &b).unwrap();
        let w = segment_windows(&pair, 30, 30);
        assert_eq!(w.len(), 3);
        let ys: Vec<_> = w.iter().map(|s| s.y.view()).collect();
        let joined = ndarray::concatenate(ndarray::Axis(0), &ys).unwrap();
        assert_eq!(joined, pair.y.slice(s![..90, ..]));

        let [ma, mb] = w[1].decode(&a.motion.skeleton, a.motion.frame_time).unwrap();
        for k in 0..30 {
            let src = &a.motion.frames[30 + k];
            let got = &ma.frames[k];
            assert!((src.root_translation - got.root_translation).norm() < 1e-9);
            for (r1, r2) in src.rotations.iter().zip(&got.rotations) {
                assert!((r1.to_matrix() - r2.to_matrix()).abs().max() < 1e-9);
            }
            assert!((b.motion.frames[30 + k].root_translation - mb.frames[k].root_translation).norm() < 1e-9);
        }
    }
}
