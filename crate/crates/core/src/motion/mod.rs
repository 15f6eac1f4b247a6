//! Skeletons, rotations, BVH and the previous-frame delta encoding.

pub mod bvh;
pub mod delta;
pub mod rotation;
pub mod skeleton;

pub use bvh::{parse_bvh, write_bvh, BvhOptions};
pub use delta::{decode_local_deltas, encode_local_deltas, DeltaFrame, LocalDeltaMotion};
pub use rotation::{EulerOrder, ExpMap};
pub use skeleton::{forward_kinematics, world_rotations, Channel, FramePose, Joint, MotionSequence, Skeleton};

use nalgebra::Vector3;

/// Heading of a rotation: its local +Z axis projected onto the ground (XZ)
/// plane, as `atan2(x, z)`. `None` when the projection is shorter than 1e-6.
pub fn heading(rot: &nalgebra::Matrix3<f64>) -> Option<f64> {
    let f: Vector3<f64> = rot.column(2).into();
    let horizontal = (f.x * f.x + f.z * f.z).sqrt();
    (horizontal >= 1e-6).then(|| f.x.atan2(f.z))
}

/// Per-frame root yaw, reusing the previous frame's value when the heading
/// is degenerate (0 for a degenerate first frame).
pub fn root_yaws(m: &MotionSequence) -> Vec<f64> {
    let mut last = 0.0;
    m.frames
        .iter()
        .map(|f| {
            if let Some(y) = heading(&f.rotations[0].to_matrix()) {
                last = y;
            }
            last
        })
        .collect()
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}
