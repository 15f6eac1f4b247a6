use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::motion::{heading, wrap_angle, FramePose};

/// Person 2's root relative to person 1 on the ground plane.
///
/// `dx` runs along person 1's facing direction, `dz` along `up × facing`
/// (person 1's left for a Y-up, Z-forward body); `dyaw` is the heading
/// difference wrapped to (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RelativeOffset {
    pub dx: f64,
    pub dz: f64,
    pub dyaw: f64,
}

impl RelativeOffset {
    pub fn to_array(self) -> [f64; 3] {
        [self.dx, self.dz, self.dyaw]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        RelativeOffset { dx: a[0], dz: a[1], dyaw: a[2] }
    }
}

/// Unit facing vector for a heading angle.
pub fn facing(yaw: f64) -> Vector3<f64> {
    Vector3::new(yaw.sin(), 0.0, yaw.cos())
}

/// Unit lateral vector `up × facing`.
pub fn lateral(yaw: f64) -> Vector3<f64> {
    Vector3::new(yaw.cos(), 0.0, -yaw.sin())
}

pub fn relative_offset_from(p1: Vector3<f64>, yaw1: f64, p2: Vector3<f64>, yaw2: f64) -> RelativeOffset {
    let d = p2 - p1;
    RelativeOffset {
        dx: d.dot(&facing(yaw1)),
        dz: d.dot(&lateral(yaw1)),
        dyaw: wrap_angle(yaw2 - yaw1),
    }
}

/// Offset between two single poses; a degenerate heading counts as yaw 0.
pub fn relative_offset(pose1: &FramePose, pose2: &FramePose) -> RelativeOffset {
    let yaw = |p: &FramePose| heading(&p.rotations[0].to_matrix()).unwrap_or(0.0);
    relative_offset_from(pose1.root_translation, yaw(pose1), pose2.root_translation, yaw(pose2))
}

/// Position and heading of person 2 given person 1 and an offset.
pub fn place_relative(p1: Vector3<f64>, yaw1: f64, off: &RelativeOffset) -> (Vector3<f64>, f64) {
    let p2 = p1 + facing(yaw1) * off.dx + lateral(yaw1) * off.dz;
    (p2, wrap_angle(yaw1 + off.dyaw))
}

/// `dyaw` as seen from the other person; exactly π maps to itself.
pub fn swapped_yaw(dyaw: f64) -> f64 {
    if dyaw == PI {
        PI
    } else {
        wrap_angle(-dyaw)
    }
}
