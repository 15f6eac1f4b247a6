use std::f64::consts::FRAC_PI_6;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::motion::{forward_kinematics, heading, world_rotations, MotionSequence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FacingLabel {
    Facing,
    NotFacing,
}

impl FacingLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FacingLabel::Facing => "Facing",
            FacingLabel::NotFacing => "Not-Facing",
        }
    }
}

/// Half-width of the central vision arc.
pub const GAZE_HALF_ANGLE: f64 = FRAC_PI_6;
const BOUNDARY_TOL: f64 = 1e-9;

/// Unsigned angle between two ground-plane directions.
fn ground_angle(a: Vector3<f64>, b: Vector3<f64>) -> f64 {
    let (ax, az, bx, bz) = (a.x, a.z, b.x, b.z);
    (ax * bz - az * bx).abs().atan2(ax * bx + az * bz)
}

struct Gaze {
    head: Vector3<f64>,
    forward: Vector3<f64>,
}

fn gaze(m: &MotionSequence, head: usize, t: usize) -> Gaze {
    let pose = &m.frames[t];
    let pos = forward_kinematics(&m.skeleton, pose);
    let rots = world_rotations(&m.skeleton, pose);
    let yaw = heading(&rots[head]).or_else(|| heading(&rots[0])).unwrap_or(0.0);
    Gaze { head: pos[head], forward: Vector3::new(yaw.sin(), 0.0, yaw.cos()) }
}

/// Facing when each actor's gaze (head forward axis on the ground plane,
/// root heading if that is degenerate) is within 30° of the direction to the
/// other actor's head. The boundary is inclusive.
pub fn detect_facing(pair: &[MotionSequence; 2], head_joint: &str) -> Result<Vec<FacingLabel>> {
    if pair[0].len() != pair[1].len() {
        return Err(Error::shape(format!("actors have {} and {} frames", pair[0].len(), pair[1].len())));
    }
    let ha = pair[0].skeleton.require_joint(head_joint)?;
    let hb = pair[1].skeleton.require_joint(head_joint)?;
    Ok((0..pair[0].len())
        .map(|t| {
            let (a, b) = (gaze(&pair[0], ha, t), gaze(&pair[1], hb, t));
            let ok = |g: &Gaze, other: &Gaze| {
                ground_angle(g.forward, other.head - g.head) <= GAZE_HALF_ANGLE + BOUNDARY_TOL
            };
            if ok(&a, &b) && ok(&b, &a) {
                FacingLabel::Facing
            } else {
                FacingLabel::NotFacing
            }
        })
        .collect())
}
