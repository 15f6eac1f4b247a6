use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::rotation::ExpMap;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Xposition,
    Yposition,
    Zposition,
    Xrotation,
    Yrotation,
    Zrotation,
}

impl Channel {
    pub fn parse(s: &str) -> Option<Channel> {
        Some(match s {
            "Xposition" => Channel::Xposition,
            "Yposition" => Channel::Yposition,
            "Zposition" => Channel::Zposition,
            "Xrotation" => Channel::Xrotation,
            "Yrotation" => Channel::Yrotation,
            "Zrotation" => Channel::Zrotation,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Xposition => "Xposition",
            Channel::Yposition => "Yposition",
            Channel::Zposition => "Zposition",
            Channel::Xrotation => "Xrotation",
            Channel::Yrotation => "Yrotation",
            Channel::Zrotation => "Zrotation",
        }
    }

    pub fn is_rotation(self) -> bool {
        matches!(self, Channel::Xrotation | Channel::Yrotation | Channel::Zrotation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub parent: Option<usize>,
    /// Offset from the parent joint, meters.
    pub offset: Vector3<f64>,
    pub channels: Vec<Channel>,
    pub end_site: Option<Vector3<f64>>,
}

/// Kinematic tree stored in topological order (parents before children).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Joint>", into = "Vec<Joint>")]
pub struct Skeleton {
    joints: Vec<Joint>,
}

impl TryFrom<Vec<Joint>> for Skeleton {
    type Error = Error;
    fn try_from(joints: Vec<Joint>) -> Result<Self> {
        Skeleton::new(joints)
    }
}

impl From<Skeleton> for Vec<Joint> {
    fn from(s: Skeleton) -> Self {
        s.joints
    }
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::Skeleton("no joints".into()));
        }
        let roots = joints.iter().filter(|j| j.parent.is_none()).count();
        if roots != 1 {
            return Err(Error::Skeleton(format!("expected exactly one root, found {roots}")));
        }
        if joints[0].parent.is_some() {
            return Err(Error::Skeleton("the root must be the first joint".into()));
        }
        for (i, j) in joints.iter().enumerate() {
            if let Some(p) = j.parent {
                if p >= i {
                    return Err(Error::Skeleton(format!(
                        "joint {i} ({}) has parent {p} that does not precede it",
                        j.name
                    )));
                }
            }
            if !j.offset.iter().all(|v| v.is_finite()) {
                return Err(Error::Skeleton(format!("joint {} has a non-finite offset", j.name)));
            }
        }
        // Parent-precedes-child already rules out cycles; walk each chain anyway.
        for start in 0..joints.len() {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = joints[cur].parent {
                cur = p;
                steps += 1;
                if steps > joints.len() {
                    return Err(Error::Skeleton(format!("cycle through joint {start}")));
                }
            }
        }
        Ok(Skeleton { joints })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn require_joint(&self, name: &str) -> Result<usize> {
        self.joint_index(name)
            .ok_or_else(|| Error::invalid(format!("skeleton has no joint named {name:?}")))
    }

    /// Width of one frame in the flat motion table: root translation plus
    /// three exponential-map components per joint.
    pub fn frame_width(&self) -> usize {
        3 + 3 * self.joints.len()
    }

    /// A 24-joint humanoid body (meters, Y up, facing +Z).
    pub fn reference_body() -> Skeleton {
        const ROT: [Channel; 3] = [Channel::Zrotation, Channel::Xrotation, Channel::Yrotation];
        let spec: [(&str, Option<usize>, [f64; 3]); 24] = [
            ("Hips", None, [0.0, 0.0, 0.0]),
            ("Spine", Some(0), [0.0, 0.10, 0.0]),
            ("Spine1", Some(1), [0.0, 0.12, 0.0]),
            ("Spine2", Some(2), [0.0, 0.12, 0.0]),
            ("Neck", Some(3), [0.0, 0.14, 0.0]),
            ("Head", Some(4), [0.0, 0.10, 0.02]),
            ("LeftShoulder", Some(3), [0.04, 0.10, 0.0]),
            ("LeftArm", Some(6), [0.14, 0.0, 0.0]),
            ("LeftForeArm", Some(7), [0.28, 0.0, 0.0]),
            ("LeftHand", Some(8), [0.25, 0.0, 0.0]),
            ("RightShoulder", Some(3), [-0.04, 0.10, 0.0]),
            ("RightArm", Some(10), [-0.14, 0.0, 0.0]),
            ("RightForeArm", Some(11), [-0.28, 0.0, 0.0]),
            ("RightHand", Some(12), [-0.25, 0.0, 0.0]),
            ("LeftUpLeg", Some(0), [0.09, -0.06, 0.0]),
            ("LeftLeg", Some(14), [0.0, -0.42, 0.0]),
            ("LeftFoot", Some(15), [0.0, -0.40, 0.0]),
            ("LeftToeBase", Some(16), [0.0, -0.05, 0.13]),
            ("RightUpLeg", Some(0), [-0.09, -0.06, 0.0]),
            ("RightLeg", Some(18), [0.0, -0.42, 0.0]),
            ("RightFoot", Some(19), [0.0, -0.40, 0.0]),
            ("RightToeBase", Some(20), [0.0, -0.05, 0.13]),
            ("LeftHandEnd", Some(9), [0.08, 0.0, 0.0]),
            ("RightHandEnd", Some(13), [-0.08, 0.0, 0.0]),
        ];
        let joints = spec
            .iter()
            .map(|&(name, parent, o)| {
                let mut channels = Vec::new();
                if parent.is_none() {
                    channels.extend([Channel::Xposition, Channel::Yposition, Channel::Zposition]);
                }
                channels.extend(ROT);
                Joint {
                    name: name.to_string(),
                    parent,
                    offset: Vector3::from(o),
                    channels,
                    end_site: match name {
                        "Head" => Some(Vector3::new(0.0, 0.12, 0.0)),
                        "LeftToeBase" | "RightToeBase" => Some(Vector3::new(0.0, 0.0, 0.05)),
                        _ => None,
                    },
                }
            })
            .collect();
        Skeleton::new(joints).expect("reference skeleton is valid")
    }

    /// Height of the root above the lowest joint in the rest pose.
    pub fn standing_root_height(&self) -> f64 {
        let rest = FramePose::identity(self.len());
        let pos = forward_kinematics(self, &rest);
        -pos.iter().map(|p| p.y).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePose {
    pub root_translation: Vector3<f64>,
    /// Local rotation of each joint relative to its parent.
    pub rotations: Vec<ExpMap>,
}

impl FramePose {
    pub fn identity(joints: usize) -> Self {
        FramePose { root_translation: Vector3::zeros(), rotations: vec![ExpMap::IDENTITY; joints] }
    }

    pub fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(3 + 3 * self.rotations.len());
        row.extend(self.root_translation.iter());
        for r in &self.rotations {
            row.extend(r.0.iter());
        }
        row
    }

    pub fn from_row(row: &[f64]) -> Result<Self> {
        if row.len() < 3 || !(row.len() - 3).is_multiple_of(3) {
            return Err(Error::shape(format!("pose row width {} is not 3 + 3·joints", row.len())));
        }
        Ok(FramePose {
            root_translation: Vector3::new(row[0], row[1], row[2]),
            rotations: row[3..].chunks_exact(3).map(|c| ExpMap::new(c[0], c[1], c[2])).collect(),
        })
    }

    /// Applies a global rigid transform `x ↦ rot · x + shift` to the pose.
    pub fn transformed(&self, rot: &Matrix3<f64>, shift: &Vector3<f64>) -> FramePose {
        let mut out = self.clone();
        out.root_translation = rot * self.root_translation + shift;
        if let Some(r) = out.rotations.first_mut() {
            *r = ExpMap::from_matrix_unchecked(&(rot * r.to_matrix()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub skeleton: Skeleton,
    pub frames: Vec<FramePose>,
    /// Seconds per frame.
    pub frame_time: f64,
}

impl MotionSequence {
    pub fn new(skeleton: Skeleton, frames: Vec<FramePose>, frame_time: f64) -> Result<Self> {
        if !(frame_time > 0.0 && frame_time.is_finite()) {
            return Err(Error::invalid(format!("frame time must be positive, got {frame_time}")));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.rotations.len() != skeleton.len() {
                return Err(Error::shape(format!(
                    "frame {i} has {} rotations for a {}-joint skeleton",
                    f.rotations.len(),
                    skeleton.len()
                )));
            }
        }
        Ok(MotionSequence { skeleton, frames, frame_time })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> f64 {
        1.0 / self.frame_time
    }

    /// World joint positions for every frame.
    pub fn positions(&self) -> Vec<Vec<Vector3<f64>>> {
        self.frames.iter().map(|f| forward_kinematics(&self.skeleton, f)).collect()
    }

    pub fn transformed(&self, rot: &Matrix3<f64>, shift: &Vector3<f64>) -> MotionSequence {
        MotionSequence {
            skeleton: self.skeleton.clone(),
            frames: self.frames.iter().map(|f| f.transformed(rot, shift)).collect(),
            frame_time: self.frame_time,
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> MotionSequence {
        MotionSequence {
            skeleton: self.skeleton.clone(),
            frames: self.frames[start..start + len].to_vec(),
            frame_time: self.frame_time,
        }
    }
}

/// World rotation of every joint.
pub fn world_rotations(skeleton: &Skeleton, pose: &FramePose) -> Vec<Matrix3<f64>> {
    let mut world: Vec<Matrix3<f64>> = Vec::with_capacity(skeleton.len());
    for (i, j) in skeleton.joints().iter().enumerate() {
        let local = pose.rotations[i].to_matrix();
        world.push(match j.parent {
            Some(p) => world[p] * local,
            None => local,
        });
    }
    world
}

/// World joint positions. The root sits at the root translation; each child is
/// its parent's position plus the parent's world rotation applied to its offset.
pub fn forward_kinematics(skeleton: &Skeleton, pose: &FramePose) -> Vec<Vector3<f64>> {
    debug_assert_eq!(pose.rotations.len(), skeleton.len());
    let world = world_rotations(skeleton, pose);
    let mut pos: Vec<Vector3<f64>> = Vec::with_capacity(skeleton.len());
    for j in skeleton.joints() {
        pos.push(match j.parent {
            Some(p) => pos[p] + world[p] * j.offset,
            None => pose.root_translation,
        });
    }
    pos
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::motion::rotation::rot_y;

    fn joint(name: &str, parent: Option<usize>, offset: [f64; 3]) -> Joint {
        Joint {
            name: name.into(),
            parent,
            offset: Vector3::from(offset),
            channels: vec![Channel::Zrotation, Channel::Xrotation, Channel::Yrotation],
            end_site: None,
        }
    }

    #[test]
    fn validates_tree_shape() {
        assert!(Skeleton::new(vec![]).is_err());
        let two_roots = vec![joint("a", None, [0.0; 3]), joint("b", None, [0.0; 3])];
        assert!(Skeleton::new(two_roots).is_err());
        let forward_ref = vec![joint("a", None, [0.0; 3]), joint("b", Some(2), [0.0; 3]), joint("c", Some(1), [0.0; 3])];
        assert!(Skeleton::new(forward_ref).is_err());
        let self_loop = vec![joint("a", None, [0.0; 3]), joint("b", Some(1), [0.0; 3])];
        assert!(Skeleton::new(self_loop).is_err());
        assert_eq!(Skeleton::reference_body().len(), 24);
    }

    #[test]
    fn identity_pose_accumulates_offsets() {
        let s = Skeleton::new(vec![
            joint("a", None, [0.0; 3]),
            joint("b", Some(0), [0.0, 1.0, 0.0]),
            joint("c", Some(1), [2.0, 0.0, 0.0]),
        ])
        .unwrap();
        let p = forward_kinematics(&s, &FramePose::identity(3));
        assert_eq!(p[2], Vector3::new(2.0, 1.0, 0.0));
    }

    #[test]
    fn root_yaw_rotates_child() {
        let s = Skeleton::new(vec![joint("a", None, [0.0; 3]), joint("b", Some(0), [1.0, 0.0, 0.0])]).unwrap();
        let mut pose = FramePose::identity(2);
        pose.rotations[0] = ExpMap::new(0.0, 0.0, PI / 2.0);
        let p = forward_kinematics(&s, &pose);
        assert!((p[1] - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fk_is_rigidly_equivariant() {
        let s = Skeleton::reference_body();
        let mut pose = FramePose::identity(s.len());
        for (i, r) in pose.rotations.iter_mut().enumerate() {
            *r = ExpMap::new(0.1 * i as f64, -0.05 * i as f64, 0.3);
        }
        pose.root_translation = Vector3::new(0.3, 0.9, -1.0);
        let rot = rot_y(0.7) * crate::motion::rotation::rot_x(0.2);
        let shift = Vector3::new(1.0, 2.0, 3.0);
        let a: Vec<_> = forward_kinematics(&s, &pose).iter().map(|p| rot * p + shift).collect();
        let b = forward_kinematics(&s, &pose.transformed(&rot, &shift));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn pose_row_round_trip_and_width_check() {
        let mut pose = FramePose::identity(2);
        pose.rotations[1] = ExpMap::new(0.1, 0.2, 0.3);
        pose.root_translation.y = 4.0;
        assert_eq!(FramePose::from_row(&pose.to_row()).unwrap(), pose);
        assert!(FramePose::from_row(&[0.0; 7]).is_err());
    }
}
