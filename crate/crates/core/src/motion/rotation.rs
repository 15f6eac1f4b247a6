//! Exponential-map rotations and Euler-angle conversions.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Below this angle the Rodrigues coefficients switch to their Taylor series.
const SMALL_ANGLE: f64 = 1e-4;

/// Axis-angle rotation vector: direction is the axis, norm is the angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpMap(pub Vector3<f64>);

impl ExpMap {
    pub const IDENTITY: ExpMap = ExpMap(Vector3::new(0.0, 0.0, 0.0));

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        ExpMap(Vector3::new(x, y, z))
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return ExpMap::IDENTITY;
        }
        ExpMap(axis * (angle / n)).canonical()
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    /// Remaps angles above π to the equivalent rotation `2π − θ` about the
    /// flipped axis. At exactly π the first nonzero component is made positive.
    pub fn canonical(self) -> Self {
        let theta = self.0.norm();
        if theta <= PI && (PI - theta).abs() > 1e-12 {
            return self;
        }
        let axis = self.0 / theta;
        let wrapped = (2.0 * PI - theta).rem_euclid(2.0 * PI);
        let mut v = if theta > PI { -axis * wrapped } else { self.0 };
        if (v.norm() - PI).abs() <= 1e-12 {
            v = tie_break(v);
        }
        if v.norm() > PI {
            // Angles beyond 2π wrap around more than once.
            return ExpMap::from_matrix_unchecked(&ExpMap(v).to_matrix());
        }
        ExpMap(v)
    }

    /// Rodrigues: `R = I + a K + b K²` with `K = [r]×`, `a = sinθ/θ`, `b = (1 − cosθ)/θ²`.
    pub fn to_matrix(&self) -> Matrix3<f64> {
        let theta2 = self.0.norm_squared();
        let theta = theta2.sqrt();
        let (a, b) = if theta < SMALL_ANGLE {
            (
                1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0,
                0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0,
            )
        } else {
            (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
        };
        let k = skew(&self.0);
        Matrix3::identity() + k * a + k * k * b
    }

    /// Inverse of [`ExpMap::to_matrix`]; fails unless `m` is orthonormal with
    /// determinant +1 within 1e-6.
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        check_rotation(m)?;
        Ok(Self::from_matrix_unchecked(m))
    }

    pub(crate) fn from_matrix_unchecked(m: &Matrix3<f64>) -> Self {
        // vee(R − Rᵀ) = 2 sinθ · axis; atan2 keeps θ accurate near 0 and π.
        let w = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
        let cos = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        let theta = (0.5 * w.norm()).atan2(cos);
        if theta < SMALL_ANGLE {
            let theta2 = theta * theta;
            return ExpMap(w * 0.5 * (1.0 + theta2 / 6.0 + 7.0 * theta2 * theta2 / 360.0));
        }
        if theta < PI / 2.0 {
            return ExpMap(w * (theta / (2.0 * theta.sin())));
        }
        // Large angles: recover the axis from the symmetric part,
        // (R + Rᵀ)/2 = cosθ I + (1 − cosθ) a aᵀ, then take the sign from w.
        let s = (m + m.transpose()) * 0.5;
        let outer = (s - Matrix3::identity() * cos) / (1.0 - cos);
        let i = (0..3)
            .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
            .unwrap();
        let mut axis: Vector3<f64> = outer.column(i).into();
        axis /= axis.norm();
        if w.norm() > 1e-12 {
            if axis.dot(&w) < 0.0 {
                axis = -axis;
            }
        } else {
            axis = tie_break(axis);
        }
        ExpMap(axis * theta)
    }

    pub fn inverse(&self) -> Self {
        ExpMap(-self.0).canonical()
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &ExpMap) -> Self {
        ExpMap::from_matrix_unchecked(&(self.to_matrix() * other.to_matrix()))
    }
}

impl Default for ExpMap {
    fn default() -> Self {
        ExpMap::IDENTITY
    }
}

fn tie_break(v: Vector3<f64>) -> Vector3<f64> {
    match v.iter().find(|c| c.abs() > 1e-12) {
        Some(&c) if c < 0.0 => -v,
        _ => v,
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

pub fn check_rotation(m: &Matrix3<f64>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotRotation("non-finite entries".into()));
    }
    let err = (m.transpose() * m - Matrix3::identity()).abs().max();
    if err > 1e-6 {
        return Err(Error::NotRotation(format!("MᵀM deviates from I by {err:e}")));
    }
    let det = m.determinant();
    if (det - 1.0).abs() > 1e-6 {
        return Err(Error::NotRotation(format!("determinant {det}")));
    }
    Ok(())
}

pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn rotation(self, angle: f64) -> Matrix3<f64> {
        match self {
            Axis::X => rot_x(angle),
            Axis::Y => rot_y(angle),
            Axis::Z => rot_z(angle),
        }
    }
}

/// Euler sequence as listed in a BVH `CHANNELS` line. The matrix is the product
/// in listed order: `ZXY` means `Rz · Rx · Ry`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EulerOrder(pub [Axis; 3]);

impl EulerOrder {
    pub const ZXY: EulerOrder = EulerOrder([Axis::Z, Axis::X, Axis::Y]);

    pub const ALL: [EulerOrder; 6] = [
        EulerOrder([Axis::X, Axis::Y, Axis::Z]),
        EulerOrder([Axis::X, Axis::Z, Axis::Y]),
        EulerOrder([Axis::Y, Axis::X, Axis::Z]),
        EulerOrder([Axis::Y, Axis::Z, Axis::X]),
        EulerOrder([Axis::Z, Axis::X, Axis::Y]),
        EulerOrder([Axis::Z, Axis::Y, Axis::X]),
    ];

    /// Angles in radians, one per axis in listed order.
    pub fn to_matrix(&self, angles: [f64; 3]) -> Matrix3<f64> {
        self.0[0].rotation(angles[0]) * self.0[1].rotation(angles[1]) * self.0[2].rotation(angles[2])
    }

    /// Decomposes `m` into angles for this order (radians, listed order).
    pub fn from_matrix(&self, m: &Matrix3<f64>) -> [f64; 3] {
        // Generic Tait-Bryan extraction for R = R_i(a) R_j(b) R_k(c) with i, j, k distinct.
        let idx = |a: Axis| match a {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        };
        let (i, j, k) = (idx(self.0[0]), idx(self.0[1]), idx(self.0[2]));
        // Parity: +1 for cyclic (i, j, k), −1 otherwise.
        let sign = if (j + 3 - i) % 3 == 1 { 1.0 } else { -1.0 };
        let sb = (sign * m[(i, k)]).clamp(-1.0, 1.0);
        let b = sb.asin();
        if sb.abs() < 1.0 - 1e-12 {
            let a = (-sign * m[(j, k)]).atan2(m[(k, k)]);
            let c = (-sign * m[(i, j)]).atan2(m[(i, i)]);
            [a, b, c]
        } else {
            // Gimbal lock: only a ± c is determined; put everything in a.
            let a = (sign * m[(k, j)]).atan2(m[(j, j)]);
            [a, b, 0.0]
        }
    }
}
