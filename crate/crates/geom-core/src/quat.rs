use crate::Vec3;
use serde::{Deserialize, Serialize};

/// A unit quaternion in `(w, x, y, z)` storage order, Hamilton convention.
///
/// Every constructor normalizes, so the norm invariant (1 within 1e-6) holds
/// for all values of this type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizing constructor. Falls back to identity for a (near-)zero input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if n < 1e-300 {
            Self::IDENTITY
        } else {
            UnitQuaternion { w: w / n, x: x / n, y: y / n, z: z / n }
        }
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    /// Rotation of `angle` radians about `axis` (need not be unit length).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let axis = axis.normalized().unwrap_or(Vec3::Z);
        let (s, c) = (angle * 0.5).sin_cos();
        UnitQuaternion { w: c, x: axis.x * s, y: axis.y * s, z: axis.z * s }
    }

    /// Hamilton product `self ⊗ rhs` (apply `rhs` first, then `self`).
    pub fn multiply(self, rhs: UnitQuaternion) -> UnitQuaternion {
        let (w1, x1, y1, z1) = (self.w, self.x, self.y, self.z);
        let (w2, x2, y2, z2) = (rhs.w, rhs.x, rhs.y, rhs.z);
        UnitQuaternion::new(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )
    }

    pub fn conjugate(self) -> UnitQuaternion {
        UnitQuaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Inverse rotation; equals the conjugate for unit quaternions.
    pub fn inverse(self) -> UnitQuaternion {
        self.conjugate()
    }

    pub fn norm(self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn dot(self, rhs: UnitQuaternion) -> f64 {
        self.w * rhs.w + self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    /// Rotate a vector.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        // q v q* expanded via the cross-product form: v + 2 u × (u × v + w v)
        let u = Vec3::new(self.x, self.y, self.z);
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }

    /// Rotation matrix in row-major `m[row][col]` layout.
    pub fn to_matrix(self) -> [[f64; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    /// Quaternion from a rotation matrix (row-major, assumed orthonormal).
    ///
    /// Shepperd's method: pick the largest diagonal combination for stability.
    pub fn from_matrix(m: &[[f64; 3]; 3]) -> Self {
        let trace = m[0][0] + m[1][1] + m[2][2];
        if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            UnitQuaternion::new(
                0.25 * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            UnitQuaternion::new(
                (m[2][1] - m[1][2]) / s,
                0.25 * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            UnitQuaternion::new(
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                0.25 * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            UnitQuaternion::new(
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                0.25 * s,
            )
        }
    }

    /// Quaternion mapping unit vector `from` onto unit vector `to` by the
    /// shortest arc.
    pub fn rotation_between(from: Vec3, to: Vec3) -> Self {
        let f = from.normalized().unwrap_or(Vec3::Z);
        let t = to.normalized().unwrap_or(Vec3::Z);
        let d = f.dot(t);
        if d > 1.0 - 1e-12 {
            return Self::IDENTITY;
        }
        if d < -1.0 + 1e-12 {
            // Antipodal: rotate pi about any axis orthogonal to `f`.
            let axis = if f.x.abs() < 0.9 { f.cross(Vec3::X) } else { f.cross(Vec3::Y) };
            return Self::from_axis_angle(axis, std::f64::consts::PI);
        }
        let axis = f.cross(t);
        UnitQuaternion::new(1.0 + d, axis.x, axis.y, axis.z)
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn rotate_x_about_z_gives_y() {
        let q = UnitQuaternion::from_axis_angle(Vec3::Z, FRAC_PI_2);
        let r = q.rotate(Vec3::X);
        assert!((r - Vec3::Y).norm() < 1e-12);
    }

    #[test]
    fn matrix_roundtrip() {
        let q = UnitQuaternion::from_axis_angle(Vec3::new(1.0, 2.0, -0.5), 1.234);
        let m = q.to_matrix();
        let q2 = UnitQuaternion::from_matrix(&m);
        // q and -q are the same rotation
        let d = q.dot(q2).abs();
        assert!((d - 1.0).abs() < 1e-12, "dot = {d}");
    }

    #[test]
    fn rotation_between_maps_from_to_to() {
        let a = Vec3::new(0.2, -0.7, 0.4).normalized().unwrap();
        let b = Vec3::new(-0.3, 0.1, 0.9).normalized().unwrap();
        let q = UnitQuaternion::rotation_between(a, b);
        assert!((q.rotate(a) - b).norm() < 1e-12);
    }

    #[test]
    fn rotation_between_antipodal() {
        let q = UnitQuaternion::rotation_between(Vec3::Z, -Vec3::Z);
        assert!((q.rotate(Vec3::Z) + Vec3::Z).norm() < 1e-9);
        assert!((q.norm() - 1.0).abs() < 1e-12);
    }
}
