use crate::{UnitQuaternion, Vec3};
use serde::{Deserialize, Serialize};

/// A rigid-body transform: rotation followed by translation.
///
/// `apply(p) = R p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform =
        RigidTransform { rotation: UnitQuaternion::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: UnitQuaternion, translation: Vec3) -> Self {
        RigidTransform { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    pub fn from_rotation(rotation: UnitQuaternion) -> Self {
        RigidTransform { rotation, translation: Vec3::ZERO }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        RigidTransform { rotation: UnitQuaternion::IDENTITY, translation }
    }

    /// Composition: applying the result equals applying `rhs` first, then `self`.
    pub fn compose(self, rhs: RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.multiply(rhs.rotation),
            translation: self.rotation.rotate(rhs.translation) + self.translation,
        }
    }

    pub fn inverse(self) -> RigidTransform {
        let inv_rot = self.rotation.inverse();
        RigidTransform { rotation: inv_rot, translation: -inv_rot.rotate(self.translation) }
    }

    pub fn apply(self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    /// Rotate a direction (ignores translation).
    pub fn apply_vector(self, v: Vec3) -> Vec3 {
        self.rotation.rotate(v)
    }
}

/// Free-function spelling of [`RigidTransform::compose`].
pub fn compose(a: RigidTransform, b: RigidTransform) -> RigidTransform {
    a.compose(b)
}

/// Free-function spelling of [`RigidTransform::apply`].
pub fn apply_transform(t: RigidTransform, p: Vec3) -> Vec3 {
    t.apply(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_compose_is_noop() {
        let t = RigidTransform::new(
            UnitQuaternion::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.7),
            Vec3::new(0.1, -0.2, 0.3),
        );
        let c = RigidTransform::identity().compose(t);
        assert!((c.apply(Vec3::X) - t.apply(Vec3::X)).norm() < 1e-15);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let t = RigidTransform::new(
            UnitQuaternion::from_axis_angle(Vec3::new(-0.3, 1.0, 2.0), 2.1),
            Vec3::new(1.0, 2.0, 3.0),
        );
        let id = t.compose(t.inverse());
        assert!((id.rotation.dot(UnitQuaternion::IDENTITY).abs() - 1.0).abs() < 1e-9);
        assert!(id.translation.norm() < 1e-9);
    }

    #[test]
    fn double_z_quarter_turn_flips_x() {
        let rz = RigidTransform::from_rotation(UnitQuaternion::from_axis_angle(Vec3::Z, FRAC_PI_2));
        let p = rz.compose(rz).apply(Vec3::X);
        assert!((p - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }
}
