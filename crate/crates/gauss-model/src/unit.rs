use geom_core::{UnitQuaternion, Vec3};
use serde::{Deserialize, Serialize};

/// One anisotropic 3D Gaussian, fully resolved into world space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianUnit {
    /// Mean position in meters.
    pub position: Vec3,
    /// Orientation of the principal axes.
    pub rotation: UnitQuaternion,
    /// Standard deviation along each principal axis, meters, all positive.
    pub scale: Vec3,
    /// Opacity in [0, 1].
    pub opacity: f64,
    /// Flat RGB color in [0, 1] per channel.
    pub color: [f64; 3],
}

impl GaussianUnit {
    /// World-space covariance Σ = R diag(s²) Rᵀ (symmetric positive definite
    /// whenever all scales are positive).
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let r = self.rotation.to_matrix();
        let s2 = [
            self.scale.x * self.scale.x,
            self.scale.y * self.scale.y,
            self.scale.z * self.scale.z,
        ];
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| r[i][k] * s2[k] * r[j][k]).sum();
            }
        }
        out
    }
}

/// Gradient of a scalar loss with respect to one [`GaussianUnit`].
///
/// The rotation slot holds raw partials for the four quaternion components
/// as used by the rotation-matrix formula (no tangent-space projection).
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitGrad {
    pub position: Vec3,
    pub rotation: [f64; 4],
    pub scale: Vec3,
    pub opacity: f64,
    pub color: [f64; 3],
}

impl UnitGrad {
    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.rotation.iter().all(|g| g.is_finite())
            && self.scale.is_finite()
            && self.opacity.is_finite()
            && self.color.iter().all(|g| g.is_finite())
    }

    pub fn add_assign(&mut self, other: &UnitGrad) {
        self.position += other.position;
        for k in 0..4 {
            self.rotation[k] += other.rotation[k];
        }
        self.scale += other.scale;
        self.opacity += other.opacity;
        for k in 0..3 {
            self.color[k] += other.color[k];
        }
    }
}
