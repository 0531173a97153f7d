use crate::{GeomError, Result, RigidTransform, UnitQuaternion, Vec3};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Camera-space z below which a point counts as behind the camera.
pub const NEAR_EPS: f64 = 1e-6;

/// A pinhole camera: intrinsics in pixels plus a world-to-camera rigid
/// transform. Camera space looks down +z; the image origin is top-left with
/// `v` growing downward.
#[derive(Debug, Clone, PartialEq)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub world_to_camera: RigidTransform,
}

impl PinholeCamera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        world_to_camera: RigidTransform,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeomError::InvalidCamera(format!("focal lengths must be positive, got fx={fx} fy={fy}")));
        }
        if width == 0 || height == 0 {
            return Err(GeomError::InvalidCamera("image dimensions must be positive".into()));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(GeomError::InvalidCamera(format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(PinholeCamera { fx, fy, cx, cy, width, height, world_to_camera })
    }

    /// Camera placed at `eye` looking at `target`, with `up` fixing the roll.
    pub fn look_at(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        eye: Vec3,
        target: Vec3,
        up: Vec3,
    ) -> Result<Self> {
        let forward = (target - eye)
            .normalized()
            .ok_or_else(|| GeomError::InvalidCamera("look_at: eye equals target".into()))?;
        let right = forward
            .cross(up)
            .normalized()
            .ok_or_else(|| GeomError::InvalidCamera("look_at: up parallel to view direction".into()))?;
        let down = forward.cross(right);
        // Columns of camera-to-world: image right, image down, view forward.
        let cam_to_world = [
            [right.x, down.x, forward.x],
            [right.y, down.y, forward.y],
            [right.z, down.z, forward.z],
        ];
        let rot_c2w = UnitQuaternion::from_matrix(&cam_to_world);
        let rot_w2c = rot_c2w.inverse();
        let world_to_camera = RigidTransform::new(rot_w2c, -rot_w2c.rotate(eye));
        PinholeCamera::new(fx, fy, cx, cy, width, height, world_to_camera)
    }

    /// World point expressed in camera space.
    pub fn to_camera(&self, p_world: Vec3) -> Vec3 {
        self.world_to_camera.apply(p_world)
    }

    /// Camera position in world coordinates.
    pub fn center(&self) -> Vec3 {
        self.world_to_camera.inverse().translation
    }

    /// Project a world point to pixel coordinates plus camera-space depth.
    pub fn project(&self, p_world: Vec3) -> Result<(f64, f64, f64)> {
        let p = self.to_camera(p_world);
        if p.z <= NEAR_EPS {
            return Err(GeomError::BehindCamera { z: p.z });
        }
        let u = self.fx * p.x / p.z + self.cx;
        let v = self.fy * p.y / p.z + self.cy;
        Ok((u, v, p.z))
    }

    /// Same intrinsics with the pose replaced.
    pub fn with_pose(&self, world_to_camera: RigidTransform) -> Self {
        PinholeCamera { world_to_camera, ..self.clone() }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let record = CameraRecord::from(self);
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(file, &record)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let record: CameraRecord = serde_json::from_reader(file)?;
        record.try_into()
    }
}

/// Flat serialization record for a [`PinholeCamera`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraRecord {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub qw: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl From<&PinholeCamera> for CameraRecord {
    fn from(c: &PinholeCamera) -> Self {
        let q = c.world_to_camera.rotation;
        let t = c.world_to_camera.translation;
        CameraRecord {
            fx: c.fx,
            fy: c.fy,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            qw: q.w,
            qx: q.x,
            qy: q.y,
            qz: q.z,
            tx: t.x,
            ty: t.y,
            tz: t.z,
        }
    }
}

impl TryFrom<CameraRecord> for PinholeCamera {
    type Error = GeomError;

    fn try_from(r: CameraRecord) -> Result<Self> {
        let rotation = UnitQuaternion::new(r.qw, r.qx, r.qy, r.qz);
        let translation = Vec3::new(r.tx, r.ty, r.tz);
        PinholeCamera::new(
            r.fx,
            r.fy,
            r.cx,
            r.cy,
            r.width,
            r.height,
            RigidTransform::new(rotation, translation),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_cam() -> PinholeCamera {
        PinholeCamera::new(100.0, 100.0, 50.0, 50.0, 100, 100, RigidTransform::identity())
            .unwrap()
    }

    #[test]
    fn optical_axis_projects_to_principal_point() {
        let c = simple_cam();
        let (u, v, d) = c.project(Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((u, v, d), (50.0, 50.0, 1.0));
    }

    #[test]
    fn hand_computed_projection() {
        let c = simple_cam();
        let (u, v, d) = c.project(Vec3::new(0.5, 0.0, 1.0)).unwrap();
        assert!((u - 100.0).abs() < 1e-12);
        assert!((v - 50.0).abs() < 1e-12);
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_at_zero_depth_is_behind() {
        let c = simple_cam();
        let err = c.project(Vec3::new(0.1, 0.1, 0.0)).unwrap_err();
        assert!(matches!(err, GeomError::BehindCamera { .. }));
    }

    #[test]
    fn look_at_centers_target() {
        let c = PinholeCamera::look_at(
            80.0,
            80.0,
            32.0,
            32.0,
            64,
            64,
            Vec3::new(0.3, -0.4, 0.5),
            Vec3::new(0.0, 0.0, 0.1),
            Vec3::Z,
        )
        .unwrap();
        let (u, v, d) = c.project(Vec3::new(0.0, 0.0, 0.1)).unwrap();
        assert!((u - 32.0).abs() < 1e-9);
        assert!((v - 32.0).abs() < 1e-9);
        assert!(d > 0.0);
        // camera center maps back to eye
        assert!((c.center() - Vec3::new(0.3, -0.4, 0.5)).norm() < 1e-9);
    }

    #[test]
    fn record_roundtrip_via_json() {
        let c = PinholeCamera::look_at(
            120.0,
            115.0,
            31.5,
            30.5,
            64,
            64,
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::ZERO,
            Vec3::Z,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cam.json");
        c.save_json(&path).unwrap();
        let back = PinholeCamera::load_json(&path).unwrap();
        assert_eq!((c.fx, c.fy, c.cx, c.cy), (back.fx, back.fy, back.cx, back.cy));
        assert_eq!((c.width, c.height), (back.width, back.height));
        // load renormalizes the rotation, so compare up to 1 ulp of that
        assert!(c.world_to_camera.rotation.dot(back.world_to_camera.rotation).abs() > 1.0 - 1e-15);
        assert!((c.world_to_camera.translation - back.world_to_camera.translation).norm() < 1e-15);
    }

    #[test]
    fn invalid_intrinsics_rejected() {
        assert!(PinholeCamera::new(0.0, 1.0, 0.0, 0.0, 10, 10, RigidTransform::identity())
            .is_err());
        assert!(PinholeCamera::new(1.0, 1.0, 20.0, 0.0, 10, 10, RigidTransform::identity())
            .is_err());
    }
}
